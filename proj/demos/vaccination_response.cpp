// Shows how the endemic balance between the two strains responds to vaccination level:
// closed-form reproduction numbers next to the settled infection levels at a few eps values.

#include <cstdio>

#include <twostrain/analysis.hpp>

using namespace twostrain;

int main() {
    const ModelSpec m = make_model(ModelKind::IntegratedChain, 5, 3);
    EpiParams p;
    p.beta1 = 0.4;
    p.beta2 = 0.2;
    p.gamma = 0.1;
    p.alpha = 0.1;
    p.N = 1000.0;

    std::printf("%-6s %-8s %-8s %-8s %-8s %-6s %10s %10s\n", "eps", "r1", "r2", "r12", "r21",
                "label", "I1(end)", "I2(end)");
    const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    const SweepTable table = steady_sweep(m, p, grid, std::nullopt, 6000.0);
    for (size_t i = 0; i < grid.size(); ++i) {
        EpiParams q = p;
        q.lambda = epsilon_to_lambda(m, grid[i], p.alpha);
        const ReproductionSet rs = repro_closed(m, q);
        const SweepRow& row = table.rows[i];
        std::printf("%-6.2f %-8.4f %-8.4f", grid[i], rs.r1, rs.r2);
        if (rs.r12)
            std::printf(" %-8.4f", *rs.r12);
        else
            std::printf(" %-8s", "-");
        if (rs.r21)
            std::printf(" %-8.4f", *rs.r21);
        else
            std::printf(" %-8s", "-");
        std::printf(" %-6s %10.3f %10.3f\n", label_name(row.label), row.i1_star, row.i2_star);
    }
    return 0;
}
