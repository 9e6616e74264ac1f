// Prints an ASCII map of the winning-strain regions over (eps, beta1) for a chosen model.
// Usage: region_map [integrated-basic|separated-basic|integrated-chain|separated-chain] [k] [r]

#include <cstdio>
#include <string>

#include <twostrain/analysis.hpp>

using namespace twostrain;

int main(int argc, char** argv) {
    const ModelKind kind = argc > 1 ? parse_kind(argv[1]) : ModelKind::IntegratedBasic;
    const int k = argc > 2 ? std::stoi(argv[2]) : (is_chain(kind) ? 5 : 1);
    const int r = argc > 3 ? std::stoi(argv[3]) : (is_chain(kind) ? 3 : 1);
    const ModelSpec m = make_model(kind, k, r);

    EpiParams p;
    p.beta2 = 0.2;
    p.gamma = 0.1;
    p.alpha = 0.1;
    p.N = 1000.0;

    const AxisSpec eps{AxisVar::Epsilon, 0.0, 0.95, 64};
    const AxisSpec beta1{AxisVar::Beta1, 0.0, 1.0, 24};
    const RegionGrid grid = bifurcation_grid(m, p, eps, beta1);

    const auto glyph = [](RegionLabel l) {
        switch (l) {
            case RegionLabel::DF: return '.';
            case RegionLabel::S1: return '1';
            case RegionLabel::S2: return '2';
            case RegionLabel::C: return 'C';
            default: return '?';
        }
    };

    std::printf("%s (k=%d, r=%d): winner by effective immunity (x) and strain-1 rate (y)\n",
                kind_name(kind), m.k, m.r);
    for (int iy = beta1.n - 1; iy >= 0; --iy) {
        std::printf("beta1=%4.2f |", beta1.node(iy));
        for (int ix = 0; ix < eps.n; ++ix) std::putchar(glyph(grid.at(ix, iy)));
        std::putchar('\n');
    }
    std::printf("           +");
    for (int ix = 0; ix < eps.n; ++ix) std::putchar('-');
    std::printf("\n            eps 0 .. 0.95   (. none, 1/2 strain, C both)\n");
    return 0;
}
