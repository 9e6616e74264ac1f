#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "twostrain/equilibria.hpp"
#include "twostrain/errors.hpp"
#include "twostrain/integrate.hpp"
#include "twostrain/model.hpp"
#include "twostrain/parallel.hpp"
#include "twostrain/reproduction.hpp"

namespace twostrain {

enum class AxisVar { Epsilon, Beta1, R };

inline const char* axis_name(AxisVar v) {
    switch (v) {
        case AxisVar::Epsilon: return "epsilon";
        case AxisVar::Beta1: return "beta1";
        case AxisVar::R: return "r";
    }
    return "?";
}

inline AxisVar parse_axis(const std::string& name) {
    if (name == "epsilon" || name == "eps") return AxisVar::Epsilon;
    if (name == "beta1") return AxisVar::Beta1;
    if (name == "r") return AxisVar::R;
    throw DomainError("unknown axis variable '" + name + "'");
}

struct AxisSpec {
    AxisVar var = AxisVar::Epsilon;
    double lo = 0.0;
    double hi = 1.0;
    int n = 101;  // inclusive node count

    double node(int i) const { return n == 1 ? lo : lo + (hi - lo) * i / (n - 1); }
};

namespace detail {

// A grid/scan working point: the closed forms treat r as continuous, so the structural r is
// carried as a real here and only the simulation paths require it integral.
struct WorkingPoint {
    ModelKind kind;
    int k;
    double r;
    EpiParams p;
};

inline void validate_axis(const AxisSpec& a, int k) {
    if (a.n < 1) throw DomainError("axis needs at least one node");
    if (a.lo > a.hi) throw DomainError("axis lo must be <= hi");
    switch (a.var) {
        case AxisVar::Epsilon:
            if (a.lo < 0.0 || a.hi >= 1.0) throw DomainError("epsilon axis must lie in [0, 1)");
            break;
        case AxisVar::Beta1:
            if (a.lo < 0.0) throw DomainError("beta1 axis must be >= 0");
            break;
        case AxisVar::R:
            if (a.lo < 0.0 || a.hi > k) throw DomainError("r axis must lie in [0, k]");
            break;
    }
}

// Epsilon resolves through the model-correct map and depends on the current r, so it is applied
// after every structural variable.
inline void apply_axis(WorkingPoint& w, AxisVar var, double value) {
    switch (var) {
        case AxisVar::Beta1: w.p.beta1 = value; break;
        case AxisVar::R: w.r = value; break;
        case AxisVar::Epsilon: w.p.lambda = epsilon_to_lambda(w.kind, w.k, w.r, value, w.p.alpha); break;
    }
}

inline RegionLabel classify_point(const WorkingPoint& w) {
    return classify(repro_closed(w.kind, w.k, w.r, w.p));
}

}  // namespace detail

// Row-major region labels: labels[iy * x.n + ix]. Nodes where the closed forms are undefined
// (degenerate eps map at r = k, singular denominators) are labelled Indeterminate.
struct RegionGrid {
    AxisSpec x, y;
    std::vector<RegionLabel> labels;

    RegionLabel at(int ix, int iy) const { return labels[static_cast<size_t>(iy) * x.n + ix]; }
};

inline RegionGrid bifurcation_grid(const ModelSpec& m, const EpiParams& base, const AxisSpec& x,
                                   const AxisSpec& y) {
    base.validate();
    if (x.var == y.var) throw DomainError("grid axes must use distinct variables");
    detail::validate_axis(x, m.k);
    detail::validate_axis(y, m.k);
    RegionGrid grid{x, y, {}};
    grid.labels.assign(static_cast<size_t>(x.n) * y.n, RegionLabel::Indeterminate);
    parallel_for(y.n, [&](int iy) {
        for (int ix = 0; ix < x.n; ++ix) {
            detail::WorkingPoint w{m.kind, m.k, static_cast<double>(m.r), base};
            try {
                // Epsilon last: its map reads the (possibly swept) r.
                if (x.var != AxisVar::Epsilon) detail::apply_axis(w, x.var, x.node(ix));
                if (y.var != AxisVar::Epsilon) detail::apply_axis(w, y.var, y.node(iy));
                if (x.var == AxisVar::Epsilon) detail::apply_axis(w, x.var, x.node(ix));
                if (y.var == AxisVar::Epsilon) detail::apply_axis(w, y.var, y.node(iy));
                grid.labels[static_cast<size_t>(iy) * x.n + ix] = detail::classify_point(w);
            } catch (const DegenerateMapError&) {
            } catch (const SingularParameterError&) {
            }
        }
    });
    return grid;
}

struct BoundaryPoint {
    double sweep = 0.0;  // sweep-axis value
    double root = 0.0;   // solve-axis value with target R = 1
    double residual = 0.0;  // |R(root) - 1|
};

struct BoundaryCurve {
    ReproKind target = ReproKind::R1;
    AxisVar sweep_var = AxisVar::Beta1;
    AxisVar solve_var = AxisVar::Epsilon;
    std::vector<BoundaryPoint> points;
    std::vector<double> skipped;  // sweep values without a bracketed root
};

// Traces the target R = 1 level set: for each sweep node, bisects the raw closed form over the
// solve interval. Bisection runs on the sign of R - 1, so admissibility masking does not apply.
inline BoundaryCurve boundary_curve(const ModelSpec& m, const EpiParams& base, ReproKind target,
                                    const AxisSpec& sweep, AxisVar solve_var, double solve_lo,
                                    double solve_hi, double tol = 1e-10) {
    base.validate();
    if (sweep.var == solve_var) throw DomainError("sweep and solve variables must differ");
    if (!(solve_lo < solve_hi)) throw DomainError("solve interval is empty");
    if (!(tol > 0.0)) throw DomainError("tol must be > 0");
    detail::validate_axis(sweep, m.k);
    detail::validate_axis(AxisSpec{solve_var, solve_lo, solve_hi, 2}, m.k);

    BoundaryCurve curve{target, sweep.var, solve_var, {}, {}};
    const auto eval = [&](double sweep_value, double solve_value) -> double {
        detail::WorkingPoint w{m.kind, m.k, static_cast<double>(m.r), base};
        if (sweep.var != AxisVar::Epsilon) detail::apply_axis(w, sweep.var, sweep_value);
        if (solve_var != AxisVar::Epsilon) detail::apply_axis(w, solve_var, solve_value);
        if (sweep.var == AxisVar::Epsilon) detail::apply_axis(w, sweep.var, sweep_value);
        if (solve_var == AxisVar::Epsilon) detail::apply_axis(w, solve_var, solve_value);
        return repro_value(w.kind, w.k, w.r, w.p, target) - 1.0;
    };

    for (int i = 0; i < sweep.n; ++i) {
        const double s = sweep.node(i);
        double lo = solve_lo, hi = solve_hi;
        double flo, fhi;
        try {
            flo = eval(s, lo);
            fhi = eval(s, hi);
        } catch (const std::exception&) {
            curve.skipped.push_back(s);
            continue;
        }
        if (!std::isfinite(flo) || !std::isfinite(fhi) || (flo > 0.0) == (fhi > 0.0)) {
            curve.skipped.push_back(s);
            continue;
        }
        while (hi - lo > tol) {
            const double mid = 0.5 * (lo + hi);
            double fmid;
            try {
                fmid = eval(s, mid);
            } catch (const std::exception&) {
                break;
            }
            if (!std::isfinite(fmid)) break;
            if ((fmid > 0.0) == (flo > 0.0)) {
                lo = mid;
                flo = fmid;
            } else {
                hi = mid;
            }
        }
        const double root = 0.5 * (lo + hi);
        const double residual = std::abs(eval(s, root));
        if (residual <= 1e-8)
            curve.points.push_back({s, root, residual});
        else
            curve.skipped.push_back(s);
    }
    return curve;
}

struct SweepRow {
    double eps = 0.0;
    double lambda = 0.0;
    double i1_star = 0.0;  // endpoint levels; below the extinction threshold reports as 0
    double i2_star = 0.0;
    double total = 0.0;    // i1_star + i2_star
    RegionLabel label = RegionLabel::Indeterminate;
    std::string status = "ok";
    bool quiescent = false;
    double max_conservation_error = 0.0;
};

struct SweepTable {
    std::vector<SweepRow> rows;
    double t_end = 0.0;
    double extinction_threshold = 0.0;  // absolute (people)
};

// Settles the system at each eps and reports the surviving-strain pattern next to the closed-form
// label. Rows run in parallel (capped by TWOSTRAIN_THREADS) and are written by index, so the
// table is deterministic.
inline SweepTable steady_sweep(const ModelSpec& m, const EpiParams& base,
                               const std::vector<double>& eps_grid,
                               const std::optional<StateVec>& init = std::nullopt,
                               double t_end = 10000.0, double extinction_frac = 1e-3,
                               const IntegrationOptions& opts = {}) {
    base.validate();
    SweepTable table;
    table.t_end = t_end;
    table.extinction_threshold = extinction_frac * base.N;
    table.rows.assign(eps_grid.size(), SweepRow{});
    parallel_for(static_cast<int>(eps_grid.size()), [&](int i) {
        SweepRow& row = table.rows[i];
        row.eps = eps_grid[i];
        try {
            EpiParams p = base;
            p.lambda = epsilon_to_lambda(m, row.eps, p.alpha);
            row.lambda = p.lambda;
            row.label = classify(repro_closed(m, p));
            const StateVec start = init ? *init : default_init(m, p);
            const SettleResult res = settle(m, p, start, t_end, 1e-10, opts);
            row.i1_star = res.state.i1() < table.extinction_threshold ? 0.0 : res.state.i1();
            row.i2_star = res.state.i2() < table.extinction_threshold ? 0.0 : res.state.i2();
            row.total = row.i1_star + row.i2_star;
            row.quiescent = res.quiescent;
            row.max_conservation_error = res.max_conservation_error;
        } catch (const DegenerateMapError&) {
            row.status = "degenerate-map";
        } catch (const SingularParameterError&) {
            row.status = "singular-parameter";
        } catch (const IntegrationError&) {
            row.status = "integration-failure";
        }
    });
    return table;
}

struct Transition {
    double eps = 0.0;       // refined crossing location
    ReproKind boundary = ReproKind::R1;
    RegionLabel from = RegionLabel::Indeterminate;
    RegionLabel to = RegionLabel::Indeterminate;
};

struct TransitionList {
    std::vector<Transition> transitions;
    double coarse_step = 0.0;
    double refine_tol = 0.0;
};

// Coarse classification pass over eps, then bisection refinement of each label change. Nodes that
// classify Indeterminate (ties at a boundary) belong to the boundary, not to a region: segments
// are built from the non-Indeterminate labels and the refinement predicate is "still in the
// from-region". The reported boundary is the reproduction number whose value crosses 1 inside the
// refined bracket.
inline TransitionList threshold_scan(const ModelSpec& m, const EpiParams& base, double eps_lo,
                                     double eps_hi, double coarse_step = 0.005,
                                     double refine_tol = 1e-6) {
    base.validate();
    if (!(eps_lo >= 0.0 && eps_hi < 1.0 && eps_lo < eps_hi)) throw DomainError("need 0 <= eps_lo < eps_hi < 1");
    if (!(coarse_step > 0.0) || !(refine_tol > 0.0)) throw DomainError("steps must be > 0");

    TransitionList out;
    out.coarse_step = coarse_step;
    out.refine_tol = refine_tol;

    const auto label_at = [&](double eps) -> RegionLabel {
        try {
            EpiParams p = base;
            p.lambda = epsilon_to_lambda(m, eps, p.alpha);
            return classify(repro_closed(m, p));
        } catch (const std::exception&) {
            return RegionLabel::Indeterminate;
        }
    };
    const auto raw_at = [&](double eps, ReproKind which) -> double {
        EpiParams p = base;
        p.lambda = epsilon_to_lambda(m, eps, p.alpha);
        return repro_value(m.kind, m.k, m.r, p, which);
    };

    // Coarse pass, keeping only determinate nodes.
    std::vector<double> nodes;
    std::vector<RegionLabel> labels;
    for (long j = 0;; ++j) {
        const double eps = std::min(eps_lo + j * coarse_step, eps_hi);
        const RegionLabel l = label_at(eps);
        if (l != RegionLabel::Indeterminate) {
            nodes.push_back(eps);
            labels.push_back(l);
        }
        if (eps == eps_hi) break;
    }

    for (size_t j = 0; j + 1 < nodes.size(); ++j) {
        if (labels[j] == labels[j + 1]) continue;
        const RegionLabel from = labels[j], to = labels[j + 1];
        double lo = nodes[j], hi = nodes[j + 1];
        while (hi - lo > refine_tol) {
            const double mid = 0.5 * (lo + hi);
            if (label_at(mid) == from)
                lo = mid;
            else
                hi = mid;
        }
        Transition tr;
        tr.eps = 0.5 * (lo + hi);
        tr.from = from;
        tr.to = to;
        // Attribute the crossing to the reproduction number that passes through 1 here.
        double best = std::numeric_limits<double>::infinity();
        bool found = false;
        double sign_lo = 0.0;
        for (ReproKind which : {ReproKind::R1, ReproKind::R2, ReproKind::R12, ReproKind::R21}) {
            try {
                const double va = raw_at(nodes[j], which) - 1.0;
                const double vb = raw_at(nodes[j + 1], which) - 1.0;
                const double vm = std::abs(raw_at(tr.eps, which) - 1.0);
                if (std::isfinite(va) && std::isfinite(vb) && (va > 0.0) != (vb > 0.0) && vm < best) {
                    best = vm;
                    tr.boundary = which;
                    found = true;
                    sign_lo = va;
                }
            } catch (const std::exception&) {
            }
        }
        // The label bisection stalls on the classifier's tie band (width ~tie_tol/|dR/deps|),
        // so polish the location on the crossing value itself, which has no such band.
        if (found) {
            try {
                double a = nodes[j], b = nodes[j + 1];
                while (b - a > refine_tol) {
                    const double mid = 0.5 * (a + b);
                    const double g = raw_at(mid, tr.boundary) - 1.0;
                    if ((g > 0.0) == (sign_lo > 0.0))
                        a = mid;
                    else
                        b = mid;
                }
                tr.eps = 0.5 * (a + b);
            } catch (const std::exception&) {
                // fall back to the label-refined location
            }
        }
        out.transitions.push_back(tr);
    }
    return out;
}

}  // namespace twostrain
