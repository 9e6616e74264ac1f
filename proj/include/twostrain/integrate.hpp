#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "twostrain/errors.hpp"
#include "twostrain/model.hpp"

namespace twostrain {

enum class Method { AdaptiveRK45, FixedRK4 };

struct IntegrationOptions {
    Method method = Method::AdaptiveRK45;
    double rel_tol = 1e-8;
    double abs_tol = -1.0;  // < 0: resolved to 1e-8 * N when integration starts
    double max_step = 1.0;  // also the FixedRK4 step size
    int record_stride = 1;  // keep every n-th accepted step; endpoints always kept
};

struct Trajectory {
    std::vector<double> t;
    std::vector<StateVec> x;
    double max_conservation_error = 0.0;  // max |total - total(0)| over all accepted steps
    double min_component = 0.0;           // most negative raw component seen before clamping
    long undershoot_clamps = 0;           // clamps that exceeded the warning threshold

    const StateVec& back() const { return x.back(); }
};

struct SettleResult {
    StateVec state;
    double t_end = 0.0;
    double max_abs_deriv = 0.0;  // max |dx_i/dt| at the endpoint, people/day
    bool quiescent = false;      // max_abs_deriv <= quiescence_tol * N
    double max_conservation_error = 0.0;
    double min_component = 0.0;
    long undershoot_clamps = 0;
};

namespace detail {

// Undershoot handling: explicit steps may dip a compartment slightly negative; clamp to zero and
// count clamps beyond the warning threshold (-1e-9 * N) instead of failing.
struct StepMonitor {
    double reference_total = 0.0;
    double warn_threshold = 0.0;
    double max_conservation_error = 0.0;
    double min_component = 0.0;
    long undershoot_clamps = 0;

    // Returns true if any component was clamped.
    bool apply(StateVec& x) {
        bool clamped = false;
        bool warn = false;
        for (double& c : x.raw()) {
            if (c < 0.0) {
                if (c < min_component) min_component = c;
                if (c < warn_threshold) warn = true;
                c = 0.0;
                clamped = true;
            }
        }
        if (warn) ++undershoot_clamps;
        max_conservation_error = std::max(max_conservation_error, std::abs(x.total() - reference_total));
        return clamped;
    }
};

inline bool finite_state(const StateVec& x) {
    for (double c : x.raw())
        if (!std::isfinite(c)) return false;
    return true;
}

// Dormand-Prince 5(4). FSAL: the last stage of an accepted step is the first of the next.
template <typename Rhs, typename OnStep>
void advance_dopri(const ModelSpec& m, Rhs rhs, StateVec& y, double t0, double t1,
                   const IntegrationOptions& opts, double abs_tol, StepMonitor& mon, OnStep on_step) {
    // The system is autonomous, so the tableau's stage times (c2..c6) never enter.
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const int n = m.size();
    StateVec k1(m), k2(m), k3(m), k4(m), k5(m), k6(m), k7(m), ytmp(m), ynew(m);
    auto* y_ = y.raw().data();
    auto* k1_ = k1.raw().data();
    auto* k2_ = k2.raw().data();
    auto* k3_ = k3.raw().data();
    auto* k4_ = k4.raw().data();
    auto* k5_ = k5.raw().data();
    auto* k6_ = k6.raw().data();
    auto* k7_ = k7.raw().data();
    auto* yt_ = ytmp.raw().data();
    auto* yn_ = ynew.raw().data();

    double t = t0;
    double h = std::min(opts.max_step, t1 - t0);
    bool fresh_k1 = true;
    bool last_rejected = false;

    while (t < t1) {
        const bool last = h >= t1 - t;
        if (last) h = t1 - t;
        if (!last && h < 1e-12 * std::max(1.0, std::abs(t)))
            throw IntegrationError("step size underflow", t);
        if (fresh_k1) {
            rhs(y, k1);
            fresh_k1 = false;
        }

        for (int i = 0; i < n; ++i) yt_[i] = y_[i] + h * a21 * k1_[i];
        rhs(ytmp, k2);
        for (int i = 0; i < n; ++i) yt_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
        rhs(ytmp, k3);
        for (int i = 0; i < n; ++i) yt_[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
        rhs(ytmp, k4);
        for (int i = 0; i < n; ++i)
            yt_[i] = y_[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
        rhs(ytmp, k5);
        for (int i = 0; i < n; ++i)
            yt_[i] = y_[i] +
                     h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] + a65 * k5_[i]);
        rhs(ytmp, k6);
        for (int i = 0; i < n; ++i)
            yn_[i] = y_[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] + b5 * k5_[i] + b6 * k6_[i]);
        rhs(ynew, k7);

        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] +
                                  e6 * k6_[i] + e7 * k7_[i]);
            const double scale = abs_tol + opts.rel_tol * std::max(std::abs(y_[i]), std::abs(yn_[i]));
            err += (e / scale) * (e / scale);
        }
        err = std::sqrt(err / n);

        if (!finite_state(ynew) || !std::isfinite(err)) {
            h *= 0.25;
            last_rejected = true;
            continue;
        }
        if (err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            last_rejected = true;
            continue;
        }

        t = last ? t1 : t + h;
        y.raw() = ynew.raw();
        const bool clamped = mon.apply(y);
        if (clamped) {
            fresh_k1 = true;  // k7 no longer matches the (clamped) state
        } else {
            k1.raw() = k7.raw();
        }
        on_step(t, y);

        double factor = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        factor = std::clamp(factor, 0.2, last_rejected ? 1.0 : 5.0);
        h = std::min(h * factor, opts.max_step);
        last_rejected = false;
    }
}

template <typename Rhs, typename OnStep>
void advance_rk4(const ModelSpec& m, Rhs rhs, StateVec& y, double t0, double t1,
                 const IntegrationOptions& opts, StepMonitor& mon, OnStep on_step) {
    const int n = m.size();
    const long nsteps = std::max(1L, static_cast<long>(std::ceil((t1 - t0) / opts.max_step - 1e-12)));
    const double h = (t1 - t0) / nsteps;

    StateVec k1(m), k2(m), k3(m), k4(m), ytmp(m);
    auto* y_ = y.raw().data();
    auto* k1_ = k1.raw().data();
    auto* k2_ = k2.raw().data();
    auto* k3_ = k3.raw().data();
    auto* k4_ = k4.raw().data();
    auto* yt_ = ytmp.raw().data();

    for (long s = 0; s < nsteps; ++s) {
        rhs(y, k1);
        for (int i = 0; i < n; ++i) yt_[i] = y_[i] + 0.5 * h * k1_[i];
        rhs(ytmp, k2);
        for (int i = 0; i < n; ++i) yt_[i] = y_[i] + 0.5 * h * k2_[i];
        rhs(ytmp, k3);
        for (int i = 0; i < n; ++i) yt_[i] = y_[i] + h * k3_[i];
        rhs(ytmp, k4);
        for (int i = 0; i < n; ++i)
            y_[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        if (!finite_state(y)) throw IntegrationError("state became non-finite", t0 + s * h);
        mon.apply(y);
        on_step(s + 1 == nsteps ? t1 : t0 + (s + 1) * h, y);
    }
}

template <typename OnStep>
void advance(const ModelSpec& m, const EpiParams& p, StateVec& y, double t0, double t1,
             const IntegrationOptions& opts, StepMonitor& mon, OnStep on_step) {
    auto rhs = [&](const StateVec& x, StateVec& dx) { eval_rhs_into(m, p, x, dx); };
    const double abs_tol = opts.abs_tol >= 0.0 ? opts.abs_tol : 1e-8 * p.N;
    if (opts.method == Method::AdaptiveRK45)
        advance_dopri(m, rhs, y, t0, t1, opts, abs_tol, mon, on_step);
    else
        advance_rk4(m, rhs, y, t0, t1, opts, mon, on_step);
}

inline void check_inputs(const ModelSpec& m, const EpiParams& p, const StateVec& init, double t_end,
                         const IntegrationOptions& opts) {
    p.validate();
    if (init.size() != m.size() || init.k() != m.k || init.has_v() != m.separated())
        throw DomainError("initial state layout does not match model");
    for (double c : init.raw())
        if (!std::isfinite(c) || c < 0.0) throw DomainError("initial state must be finite and >= 0");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw DomainError("t_end must be finite and >= 0");
    if (opts.max_step <= 0.0) throw DomainError("max_step must be > 0");
    if (opts.rel_tol <= 0.0) throw DomainError("rel_tol must be > 0");
    if (opts.record_stride < 1) throw DomainError("record_stride must be >= 1");
}

}  // namespace detail

inline Trajectory integrate(const ModelSpec& m, const EpiParams& p, const StateVec& init,
                            double t_end, const IntegrationOptions& opts = {}) {
    detail::check_inputs(m, p, init, t_end, opts);
    Trajectory traj;
    StateVec y = init;
    detail::StepMonitor mon;
    mon.reference_total = init.total();
    mon.warn_threshold = -1e-9 * p.N;
    traj.t.push_back(0.0);
    traj.x.push_back(y);
    long accepted = 0;
    if (t_end > 0.0) {
        detail::advance(m, p, y, 0.0, t_end, opts, mon, [&](double t, const StateVec& x) {
            ++accepted;
            if (accepted % opts.record_stride == 0 || t == t_end) {
                traj.t.push_back(t);
                traj.x.push_back(x);
            }
        });
    }
    traj.max_conservation_error = mon.max_conservation_error;
    traj.min_component = mon.min_component;
    traj.undershoot_clamps = mon.undershoot_clamps;
    return traj;
}

// Long-horizon run keeping only the endpoint; reports how stationary the endpoint is.
inline SettleResult settle(const ModelSpec& m, const EpiParams& p, const StateVec& init,
                           double t_end = 10000.0, double quiescence_tol = 1e-10,
                           const IntegrationOptions& opts = {}) {
    detail::check_inputs(m, p, init, t_end, opts);
    SettleResult res;
    StateVec y = init;
    detail::StepMonitor mon;
    mon.reference_total = init.total();
    mon.warn_threshold = -1e-9 * p.N;
    if (t_end > 0.0)
        detail::advance(m, p, y, 0.0, t_end, opts, mon, [](double, const StateVec&) {});
    res.state = y;
    res.t_end = t_end;
    StateVec dx = eval_rhs(m, p, y);
    double mx = 0.0;
    for (double c : dx.raw()) mx = std::max(mx, std::abs(c));
    res.max_abs_deriv = mx;
    res.quiescent = mx <= quiescence_tol * p.N;
    res.max_conservation_error = mon.max_conservation_error;
    res.min_component = mon.min_component;
    res.undershoot_clamps = mon.undershoot_clamps;
    return res;
}

}  // namespace twostrain
