#pragma once

#include <cmath>
#include <optional>

#include "twostrain/errors.hpp"
#include "twostrain/model.hpp"

namespace twostrain {

// Endemic levels within band * N of zero (or below) are treated as inadmissible.
inline constexpr double admissibility_band = 1e-12;

namespace detail {

// Shared chain quantities. All closed forms are arranged around x = lambda/(k*alpha),
// v = (1+x)^r - 1 (computed cancellation-free) and w = v/lambda, whose lambda -> 0 limit is
// r/(k*alpha). This removes the 0/0 that the factored forms develop at lambda = 0.
struct ChainTerms {
    double x;  // lambda / (k alpha)
    double v;  // (1+x)^r - 1
    double w;  // v / lambda, continued to r/(k alpha) at lambda = 0
};

inline ChainTerms chain_terms(int k, double r, const EpiParams& p) {
    ChainTerms c;
    c.x = p.lambda / (k * p.alpha);
    c.v = std::expm1(r * std::log1p(c.x));
    c.w = p.lambda > 0.0 ? c.v / p.lambda : r / (k * p.alpha);
    return c;
}

// Fill stages 1..k from S_1, geometric with ratio 1+x through stage r+1, constant above.
inline void fill_stages_up(StateVec& s, int k, int r, double x, double s1) {
    s.s(1) = s1;
    for (int i = 1; i <= std::min(r, k - 1); ++i) s.s(i + 1) = (1.0 + x) * s.s(i);
    for (int i = r + 2; i <= k; ++i) s.s(i) = s.s(r + 1);
}

// Endemic infection levels, defined for real r (analysis sweeps treat r as continuous). May be
// <= 0 or non-finite; the sign decides admissibility. Same arithmetic backs both the equilibrium
// constructors and the closed-form invasion-number gating, so the two can never disagree.
inline double endemic_i1(ModelKind kind, int k, double r, const EpiParams& p) {
    if (p.beta1 <= 0.0) return -p.N;
    const double ka = k * p.alpha;
    const auto c = chain_terms(k, r, p);
    if (is_separated(kind)) {
        const double denom =
            (ka + (k - r) * p.gamma) * (1.0 + c.v) + k * (p.alpha + p.lambda) * p.gamma * c.w;
        return p.N * k * (p.beta1 * p.alpha - (p.alpha + p.lambda) * p.gamma) * (1.0 + c.v) /
               (p.beta1 * denom);
    }
    const double denom = 1.0 + p.gamma * c.w + p.gamma * (k - r) * (1.0 + c.v) / ka;
    return p.N * (p.beta1 - p.gamma * (1.0 + c.v) * (1.0 + (k - r) * c.x)) / (p.beta1 * denom);
}

inline double endemic_i2(ModelKind kind, int k, double r, const EpiParams& p) {
    if (p.beta2 <= 0.0) return -p.N;
    const double ka = k * p.alpha;
    if (is_separated(kind))
        return p.N * k * (p.alpha * p.beta2 - (p.alpha + p.lambda) * p.gamma) /
               (p.beta2 * (ka + (k - r) * p.gamma));
    return p.N * ka * (p.beta2 - p.gamma * (1.0 + (k - r) * p.lambda / ka)) /
           (p.beta2 * ((k - r) * p.gamma + ka));
}

}  // namespace detail

inline StateVec disease_free(const ModelSpec& m, const EpiParams& p) {
    p.validate();
    StateVec eq(m);
    if (m.separated()) {
        eq.s(0) = p.N * p.alpha / (p.alpha + p.lambda);
        eq.v() = p.N - eq.s(0);
        return eq;
    }
    const auto c = detail::chain_terms(m.k, m.r, p);
    eq.s(0) = p.N / ((1.0 + (m.k - m.r) * c.x) * (1.0 + c.v));
    if (p.lambda > 0.0) detail::fill_stages_up(eq, m.k, m.r, c.x, c.x * eq.s(0));
    return eq;
}

inline std::optional<StateVec> strain1_only(const ModelSpec& m, const EpiParams& p) {
    p.validate();
    if (p.beta1 <= 0.0) return std::nullopt;
    const int k = m.k, r = m.r;
    const double ka = k * p.alpha;
    const auto c = detail::chain_terms(k, r, p);

    const double i1 = detail::endemic_i1(m.kind, k, r, p);
    if (!(i1 > admissibility_band * p.N)) return std::nullopt;

    StateVec eq(m);
    eq.s(0) = p.N * p.gamma / p.beta1;
    eq.i1() = i1;
    if (m.separated()) {
        // Stages decay geometrically below r+1: S_i = (gamma I1 / ka) (1+x)^(i-1-r).
        const double top = p.gamma * i1 / ka;
        for (int i = 1; i <= k; ++i) eq.s(i) = i > r ? top : top * std::pow(1.0 + c.x, i - 1 - r);
        eq.v() = p.lambda / p.alpha * eq.stage_sum(r);
    } else {
        detail::fill_stages_up(eq, k, r, c.x, p.gamma * (p.beta1 * i1 + p.N * p.lambda) / (ka * p.beta1));
    }
    return eq;
}

inline std::optional<StateVec> strain2_only(const ModelSpec& m, const EpiParams& p) {
    p.validate();
    if (p.beta2 <= 0.0) return std::nullopt;
    const int k = m.k, r = m.r;
    const double ka = k * p.alpha;

    StateVec eq(m);
    if (m.separated()) {
        const double i2 = detail::endemic_i2(m.kind, k, r, p);
        if (!(i2 > admissibility_band * p.N)) return std::nullopt;
        const double q = 1.0 + (p.beta2 * i2 / p.N + p.lambda) / ka;
        const double top = p.gamma * i2 / ka;
        for (int i = 1; i <= k; ++i) eq.s(i) = i > r ? top : top * std::pow(q, i - 1 - r);
        eq.s(0) = (p.gamma * i2 * std::pow(q, -static_cast<double>(r)) +
                   p.N * p.lambda * p.gamma / p.beta2) /
                  (p.beta2 * i2 / p.N + p.lambda);
        eq.i2() = i2;
        eq.v() = p.N * p.gamma * p.lambda / (p.beta2 * p.alpha);
        return eq;
    }

    const double i2 = detail::endemic_i2(m.kind, k, r, p);
    if (!(i2 > admissibility_band * p.N)) return std::nullopt;
    const double stage_den = (k - r - 1) * p.gamma + ka + p.beta2 + p.lambda;
    if (!(stage_den > 0.0))
        throw SingularParameterError("(k-r-1)*gamma + k*alpha + beta2 + lambda", "strain-2-only stages");
    eq.s(0) = p.N * p.gamma / p.beta2 * std::pow(((k - r) * p.gamma + ka) / stage_den, r);
    const double grow = (p.beta2 + p.lambda - p.gamma) / ((k - r) * p.gamma + ka);
    for (int i = 1; i <= r; ++i) eq.s(i) = (i == 1 ? grow * eq.s(0) : (1.0 + grow) * eq.s(i - 1));
    for (int i = r + 1; i <= k; ++i) eq.s(i) = p.gamma * (p.beta2 * i2 + p.N * p.lambda) / (ka * p.beta2);
    eq.i2() = i2;
    return eq;
}

struct EquilibriumSet {
    StateVec disease_free;
    std::optional<StateVec> strain1_only;
    std::optional<StateVec> strain2_only;
};

inline EquilibriumSet equilibria(const ModelSpec& m, const EpiParams& p) {
    return EquilibriumSet{disease_free(m, p), strain1_only(m, p), strain2_only(m, p)};
}

// Max |dx/dt| at the candidate point (people/day); closed forms should sit at ~1e-13 * N.
inline double equilibrium_residual(const ModelSpec& m, const EpiParams& p, const StateVec& x) {
    StateVec dx = eval_rhs(m, p, x);
    double mx = 0.0;
    for (double c : dx.raw()) mx = std::max(mx, std::abs(c));
    return mx;
}

}  // namespace twostrain
