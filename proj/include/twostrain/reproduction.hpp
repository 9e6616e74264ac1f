#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "twostrain/equilibria.hpp"
#include "twostrain/errors.hpp"
#include "twostrain/model.hpp"

namespace twostrain {

enum class ReproKind { R1, R2, R12, R21 };

inline const char* repro_name(ReproKind which) {
    switch (which) {
        case ReproKind::R1: return "R1";
        case ReproKind::R2: return "R2";
        case ReproKind::R12: return "R12";
        case ReproKind::R21: return "R21";
    }
    return "?";
}

// Raw closed-form evaluation, defined for real r and with no admissibility masking (level-set
// tracing needs the algebraic expression on both sides of a boundary). The invasion numbers R21
// are evaluated in a rearrangement whose factor lambda cancels exactly, so lambda = 0 is regular:
// with v = (1+x)^r - 1 and w = v/lambda (limit r/(k alpha)), numerator and denominator share the
// common positive term and the published factored forms are recovered for lambda > 0.
inline double repro_value(ModelKind kind, int k, double r, const EpiParams& p, ReproKind which) {
    const double ka = k * p.alpha;
    const auto c = detail::chain_terms(k, r, p);
    const bool sep = is_separated(kind);

    switch (which) {
        case ReproKind::R1:
            if (sep) return p.beta1 / p.gamma * p.alpha / (p.alpha + p.lambda);
            return p.beta1 / p.gamma / ((1.0 + (k - r) * c.x) * (1.0 + c.v));
        case ReproKind::R2:
            if (sep) return p.beta2 / p.gamma * p.alpha / (p.alpha + p.lambda);
            return p.beta2 / p.gamma / (1.0 + (k - r) * c.x);
        case ReproKind::R12: {
            if (!sep) {
                const double den = (k - r - 1) * p.gamma + ka + p.beta2 + p.lambda;
                if (den == 0.0)
                    throw SingularParameterError("(k-r-1)*gamma + k*alpha + beta2 + lambda", "R12");
                return p.beta1 / p.beta2 * std::pow(((k - r) * p.gamma + ka) / den, r);
            }
            const double pden = ka * ka + ka * ((k - r - 1) * p.gamma + p.beta2 + p.lambda) -
                                p.gamma * p.lambda * r;
            const double den = ka * (p.beta2 - p.gamma + p.lambda) - p.gamma * p.lambda * r;
            if (pden == 0.0)
                throw SingularParameterError(
                    "(k*alpha)^2 + k*alpha*((k-r-1)*gamma + beta2 + lambda) - gamma*lambda*r", "R12");
            if (den == 0.0)
                throw SingularParameterError("k*alpha*(beta2 - gamma + lambda) - gamma*lambda*r", "R12");
            const double pw = ka * ((k - r) * p.gamma + ka) / pden;
            return p.beta1 / p.beta2 *
                   ((ka * (p.beta2 - p.gamma) - p.gamma * p.lambda * k) * std::pow(pw, r) +
                    p.lambda * ((k - r) * p.gamma + ka)) /
                   den;
        }
        case ReproKind::R21: {
            if (!sep) {
                const double common = (k - r) * p.gamma + ka;
                const double num = common + (p.gamma * p.lambda * (k - r) + (p.beta1 + p.lambda) * ka) * c.w;
                const double den = common + p.gamma * (ka + (k - r) * p.lambda) * c.w;
                return p.beta2 / p.beta1 * num / den;
            }
            const double common = k * (p.alpha + p.gamma) - p.gamma * r;
            const double num =
                common + (k * ((p.alpha + p.gamma) * p.lambda + p.alpha * p.beta1) - p.gamma * p.lambda * r) * c.w;
            const double den =
                common +
                (k * ((p.alpha + 2.0 * p.gamma) * p.lambda + p.alpha * p.gamma) - p.gamma * p.lambda * r) * c.w;
            return p.beta2 / p.beta1 * num / den;
        }
    }
    return std::nan("");
}

inline double repro_value(const ModelSpec& m, const EpiParams& p, ReproKind which) {
    return repro_value(m.kind, m.k, m.r, p, which);
}

// r12/r21 are reported only where they mean something: the rival strain's exclusion equilibrium
// must be admissible for "invade it" to be a question.
struct ReproductionSet {
    double r0 = 0.0;
    double r1 = 0.0;
    double r2 = 0.0;
    std::optional<double> r12;
    std::optional<double> r21;
};

inline ReproductionSet repro_closed(ModelKind kind, int k, double r, const EpiParams& p) {
    p.validate();
    ReproductionSet rs;
    rs.r1 = repro_value(kind, k, r, p, ReproKind::R1);
    rs.r2 = repro_value(kind, k, r, p, ReproKind::R2);
    rs.r0 = std::max(rs.r1, rs.r2);
    if (detail::endemic_i2(kind, k, r, p) > admissibility_band * p.N)
        rs.r12 = repro_value(kind, k, r, p, ReproKind::R12);
    if (detail::endemic_i1(kind, k, r, p) > admissibility_band * p.N)
        rs.r21 = repro_value(kind, k, r, p, ReproKind::R21);
    return rs;
}

inline ReproductionSet repro_closed(const ModelSpec& m, const EpiParams& p) {
    return repro_closed(m.kind, m.k, m.r, p);
}

// Next-generation evaluation at the closed-form equilibria: each strain's invader block is 1x1,
// so the number is (transmission) * (available susceptible pool) / (gamma N).
inline ReproductionSet repro_numeric(const ModelSpec& m, const EpiParams& p) {
    p.validate();
    ReproductionSet rs;
    const StateVec x0 = disease_free(m, p);
    rs.r1 = p.beta1 * x0.s(0) / (p.gamma * p.N);
    rs.r2 = p.beta2 * x0.stage_sum(m.r) / (p.gamma * p.N);
    rs.r0 = std::max(rs.r1, rs.r2);
    if (const auto x2 = strain2_only(m, p)) rs.r12 = p.beta1 * x2->s(0) / (p.gamma * p.N);
    if (const auto x1 = strain1_only(m, p)) rs.r21 = p.beta2 * x1->stage_sum(m.r) / (p.gamma * p.N);
    return rs;
}

enum class RegionLabel { DF, S1, S2, C, Indeterminate };

inline const char* label_name(RegionLabel l) {
    switch (l) {
        case RegionLabel::DF: return "DF";
        case RegionLabel::S1: return "S1";
        case RegionLabel::S2: return "S2";
        case RegionLabel::C: return "C";
        case RegionLabel::Indeterminate: return "indeterminate";
    }
    return "?";
}

// Region labels by threshold position:
//   DF: R1 < 1, R2 < 1            S1: R1 > 1, R2 < 1  or  all four with R12 > 1, R21 < 1
//   S2: mirror of S1              C:  all four > 1
// Values within tie_tol of 1, missing invasion numbers where both strains are supercritical, and
// the unlabelled double-exclusion corner all return Indeterminate.
inline RegionLabel classify(const ReproductionSet& rs, double tie_tol = 1e-9) {
    const auto side = [tie_tol](double v) {
        if (v > 1.0 + tie_tol) return +1;
        if (v < 1.0 - tie_tol) return -1;
        return 0;
    };
    const int c1 = side(rs.r1), c2 = side(rs.r2);
    if (c1 == 0 || c2 == 0) return RegionLabel::Indeterminate;
    if (c1 < 0 && c2 < 0) return RegionLabel::DF;
    if (c1 > 0 && c2 < 0) return RegionLabel::S1;
    if (c1 < 0 && c2 > 0) return RegionLabel::S2;
    if (!rs.r12 || !rs.r21) return RegionLabel::Indeterminate;
    const int c12 = side(*rs.r12), c21 = side(*rs.r21);
    if (c12 == 0 || c21 == 0) return RegionLabel::Indeterminate;
    if (c12 > 0 && c21 > 0) return RegionLabel::C;
    if (c12 > 0 && c21 < 0) return RegionLabel::S1;
    if (c12 < 0 && c21 > 0) return RegionLabel::S2;
    return RegionLabel::Indeterminate;
}

}  // namespace twostrain
