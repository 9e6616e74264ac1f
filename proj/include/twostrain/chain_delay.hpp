#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "twostrain/errors.hpp"
#include "twostrain/integrate.hpp"
#include "twostrain/model.hpp"

namespace twostrain {

// Erlang(shape, rate) density: the distribution of a shape-stage exponential relay.
struct ErlangKernel {
    int shape = 1;
    double rate = 1.0;

    double mean() const { return shape / rate; }
};

inline double erlang_pdf(const ErlangKernel& ker, double t) {
    if (ker.shape < 1) throw DomainError("Erlang shape must be >= 1");
    if (!(ker.rate > 0.0)) throw DomainError("Erlang rate must be > 0");
    if (t < 0.0) return 0.0;
    if (t == 0.0) return ker.shape == 1 ? ker.rate : 0.0;
    return ker.rate *
           std::exp((ker.shape - 1) * std::log(ker.rate * t) - ker.rate * t - std::lgamma(ker.shape));
}

// The chain g^i(t) = Erlang(i, k*alpha) satisfies g^1' = -ka g^1, g^i' = ka (g^{i-1} - g^i).
// Returns the max pointwise gap between the differentiated density and the chain right-hand side.
inline double erlang_chain_residual(int k, double alpha, const std::vector<double>& grid) {
    if (k < 1) throw DomainError("k must be >= 1");
    if (!(alpha > 0.0)) throw DomainError("alpha must be > 0");
    const double ka = k * alpha;
    double worst = 0.0;
    for (double t : grid) {
        if (t < 0.0) throw DomainError("grid times must be >= 0");
        double prev = 0.0;  // g^0 contributes nothing
        for (int i = 1; i <= k; ++i) {
            const double g = erlang_pdf({i, ka}, t);
            double analytic;
            if (t > 0.0)
                analytic = g * ((i - 1) / t - ka);
            else
                analytic = i == 2 ? ka * ka : (i == 1 ? -ka * ka : 0.0);
            const double chain = ka * (prev - g);
            worst = std::max(worst, std::abs(analytic - chain));
            prev = g;
        }
    }
    return worst;
}

struct DelayCheckReport {
    double t_check = 0.0;
    double quad_step = 0.0;         // max grid spacing used by the quadrature
    int n_points = 0;
    double truncation_bound = 0.0;  // N * exp(-k alpha t_check): worst-case ignored-history mass
    std::vector<double> per_index_residuals;  // |S_i(quadrature) - S_i(trajectory)|, i = 1..k
    double max_substitution_residual = 0.0;
    double max_gamma_pi_residual = 0.0;  // flow identities Gamma = ka S_{r+1}, Pi = ka S_1 (people/day)
};

namespace detail {

// Trapezoid weights for a (possibly nonuniform) grid.
inline std::vector<double> trapezoid_weights(const std::vector<double>& t) {
    const size_t n = t.size();
    std::vector<double> w(n, 0.0);
    for (size_t j = 0; j + 1 < n; ++j) {
        const double h = t[j + 1] - t[j];
        w[j] += 0.5 * h;
        w[j + 1] += 0.5 * h;
    }
    return w;
}

}  // namespace detail

// Verifies that the chain stages reproduce the delay-kernel substitution integrals: the recovered
// flow filtered through Erlang(k-r) gives Gamma, Gamma filtered through strain-2 survival,
// vaccination escape and Erlang(r-i+1) gives ka S_i for i <= r, and the raw flow filtered through
// Erlang(k-i+1) gives ka S_i above r. Quadrature is trapezoid on the trajectory's own grid with
// zero pre-history, so runs that start at their initial condition incur no truncation error.
inline DelayCheckReport lct_substitution_check(const ModelSpec& m, const EpiParams& p,
                                               const Trajectory& traj, double t_check) {
    p.validate();
    if (traj.t.empty()) throw DomainError("trajectory is empty");
    if (!(t_check > 0.0)) throw DomainError("t_check must be > 0");

    // Locate t_check on the grid (it must be a grid point; the quadrature does not interpolate).
    size_t last = traj.t.size();
    for (size_t j = 0; j < traj.t.size(); ++j)
        if (std::abs(traj.t[j] - t_check) <= 1e-9 * std::max(1.0, t_check)) last = j;
    if (last == traj.t.size()) throw DomainError("t_check is not a trajectory grid point");

    const int k = m.k, r = m.r;
    const double ka = k * p.alpha;
    const std::vector<double> t(traj.t.begin(), traj.t.begin() + last + 1);
    const size_t M = t.size();
    if (M < 3) throw DomainError("trajectory grid too coarse for quadrature");

    DelayCheckReport rep;
    rep.t_check = t_check;
    rep.n_points = static_cast<int>(M);
    for (size_t j = 0; j + 1 < M; ++j) rep.quad_step = std::max(rep.quad_step, t[j + 1] - t[j]);
    if (rep.quad_step > 0.1 / ka)
        throw DomainError("trajectory grid does not resolve the waning kernel (need >= 10 points per 1/(k*alpha))");
    rep.truncation_bound = p.N * std::exp(-ka * t_check);

    // Uniform grids let every kernel evaluation be read from a lag table.
    const double h0 = (t.back() - t.front()) / (M - 1);
    bool uniform = true;
    for (size_t j = 0; j + 1 < M; ++j)
        if (std::abs(t[j + 1] - t[j] - h0) > 1e-9 * std::max(h0, 1.0)) uniform = false;
    std::vector<std::vector<double>> lag(k + 1);
    if (uniform)
        for (int b = 1; b <= k; ++b) {
            lag[b].resize(M);
            for (size_t d = 0; d < M; ++d) lag[b][d] = erlang_pdf({b, ka}, d * h0);
        }
    const auto kernel = [&](int b, size_t j, size_t l) {
        return uniform ? lag[b][j - l] : erlang_pdf({b, ka}, t[j] - t[l]);
    };

    const std::vector<double> w = detail::trapezoid_weights(t);

    // A(tau): flow entering the back of the chain.
    std::vector<double> A(M), i2cum(M, 0.0);
    for (size_t j = 0; j < M; ++j) {
        const StateVec& x = traj.x[j];
        A[j] = p.gamma * (x.i1() + x.i2());
        if (!m.separated()) A[j] += p.lambda * x.stage_sum(r);
    }
    for (size_t j = 1; j < M; ++j)
        i2cum[j] = i2cum[j - 1] +
                   0.5 * (t[j] - t[j - 1]) * (traj.x[j].i2() + traj.x[j - 1].i2());

    // Gamma(t_j): A filtered through Erlang(k-r); the r = k case degenerates to the identity.
    std::vector<double> G(M);
    if (r == k) {
        G = A;
    } else {
        for (size_t j = 0; j < M; ++j) {
            // Weights for the sub-grid [0, t_j].
            double acc = 0.0;
            for (size_t l = 0; l <= j; ++l) {
                double wj = (l == 0 || l == j) ? 0.0 : 0.5 * (t[l + 1] - t[l - 1]);
                if (l == 0 && j > 0) wj = 0.5 * (t[1] - t[0]);
                if (l == j && j > 0) wj = 0.5 * (t[j] - t[j - 1]);
                acc += wj * A[l] * kernel(k - r, j, l);
            }
            G[j] = acc;
        }
    }

    const StateVec& xT = traj.x[last];
    const size_t T = M - 1;
    rep.per_index_residuals.assign(k, 0.0);

    // Stages below the vaccination reach: survival against strain 2 and vaccination applies.
    for (int i = 1; i <= r; ++i) {
        double acc = 0.0;
        for (size_t l = 0; l < M; ++l) {
            const double surv = std::exp(-p.beta2 / p.N * (i2cum[T] - i2cum[l]) - p.lambda * (t[T] - t[l]));
            acc += w[l] * G[l] * surv * kernel(r - i + 1, T, l);
        }
        rep.per_index_residuals[i - 1] = std::abs(acc / ka - xT.s(i));
    }
    // Stages above the reach: plain Erlang filtering of the raw flow.
    for (int i = r + 1; i <= k; ++i) {
        double acc = 0.0;
        for (size_t l = 0; l < M; ++l) acc += w[l] * A[l] * kernel(k - i + 1, T, l);
        rep.per_index_residuals[i - 1] = std::abs(acc / ka - xT.s(i));
    }
    rep.max_substitution_residual =
        *std::max_element(rep.per_index_residuals.begin(), rep.per_index_residuals.end());

    // Flow identities at t_check.
    double gp = 0.0;
    if (r < k) gp = std::max(gp, std::abs(G[T] - ka * xT.s(r + 1)));
    if (r >= 1) {
        double pi = 0.0;
        for (size_t l = 0; l < M; ++l) {
            const double surv = std::exp(-p.beta2 / p.N * (i2cum[T] - i2cum[l]) - p.lambda * (t[T] - t[l]));
            pi += w[l] * G[l] * surv * kernel(r, T, l);
        }
        gp = std::max(gp, std::abs(pi - ka * xT.s(1)));
    }
    rep.max_gamma_pi_residual = gp;
    return rep;
}

}  // namespace twostrain
