#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "twostrain/errors.hpp"

namespace twostrain {

// Two competing strains over a susceptibility chain S_0..S_k. "Integrated" models vaccinate into
// the back of the chain (S_k); "Separated" models vaccinate into a dedicated compartment V that
// wanes into S_0. The basic variants are the k = r = 1 instantiations.
enum class ModelKind {
    IntegratedBasic,
    SeparatedBasic,
    IntegratedChain,
    SeparatedChain,
};

inline bool is_separated(ModelKind kind) {
    return kind == ModelKind::SeparatedBasic || kind == ModelKind::SeparatedChain;
}

inline bool is_chain(ModelKind kind) {
    return kind == ModelKind::IntegratedChain || kind == ModelKind::SeparatedChain;
}

inline const char* kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::IntegratedBasic: return "integrated-basic";
        case ModelKind::SeparatedBasic: return "separated-basic";
        case ModelKind::IntegratedChain: return "integrated-chain";
        case ModelKind::SeparatedChain: return "separated-chain";
    }
    return "?";
}

inline ModelKind parse_kind(const std::string& name) {
    if (name == "integrated-basic") return ModelKind::IntegratedBasic;
    if (name == "separated-basic") return ModelKind::SeparatedBasic;
    if (name == "integrated-chain") return ModelKind::IntegratedChain;
    if (name == "separated-chain") return ModelKind::SeparatedChain;
    throw DomainError("unknown model kind '" + name + "'");
}

// Structural description: chain length k and vaccination reach r (stages S_0..S_r are eligible
// for vaccination and susceptible to strain 2; stages above r are immune to both strains).
struct ModelSpec {
    ModelKind kind = ModelKind::IntegratedBasic;
    int k = 1;
    int r = 1;

    bool separated() const { return is_separated(kind); }
    bool chain() const { return is_chain(kind); }
    int n_stages() const { return k + 1; }  // S_0..S_k
    int size() const { return k + 3 + (separated() ? 1 : 0); }

    // Flat layout: [S_0..S_k, I1, I2, (V)].
    int i1_index() const { return k + 1; }
    int i2_index() const { return k + 2; }
    int v_index() const { return k + 3; }
};

inline ModelSpec make_model(ModelKind kind, int k, int r) {
    if (k < 1) throw DomainError("k must be >= 1");
    if (r < 0 || r > k) throw DomainError("r must satisfy 0 <= r <= k");
    if (!is_chain(kind) && (k != 1 || r != 1))
        throw DomainError("basic model kinds are fixed at k = r = 1");
    return ModelSpec{kind, k, r};
}

inline ModelSpec make_model(ModelKind kind) {
    return is_chain(kind) ? make_model(kind, 1, 1) : ModelSpec{kind, 1, 1};
}

// Rates are per day, N is the (conserved) population size.
struct EpiParams {
    double beta1 = 0.0;   // strain-1 transmission
    double beta2 = 0.0;   // strain-2 transmission
    double gamma = 0.1;   // recovery
    double alpha = 0.1;   // immunity waning (chain models wane stage-to-stage at rate k*alpha)
    double lambda = 0.0;  // vaccination
    double N = 1000.0;

    void validate() const {
        auto bad = [](double x) { return !std::isfinite(x); };
        if (bad(beta1) || bad(beta2) || bad(gamma) || bad(alpha) || bad(lambda) || bad(N))
            throw DomainError("parameters must be finite");
        if (beta1 < 0 || beta2 < 0) throw DomainError("transmission rates must be >= 0");
        if (gamma <= 0) throw DomainError("gamma must be > 0");
        if (alpha <= 0) throw DomainError("alpha must be > 0");
        if (lambda < 0) throw DomainError("lambda must be >= 0");
        if (N <= 0) throw DomainError("N must be > 0");
    }
};

// State over the flat layout [S_0..S_k, I1, I2, (V)].
class StateVec {
public:
    StateVec() = default;
    explicit StateVec(const ModelSpec& m) : y_(m.size(), 0.0), k_(m.k), has_v_(m.separated()) {}

    int k() const { return k_; }
    bool has_v() const { return has_v_; }
    int size() const { return static_cast<int>(y_.size()); }

    double s(int i) const { return y_[i]; }
    double& s(int i) { return y_[i]; }
    double i1() const { return y_[k_ + 1]; }
    double& i1() { return y_[k_ + 1]; }
    double i2() const { return y_[k_ + 2]; }
    double& i2() { return y_[k_ + 2]; }
    double v() const { return has_v_ ? y_[k_ + 3] : 0.0; }
    double& v() { return y_[k_ + 3]; }

    // Sum of the first r+1 stages (the strain-2-susceptible, vaccination-eligible block).
    double stage_sum(int r) const {
        double acc = 0.0;
        for (int i = 0; i <= r; ++i) acc += y_[i];
        return acc;
    }

    double total() const {
        double acc = 0.0;
        for (double x : y_) acc += x;
        return acc;
    }

    std::vector<double>& raw() { return y_; }
    const std::vector<double>& raw() const { return y_; }

    bool operator==(const StateVec&) const = default;

private:
    std::vector<double> y_;
    int k_ = 0;
    bool has_v_ = false;
};

inline StateVec make_state(const ModelSpec& m, double s0, double i1, double i2, double v = 0.0) {
    StateVec x(m);
    x.s(0) = s0;
    x.i1() = i1;
    x.i2() = i2;
    if (m.separated()) x.v() = v;
    return x;
}

// Standard seeding: 1% of the population infected with each strain, remainder fully susceptible.
inline StateVec default_init(const ModelSpec& m, const EpiParams& p) {
    const double seed = 0.01 * p.N;
    return make_state(m, p.N - 2 * seed, seed, seed);
}

// Effective immunity eps: long-run vaccinated/immune fraction induced by vaccination rate lambda.
// The integrated chain counts only the stages above r (immune to both strains), giving the
// (k-r)-weighted map; all other kinds count the single waning pool.
inline double epsilon_to_lambda(ModelKind kind, int k, double r, double eps, double alpha) {
    if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("eps must lie in [0, 1)");
    if (alpha <= 0) throw DomainError("alpha must be > 0");
    if (kind == ModelKind::IntegratedChain) {
        if (k - r <= 0)
            throw DegenerateMapError(
                "integrated chain with r = k has eps identically 0; eps cannot determine lambda");
        return eps * alpha * k / ((1.0 - eps) * (k - r));
    }
    return eps * alpha / (1.0 - eps);
}

inline double lambda_to_epsilon(ModelKind kind, int k, double r, double lambda, double alpha) {
    if (lambda < 0) throw DomainError("lambda must be >= 0");
    if (alpha <= 0) throw DomainError("alpha must be > 0");
    if (kind == ModelKind::IntegratedChain) return (k - r) * lambda / (k * alpha + (k - r) * lambda);
    return lambda / (alpha + lambda);
}

inline double epsilon_to_lambda(const ModelSpec& m, double eps, double alpha) {
    return epsilon_to_lambda(m.kind, m.k, m.r, eps, alpha);
}

inline double lambda_to_epsilon(const ModelSpec& m, double lambda, double alpha) {
    return lambda_to_epsilon(m.kind, m.k, m.r, lambda, alpha);
}

// Vaccinated/infected flow balance. One code path covers all four kinds; the basic models are
// exactly the k = r = 1 case, so their right-hand sides are the same arithmetic by construction.
inline void eval_rhs_into(const ModelSpec& m, const EpiParams& p, const StateVec& x, StateVec& dx) {
    if (x.size() != m.size() || x.k() != m.k || x.has_v() != m.separated())
        throw DomainError("state layout does not match model");
    if (dx.size() != m.size() || dx.k() != m.k || dx.has_v() != m.separated())
        throw DomainError("derivative layout does not match model");

    const int k = m.k;
    const int r = m.r;
    const bool sep = m.separated();
    const double ka = k * p.alpha;
    const double f1 = p.beta1 / p.N * x.i1();  // strain-1 force of infection
    const double f2 = p.beta2 / p.N * x.i2();  // strain-2 force of infection
    const double sum_sr = x.stage_sum(r);

    dx.s(0) = -f1 * x.s(0) - f2 * x.s(0) - p.lambda * x.s(0) + ka * x.s(1);
    if (sep) dx.s(0) += p.alpha * x.v();
    for (int i = 1; i < k; ++i) {
        dx.s(i) = ka * (x.s(i + 1) - x.s(i));
        if (i <= r) dx.s(i) -= f2 * x.s(i) + p.lambda * x.s(i);
    }
    dx.s(k) = p.gamma * (x.i1() + x.i2()) - ka * x.s(k);
    if (!sep) dx.s(k) += p.lambda * sum_sr;
    if (r == k) dx.s(k) -= f2 * x.s(k) + p.lambda * x.s(k);
    dx.i1() = f1 * x.s(0) - p.gamma * x.i1();
    dx.i2() = f2 * sum_sr - p.gamma * x.i2();
    if (sep) dx.v() = p.lambda * sum_sr - p.alpha * x.v();
}

inline StateVec eval_rhs(const ModelSpec& m, const EpiParams& p, const StateVec& x) {
    StateVec dx(m);
    eval_rhs_into(m, p, x, dx);
    return dx;
}

}  // namespace twostrain
