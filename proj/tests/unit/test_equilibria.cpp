#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <twostrain/equilibria.hpp>
#include <twostrain/integrate.hpp>
#include <twostrain/reproduction.hpp>

#include "support/random_params.hpp"

using namespace twostrain;
using twostrain::testing::ParamDraw;

namespace {

EpiParams fig_params(double beta1, double beta2, double lambda) {
    EpiParams p;
    p.beta1 = beta1;
    p.beta2 = beta2;
    p.gamma = 0.1;
    p.alpha = 0.1;
    p.lambda = lambda;
    p.N = 1000.0;
    return p;
}

}  // namespace

TEST_CASE("disease-free stage profile matches the hand-solved chain") {
    // k = 5, r = 3, lambda = 0.25, alpha = 0.1: x = 0.5, so the profile is
    // S0 = N / ((1 + 2x)(1 + x)^3) with a geometric ladder above it.
    const ModelSpec m = make_model(ModelKind::IntegratedChain, 5, 3);
    const EpiParams p = fig_params(0.4, 0.2, 0.25);
    const StateVec dfe = disease_free(m, p);
    CHECK(dfe.s(0) == Catch::Approx(1000.0 / 6.75).epsilon(1e-14));
    CHECK(dfe.s(1) == Catch::Approx(0.5 * 1000.0 / 6.75).epsilon(1e-14));
    CHECK(dfe.s(2) == Catch::Approx(0.75 * 1000.0 / 6.75).epsilon(1e-14));
    CHECK(dfe.s(3) == Catch::Approx(1.125 * 1000.0 / 6.75).epsilon(1e-14));
    CHECK(dfe.s(4) == Catch::Approx(250.0).epsilon(1e-14));
    CHECK(dfe.s(5) == Catch::Approx(250.0).epsilon(1e-14));
    CHECK(dfe.i1() == 0.0);
    CHECK(dfe.i2() == 0.0);
    CHECK(dfe.total() == Catch::Approx(p.N).epsilon(1e-14));
}

TEST_CASE("separated disease-free split is the single-pool balance") {
    const ModelSpec m = make_model(ModelKind::SeparatedChain, 4, 2);
    const EpiParams p = fig_params(0.4, 0.2, 0.05);
    const StateVec dfe = disease_free(m, p);
    CHECK(dfe.s(0) == Catch::Approx(1000.0 * 0.1 / 0.15).epsilon(1e-14));
    CHECK(dfe.v() == Catch::Approx(1000.0 * 0.05 / 0.15).epsilon(1e-14));
    CHECK(dfe.s(1) == 0.0);  // no infections, so the waning ladder is empty
    CHECK(dfe.total() == Catch::Approx(p.N).epsilon(1e-14));
}

TEST_CASE("disease-free state sums to the population for every kind") {
    ParamDraw draw(555123);
    for (int trial = 0; trial < 400; ++trial) {
        const auto d = draw.wide(draw.kind());
        const StateVec dfe = disease_free(d.m, d.p);
        REQUIRE(dfe.total() == Catch::Approx(d.p.N).epsilon(1e-12));
        REQUIRE(equilibrium_residual(d.m, d.p, dfe) <= 1e-10 * d.p.N);
    }
}

TEST_CASE("strain-2-only level in the integrated basic model ignores vaccination") {
    // The whole susceptible-or-vaccinated pool catches strain 2, so I2* = N (1 - gamma/beta2).
    const ModelSpec m = make_model(ModelKind::IntegratedBasic, 1, 1);
    for (double lambda : {0.0, 0.02, 0.1, 0.5}) {
        const EpiParams p = fig_params(0.6, 0.2, lambda);
        const auto x2 = strain2_only(m, p);
        REQUIRE(x2.has_value());
        CHECK(x2->i2() == Catch::Approx(500.0).epsilon(1e-12));
    }
}

TEST_CASE("strain-2-only level in the separated basic model pays the vaccinated share") {
    const ModelSpec m = make_model(ModelKind::SeparatedBasic, 1, 1);
    const EpiParams p = fig_params(0.6, 0.2, 0.05);
    const auto x2 = strain2_only(m, p);
    REQUIRE(x2.has_value());
    CHECK(x2->i2() == Catch::Approx(250.0).epsilon(1e-12));
    CHECK(x2->v() == Catch::Approx(250.0).epsilon(1e-12));
    CHECK(x2->s(0) + x2->s(1) == Catch::Approx(500.0).epsilon(1e-12));
}

TEST_CASE("endemic equilibria satisfy the flow balance whenever present") {
    ParamDraw draw(321321);
    int present1 = 0, present2 = 0;
    for (int trial = 0; trial < 400; ++trial) {
        const auto d = draw.wide(draw.kind());
        const EquilibriumSet set = equilibria(d.m, d.p);
        if (set.strain1_only) {
            ++present1;
            REQUIRE(equilibrium_residual(d.m, d.p, *set.strain1_only) <= 1e-10 * d.p.N);
            REQUIRE(set.strain1_only->i1() > 0.0);
            REQUIRE(set.strain1_only->i2() == 0.0);
        }
        if (set.strain2_only) {
            ++present2;
            REQUIRE(equilibrium_residual(d.m, d.p, *set.strain2_only) <= 1e-10 * d.p.N);
            REQUIRE(set.strain2_only->i2() > 0.0);
            REQUIRE(set.strain2_only->i1() == 0.0);
        }
    }
    // The draw ranges straddle the thresholds, so both branches must appear often.
    CHECK(present1 > 50);
    CHECK(present2 > 50);
}

TEST_CASE("endemic presence tracks the printed invasion numbers") {
    ParamDraw draw(987654);
    for (int trial = 0; trial < 300; ++trial) {
        const auto d = draw.wide(draw.kind());
        const EquilibriumSet set = equilibria(d.m, d.p);
        const ReproductionSet rs = repro_closed(d.m, d.p);
        REQUIRE(set.strain1_only.has_value() == rs.r21.has_value());
        REQUIRE(set.strain2_only.has_value() == rs.r12.has_value());
    }
}

TEST_CASE("strain-1 boundary equilibrium appears exactly above its threshold") {
    const ModelSpec m = make_model(ModelKind::SeparatedBasic, 1, 1);
    EpiParams p = fig_params(0.6, 0.2, 0.0);

    p.lambda = epsilon_to_lambda(m, 0.8, p.alpha);  // R1 = 1.2
    CHECK(strain1_only(m, p).has_value());

    p.lambda = epsilon_to_lambda(m, 0.9, p.alpha);  // R1 = 0.6
    CHECK_FALSE(strain1_only(m, p).has_value());
}

TEST_CASE("settle lands on the closed-form strain-1 state") {
    const ModelSpec m = make_model(ModelKind::SeparatedBasic, 1, 1);
    EpiParams p = fig_params(0.6, 0.2, 0.0);
    p.lambda = epsilon_to_lambda(m, 0.8, p.alpha);
    const auto x1 = strain1_only(m, p);
    REQUIRE(x1.has_value());
    CHECK(x1->i1() == Catch::Approx(1000.0 / 12.0).epsilon(1e-12));  // matches the settled sweep

    const SettleResult res = settle(m, p, default_init(m, p));
    REQUIRE(res.quiescent);
    for (int i = 0; i < m.size(); ++i)
        REQUIRE(res.state.raw()[i] == Catch::Approx(x1->raw()[i]).margin(1e-3 * p.N));
}

TEST_CASE("settle lands on the closed-form strain-2 state in the chain model") {
    const ModelSpec m = make_model(ModelKind::IntegratedChain, 5, 3);
    EpiParams p = fig_params(0.4, 0.2, 0.0);
    p.lambda = epsilon_to_lambda(m, 0.35, p.alpha);  // fig2c S2 region
    const auto x2 = strain2_only(m, p);
    REQUIRE(x2.has_value());
    const SettleResult res = settle(m, p, default_init(m, p));
    REQUIRE(res.quiescent);
    for (int i = 0; i < m.size(); ++i)
        REQUIRE(res.state.raw()[i] == Catch::Approx(x2->raw()[i]).margin(1e-3 * p.N));
}

TEST_CASE("full equilibrium set reports the same states as the individual solvers") {
    const ModelSpec m = make_model(ModelKind::IntegratedChain, 5, 3);
    const EpiParams p = fig_params(0.4, 0.2, 0.1);
    const EquilibriumSet set = equilibria(m, p);
    CHECK(set.disease_free.raw() == disease_free(m, p).raw());
    REQUIRE(set.strain1_only.has_value() == strain1_only(m, p).has_value());
    REQUIRE(set.strain2_only.has_value() == strain2_only(m, p).has_value());
    if (set.strain1_only) CHECK(set.strain1_only->raw() == strain1_only(m, p)->raw());
    if (set.strain2_only) CHECK(set.strain2_only->raw() == strain2_only(m, p)->raw());
}
