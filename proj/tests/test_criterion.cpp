#include <doctest.h>

#include <cmath>

#include "phi4lsi/criterion.hpp"
#include "phi4lsi/errors.hpp"

using namespace phi4;

TEST_CASE("kappa_dot closed form") {
    CHECK(kappa_dot(2.0, 2.0 / 3.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(kappa_dot(1.0, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("gaussian profiles integrate to the exact log-Sobolev constant") {
    for (double m2 : {0.25, 1.0, 4.0}) {
        const auto rep = lsi_lower_bound(gaussian_profile(m2));
        REQUIRE(rep.has_gamma_lower);
        CHECK(std::abs(rep.gamma_lower - m2) / m2 < 1e-8);
        CHECK(rep.has_gamma_upper);
        CHECK(rep.gamma_upper == doctest::Approx(m2).epsilon(1e-12));
        CHECK(rep.kappa_integral == doctest::Approx(1.0 / m2).epsilon(1e-8));
        CHECK(rep.head_value > 0.0);
        CHECK(rep.tail_value > 0.0);
        CHECK(rep.divergence_decade.empty());
    }
}

TEST_CASE("upper-bound profiles only lower the certified gamma") {
    // same gaussian curve, but tagged as a bound: the integrator must stay sound
    auto prof = gaussian_profile(1.0);
    for (auto& p : prof.provenance) p = "skeleton_bound";
    prof.source = "skeleton";
    prof.tail_rule = "convexity_cap:1";
    const auto rep = lsi_lower_bound(prof);
    REQUIRE(rep.has_gamma_lower);
    CHECK(rep.gamma_lower <= 1.0 + 1e-10);
    CHECK(rep.gamma_lower > 0.5);  // dense grid: the Griffiths cap costs little
}

TEST_CASE("inflated profiles give strictly smaller gamma") {
    // 5% relative inflation keeps q(t)/t integrable near t = 0, unlike an
    // additive offset, which must (and does) diverge
    auto prof = gaussian_profile(1.0);
    for (std::size_t i = 0; i < prof.chi.size(); ++i) prof.chi[i] *= 1.05;
    for (auto& p : prof.provenance) p = "skeleton_bound";
    prof.chi_cap = 1.05;
    prof.tail_rule = "convexity_cap:1.05";
    const auto rep = lsi_lower_bound(prof);
    REQUIRE(rep.has_gamma_lower);
    CHECK(rep.gamma_lower < 1.0);
    CHECK(rep.gamma_lower > 0.0);
}

TEST_CASE("additive inflation at all scales is rejected as divergent") {
    auto prof = gaussian_profile(1.0);
    for (std::size_t i = 0; i < prof.chi.size(); ++i) prof.chi[i] += 0.05;
    for (auto& p : prof.provenance) p = "skeleton_bound";
    prof.chi_cap = 1.05;
    prof.tail_rule = "convexity_cap:1.05";
    const auto rep = lsi_lower_bound(prof);
    CHECK_FALSE(rep.has_gamma_lower);
    CHECK(rep.diagnostics.find("diverg") != std::string::npos);
}

TEST_CASE("divergent profiles report the decade instead of a bound") {
    SusceptibilityProfile prof;
    prof.m2 = 1.0;
    prof.source = "skeleton";
    prof.tail_rule = "none";
    prof.chi_cap = INFINITY;
    prof.head_constant = 0.0;
    prof.head_certified = true;
    for (double t = 1e-2; t <= 1e8; t *= 1.2589254117941673) {
        prof.t.push_back(t);
        prof.chi.push_back(2.0 * t);  // grows linearly: e^{2R} explodes
        prof.chi_stderr.push_back(0.0);
        prof.provenance.push_back("skeleton_bound");
    }
    const auto rep = lsi_lower_bound(prof);
    CHECK_FALSE(rep.has_gamma_lower);
    CHECK_FALSE(rep.divergence_decade.empty());
    CHECK(rep.diagnostics.find("diverg") != std::string::npos);
}

TEST_CASE("statistical profiles get a conservative variant") {
    auto prof = gaussian_profile(1.0, default_t_grid(1e-4, 1e4, 40));
    for (auto& p : prof.provenance) p = "mc_estimate";
    // relative errors: an absolute stderr at t -> 0 would swamp chi itself
    for (std::size_t i = 0; i < prof.chi_stderr.size(); ++i) prof.chi_stderr[i] = 0.01 * prof.chi[i];
    prof.source = "mc";
    prof.tail_rule = "mc";
    prof.chi_cap = INFINITY;
    prof.head_certified = false;
    const auto rep = lsi_lower_bound(prof);
    REQUIRE(rep.has_gamma_lower);
    REQUIRE(rep.has_conservative);
    CHECK(rep.gamma_lower_conservative < rep.gamma_lower);
    CHECK(rep.gamma_lower_conservative > 0.0);
    CHECK(!rep.diagnostics.empty());  // uncertified head/tail must be flagged
}

TEST_CASE("empty profiles are rejected gracefully") {
    SusceptibilityProfile prof;
    const auto rep = lsi_lower_bound(prof);
    CHECK_FALSE(rep.has_gamma_lower);
    CHECK(!rep.diagnostics.empty());
}

TEST_CASE("closed-form lattice bound freezes") {
    CHECK(lattice_phi4_bound(0.0, 1.0) == doctest::Approx(61.987206132075).epsilon(1e-12));
    CHECK(lattice_phi4_bound(-1.0, 2.0) == doctest::Approx(32470318.1354676485).epsilon(1e-12));
    CHECK_THROWS_AS(lattice_phi4_bound(0.0, -1.0), DomainError);
}

TEST_CASE("spectral gap upper bound from a sampled estimate") {
    Phi4Params p;
    p.spec = build_lattice(2, 1.0, 2.0);
    p.lambda = 0.5;
    p.mu = 1.0;
    ChainConfig cfg;
    cfg.n_keep = 4000;
    cfg.n_chains = 2;
    cfg.seed = 13;
    cfg.workers = 2;
    const auto est = estimate_two_point(p, cfg);
    const auto rep = spectral_gap_upper(est);
    CHECK(rep.gamma_upper == doctest::Approx(1.0 / est.chi_hat).epsilon(1e-12));
    CHECK(rep.var_check < 1e-10);
    CHECK(rep.dirichlet_check == doctest::Approx(1.0).epsilon(1e-12));
}
