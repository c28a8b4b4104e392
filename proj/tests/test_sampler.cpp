#include <doctest.h>

#include <cmath>

#include "phi4lsi/errors.hpp"
#include "phi4lsi/oracle.hpp"
#include "phi4lsi/sampler.hpp"

using namespace phi4;

namespace {

ChainConfig fast_config(std::uint64_t seed, Scheme scheme = Scheme::metropolis_site) {
    ChainConfig c;
    c.scheme = scheme;
    c.n_keep = 8000;
    c.n_chains = 4;
    c.seed = seed;
    c.workers = 4;
    return c;
}

}  // namespace

TEST_CASE("scheme names") {
    CHECK(scheme_from_string("metropolis") == Scheme::metropolis_site);
    CHECK(scheme_from_string("heatbath") == Scheme::heatbath_site);
    CHECK(scheme_from_string("langevin") == Scheme::langevin_euler);
    CHECK(to_string(Scheme::heatbath_site) == "heatbath");
    CHECK_THROWS_AS(scheme_from_string("hmc"), ConfigError);
}

TEST_CASE("gaussian single site matches the exact variance") {
    // continuum params, lambda = 0: variance of the one-site torus field is 1/mu
    Phi4Params p;
    p.spec = build_lattice(2, 1.0, 1.0);
    p.lambda = 0.0;
    p.mu = 2.0;
    for (auto scheme : {Scheme::metropolis_site, Scheme::heatbath_site}) {
        const auto est = estimate_two_point(p, fast_config(5, scheme));
        CHECK(est.ess > 1000.0);
        CHECK(std::abs(est.s_hat[0] - 0.5) < 4.0 * est.s_stderr[0]);
        CHECK(std::abs(est.chi_hat - 0.5) < 4.0 * est.chi_stderr);
    }
}

TEST_CASE("langevin euler approaches the gaussian variance at small step") {
    Phi4Params p;
    p.spec = build_lattice(2, 1.0, 1.0);
    p.lambda = 0.0;
    p.mu = 2.0;
    auto cfg = fast_config(9, Scheme::langevin_euler);
    cfg.step_dt = 0.002;
    cfg.n_keep = 20000;
    cfg.thin = 4;
    const auto est = estimate_two_point(p, cfg);
    // euler discretisation bias is O(dt); allow 2% + statistics
    CHECK(est.s_hat[0] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("interacting single site matches the quadrature oracle") {
    // unit normalisation, 2x2 torus would couple sites; use the 1-site torus where
    // the action reduces to mu/2 phi^2 + lambda/4 phi^4 + counterterm shift
    Phi4Params p;
    p.spec = build_lattice(2, 1.0, 1.0);
    p.lambda = 1.0;
    p.mu = 1.0;
    p.m2 = 1.0;
    const auto est = estimate_two_point(p, fast_config(17));

    // oracle: A = [m2], nu = mu + a_eps - m2 with a_eps = -3 + 6 = 3
    GeneralModel m;
    m.n = 1;
    m.a = {1.0};
    m.g = 1.0;
    m.nu = 1.0 + 3.0 - 1.0;
    const auto r = moments(m);
    CHECK(est.ess > 2000.0);
    CHECK(std::abs(est.s_hat[0] - r.second[0]) < 4.0 * est.s_stderr[0]);
}

TEST_CASE("explicit-matrix system matches the oracle on two sites") {
    const std::vector<double> a{2.0, -1.0, -1.0, 2.0};
    const auto sys = site_system_from_matrix(a, 2, 1.0, 0.0, {}, 0.0);
    const auto est = estimate_moments(sys, fast_config(23));

    GeneralModel m;
    m.n = 2;
    m.a = a;
    m.g = 1.0;
    const auto r = moments(m);
    CHECK(est.ess > 2000.0);
    CHECK(std::abs(est.second[0] - r.second[0]) < 4.0 * est.second_stderr[0]);
    CHECK(std::abs(est.second[1] - r.second[1]) < 4.0 * est.second_stderr[1]);
    CHECK(std::abs(est.first[0] - 0.0) < 4.0 * est.first_stderr[0]);
}

TEST_CASE("external field tilts the explicit system") {
    const std::vector<double> a{2.0, -1.0, -1.0, 2.0};
    const auto sys = site_system_from_matrix(a, 2, 1.0, 0.0, {0.5, -0.25}, 0.0);
    const auto est = estimate_moments(sys, fast_config(29));
    CHECK(std::abs(est.first[0] - 0.15718514209310888) < 4.0 * est.first_stderr[0]);
    CHECK(std::abs(est.second[1] - 0.12158640757676643) < 4.0 * est.second_stderr[1]);
}

TEST_CASE("same seed reproduces the estimate bit for bit") {
    Phi4Params p;
    p.spec = build_lattice(2, 0.5, 1.0);
    p.lambda = 0.5;
    p.mu = 1.0;
    auto cfg = fast_config(31);
    cfg.n_keep = 2000;
    const auto e1 = estimate_two_point(p, cfg);
    const auto e2 = estimate_two_point(p, cfg);
    CHECK(e1.chi_hat == e2.chi_hat);
    CHECK(e1.chi_stderr == e2.chi_stderr);
    CHECK(e1.ess == e2.ess);
    for (std::size_t i = 0; i < e1.s_hat.values.size(); ++i)
        CHECK(e1.s_hat.values[i] == e2.s_hat.values[i]);

    cfg.seed = 32;
    const auto e3 = estimate_two_point(p, cfg);
    CHECK(e1.chi_hat != e3.chi_hat);
}

TEST_CASE("worker count does not change the result") {
    Phi4Params p;
    p.spec = build_lattice(2, 0.5, 1.0);
    p.lambda = 0.5;
    p.mu = 1.0;
    auto cfg = fast_config(37);
    cfg.n_keep = 2000;
    cfg.workers = 1;
    const auto e1 = estimate_two_point(p, cfg);
    cfg.workers = 4;
    const auto e2 = estimate_two_point(p, cfg);
    CHECK(e1.chi_hat == e2.chi_hat);
    CHECK(e1.ess == e2.ess);
}

TEST_CASE("unit normalisation and its eps restriction") {
    Phi4Params p;
    p.spec = build_lattice(2, 1.0, 2.0);
    p.lambda = 1.0;
    p.mu = 0.0;
    p.norm = Normalisation::unit_lattice;
    const auto sys = site_system(p);
    CHECK(sys.c2[0] == doctest::Approx(2.0 * p.spec.d).epsilon(1e-14));
    CHECK(sys.c4[0] == doctest::Approx(1.0));

    p.spec = build_lattice(2, 0.5, 2.0);
    CHECK_THROWS_AS(site_system(p), ConfigError);
}

TEST_CASE("chain diagnostics stay sane") {
    Phi4Params p;
    p.spec = build_lattice(2, 1.0, 2.0);
    p.lambda = 0.5;
    p.mu = 1.0;
    const auto est = estimate_two_point(p, fast_config(41));
    for (const auto& c : est.chains) {
        CHECK(c.acceptance > 0.2);
        CHECK(c.acceptance < 0.8);
        CHECK(c.n_burn_used > 0);
        CHECK(c.stabilised);
    }
}
