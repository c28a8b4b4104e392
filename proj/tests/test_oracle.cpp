#include <doctest.h>

#include <cmath>

#include "phi4lsi/errors.hpp"
#include "phi4lsi/oracle.hpp"

using namespace phi4;

namespace {

GeneralModel one_site(double a, double g, double h = 0.0) {
    GeneralModel m;
    m.n = 1;
    m.a = {a};
    m.g = g;
    if (h != 0.0) m.h = {h};
    return m;
}

GeneralModel two_site(double g, double nu = 0.0) {
    GeneralModel m;
    m.n = 2;
    m.a = {2.0, -1.0, -1.0, 2.0};
    m.g = g;
    m.nu = nu;
    return m;
}

}  // namespace

TEST_CASE("one-site quartic moments against adaptive-quadrature references") {
    const auto r = moments(one_site(1.0, 1.0));
    CHECK(r.first[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.second[0] == doctest::Approx(0.46791991697366519).epsilon(1e-11));
    CHECK(r.fourth[0] == doctest::Approx(0.53208008302633481).epsilon(1e-11));
    CHECK(r.gate_drift < 1e-8);
    CHECK(r.rule_gap < 1e-6);

    const auto r2 = moments(one_site(2.0, 0.5));
    CHECK(r2.second[0] == doctest::Approx(0.39483479953153579).epsilon(1e-11));
    CHECK(r2.fourth[0] == doctest::Approx(0.42066080187385684).epsilon(1e-11));

    const auto r3 = moments(one_site(1.0, 1.0, 0.7));
    CHECK(r3.first[0] == doctest::Approx(0.32069374078968095).epsilon(1e-11));
    CHECK(r3.second[0] == doctest::Approx(0.54217832187925506).epsilon(1e-11));
}

TEST_CASE("gaussian limit is exact") {
    const auto r = moments(two_site(0.0));
    // Sigma = A^{-1} = [[2,1],[1,2]]/3
    CHECK(r.second[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(r.second[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(r.fourth[0] == doctest::Approx(3.0 * (2.0 / 3.0) * (2.0 / 3.0)).epsilon(1e-11));
}

TEST_CASE("two-site quartic moments against references") {
    const auto r = moments(two_site(1.0));
    CHECK(r.second[0] == doctest::Approx(0.38013371015826647).epsilon(1e-11));
    CHECK(r.second[1] == doctest::Approx(0.1284574300390922).epsilon(1e-11));

    auto m = two_site(1.0);
    m.h = {0.5, -0.25};
    const auto rh = moments(m);
    CHECK(rh.first[0] == doctest::Approx(0.15718514209310888).epsilon(1e-11));
    // <phi_0 phi_1> at h = (0.5, -0.25)
    CHECK(rh.second[1] == doctest::Approx(0.12158640757676643).epsilon(1e-11));
}

TEST_CASE("truncated two-point and row-max susceptibility") {
    const auto m = two_site(1.0);
    const auto sig = truncated_two_point(m);
    CHECK(sig[0] == doctest::Approx(0.38013371015826647).epsilon(1e-10));
    CHECK(sig[1] == doctest::Approx(0.1284574300390922).epsilon(1e-10));
    CHECK(sig[1] == doctest::Approx(sig[2]).epsilon(1e-12));
    const double chi = susceptibility_rowmax(m);
    CHECK(chi == doctest::Approx(0.38013371015826647 + 0.1284574300390922).epsilon(1e-10));
    // tilting by h only lowers the truncated correlations (checked entrywise)
    auto tilted = m;
    tilted.h = {0.8, 0.1};
    const auto sh = truncated_two_point(tilted);
    for (int i = 0; i < 4; ++i) {
        CHECK(sh[static_cast<std::size_t>(i)] >= -1e-9);
        CHECK(sh[static_cast<std::size_t>(i)] <= sig[static_cast<std::size_t>(i)] + 1e-9);
    }
}

TEST_CASE("renormalised potential frozen values") {
    GeneralModel m = one_site(1.0, 1.0);
    m.inv_t = 1.0;
    CHECK(renormalized_potential(m, {1.0}) == doctest::Approx(0.33797057415820229).epsilon(1e-10));
    CHECK(renormalized_potential(m, {0.5}) == doctest::Approx(0.079357658185898392).epsilon(1e-10));
    m.inv_t = 0.1;
    CHECK(renormalized_potential(m, {1.0}) == doctest::Approx(0.28259977242232453).epsilon(1e-10));
    CHECK(renormalized_potential(m, {0.0}) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("renormalised potential vanishes for a gaussian model") {
    GeneralModel m = one_site(1.0, 0.0);
    m.inv_t = 0.5;
    // g = 0, nu = 0: V_t is identically zero after the V_t(0) normalisation
    CHECK(renormalized_potential(m, {0.9}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("hessian identity with monotonicity and resolvent checks") {
    auto m = two_site(1.0);
    m.inv_t = 1.0;
    const auto r = verify_hessian_criterion(m, {0.6, -0.3});
    CHECK(r.max_abs_diff < 1e-6);
    CHECK(r.quad_form_min_eig > -1e-9);
    CHECK(r.sigma_radius_phi <= r.sigma_radius_zero + 1e-9);
    CHECK(r.sigma_radius_zero <= r.chi_zero + 1e-9);
    CHECK(r.dss_min_entry > -1e-9);
    CHECK(r.dss_max_excess < 1e-9);
    CHECK(r.resolvent_first_err < 1e-7);
    CHECK(r.resolvent_second_err < 1e-6);
}

TEST_CASE("model validation") {
    GeneralModel bad = two_site(1.0);
    bad.a[1] = bad.a[2] = 0.5;  // positive off-diagonal: not ferromagnetic
    CHECK_THROWS_AS(moments(bad), DomainError);

    GeneralModel neg = one_site(1.0, -0.5);
    CHECK_THROWS_AS(moments(neg), DomainError);

    GeneralModel asym = two_site(1.0);
    asym.a[1] = -0.5;
    CHECK_THROWS_AS(moments(asym), DomainError);

    GeneralModel notspd = one_site(-2.0, 1.0);
    CHECK_THROWS_AS(moments(notspd), DomainError);

    GeneralModel wrong_h = one_site(1.0, 1.0);
    wrong_h.h = {1.0, 2.0};
    CHECK_THROWS_AS(moments(wrong_h), ShapeError);

    GeneralModel big;
    big.n = 5;
    big.a.assign(25, 0.0);
    for (int i = 0; i < 5; ++i) big.a[static_cast<std::size_t>(6 * i)] = 1.0;
    big.g = 1.0;
    CHECK_THROWS_AS(moments(big), CapabilityError);

    auto m3 = two_site(1.0);
    m3.inv_t = 0.0;
    CHECK_THROWS_AS(verify_hessian_criterion(m3, {0.1, 0.1}), DomainError);
}

TEST_CASE("quadrature gate rejects an impossible tolerance") {
    QuadratureGrid grid;
    grid.nodes_per_dim = 8;  // far too coarse for the gate below
    grid.trapezoid_nodes = 8;
    grid.gate_rtol = 1e-16;
    CHECK_THROWS_AS(moments(one_site(1.0, 1.0), grid), PrecisionError);
}
