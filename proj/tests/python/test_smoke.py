"""End-to-end smoke tests of the python bindings: every exposed operation is
exercised once against a closed-form value or a cross-check from another code
path.  Heavy statistics live in the C++ suites; chains here are tiny."""

import json
import math

import numpy as np
import pytest

import phi4lsi as p4


# ---- lattice and fields ----


def test_lattice_construction():
    spec = p4.build_lattice(2, 0.5, 2.0)
    assert spec.d == 2
    assert spec.n_per_side == 4
    assert spec.volume() == 16
    assert spec.cell() == pytest.approx(0.25)
    assert spec == p4.build_lattice(2, 0.5, 2.0)
    assert "eps=0.5" in repr(spec)


def test_lattice_validation():
    with pytest.raises(p4.ConfigError):
        p4.build_lattice(4, 1.0, 1.0)
    with pytest.raises(p4.ConfigError):
        p4.build_lattice(2, 0.3, 1.0)  # L/eps not an integer


def test_field_roundtrip_and_norms():
    spec = p4.build_lattice(2, 1.0, 3.0)
    f = p4.Field(spec, 0.0)
    vals = np.arange(9, dtype=float).reshape(3, 3)
    f.values = vals
    assert np.array_equal(f.values, vals)
    assert p4.lp_norm(f, math.inf) == pytest.approx(8.0)
    assert p4.lp_norm(f, 1.0) == pytest.approx(vals.sum())  # eps = 1
    with pytest.raises(p4.ShapeError):
        f.values = np.zeros(4)


def test_convolution_matches_numpy():
    spec = p4.build_lattice(2, 0.5, 2.0)
    rng = np.random.default_rng(7)
    f, g = p4.Field(spec), p4.Field(spec)
    a, b = rng.normal(size=(4, 4)), rng.normal(size=(4, 4))
    f.values, g.values = a, b
    got = p4.convolve(f, g).values
    # eps^d weighted circular convolution via FFT
    want = spec.cell() * np.real(np.fft.ifft2(np.fft.fft2(a) * np.fft.fft2(b)))
    assert np.allclose(got, want, atol=1e-12)


# ---- covariance and counterterm ----


def test_covariance_moments_identities():
    spec = p4.build_lattice(3, 0.5, 2.0)
    sched = p4.MassSchedule(m2=1.0, t=2.0)
    assert sched.m2_t() == pytest.approx(1.5)
    kern = p4.covariance(spec, sched)
    mom = p4.covariance_moments(kern)
    assert mom.l1 == pytest.approx(1.0 / sched.m2_t(), rel=1e-12)
    assert mom.value0 == pytest.approx(kern.values[0, 0, 0], rel=1e-12)
    assert mom.sq_l1 == pytest.approx(mom.l2sq, rel=1e-12)
    v = kern.values
    assert mom.cube_l1 == pytest.approx(spec.cell() * np.sum(np.abs(v) ** 3), rel=1e-12)


def test_counterterm_composition():
    spec = p4.build_lattice(2, 0.25, 2.0)
    lam = 0.7
    rep = p4.counterterm(spec, lam, 1.0)
    assert rep.a_eps == pytest.approx(-3 * lam * rep.tadpole + 6 * lam**2 * rep.sunset, rel=1e-12)
    assert rep.tadpole > 0 and rep.sunset > 0
    gaps = p4.counterterm_gaps(spec, 1.0, 0.5)
    assert 0 < gaps.eta_t < rep.tadpole
    assert 0 < gaps.gamma_t < rep.sunset


# ---- exact oracle ----


def test_oracle_gaussian_moments():
    model = p4.GeneralModel(a=[[2.0]])
    rep = p4.moments(model)
    assert rep.first[0] == pytest.approx(0.0, abs=1e-12)
    assert rep.second[0, 0] == pytest.approx(0.5, rel=1e-10)
    assert rep.fourth[0] == pytest.approx(3 * 0.5**2, rel=1e-10)  # wick
    assert rep.gate_drift < 1e-8


def test_oracle_interacting_two_site():
    a = np.array([[2.0, -1.0], [-1.0, 2.0]])
    model = p4.GeneralModel(a=a, g=1.0, h=[0.3, -0.1])
    sig = p4.truncated_two_point(model)
    assert sig.shape == (2, 2)
    assert sig[0, 1] == pytest.approx(sig[1, 0], rel=1e-10)
    assert sig[0, 1] > 0  # ferromagnetic coupling correlates the sites
    assert np.all(np.linalg.eigvalsh(sig) > 0)
    chi = p4.susceptibility_rowmax(model)
    free = p4.susceptibility_rowmax(p4.GeneralModel(a=a))
    assert 0 < chi < free  # quartic term suppresses fluctuations


def test_oracle_potential_and_hessian():
    model = p4.GeneralModel(a=[[2.0, -1.0], [-1.0, 2.0]], g=1.0, inv_t=1.0)
    assert p4.renormalized_potential(model, [0.0, 0.0]) == 0.0
    v = p4.renormalized_potential(model, [0.4, -0.2])
    assert v > 0
    rep = p4.verify_hessian_criterion(model, [0.4, -0.2])
    assert rep.max_abs_diff < 1e-5
    assert rep.quad_form_min_eig > -1e-8
    assert rep.dss_min_entry > -1e-9
    assert rep.dss_max_excess < 1e-9
    assert rep.analytic.shape == (2, 2)
    assert np.allclose(rep.analytic, rep.fd, atol=1e-5)


def test_oracle_site_cap():
    with pytest.raises(p4.CapabilityError):
        p4.moments(p4.GeneralModel(a=np.eye(5)))


def test_quadrature_gate_reports_drift():
    grid = p4.QuadratureGrid(nodes_per_dim=8, trapezoid_nodes=8, gate_rtol=1e-16)
    with pytest.raises(p4.PrecisionError):
        p4.moments(p4.GeneralModel(a=[[1.0]], g=1.0), grid)


# ---- samplers ----


def chain(seed, n_keep=4000, workers=1):
    return p4.ChainConfig(scheme="metropolis", n_keep=n_keep, n_chains=2, seed=seed, workers=workers)


def test_sampler_matches_oracle():
    a = [[2.0, -1.0], [-1.0, 2.0]]
    sys = p4.site_system_from_matrix(a, g=0.5)
    est = p4.estimate_moments(sys, chain(11))
    exact = p4.moments(p4.GeneralModel(a=a, g=0.5))
    z = abs(est.second[0, 0] - exact.second[0, 0]) / est.second_stderr[0, 0]
    assert z < 5
    assert est.ess > 100
    assert est.chains[0].acceptance > 0.1


def test_sampler_deterministic_and_worker_independent():
    sys = p4.site_system_from_matrix([[1.0]], g=1.0)
    a = p4.estimate_moments(sys, chain(3, n_keep=1000))
    b = p4.estimate_moments(sys, chain(3, n_keep=1000))
    c = p4.estimate_moments(sys, chain(3, n_keep=1000, workers=2))
    assert a.chi_hat == b.chi_hat == c.chi_hat
    d = p4.estimate_moments(sys, chain(4, n_keep=1000))
    assert d.chi_hat != a.chi_hat


def test_two_point_free_field():
    spec = p4.build_lattice(2, 1.0, 2.0)
    params = p4.Phi4Params(spec, lam=0.0, mu=1.0)
    est = p4.estimate_two_point(params, chain(21))
    # lam = 0: chi is the zero-momentum covariance 1/mu exactly
    assert abs(est.chi_hat - 1.0) < 5 * est.chi_stderr
    assert est.s_hat.values.shape == (2, 2)
    gap = p4.spectral_gap_upper(est)
    assert gap.gamma_upper == pytest.approx(1.0 / est.chi_hat, rel=1e-12)
    assert gap.dirichlet_check == pytest.approx(1.0, rel=1e-9)


def test_bfs_sandwich_on_small_torus():
    spec = p4.build_lattice(2, 0.5, 1.0)
    params = p4.Phi4Params(spec, lam=0.2, mu=1.0, m2=1.0)
    est = p4.estimate_two_point(params, chain(31, n_keep=6000))
    kern = p4.covariance(spec, p4.MassSchedule(m2=1.0))
    rep = p4.verify_bfs(est, kern, params)
    assert not rep.violation
    assert rep.worst_upper_sigma > -3
    assert rep.worst_lower_sigma > -3
    assert rep.upper_slack.shape == (spec.volume(),)


# ---- profiles and the log-Sobolev bound ----


def test_gaussian_profile_lsi_is_exact():
    m2 = 2.0
    rep = p4.lsi_lower_bound(p4.gaussian_profile(m2))
    # free measure: int (m2 t + 1)^{-2} dt = 1/m2 exactly
    assert rep.has_gamma_lower
    assert rep.gamma_lower == pytest.approx(m2, rel=1e-3)
    assert rep.gamma_lower <= m2 * (1 + 1e-12)


def test_skeleton_profile_bound():
    spec = p4.build_lattice(2, 0.5, 2.0)
    consts = p4.default_bound_constants()
    # closed shapes carry calibrated worst-case constants, so their window
    # needs small lambda; exact lattice norms certify much larger couplings
    win = p4.small_scale_window(2, 1e-4, 1.0, 1.0, consts)
    assert not win.window_empty
    assert win.t0 > 0
    exact_win = p4.small_scale_window_exact(spec, 0.25, 1.0, 1.0)
    assert not exact_win.window_empty
    assert exact_win.mode == "exact"
    prof = p4.skeleton_profile(spec, 0.25, 1.0, 1.0, True, consts)
    assert prof.head_certified
    assert "skeleton_bound" in prof.provenance
    rep = p4.lsi_lower_bound(prof)
    assert rep.has_gamma_lower
    assert 0 < rep.gamma_lower <= 1.0  # never above the free gaussian value mu = 1


def test_custom_profile_divergence_detection():
    prof = p4.gaussian_profile(1.0)
    # constant additive offset makes int (chi_s - gauss_s)/s^2 ds diverge at 0;
    # provenance must drop gaussian_exact or those cells are recomputed exactly
    prof.chi = [c + 0.05 for c in prof.chi]
    prof.provenance = ["skeleton_bound"] * len(prof.provenance)
    prof.chi_cap = 1.05
    prof.tail_rule = "convexity_cap:1.05"
    rep = p4.lsi_lower_bound(prof)
    assert not rep.has_gamma_lower
    assert "diverg" in rep.diagnostics


def test_mc_profile_tracks_gaussian():
    spec = p4.build_lattice(2, 1.0, 2.0)
    params = p4.Phi4Params(spec, lam=0.0, mu=1.0)
    prof = p4.mc_profile(params, chain(41, n_keep=2000), [0.5, 2.0])
    exact = [1.0 / (1.0 + 1.0 / t) for t in (0.5, 2.0)]
    for got, err, want in zip(prof.chi, prof.chi_stderr, exact):
        assert abs(got - want) < 5 * err


def test_kappa_dot_and_closed_form_bound():
    assert p4.kappa_dot(2.0, 1.0) == pytest.approx(0.25)
    b = p4.lattice_phi4_bound(-0.5, 1.2)
    assert b > math.exp(2) / 2


# ---- command line ----


def test_cli_roundtrip(tmp_path):
    cfg = tmp_path / "config.json"
    cfg.write_text(
        json.dumps(
            {
                "lattice": {"d": 2, "eps": 0.5, "L": 1.0},
                "model": {"lambda": 0.1, "mu": 1.0, "m2": 1.0},
                "sampler": {"n_keep": 500, "n_chains": 2, "seed": 5, "workers": 2},
                "grid": {"t_lo": 1e-3, "t_hi": 1e3, "per_decade": 10},
                "profile": {"source": "skeleton", "exact_norms": True},
            }
        )
    )
    out = tmp_path / "cov"
    rc = p4.run_cli(["covariance", "--config", str(cfg), "--out", str(out)])
    assert rc == 0
    kernel = (out / "covariance.csv").read_text()
    assert kernel.splitlines()[0] == "coord_1,coord_2,value"
    rc = p4.run_cli(["lsi-bound", "--config", str(cfg), "--out", str(tmp_path / "lsi")])
    assert rc == 0
    report = json.loads((tmp_path / "lsi" / "lsi_report.json").read_text())
    assert report["has_gamma_lower"] is True
    assert p4.run_cli(["no-such-command"]) == 1
