// python bindings for the lattice phi^4 toolkit: lattices, covariances,
// counterterms, exact small-model oracles, MCMC estimators, susceptibility
// profiles and the log-Sobolev lower bound.  Vectors and matrices cross the
// boundary as numpy arrays (copies; the C++ side owns nothing python-visible).
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "phi4lsi/cli.hpp"
#include "phi4lsi/criterion.hpp"
#include "phi4lsi/errors.hpp"
#include "phi4lsi/free_field.hpp"
#include "phi4lsi/lattice.hpp"
#include "phi4lsi/oracle.hpp"
#include "phi4lsi/sampler.hpp"
#include "phi4lsi/skeleton.hpp"

namespace py = pybind11;
using namespace phi4;

namespace {

py::array_t<double> vec_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
    return out;
}

py::array_t<double> mat_array(const std::vector<double>& v, py::ssize_t n) {
    py::array_t<double> out({n, n});
    std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
    return out;
}

/** field values shaped (n,..,n) with the first coordinate slowest, matching
 *  the row-major site order of the lattice */
py::array_t<double> field_array(const Field& f) {
    std::vector<py::ssize_t> shape(static_cast<std::size_t>(f.spec.d), f.spec.n_per_side);
    py::array_t<double> out(shape);
    std::memcpy(out.mutable_data(), f.values.data(), f.values.size() * sizeof(double));
    return out;
}

using CArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

/** accepts an (n,n) array or a flat length-n^2 row-major sequence */
std::vector<double> square_matrix(const CArray& a, int& n_out) {
    if (a.ndim() == 2) {
        if (a.shape(0) != a.shape(1)) throw ShapeError("coupling matrix must be square");
        n_out = static_cast<int>(a.shape(0));
    } else if (a.ndim() == 1) {
        const auto n = static_cast<int>(std::llround(std::sqrt(static_cast<double>(a.shape(0)))));
        if (static_cast<py::ssize_t>(n) * n != a.shape(0))
            throw ShapeError("flat coupling matrix length must be a perfect square");
        n_out = n;
    } else {
        throw ShapeError("coupling matrix must be 1- or 2-dimensional");
    }
    return {a.data(), a.data() + a.size()};
}

Normalisation norm_from_string(const std::string& s) {
    if (s == "continuum") return Normalisation::continuum;
    if (s == "unit_lattice") return Normalisation::unit_lattice;
    throw ConfigError("unknown normalisation '" + s + "' (use continuum or unit_lattice)");
}

std::string to_string(Normalisation n) {
    return n == Normalisation::continuum ? "continuum" : "unit_lattice";
}

}  // namespace

PYBIND11_MODULE(_phi4lsi, m) {
    m.doc() = "lattice phi^4 measures: covariances, counterterms, exact small-model oracles, "
              "MCMC estimators, certified susceptibility profiles and log-Sobolev lower bounds";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<ShapeError>(m, "ShapeError");
    py::register_exception<DomainError>(m, "DomainError");
    py::register_exception<CapabilityError>(m, "CapabilityError");
    py::register_exception<PrecisionError>(m, "PrecisionError");
    py::register_exception<StepSizeError>(m, "StepSizeError");
    py::register_exception<IoError>(m, "IoError");
    py::register_exception<InequalityViolation>(m, "InequalityViolation");

    // ---- lattice ----
    py::class_<LatticeSpec>(m, "LatticeSpec", "periodic lattice L*T^d cut to spacing eps")
        .def_readonly("d", &LatticeSpec::d)
        .def_readonly("eps", &LatticeSpec::eps)
        .def_readonly("L", &LatticeSpec::L)
        .def_readonly("n_per_side", &LatticeSpec::n_per_side)
        .def("volume", &LatticeSpec::volume, "number of sites")
        .def("cell", &LatticeSpec::cell, "cell volume eps^d")
        .def("neighbours", &LatticeSpec::neighbours, py::arg("site"),
             "the 2d nearest-neighbour site indices (with repeats on wrap-around)")
        .def("__eq__", [](const LatticeSpec& a, const LatticeSpec& b) { return a == b; })
        .def("__repr__", [](const LatticeSpec& s) {
            return "LatticeSpec(d=" + std::to_string(s.d) + ", eps=" + std::to_string(s.eps) +
                   ", L=" + std::to_string(s.L) + ", n_per_side=" + std::to_string(s.n_per_side) + ")";
        });

    m.def("build_lattice", &build_lattice, py::arg("d"), py::arg("eps"), py::arg("L"),
          "checked lattice constructor: d in {2,3}, eps > 0, L/eps a positive integer");

    py::class_<Field>(m, "Field", "scalar field, one value per site")
        .def(py::init<const LatticeSpec&, double>(), py::arg("spec"), py::arg("fill") = 0.0)
        .def_readonly("spec", &Field::spec)
        .def_property(
            "values", [](const Field& f) { return field_array(f); },
            [](Field& f, const CArray& a) {
                if (a.size() != static_cast<py::ssize_t>(f.values.size()))
                    throw ShapeError("value count must match the lattice volume");
                std::memcpy(f.values.data(), a.data(), f.values.size() * sizeof(double));
            },
            "site values as a d-dimensional array (row-major, first coordinate slowest)");

    m.def("convolve", &convolve, py::arg("f"), py::arg("g"),
          py::call_guard<py::gil_scoped_release>(),
          "eps-weighted circular convolution eps^d sum_y f(x-y) g(y)");
    m.def("lp_norm", &lp_norm, py::arg("f"), py::arg("p"),
          "eps-weighted L^p norm; p = inf gives the max norm");

    // ---- covariance and counterterm ----
    py::class_<MassSchedule>(m, "MassSchedule", "Pauli-Villars schedule: mass m2, scale t (inf = no cutoff)")
        .def(py::init([](double m2, double t) { return MassSchedule{m2, t}; }),
             py::arg("m2") = 1.0, py::arg("t") = INFINITY)
        .def_readonly("m2", &MassSchedule::m2)
        .def_readonly("t", &MassSchedule::t)
        .def("inv_t", &MassSchedule::inv_t)
        .def("m2_t", &MassSchedule::m2_t, "effective mass m2 + 1/t")
        .def("__repr__", [](const MassSchedule& s) {
            return "MassSchedule(m2=" + std::to_string(s.m2) + ", t=" + std::to_string(s.t) + ")";
        });

    py::class_<CovarianceKernel>(m, "CovarianceKernel",
                                 "real-space kernel of (-laplacian + m2 + 1/t)^{-1}")
        .def_readonly("spec", &CovarianceKernel::spec)
        .def_readonly("sched", &CovarianceKernel::sched)
        .def_property_readonly("values", [](const CovarianceKernel& k) { return field_array(k.values); });

    py::class_<CovarianceMoments>(m, "CovarianceMoments")
        .def_readonly("value0", &CovarianceMoments::value0)
        .def_readonly("l1", &CovarianceMoments::l1)
        .def_readonly("l2sq", &CovarianceMoments::l2sq)
        .def_readonly("sq_l1", &CovarianceMoments::sq_l1)
        .def_readonly("cube_l1", &CovarianceMoments::cube_l1);

    py::class_<CountertermReport>(m, "CountertermReport")
        .def_readonly("lam", &CountertermReport::lambda)
        .def_readonly("m2", &CountertermReport::m2)
        .def_readonly("a_eps", &CountertermReport::a_eps)
        .def_readonly("tadpole", &CountertermReport::tadpole)
        .def_readonly("sunset", &CountertermReport::sunset);

    py::class_<GapReport>(m, "GapReport")
        .def_readonly("eta_t", &GapReport::eta_t)
        .def_readonly("gamma_t", &GapReport::gamma_t);

    m.def("covariance", &covariance, py::arg("spec"), py::arg("sched"),
          py::call_guard<py::gil_scoped_release>());
    m.def("covariance_moments", &covariance_moments, py::arg("kernel"),
          py::call_guard<py::gil_scoped_release>(),
          "C(0), L^1/L^2 norms and the L^1 norms of C^2, C^3");
    m.def("counterterm", &counterterm, py::arg("spec"), py::arg("lam"), py::arg("m2"),
          py::call_guard<py::gil_scoped_release>(),
          "mass counterterm a_eps = -3 lam C(0) + 6 lam^2 ||C^3||_L1 at t = inf");
    m.def("counterterm_gaps", &counterterm_gaps, py::arg("spec"), py::arg("m2"), py::arg("t"),
          py::call_guard<py::gil_scoped_release>(),
          "running gaps eta_t = C_inf(0) - C_t(0) and gamma_t = ||C_inf^3|| - ||C_t^3||");

    // ---- exact small-model oracle ----
    py::class_<GeneralModel>(m, "GeneralModel",
                             "quartic model on n <= 4 sites: density ~ exp[-phi.A phi/2 "
                             "- sum(g phi^4/4 + (nu+inv_t) phi^2/2) + h.phi]")
        .def(py::init([](const CArray& a, double g, double nu, const std::vector<double>& h,
                         double inv_t) {
                 GeneralModel gm;
                 gm.a = square_matrix(a, gm.n);
                 gm.g = g;
                 gm.nu = nu;
                 gm.h = h;
                 gm.inv_t = inv_t;
                 return gm;
             }),
             py::arg("a"), py::arg("g") = 0.0, py::arg("nu") = 0.0,
             py::arg("h") = std::vector<double>{}, py::arg("inv_t") = 0.0)
        .def_readonly("n", &GeneralModel::n)
        .def_readonly("g", &GeneralModel::g)
        .def_readonly("nu", &GeneralModel::nu)
        .def_readonly("inv_t", &GeneralModel::inv_t)
        .def_property_readonly("a", [](const GeneralModel& gm) { return mat_array(gm.a, gm.n); })
        .def_property_readonly("h", [](const GeneralModel& gm) { return vec_array(gm.h); });

    py::class_<QuadratureGrid>(m, "QuadratureGrid",
                               "quadrature controls: whitened trapezoid rule (primary, gated by "
                               "node doubling) cross-checked against gauss-hermite")
        .def(py::init([](int nodes_per_dim, int trapezoid_nodes, double halfwidth, double gate_rtol,
                         double cross_rtol) {
                 return QuadratureGrid{nodes_per_dim, trapezoid_nodes, halfwidth, gate_rtol, cross_rtol};
             }),
             py::arg("nodes_per_dim") = QuadratureGrid{}.nodes_per_dim,
             py::arg("trapezoid_nodes") = QuadratureGrid{}.trapezoid_nodes,
             py::arg("halfwidth") = QuadratureGrid{}.halfwidth,
             py::arg("gate_rtol") = QuadratureGrid{}.gate_rtol,
             py::arg("cross_rtol") = QuadratureGrid{}.cross_rtol)
        .def_readwrite("nodes_per_dim", &QuadratureGrid::nodes_per_dim)
        .def_readwrite("trapezoid_nodes", &QuadratureGrid::trapezoid_nodes)
        .def_readwrite("halfwidth", &QuadratureGrid::halfwidth)
        .def_readwrite("gate_rtol", &QuadratureGrid::gate_rtol)
        .def_readwrite("cross_rtol", &QuadratureGrid::cross_rtol);

    py::class_<MomentReport>(m, "MomentReport")
        .def_property_readonly("first", [](const MomentReport& r) { return vec_array(r.first); })
        .def_property_readonly("second", [](const MomentReport& r) {
            return mat_array(r.second, static_cast<py::ssize_t>(r.first.size()));
        })
        .def_property_readonly("fourth", [](const MomentReport& r) { return vec_array(r.fourth); })
        .def_readonly("gate_drift", &MomentReport::gate_drift)
        .def_readonly("rule_gap", &MomentReport::rule_gap);

    m.def("moments", &moments, py::arg("model"), py::arg("grid") = QuadratureGrid{},
          py::call_guard<py::gil_scoped_release>(),
          "first, second and fourth moments by deterministic tensor-product quadrature");
    m.def(
        "truncated_two_point",
        [](const GeneralModel& gm, const QuadratureGrid& grid) {
            std::vector<double> r;
            {
                py::gil_scoped_release rel;
                r = truncated_two_point(gm, grid);
            }
            return mat_array(r, gm.n);
        },
        py::arg("model"), py::arg("grid") = QuadratureGrid{},
        "<phi_x phi_y> - <phi_x><phi_y> at the model's own tilt h");
    m.def("susceptibility_rowmax", &susceptibility_rowmax, py::arg("model"),
          py::arg("grid") = QuadratureGrid{}, py::call_guard<py::gil_scoped_release>(),
          "max_x sum_y <phi_x phi_y> at h = 0");
    m.def("renormalized_potential", &renormalized_potential, py::arg("model"), py::arg("phi"),
          py::arg("grid") = QuadratureGrid{}, py::call_guard<py::gil_scoped_release>(),
          "scale-t potential V_t(phi) = -log E_C exp(-V_0(phi+zeta)), V_t(0) = 0; n <= 2");

    py::class_<HessianReport>(m, "HessianReport")
        .def_property_readonly("analytic", [](const HessianReport& r) {
            const auto n = static_cast<py::ssize_t>(std::llround(std::sqrt(double(r.analytic.size()))));
            return mat_array(r.analytic, n);
        })
        .def_property_readonly("fd", [](const HessianReport& r) {
            const auto n = static_cast<py::ssize_t>(std::llround(std::sqrt(double(r.fd.size()))));
            return mat_array(r.fd, n);
        })
        .def_readonly("max_abs_diff", &HessianReport::max_abs_diff)
        .def_readonly("sigma_radius_phi", &HessianReport::sigma_radius_phi)
        .def_readonly("sigma_radius_zero", &HessianReport::sigma_radius_zero)
        .def_readonly("chi_zero", &HessianReport::chi_zero)
        .def_readonly("quad_form_min_eig", &HessianReport::quad_form_min_eig)
        .def_readonly("dss_min_entry", &HessianReport::dss_min_entry)
        .def_readonly("dss_max_excess", &HessianReport::dss_max_excess)
        .def_readonly("resolvent_first_err", &HessianReport::resolvent_first_err)
        .def_readonly("resolvent_second_err", &HessianReport::resolvent_second_err);

    m.def("verify_hessian_criterion", &verify_hessian_criterion, py::arg("model"), py::arg("phi"),
          py::arg("grid") = QuadratureGrid{}, py::call_guard<py::gil_scoped_release>(),
          "checks Hess V_t = C^{-1} - C^{-1} Sigma_t C^{-1} by finite differences, plus the "
          "positivity/monotonicity and resolvent-derivative identities; requires inv_t > 0, n <= 2");

    // ---- samplers ----
    py::class_<Phi4Params>(m, "Phi4Params",
                           "interacting measure parameters; t adds the 1/t mass of the schedule")
        .def(py::init([](const LatticeSpec& spec, double lam, double mu, double m2, double t,
                         const std::string& norm, double h) {
                 Phi4Params p;
                 p.spec = spec;
                 p.lambda = lam;
                 p.mu = mu;
                 p.m2 = m2;
                 p.t = t;
                 p.norm = norm_from_string(norm);
                 p.h = h;
                 return p;
             }),
             py::arg("spec"), py::arg("lam") = 0.0, py::arg("mu") = 0.0, py::arg("m2") = 1.0,
             py::arg("t") = INFINITY, py::arg("norm") = "continuum", py::arg("h") = 0.0)
        .def_readonly("spec", &Phi4Params::spec)
        .def_readwrite("lam", &Phi4Params::lambda)
        .def_readwrite("mu", &Phi4Params::mu)
        .def_readwrite("m2", &Phi4Params::m2)
        .def_readwrite("t", &Phi4Params::t)
        .def_readwrite("h", &Phi4Params::h)
        .def_property(
            "norm", [](const Phi4Params& p) { return to_string(p.norm); },
            [](Phi4Params& p, const std::string& s) { p.norm = norm_from_string(s); });

    py::class_<ChainConfig>(m, "ChainConfig")
        .def(py::init([](const std::string& scheme, double step_dt, std::int64_t n_burn,
                         std::int64_t n_keep, int thin, int n_chains, std::uint64_t seed,
                         int workers, double proposal_width, int batches) {
                 ChainConfig c;
                 c.scheme = scheme_from_string(scheme);
                 c.step_dt = step_dt;
                 c.n_burn = n_burn;
                 c.n_keep = n_keep;
                 c.thin = thin;
                 c.n_chains = n_chains;
                 c.seed = seed;
                 c.workers = workers;
                 c.proposal_width = proposal_width;
                 c.batches = batches;
                 return c;
             }),
             py::arg("scheme") = "metropolis", py::arg("step_dt") = 0.01, py::arg("n_burn") = 0,
             py::arg("n_keep") = 10000, py::arg("thin") = 1, py::arg("n_chains") = 4,
             py::arg("seed") = 1, py::arg("workers") = 1, py::arg("proposal_width") = 1.0,
             py::arg("batches") = 32)
        .def_property(
            "scheme", [](const ChainConfig& c) { return to_string(c.scheme); },
            [](ChainConfig& c, const std::string& s) { c.scheme = scheme_from_string(s); })
        .def_readwrite("step_dt", &ChainConfig::step_dt)
        .def_readwrite("n_burn", &ChainConfig::n_burn)
        .def_readwrite("n_keep", &ChainConfig::n_keep)
        .def_readwrite("thin", &ChainConfig::thin)
        .def_readwrite("n_chains", &ChainConfig::n_chains)
        .def_readwrite("seed", &ChainConfig::seed)
        .def_readwrite("workers", &ChainConfig::workers)
        .def_readwrite("proposal_width", &ChainConfig::proposal_width)
        .def_readwrite("batches", &ChainConfig::batches);

    py::class_<ChainDiagnostics>(m, "ChainDiagnostics")
        .def_readonly("acceptance", &ChainDiagnostics::acceptance)
        .def_readonly("n_burn_used", &ChainDiagnostics::n_burn_used)
        .def_readonly("stabilised", &ChainDiagnostics::stabilised)
        .def_readonly("proposal_width", &ChainDiagnostics::proposal_width)
        .def_readonly("action_mean", &ChainDiagnostics::action_mean);

    py::class_<SiteSystem>(m, "SiteSystem", "generic single-site update system")
        .def_readonly("n", &SiteSystem::n)
        .def("action", &SiteSystem::action, py::arg("phi"));

    m.def("site_system", &site_system, py::arg("params"),
          "torus phi^4 system; continuum normalisation includes the counterterm",
          py::call_guard<py::gil_scoped_release>());
    m.def(
        "site_system_from_matrix",
        [](const CArray& a, double g, double nu, const std::vector<double>& h, double inv_t) {
            int n = 0;
            auto flat = square_matrix(a, n);
            return site_system_from_matrix(flat, n, g, nu, h, inv_t);
        },
        py::arg("a"), py::arg("g") = 0.0, py::arg("nu") = 0.0,
        py::arg("h") = std::vector<double>{}, py::arg("inv_t") = 0.0,
        "explicit-coupling quartic system matching GeneralModel");

    py::class_<CorrelationEstimate>(m, "CorrelationEstimate")
        .def_readonly("spec", &CorrelationEstimate::spec)
        .def_readonly("s_hat", &CorrelationEstimate::s_hat)
        .def_readonly("s_stderr", &CorrelationEstimate::s_stderr)
        .def_property_readonly("mean_site",
                               [](const CorrelationEstimate& e) { return vec_array(e.mean_site); })
        .def_property_readonly(
            "mean_site_stderr",
            [](const CorrelationEstimate& e) { return vec_array(e.mean_site_stderr); })
        .def_readonly("chi_hat", &CorrelationEstimate::chi_hat)
        .def_readonly("chi_stderr", &CorrelationEstimate::chi_stderr)
        .def_readonly("ess", &CorrelationEstimate::ess)
        .def_readonly("quality_warning", &CorrelationEstimate::quality_warning)
        .def_readonly("warning", &CorrelationEstimate::warning)
        .def_readonly("chains", &CorrelationEstimate::chains);

    m.def("estimate_two_point", &estimate_two_point, py::arg("params"), py::arg("chain"),
          py::call_guard<py::gil_scoped_release>(),
          "MCMC displacement-averaged two-point function and susceptibility, with batch-means "
          "errors; deterministic in (seed, chain), independent of worker count");

    py::class_<GeneralEstimate>(m, "GeneralEstimate")
        .def_property_readonly("first", [](const GeneralEstimate& e) { return vec_array(e.first); })
        .def_property_readonly("first_stderr",
                               [](const GeneralEstimate& e) { return vec_array(e.first_stderr); })
        .def_property_readonly("second", [](const GeneralEstimate& e) {
            return mat_array(e.second, static_cast<py::ssize_t>(e.first.size()));
        })
        .def_property_readonly("second_stderr", [](const GeneralEstimate& e) {
            return mat_array(e.second_stderr, static_cast<py::ssize_t>(e.first.size()));
        })
        .def_readonly("chi_hat", &GeneralEstimate::chi_hat)
        .def_readonly("chi_stderr", &GeneralEstimate::chi_stderr)
        .def_readonly("ess", &GeneralEstimate::ess)
        .def_readonly("quality_warning", &GeneralEstimate::quality_warning)
        .def_readonly("chains", &GeneralEstimate::chains);

    m.def("estimate_moments", &estimate_moments, py::arg("system"), py::arg("chain"),
          py::call_guard<py::gil_scoped_release>(),
          "MCMC moment estimates for explicit-coupling systems (no translation averaging)");

    // ---- inequality verification ----
    py::class_<BfsReport>(m, "BfsReport")
        .def_readonly("spec", &BfsReport::spec)
        .def_property_readonly("upper_slack",
                               [](const BfsReport& r) { return vec_array(r.upper_slack); })
        .def_property_readonly("upper_stderr",
                               [](const BfsReport& r) { return vec_array(r.upper_stderr); })
        .def_property_readonly("lower_slack",
                               [](const BfsReport& r) { return vec_array(r.lower_slack); })
        .def_property_readonly("lower_stderr",
                               [](const BfsReport& r) { return vec_array(r.lower_stderr); })
        .def_readonly("worst_upper_sigma", &BfsReport::worst_upper_sigma)
        .def_readonly("worst_lower_sigma", &BfsReport::worst_lower_sigma)
        .def_readonly("violation", &BfsReport::violation);

    m.def("verify_bfs", &verify_bfs, py::arg("estimate"), py::arg("kernel"), py::arg("params"),
          py::call_guard<py::gil_scoped_release>(),
          "two-sided skeleton bounds on S - C evaluated on per-batch mean correlation fields");

    // ---- bound shapes, profiles, log-Sobolev criterion ----
    py::class_<BoundConstants>(m, "BoundConstants",
                               "constants of the scale-uniform bound shapes; defaults are "
                               "calibrated suprema with 10% headroom")
        .def(py::init<>())
        .def_readwrite("c_sq_d2", &BoundConstants::c_sq_d2)
        .def_readwrite("c_sq_d3", &BoundConstants::c_sq_d3)
        .def_readwrite("c_eta_d2", &BoundConstants::c_eta_d2)
        .def_readwrite("c_eta_d3", &BoundConstants::c_eta_d3)
        .def_readwrite("c_gam_d2", &BoundConstants::c_gam_d2)
        .def_readwrite("c_gam_d3", &BoundConstants::c_gam_d3)
        .def_readwrite("c_psi_l1_d2", &BoundConstants::c_psi_l1_d2)
        .def_readwrite("c_cpsi_l1_d3", &BoundConstants::c_cpsi_l1_d3)
        .def_readwrite("c_cpsi_l2_d3", &BoundConstants::c_cpsi_l2_d3)
        .def_readwrite("c_bub5_d2", &BoundConstants::c_bub5_d2)
        .def_readwrite("c_bub5_d3", &BoundConstants::c_bub5_d3)
        .def_readwrite("provenance", &BoundConstants::provenance);

    m.def("default_bound_constants", &default_bound_constants);
    m.def("default_t_grid", &default_t_grid, py::arg("t_lo") = 1e-6, py::arg("t_hi") = 1e6,
          py::arg("per_decade") = 200, "log-uniform scale grid");

    py::class_<WindowReport>(m, "WindowReport")
        .def_readonly("d", &WindowReport::d)
        .def_readonly("lam", &WindowReport::lambda)
        .def_readonly("mu", &WindowReport::mu)
        .def_readonly("m2", &WindowReport::m2)
        .def_readonly("c0", &WindowReport::c0)
        .def_readonly("e_bar", &WindowReport::e_bar)
        .def_readonly("t0", &WindowReport::t0)
        .def_readonly("window_empty", &WindowReport::window_empty)
        .def_readonly("all_scales", &WindowReport::all_scales)
        .def_property_readonly("t_grid", [](const WindowReport& r) { return vec_array(r.t_grid); })
        .def_property_readonly("margin", [](const WindowReport& r) { return vec_array(r.margin); })
        .def_readonly("mode", &WindowReport::mode);

    m.def("small_scale_window", &small_scale_window, py::arg("d"), py::arg("lam"), py::arg("mu"),
          py::arg("m2"), py::arg("consts") = default_bound_constants(),
          py::arg("t_grid") = std::vector<double>{}, py::call_guard<py::gil_scoped_release>(),
          "certified window (0, t0] where ||S - C|| <= 2 c0 lam, from the closed bound shapes");
    m.def("small_scale_window_exact", &small_scale_window_exact, py::arg("spec"), py::arg("lam"),
          py::arg("mu"), py::arg("m2"), py::arg("t_grid") = std::vector<double>{},
          py::call_guard<py::gil_scoped_release>(),
          "same certificate from exact diagram norms of a concrete lattice");

    py::class_<SusceptibilityProfile>(m, "SusceptibilityProfile",
                                      "susceptibility chi_t per scale with per-point provenance "
                                      "(gaussian_exact | skeleton_bound | convexity_bound | "
                                      "mc_estimate); fields are writable so custom profiles can "
                                      "be assembled")
        .def(py::init<>())
        .def_readwrite("t", &SusceptibilityProfile::t)
        .def_readwrite("chi", &SusceptibilityProfile::chi)
        .def_readwrite("chi_stderr", &SusceptibilityProfile::chi_stderr)
        .def_readwrite("provenance", &SusceptibilityProfile::provenance)
        .def_readwrite("m2", &SusceptibilityProfile::m2)
        .def_readwrite("chi_cap", &SusceptibilityProfile::chi_cap)
        .def_readwrite("head_constant", &SusceptibilityProfile::head_constant)
        .def_readwrite("head_certified", &SusceptibilityProfile::head_certified)
        .def_readwrite("source", &SusceptibilityProfile::source)
        .def_readwrite("tail_rule", &SusceptibilityProfile::tail_rule);

    m.def("gaussian_profile", &gaussian_profile, py::arg("m2"),
          py::arg("t_grid") = std::vector<double>{}, py::call_guard<py::gil_scoped_release>(),
          "exact free-measure profile chi_t = 1/(m2 + 1/t)");
    m.def("skeleton_profile", &skeleton_profile, py::arg("spec"), py::arg("lam"), py::arg("mu"),
          py::arg("m2"), py::arg("exact_norms"), py::arg("consts") = default_bound_constants(),
          py::arg("t_grid") = std::vector<double>{}, py::call_guard<py::gil_scoped_release>(),
          "certified profile: gaussian + skeleton bound inside the certificate window, "
          "strict-convexity bound elsewhere");
    m.def("mc_profile", &mc_profile, py::arg("params"), py::arg("chain"), py::arg("t_values"),
          py::call_guard<py::gil_scoped_release>(), "sampled profile with stderr at each scale");

    m.def("kappa_dot", &kappa_dot, py::arg("t"), py::arg("chi"),
          "scale derivative 1/t - chi/t^2 of the log-Sobolev exponent");

    py::class_<LsiOptions>(m, "LsiOptions")
        .def(py::init([](double conservative_sigma, double refine_rtol, double divergence_cap) {
                 return LsiOptions{conservative_sigma, refine_rtol, divergence_cap};
             }),
             py::arg("conservative_sigma") = LsiOptions{}.conservative_sigma,
             py::arg("refine_rtol") = LsiOptions{}.refine_rtol,
             py::arg("divergence_cap") = LsiOptions{}.divergence_cap)
        .def_readwrite("conservative_sigma", &LsiOptions::conservative_sigma)
        .def_readwrite("refine_rtol", &LsiOptions::refine_rtol)
        .def_readwrite("divergence_cap", &LsiOptions::divergence_cap);

    py::class_<LsiBoundReport>(m, "LsiBoundReport")
        .def_readonly("has_gamma_lower", &LsiBoundReport::has_gamma_lower)
        .def_readonly("gamma_lower", &LsiBoundReport::gamma_lower)
        .def_readonly("has_conservative", &LsiBoundReport::has_conservative)
        .def_readonly("gamma_lower_conservative", &LsiBoundReport::gamma_lower_conservative)
        .def_readonly("kappa_integral", &LsiBoundReport::kappa_integral)
        .def_readonly("head_value", &LsiBoundReport::head_value)
        .def_readonly("interior_value", &LsiBoundReport::interior_value)
        .def_readonly("tail_value", &LsiBoundReport::tail_value)
        .def_readonly("bracket_gap", &LsiBoundReport::bracket_gap)
        .def_readonly("has_gamma_upper", &LsiBoundReport::has_gamma_upper)
        .def_readonly("gamma_upper", &LsiBoundReport::gamma_upper)
        .def_readonly("profile_source", &LsiBoundReport::profile_source)
        .def_readonly("tail_rule", &LsiBoundReport::tail_rule)
        .def_readonly("diagnostics", &LsiBoundReport::diagnostics)
        .def_readonly("divergence_decade", &LsiBoundReport::divergence_decade)
        .def_readonly("cells", &LsiBoundReport::cells);

    m.def("lsi_lower_bound", &lsi_lower_bound, py::arg("profile"), py::arg("options") = LsiOptions{},
          py::call_guard<py::gil_scoped_release>(),
          "certified upper bound of int exp(-2 int kappa_dot) and the induced log-Sobolev "
          "constant lower bound");

    m.def("lattice_phi4_bound", &lattice_phi4_bound, py::arg("nu"), py::arg("chi"),
          "unit-lattice closed-form upper bound for 1/gamma of the nearest-neighbour quartic model");

    py::class_<GapUpperReport>(m, "GapUpperReport")
        .def_readonly("gamma_upper", &GapUpperReport::gamma_upper)
        .def_readonly("var_check", &GapUpperReport::var_check)
        .def_readonly("dirichlet_check", &GapUpperReport::dirichlet_check);

    m.def("spectral_gap_upper", &spectral_gap_upper, py::arg("estimate"),
          "spectral gap upper bound 1/chi_hat from the normalised-sum trial function");

    // ---- command line ----
    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<std::string> full;
            full.reserve(args.size() + 1);
            full.emplace_back("phi4lsi");
            for (const auto& a : args) full.push_back(a);
            std::vector<char*> argv;
            argv.reserve(full.size());
            for (auto& s : full) argv.push_back(s.data());
            return cli_main(static_cast<int>(argv.size()), argv.data());
        },
        py::arg("args"),
        "runs the command-line driver in-process; returns its exit code "
        "(0 ok, 1 config, 2 io, 3 inequality violation)");
}
