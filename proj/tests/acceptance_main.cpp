// Acceptance gate: one line per criterion, nonzero exit on any failure.
// Tolerances, seeds and runtime caps are pinned here on purpose.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phi4lsi/cli.hpp"
#include "phi4lsi/criterion.hpp"
#include "phi4lsi/io.hpp"
#include "phi4lsi/oracle.hpp"
#include "phi4lsi/rng.hpp"
#include "phi4lsi/sampler.hpp"
#include "phi4lsi/skeleton.hpp"

using namespace phi4;
namespace fs = std::filesystem;

namespace {

int failures = 0;

class Timer {
  public:
    Timer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

void report(int idx, const char* name, bool pass, const std::string& detail) {
    std::printf("criterion %d (%s): %s (%s)\n", idx, name, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

ChainConfig chain_config(std::uint64_t seed, std::int64_t n_keep) {
    ChainConfig c;
    c.n_keep = n_keep;
    c.n_chains = 4;
    c.batches = 32;
    c.workers = 4;
    c.seed = seed;
    return c;
}

GeneralModel two_site_model(double g, double inv_t = 0.0) {
    GeneralModel m;
    m.n = 2;
    m.a = {2.0, -1.0, -1.0, 2.0};
    m.g = g;
    m.inv_t = inv_t;
    return m;
}

GeneralModel three_site_model(double g) {
    GeneralModel m;
    m.n = 3;
    m.a = {2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0};
    m.g = g;
    return m;
}

// ---------------------------------------------------------------- criterion 1

void criterion_gaussian() {
    Timer timer;
    double worst = 0.0;
    for (double m2 : {0.25, 1.0, 4.0}) {
        const auto rep = lsi_lower_bound(gaussian_profile(m2));
        if (!rep.has_gamma_lower) {
            report(1, "gaussian exactness", false, "no gamma_lower for m2=" + io::format_double(m2));
            return;
        }
        worst = std::max(worst, std::abs(rep.gamma_lower - m2) / m2);
    }
    const double secs = timer.seconds();
    report(1, "gaussian exactness", worst < 1e-8 && secs < 1.0,
           fmt("max rel err %.2e, %.2f s", worst, secs));
}

// ---------------------------------------------------------------- criterion 2

void criterion_oracle_equivalence() {
    Timer timer;
    double worst_sigma = 0.0;
    double min_ess = 1e300;
    auto track = [&](double est, double ref, double stderr_) {
        if (stderr_ <= 0.0) stderr_ = 1e-300;
        worst_sigma = std::max(worst_sigma, std::abs(est - ref) / stderr_);
    };

    int seed = 201;
    for (double lambda : {0.0, 0.5, 1.0}) {
        // single-site torus with the counterterm shift, vs the tilted oracle
        Phi4Params p;
        p.spec = build_lattice(2, 1.0, 1.0);
        p.lambda = lambda;
        p.mu = 1.0;
        p.m2 = 1.0;
        const auto est = estimate_two_point(p, chain_config(static_cast<std::uint64_t>(seed++), 60000));
        min_ess = std::min(min_ess, est.ess);

        GeneralModel m;
        m.n = 1;
        m.a = {1.0};
        m.g = lambda;
        m.nu = lambda > 0.0 ? counterterm(p.spec, lambda, 1.0).a_eps : 0.0;
        const auto r = moments(m);
        track(est.s_hat[0], r.second[0], est.s_stderr[0]);
        track(est.chi_hat, r.second[0], est.chi_stderr);

        // explicit two-site system vs the same model in the oracle
        const auto sys = site_system_from_matrix({2.0, -1.0, -1.0, 2.0}, 2, lambda, 0.0, {}, 0.0);
        const auto est2 = estimate_moments(sys, chain_config(static_cast<std::uint64_t>(seed++), 60000));
        min_ess = std::min(min_ess, est2.ess);
        const auto m2s = two_site_model(lambda);
        const auto r2 = moments(m2s);
        track(est2.second[0], r2.second[0], est2.second_stderr[0]);
        track(est2.second[1], r2.second[1], est2.second_stderr[1]);
        track(est2.chi_hat, susceptibility_rowmax(m2s), est2.chi_stderr);
    }
    const double secs = timer.seconds();
    report(2, "sampler vs quadrature oracle", worst_sigma < 3.0 && min_ess >= 1e4 && secs < 120.0,
           fmt("worst |z| %.2f, min ess %.0f, %.1f s", worst_sigma, min_ess, secs));
}

// ---------------------------------------------------------------- criterion 3

void criterion_bfs() {
    Timer timer;
    double worst = 1e300;
    int seed = 301;
    bool violation = false;
    for (double eps : {1.0, 0.5}) {
        for (double lambda : {0.1, 0.5}) {
            Phi4Params p;
            p.spec = build_lattice(2, eps, 2.0);
            p.lambda = lambda;
            p.mu = 1.0;
            p.m2 = 1.0;
            const auto est = estimate_two_point(p, chain_config(static_cast<std::uint64_t>(seed++), 40000));
            const auto kern = covariance(p.spec, MassSchedule{1.0, INFINITY});
            const auto rep = verify_bfs(est, kern, p);
            violation = violation || rep.violation;
            worst = std::min({worst, rep.worst_upper_sigma, rep.worst_lower_sigma});
        }
    }
    const double secs = timer.seconds();
    report(3, "skeleton sandwich", !violation && secs < 600.0,
           fmt("worst slack %.2f sigma, %.1f s", worst, secs));
}

// ---------------------------------------------------------------- criterion 4

void criterion_dss() {
    Timer timer;
    QuadratureGrid grid;
    grid.nodes_per_dim = 48;
    grid.trapezoid_nodes = 64;
    grid.gate_rtol = 1e-6;
    grid.cross_rtol = 1e-4;

    double worst_neg = 0.0, worst_excess = 0.0;
    CounterRng rng(404, 0, 0);
    for (const auto& base : {two_site_model(1.0), three_site_model(1.0)}) {
        const auto s0 = truncated_two_point(base, grid);
        for (int k = 0; k < 200; ++k) {
            auto m = base;
            m.h.resize(static_cast<std::size_t>(m.n));
            for (auto& h : m.h) h = 2.0 * rng.uniform() - 1.0;
            const auto sh = truncated_two_point(m, grid);
            for (std::size_t i = 0; i < sh.size(); ++i) {
                worst_neg = std::min(worst_neg, sh[i]);
                worst_excess = std::max(worst_excess, sh[i] - s0[i]);
            }
        }
    }
    const double secs = timer.seconds();
    report(4, "correlation domination under tilts",
           worst_neg >= -1e-6 && worst_excess <= 1e-6 && secs < 300.0,
           fmt("min entry %.2e, max excess %.2e, %.1f s", worst_neg, worst_excess, secs));
}

// ---------------------------------------------------------------- criterion 5

void criterion_hessian() {
    Timer timer;
    double worst_fd = 0.0, worst_quad = 0.0;
    CounterRng rng(505, 0, 0);
    for (double t : {0.1, 1.0, 10.0}) {
        const auto m = two_site_model(1.0, 1.0 / t);
        for (int k = 0; k < 20; ++k) {
            std::vector<double> phi(2);
            for (auto& x : phi) x = 1.5 * (2.0 * rng.uniform() - 1.0);
            const auto r = verify_hessian_criterion(m, phi);
            worst_fd = std::max(worst_fd, r.max_abs_diff);
            worst_quad = std::min(worst_quad, r.quad_form_min_eig);
        }
    }
    const double secs = timer.seconds();
    report(5, "renormalised potential hessian", worst_fd <= 1e-5 && worst_quad >= -1e-8,
           fmt("max fd err %.2e, min quad-form eig %.2e, %.1f s", worst_fd, worst_quad, secs));
}

// ---------------------------------------------------------------- criterion 6

struct Fit {
    Eigen::VectorXd beta;
    double resid = 0.0;
};

Fit least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Fit f;
    f.beta = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    f.resid = (y - x * f.beta).cwiseAbs().maxCoeff();
    return f;
}

void criterion_counterterm_scaling() {
    Timer timer;
    const std::vector<double> epses{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125};
    const int np = static_cast<int>(epses.size());
    const double lambda = 1.0;

    // d = 2: a_eps = alpha + beta log(1/eps^2) + lattice artifacts O(eps^2 log)
    Eigen::MatrixXd x2(np, 4), null2(np, 2);
    Eigen::VectorXd y2(np);
    for (int i = 0; i < np; ++i) {
        const auto spec = build_lattice(2, epses[static_cast<std::size_t>(i)], 1.0);
        const double lg = std::log(1.0 / (spec.eps * spec.eps));
        const double e2 = spec.eps * spec.eps;
        x2.row(i) << 1.0, lg, e2, e2 * lg;
        null2.row(i) << 1.0, e2;
        y2(i) = counterterm(spec, lambda, 1.0).a_eps;
    }
    const Fit f2 = least_squares(x2, y2);
    const Fit f2_null = least_squares(null2, y2);
    const double slope2_want = -3.0 * lambda / (4.0 * M_PI);
    const double slope2_err = std::abs(f2.beta(1) / slope2_want - 1.0);

    // d = 3: a_eps = alpha + beta / eps + delta log(1/eps^2) + artifacts O(eps^2)
    Eigen::MatrixXd x3(np, 4), null3(np, 2);
    Eigen::VectorXd y3(np);
    for (int i = 0; i < np; ++i) {
        const auto spec = build_lattice(3, epses[static_cast<std::size_t>(i)], 1.0);
        const double e2 = spec.eps * spec.eps;
        x3.row(i) << 1.0, 1.0 / spec.eps, std::log(1.0 / e2), e2;
        null3.row(i) << 1.0, e2;
        y3(i) = counterterm(spec, lambda, 1.0).a_eps;
    }
    const Fit f3 = least_squares(x3, y3);
    const Fit f3_null = least_squares(null3, y3);
    // 0.252731 is the eps -> 0 limit of eps * C(0) on the unit-mass lattice
    const double slope3_want = -3.0 * lambda * 0.252731;
    const double slope3_err = std::abs(f3.beta(1) / slope3_want - 1.0);

    const double secs = timer.seconds();
    const bool pass = f2.resid <= 2e-3 && slope2_err <= 0.05 && f2.resid <= 0.02 * f2_null.resid &&
                      f3.resid <= 5e-3 && slope3_err <= 0.05 && f3.beta(2) > 0.0 &&
                      f3.resid <= 0.02 * f3_null.resid && secs < 60.0;
    report(6, "counterterm divergence scaling", pass,
           fmt("d2 resid %.1e slope err %.1e%%(x%.0f vs no-log), d3 resid %.1e slope err %.1e%% log %.4f, %.1f s",
               f2.resid, 100.0 * slope2_err, f2_null.resid / std::max(f2.resid, 1e-300), f3.resid,
               100.0 * slope3_err, f3.beta(2), secs));
}

// ---------------------------------------------------------------- criterion 7

struct ShapeScan {
    // fitted constant per eps, then max verification ratio on a denser grid
    std::map<std::string, std::vector<double>> fitted;
};

double shape_of(const std::string& name, int d, double m2, double t) {
    const double it = std::isinf(t) ? 0.0 : 1.0 / t;
    const double m2t = m2 + it;
    const double mt = std::sqrt(m2t);
    if (d == 2) {
        if (name == "eta") return std::log1p(it / m2);
        if (name == "gam") return it / (m2 * (m2 + it));
        if (name == "cpsi_l1") return 1.0 / (m2t * m2t);
        if (name == "cpsi_l2") return 1.0 / (m2t * mt);
        return 1.0 / (m2t * m2t);  // bub5
    }
    if (name == "eta") return std::sqrt(m2) * (std::sqrt(1.0 + it / m2) - 1.0);
    if (name == "gam") return std::log1p(it / m2);
    if (name == "cpsi_l1") return 1.0 / std::sqrt(mt) + 1.0 / (m2t * std::sqrt(mt));
    if (name == "cpsi_l2") return 1.0 / std::sqrt(mt);
    return 1.0 / mt;  // bub5
}

std::map<std::string, double> shape_ratios(const LatticeSpec& spec, double m2, double t) {
    std::map<std::string, double> out;
    const auto kern = covariance(spec, MassSchedule{m2, t});
    const auto n = diagram_norms(kern);
    out["cpsi_l1"] = n.c_psi_l1 / shape_of("cpsi_l1", spec.d, m2, t);
    out["cpsi_l2"] = n.c_psi_l2 / shape_of("cpsi_l2", spec.d, m2, t);
    out["bub5"] = n.bubble5 / shape_of("bub5", spec.d, m2, t);
    if (!std::isinf(t)) {
        const auto g = counterterm_gaps(spec, m2, t);
        out["eta"] = g.eta_t / shape_of("eta", spec.d, m2, t);
        out["gam"] = g.gamma_t / shape_of("gam", spec.d, m2, t);
    }
    return out;
}

void criterion_shapes() {
    Timer timer;
    // the shapes describe the scaling regime; eps = 1 in d = 3 sits visibly
    // outside it (the fitted constant still converges ~ O(eps) towards the
    // finest value), so refinement starts at eps = 1/2
    const std::vector<double> epses{0.5, 0.25, 0.125, 0.0625};
    const double m2 = 1.0;
    bool stable = true, no_violation = true;
    std::string detail;

    for (int d : {2, 3}) {
        std::map<std::string, std::vector<double>> fitted;
        for (double eps : epses) {
            const auto spec = build_lattice(d, eps, 2.0);
            std::map<std::string, double> sup;
            for (int k = -18; k <= 18; ++k) {
                const double t = std::pow(10.0, k / 6.0);
                for (const auto& [name, ratio] : shape_ratios(spec, m2, t))
                    sup[name] = std::max(sup[name], ratio);
            }
            for (const auto& [name, ratio] : shape_ratios(spec, m2, INFINITY))
                sup[name] = std::max(sup[name], ratio);
            for (const auto& [name, v] : sup) fitted[name].push_back(v);
        }
        for (const auto& [name, cs] : fitted) {
            double mean = 0.0;
            for (double c : cs) mean += c;
            mean /= static_cast<double>(cs.size());
            double spread = 0.0;
            for (double c : cs) spread = std::max(spread, std::abs(c - mean) / mean);
            if (spread > 0.2) {
                stable = false;
                detail += fmt(" d%d %s spread %.0f%%;", d, name.c_str(), 100.0 * spread);
            }
            // verification pass on a denser, offset t grid with the single constant
            const double c_star = *std::max_element(cs.begin(), cs.end());
            for (double eps : epses) {
                const auto spec = build_lattice(d, eps, 2.0);
                for (int k = -23; k <= 23; ++k) {
                    const double t = std::pow(10.0, (k + 0.37) / 8.0);
                    const auto r = shape_ratios(spec, m2, t);
                    if (r.count(name) && r.at(name) > c_star * (1.0 + 1e-9)) no_violation = false;
                }
            }
        }
    }
    const double secs = timer.seconds();
    report(7, "closed bound shapes across refinement", stable && no_violation,
           fmt("stability <=20%%: %s, violations: %s,%s %.1f s", stable ? "yes" : "no",
               no_violation ? "none" : "FOUND", detail.c_str(), secs));
}

// ---------------------------------------------------------------- criterion 8

void criterion_end_to_end() {
    Timer timer;
    const double lambda = 0.25;
    const double w_lo = 0.05;  // fixed ratio window [w, 1]
    const auto spec = build_lattice(2, 0.5, 2.0);
    const auto consts = default_bound_constants();
    bool ordered = true, in_window = true, have_all = true;
    std::string detail;
    int seed = 801;
    for (double mu : {1.0, 2.0, 4.0, 8.0}) {
        const auto prof =
            skeleton_profile(spec, lambda, mu, mu, true, consts, default_t_grid(1e-6, 1e6, 100));
        const auto rep = lsi_lower_bound(prof);
        if (!rep.has_gamma_lower) {
            have_all = false;
            detail += fmt(" mu=%g: no bound (%s);", mu, rep.diagnostics.c_str());
            continue;
        }
        Phi4Params p;
        p.spec = spec;
        p.lambda = lambda;
        p.mu = mu;
        p.m2 = mu;
        const auto est = estimate_two_point(p, chain_config(static_cast<std::uint64_t>(seed++), 30000));
        const double inv_chi = 1.0 / est.chi_hat;
        const double inv_chi_stderr = est.chi_stderr / (est.chi_hat * est.chi_hat);
        if (rep.gamma_lower > inv_chi + 3.0 * inv_chi_stderr) ordered = false;
        const double ratio = rep.gamma_lower / mu;
        if (ratio < w_lo || ratio > 1.0) in_window = false;
        detail += fmt(" mu=%g: gamma>=%.4f ratio %.3f 1/chi %.4f;", mu, rep.gamma_lower, ratio, inv_chi);
    }
    const double secs = timer.seconds();
    report(8, "end-to-end ordering and mass proportionality",
           have_all && ordered && in_window && secs < 1200.0,
           fmt("%s %.1f s", detail.c_str(), secs));
}

// ---------------------------------------------------------------- criterion 9

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "phi4lsi");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

void criterion_determinism() {
    Timer timer;
    const std::string root = "acceptance_det";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string cfg = root + "/config.json";
    io::write_text_atomic(cfg, R"({
  "lattice": {"d": 2, "eps": 0.5, "L": 2.0},
  "model": {"lambda": 0.25, "mu": 1.0, "m2": 1.0},
  "sampler": {"n_keep": 4000, "n_chains": 4, "seed": 99, "workers": 4},
  "grid": {"t_lo": 1e-4, "t_hi": 1e4, "per_decade": 20},
  "profile": {"source": "skeleton", "exact_norms": true},
  "verify": {"checks": ["oracle", "dss"], "points": 3, "seed": 12},
  "output": {"samples": true}
})");
    bool pass = true;
    std::string detail;
    for (const std::string cmd : {"sample", "chi-profile", "lsi-bound", "verify"}) {
        for (const char* run_dir : {"a", "b"}) {
            const int rc = run_cli({cmd, "--config", cfg, "--out", root + "/" + run_dir + "_" + cmd});
            if (rc != 0) {
                pass = false;
                detail += fmt(" %s exit %d;", cmd.c_str(), rc);
            }
        }
        const fs::path da = root + "/a_" + cmd, db = root + "/b_" + cmd;
        std::size_t files = 0;
        for (const auto& entry : fs::directory_iterator(da)) {
            ++files;
            const auto name = entry.path().filename().string();
            if (!fs::exists(db / name) ||
                io::read_text(entry.path().string()) != io::read_text((db / name).string())) {
                pass = false;
                detail += fmt(" %s/%s differs;", cmd.c_str(), name.c_str());
            }
        }
        if (files == 0) {
            pass = false;
            detail += fmt(" %s produced nothing;", cmd.c_str());
        }
    }
    const double secs = timer.seconds();
    report(9, "bit-identical reruns", pass, fmt("%s %.1f s", detail.empty() ? "all files identical," : detail.c_str(), secs));
}

}  // namespace

int main() {
    criterion_gaussian();
    criterion_oracle_equivalence();
    criterion_bfs();
    criterion_dss();
    criterion_hessian();
    criterion_counterterm_scaling();
    criterion_shapes();
    criterion_end_to_end();
    criterion_determinism();
    if (failures == 0)
        std::printf("acceptance: all 9 criteria PASS\n");
    else
        std::printf("acceptance: %d criterion(s) FAILED\n", failures);
    return failures == 0 ? 0 : 1;
}
