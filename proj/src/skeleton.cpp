#include "phi4lsi/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>

#include "phi4lsi/errors.hpp"

namespace phi4 {

namespace {

using Poly = std::vector<double>;

Poly padd(const Poly& a, const Poly& b) {
    Poly out(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    return out;
}

Poly pmul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    Poly out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

Poly pscale(const Poly& a, double s) {
    Poly out = a;
    for (double& v : out) v *= s;
    return out;
}

void trim(Poly& a) {
    while (!a.empty() && a.back() == 0.0) a.pop_back();
}

double inv_t_of(double t) {
    if (t <= 0.0) throw DomainError("scale t must be positive");
    return std::isinf(t) ? 0.0 : 1.0 / t;
}

/** coefficients of the cubic L1 self-map e -> b0 + b1 e + b2 e^2 + b3 e^3 */
struct L1Map {
    double b0 = 0.0, b1 = 0.0, b2 = 0.0, b3 = 0.0;
};

L1Map l1_map(double lambda, const RecursionTerms& r, double xb) {
    const double k1 = r.k1, sq = r.sq;
    const double a0 = (3.0 * lambda * (r.eta + xb) + r.dm) * k1;
    const double g2 = 6.0 * lambda * lambda * r.gam * k1;
    const double p2 = 6.0 * lambda * lambda * r.cpsi_l1;
    const double a2 = 6.0 * lambda * lambda * k1;
    const double q3 = 54.0 * lambda * lambda * lambda * k1;
    const double s0 = 3.0 * xb * sq + 3.0 * xb * xb * k1;
    const double s1 = xb * xb;
    const double q0 = r.bub5 + 5.0 * xb * sq * sq + 10.0 * xb * xb * sq * k1 + 8.0 * xb * xb * xb * k1 * k1;
    const double q1 = 2.0 * xb * xb * sq + 5.0 * xb * xb * xb * k1;
    const double q2 = xb * xb * xb;
    L1Map m;
    m.b0 = (a0 + g2 + p2) * k1 + a2 * s0 * k1 + q3 * q0 * k1;
    m.b1 = (a0 + g2 + p2) + a2 * (s0 + s1 * k1) + q3 * (q0 + q1 * k1);
    m.b2 = a2 * s1 + q3 * (q1 + q2 * k1);
    m.b3 = q3 * q2;
    return m;
}

/** lambda-polynomial of one symbolic pass of the L1 map at trial norm 2 c0 lambda */
Poly l1_map_poly(const RecursionTerms& r, double slope) {
    const double k1 = r.k1, sq = r.sq;
    const Poly lam = {0.0, 1.0};
    const Poly xb = {0.0, slope};
    const Poly k1p = {k1};
    const Poly a0 = pmul({k1}, padd(padd(pscale(lam, 3.0 * r.eta), pscale(pmul(lam, xb), 3.0)), Poly{r.dm}));
    const Poly g2 = {0.0, 0.0, 6.0 * r.gam * k1};
    const Poly p2 = {0.0, 0.0, 6.0 * r.cpsi_l1};
    const Poly a2 = {0.0, 0.0, 6.0 * k1};
    const Poly q3 = {0.0, 0.0, 0.0, 54.0 * k1};
    const Poly s0 = padd(pscale(xb, 3.0 * sq), pscale(pmul(xb, xb), 3.0 * k1));
    const Poly s1 = pmul(xb, xb);
    const Poly xb2 = pmul(xb, xb);
    const Poly xb3 = pmul(xb2, xb);
    const Poly q0 = padd(padd(Poly{r.bub5}, pscale(xb, 5.0 * sq * sq)),
                         padd(pscale(xb2, 10.0 * sq * k1), pscale(xb3, 8.0 * k1 * k1)));
    const Poly q1 = padd(pscale(xb2, 2.0 * sq), pscale(xb3, 5.0 * k1));
    const Poly q2 = xb3;
    const Poly kpx = padd(k1p, xb);
    Poly out = pmul(padd(padd(a0, g2), p2), kpx);
    out = padd(out, pmul(pmul(a2, padd(s0, pmul(s1, xb))), kpx));
    out = padd(out, pmul(pmul(q3, padd(q0, padd(pmul(q1, xb), pmul(q2, pmul(xb, xb))))), kpx));
    trim(out);
    return out;
}

WindowReport window_from_terms(int d, double lambda, double mu, double m2,
                               const std::vector<double>& grid,
                               const std::vector<RecursionTerms>& terms,
                               const RecursionTerms& terms_inf, const std::string& mode) {
    WindowReport rep;
    rep.d = d;
    rep.lambda = lambda;
    rep.mu = mu;
    rep.m2 = m2;
    rep.mode = mode;
    rep.t_grid = grid;

    double sup = 0.0;
    for (const RecursionTerms& r : terms) sup = std::max(sup, pulled_eta_term(lambda, r) / lambda);
    rep.c0 = 1.1 * sup;
    rep.e_bar = 2.0 * rep.c0 * lambda;
    rep.margin.resize(grid.size(), 0.0);
    if (rep.c0 <= 0.0) {
        rep.window_empty = true;
        return rep;
    }
    const double target = 0.5 * rep.c0 * lambda;
    bool prefix = true;
    rep.t0 = 0.0;
    bool all = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double f = poly_eval(recursion_polynomial(lambda, terms[i]), rep.e_bar);
        rep.margin[i] = target - f;
        if (rep.margin[i] < 0.0) {
            prefix = false;
            all = false;
        } else if (prefix) {
            rep.t0 = grid[i];
        }
    }
    const double f_inf = poly_eval(recursion_polynomial(lambda, terms_inf), rep.e_bar);
    if (target - f_inf < 0.0) all = false;
    rep.window_empty = (rep.t0 == 0.0);
    rep.all_scales = all;
    return rep;
}

struct ProfileEngine {
    int d = 2;
    double lambda = 0.0, mu = 0.0, m2 = 1.0;
    std::function<RecursionTerms(double)> terms_at;
    std::string mode;
};

ProfileEngine make_engine(const LatticeSpec* spec, int d, double lambda, double mu, double m2,
                          bool exact_norms, const BoundConstants& consts) {
    if (lambda <= 0.0) throw DomainError("skeleton bounds need lambda > 0");
    if (m2 <= 0.0) throw DomainError("reference mass m2 must be positive");
    ProfileEngine eng;
    eng.d = d;
    eng.lambda = lambda;
    eng.mu = mu;
    eng.m2 = m2;
    if (exact_norms) {
        if (spec == nullptr) throw ConfigError("exact diagram norms need a lattice");
        const LatticeSpec s = *spec;
        eng.terms_at = [s, m2, mu](double t) { return exact_terms(s, m2, t, mu); };
        eng.mode = "exact";
    } else {
        eng.terms_at = [d, m2, mu, consts](double t) { return shape_terms(d, m2, t, mu, consts); };
        eng.mode = "shape";
    }
    return eng;
}

}  // namespace

DiagramNorms diagram_norms(const CovarianceKernel& kernel) {
    DiagramNorms out;
    out.moments = covariance_moments(kernel);
    const double cell = kernel.spec.cell();
    Field psi = pointwise_pow(kernel.values, 3);
    psi[0] -= out.moments.cube_l1 / cell;
    double mass = 0.0;
    for (double v : psi.values) mass += v;
    out.psi_mass = cell * mass;
    out.psi_l1 = lp_norm(psi, 1.0);
    const Field cpsi = convolve(kernel.values, psi);
    out.c_psi_l1 = lp_norm(cpsi, 1.0);
    out.c_psi_l2 = lp_norm(cpsi, 2.0);
    const Field csq = pointwise_pow(kernel.values, 2);
    out.bubble5 = lp_norm(pointwise_mul(kernel.values, convolve(csq, csq)), 1.0);
    return out;
}

BfsReport verify_bfs(const CorrelationEstimate& est, const CovarianceKernel& kernel,
                     const Phi4Params& params) {
    if (!(est.spec == kernel.spec) || !(est.spec == params.spec))
        throw ShapeError("estimate, kernel and parameters must share one lattice");
    if (params.norm != Normalisation::continuum)
        throw ConfigError("skeleton comparison is defined for the continuum normalisation");
    const double want_inv_t = std::isinf(params.t) ? 0.0 : 1.0 / params.t;
    if (kernel.sched.m2 != params.m2 || kernel.sched.inv_t() != want_inv_t)
        throw ConfigError("kernel mass schedule must match the sampled parameters");
    if (params.h != 0.0) throw ConfigError("skeleton comparison needs zero external field");
    if (est.batch_fields.size() < 2) throw ShapeError("need at least two batch fields");

    const double lam = params.lambda;
    const double a_eps = counterterm(params.spec, lam, params.m2).a_eps;
    const double mass_gap = a_eps + params.mu - params.m2;
    const std::size_t v = static_cast<std::size_t>(est.spec.volume());
    const std::size_t units = est.batch_fields.size();

    BfsReport rep;
    rep.spec = est.spec;
    std::vector<double> up_sum(v, 0.0), up_sq(v, 0.0), lo_sum(v, 0.0), lo_sq(v, 0.0);
    for (const Field& s : est.batch_fields) {
        const Field cs = convolve(kernel.values, s);
        const Field s3 = pointwise_pow(s, 3);
        const Field cs3s = convolve(convolve(kernel.values, s3), s);
        const Field s2 = pointwise_pow(s, 2);
        const Field q = pointwise_mul(s, convolve(s2, s2));
        const Field cqs = convolve(convolve(kernel.values, q), s);
        const double s0 = s[0];
        for (std::size_t x = 0; x < v; ++x) {
            const double e = s.values[x] - kernel.values.values[x];
            const double rhs_up = -3.0 * lam * s0 * cs.values[x] + 6.0 * lam * lam * cs3s.values[x] -
                                  mass_gap * cs.values[x];
            const double rhs_lo = rhs_up - 54.0 * lam * lam * lam * cqs.values[x];
            const double su = rhs_up - e;
            const double sl = e - rhs_lo;
            up_sum[x] += su;
            up_sq[x] += su * su;
            lo_sum[x] += sl;
            lo_sq[x] += sl * sl;
        }
    }
    rep.upper_slack.resize(v);
    rep.upper_stderr.resize(v);
    rep.lower_slack.resize(v);
    rep.lower_stderr.resize(v);
    rep.worst_upper_sigma = std::numeric_limits<double>::infinity();
    rep.worst_lower_sigma = std::numeric_limits<double>::infinity();
    const double uu = static_cast<double>(units);
    for (std::size_t x = 0; x < v; ++x) {
        const double mu_up = up_sum[x] / uu;
        const double mu_lo = lo_sum[x] / uu;
        const double var_up = std::max(0.0, (up_sq[x] - uu * mu_up * mu_up) / (uu - 1.0));
        const double var_lo = std::max(0.0, (lo_sq[x] - uu * mu_lo * mu_lo) / (uu - 1.0));
        const double se_up = std::sqrt(var_up / uu);
        const double se_lo = std::sqrt(var_lo / uu);
        rep.upper_slack[x] = mu_up;
        rep.upper_stderr[x] = se_up;
        rep.lower_slack[x] = mu_lo;
        rep.lower_stderr[x] = se_lo;
        const double sig_up = (se_up > 0.0) ? mu_up / se_up
                                            : (mu_up >= 0.0 ? std::numeric_limits<double>::infinity()
                                                            : -std::numeric_limits<double>::infinity());
        const double sig_lo = (se_lo > 0.0) ? mu_lo / se_lo
                                            : (mu_lo >= 0.0 ? std::numeric_limits<double>::infinity()
                                                            : -std::numeric_limits<double>::infinity());
        rep.worst_upper_sigma = std::min(rep.worst_upper_sigma, sig_up);
        rep.worst_lower_sigma = std::min(rep.worst_lower_sigma, sig_lo);
        if (sig_up < -3.0 || sig_lo < -3.0) rep.violation = true;
    }
    return rep;
}

BoundConstants default_bound_constants() {
    // suprema over the documented calibration family (see tools/calibrate.cpp),
    // all attained at the L=1, m2=1/4 zero-mode corner, plus 10% headroom
    BoundConstants c;
    c.c_sq_d2 = 4.403;
    c.c_sq_d3 = 8.809;
    c.c_eta_d2 = 4.403;
    c.c_eta_d3 = 17.62;
    c.c_gam_d2 = 52.83;
    c.c_gam_d3 = 211.4;
    c.c_psi_l1_d2 = 34.51;
    c.c_cpsi_l1_d3 = 0.776;
    c.c_cpsi_l2_d3 = 5.791;
    c.c_bub5_d2 = 70.48;
    c.c_bub5_d3 = 564.3;
    c.provenance = "calibrated-default";
    return c;
}

RecursionTerms shape_terms(int d, double m2, double t, double mu, const BoundConstants& consts) {
    if (d != 2 && d != 3) throw DomainError("dimension must be 2 or 3");
    if (m2 <= 0.0) throw DomainError("reference mass m2 must be positive");
    const double it = inv_t_of(t);
    RecursionTerms r;
    r.d = d;
    r.m2 = m2;
    r.t = t;
    r.dm = std::abs(mu - m2);
    const double m2t = m2 + it;
    const double mt = std::sqrt(m2t);
    r.k1 = 1.0 / m2t;
    if (d == 2) {
        r.sq = consts.c_sq_d2 / m2t;
        r.eta = consts.c_eta_d2 * std::log1p(it / m2);
        r.gam = consts.c_gam_d2 * (it / (m2 * (m2 + it)));  // = c / (m2 (m2 t + 1))
        r.psi_l1 = consts.c_psi_l1_d2 / m2t;
        r.cpsi_l1 = r.k1 * r.psi_l1;
        r.cpsi_l2 = 0.0;  // unused in d=2 assembly
    } else {
        r.sq = consts.c_sq_d3 / mt;
        r.eta = consts.c_eta_d3 * std::sqrt(m2) * (std::sqrt(1.0 + it / m2) - 1.0);
        r.gam = consts.c_gam_d3 * std::log1p(it / m2);
        r.psi_l1 = 0.0;
        r.cpsi_l1 = consts.c_cpsi_l1_d3 * (1.0 / std::sqrt(mt) + 1.0 / (mt * mt * std::sqrt(mt)));
        r.cpsi_l2 = consts.c_cpsi_l2_d3 / std::sqrt(mt);
    }
    if (d == 2)
        r.bub5 = consts.c_bub5_d2 / (m2t * m2t);
    else
        r.bub5 = consts.c_bub5_d3 / mt;
    r.exact = false;
    return r;
}

RecursionTerms exact_terms(const LatticeSpec& spec, double m2, double t, double mu) {
    const MassSchedule sched{m2, t};
    const CovarianceKernel kernel = covariance(spec, sched);
    const DiagramNorms dn = diagram_norms(kernel);
    const GapReport gaps = counterterm_gaps(spec, m2, t);
    RecursionTerms r;
    r.d = spec.d;
    r.m2 = m2;
    r.t = t;
    r.dm = std::abs(mu - m2);
    r.k1 = 1.0 / sched.m2_t();
    r.sq = dn.moments.sq_l1;
    r.eta = gaps.eta_t;
    r.gam = gaps.gamma_t;
    r.psi_l1 = dn.psi_l1;
    r.cpsi_l1 = dn.c_psi_l1;
    r.cpsi_l2 = dn.c_psi_l2;
    r.bub5 = dn.bubble5;
    r.exact = true;
    return r;
}

double pulled_eta_term(double lambda, const RecursionTerms& r) {
    return 3.0 * lambda * r.eta * (r.k1 * r.k1 + r.sq);
}

double poly_eval(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
    return acc;
}

std::vector<double> recursion_polynomial(double lambda, const RecursionTerms& r) {
    const double k1 = r.k1, sq = r.sq;
    const double lam2 = lambda * lambda;
    const double lam3 = lam2 * lambda;
    std::vector<double> f(7, 0.0);
    // mass gap term |mu - m2| (C*S), both channels
    f[0] += r.dm * (k1 * k1 + sq);
    f[1] += r.dm * 2.0 * k1;
    // first order term minus its pulled scale-uniform part
    f[1] += 3.0 * lambda * (k1 * k1 + sq + 2.0 * r.eta * k1);
    f[2] += 6.0 * lambda * k1;
    // second order: C*(S^3 - C^3)*S
    f[1] += 6.0 * lam2 * (3.0 * sq * sq + 3.0 * sq * k1 * k1);
    f[2] += 6.0 * lam2 * (9.0 * k1 * sq + 3.0 * k1 * k1 * k1);
    f[3] += 6.0 * lam2 * 8.0 * k1 * k1;
    f[4] += 6.0 * lam2 * 2.0 * k1;
    // second order: gamma gap times C*S
    f[0] += 6.0 * lam2 * r.gam * (k1 * k1 + sq);
    f[1] += 6.0 * lam2 * r.gam * 2.0 * k1;
    // second order: centred cube psi
    const double cpsic = (r.d == 2) ? r.psi_l1 * (k1 * k1 + sq) : (r.cpsi_l1 * k1 + r.cpsi_l2 * std::sqrt(sq));
    f[0] += 6.0 * lam2 * cpsic;
    f[1] += 6.0 * lam2 * r.cpsi_l1;
    // third order: 54 lam^3 Q1(x) (K1^2 + sq + 2 K1 x)
    const double q1c[6] = {r.bub5, 5.0 * sq * sq, 10.0 * sq * k1, 2.0 * sq + 8.0 * k1 * k1, 5.0 * k1, 1.0};
    const double br[2] = {k1 * k1 + sq, 2.0 * k1};
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 2; ++j) f[static_cast<std::size_t>(i + j)] += 54.0 * lam3 * q1c[i] * br[j];
    return f;
}

std::vector<double> default_t_grid(double t_lo, double t_hi, int per_decade) {
    if (t_lo <= 0.0 || t_hi <= t_lo) throw DomainError("scale grid needs 0 < t_lo < t_hi");
    if (per_decade < 1) throw DomainError("scale grid needs at least one point per decade");
    const double lo = std::log10(t_lo);
    const double hi = std::log10(t_hi);
    const int n = static_cast<int>(std::ceil((hi - lo) * per_decade)) + 1;
    std::vector<double> grid(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        grid[static_cast<std::size_t>(i)] = std::pow(10.0, lo + (hi - lo) * i / (n - 1));
    return grid;
}

WindowReport small_scale_window(int d, double lambda, double mu, double m2,
                                const BoundConstants& consts, const std::vector<double>& t_grid) {
    if (lambda <= 0.0) throw DomainError("certificate needs lambda > 0");
    const std::vector<double> grid = t_grid.empty() ? default_t_grid() : t_grid;
    std::vector<RecursionTerms> terms;
    terms.reserve(grid.size());
    for (double t : grid) terms.push_back(shape_terms(d, m2, t, mu, consts));
    const RecursionTerms inf_terms = shape_terms(d, m2, INFINITY, mu, consts);
    return window_from_terms(d, lambda, mu, m2, grid, terms, inf_terms, "shape");
}

WindowReport small_scale_window_exact(const LatticeSpec& spec, double lambda, double mu, double m2,
                                      const std::vector<double>& t_grid) {
    if (lambda <= 0.0) throw DomainError("certificate needs lambda > 0");
    const std::vector<double> grid = t_grid.empty() ? default_t_grid() : t_grid;
    std::vector<RecursionTerms> terms;
    terms.reserve(grid.size());
    for (double t : grid) terms.push_back(exact_terms(spec, m2, t, mu));
    const RecursionTerms inf_terms = exact_terms(spec, m2, INFINITY, mu);
    return window_from_terms(spec.d, lambda, mu, m2, grid, terms, inf_terms, "exact");
}

int BoundPolynomial::degree() const {
    for (std::size_t i = coeffs.size(); i-- > 0;)
        if (coeffs[i] != 0.0) return static_cast<int>(i);
    return 0;
}

SusceptTermReport susceptibility_l1_bound(double lambda, const RecursionTerms& r, double e_linf) {
    if (lambda <= 0.0) throw DomainError("susceptibility bound needs lambda > 0");
    if (e_linf <= 0.0) throw DomainError("susceptibility bound needs a positive trial norm");
    const L1Map m = l1_map(lambda, r, e_linf);
    SusceptTermReport rep;
    rep.e_linf = e_linf;
    double e = e_linf;
    double best = e_linf;
    int rising = 0;
    for (int it = 0; it < 64; ++it) {
        const double next = m.b0 + e * (m.b1 + e * (m.b2 + e * m.b3));
        rep.iterations = it + 1;
        if (next >= e) {
            if (++rising >= 2) break;
        } else {
            rising = 0;
        }
        if (next < best) best = next;
        if (std::abs(next - e) <= 1e-14 * std::max(1.0, std::abs(e))) {
            rep.converged = true;
            e = next;
            break;
        }
        e = next;
    }
    const double beta = m.b1 + m.b2 * best + m.b3 * best * best;
    if (beta < 1.0) {
        const double cand = m.b0 / (1.0 - beta);
        if (cand < best) {
            best = cand;
            rep.refined = true;
        }
    }
    rep.p_value = best;
    rep.poly.coeffs = l1_map_poly(r, e_linf / lambda);
    rep.poly.provenance = r.exact ? "explicit" : "fitted-c";
    return rep;
}

SusceptibilityProfile gaussian_profile(double m2, const std::vector<double>& t_grid) {
    if (m2 <= 0.0) throw DomainError("gaussian profile needs m2 > 0");
    SusceptibilityProfile prof;
    prof.t = t_grid.empty() ? default_t_grid() : t_grid;
    prof.m2 = m2;
    prof.source = "gaussian";
    prof.tail_rule = "gaussian_exact";
    prof.chi_cap = 1.0 / m2;
    prof.head_constant = 0.0;
    prof.head_certified = true;
    prof.chi.reserve(prof.t.size());
    for (double t : prof.t) {
        prof.chi.push_back(1.0 / (m2 + inv_t_of(t)));
        prof.chi_stderr.push_back(0.0);
        prof.provenance.emplace_back("gaussian_exact");
    }
    return prof;
}

SusceptibilityProfile skeleton_profile(const LatticeSpec& spec, double lambda, double mu, double m2,
                                       bool exact_norms, const BoundConstants& consts,
                                       const std::vector<double>& t_grid) {
    const ProfileEngine eng = make_engine(&spec, spec.d, lambda, mu, m2, exact_norms, consts);
    const std::vector<double> grid = t_grid.empty() ? default_t_grid() : t_grid;
    std::vector<RecursionTerms> terms;
    terms.reserve(grid.size());
    for (double t : grid) terms.push_back(eng.terms_at(t));
    const RecursionTerms inf_terms = eng.terms_at(INFINITY);
    const WindowReport win =
        window_from_terms(spec.d, lambda, mu, m2, grid, terms, inf_terms, eng.mode);

    const double a_eps = counterterm(spec, lambda, m2).a_eps;
    const auto convexity = [&](double t) -> double {
        const double c = mu + a_eps + inv_t_of(t);
        return c > 0.0 ? 1.0 / c : std::numeric_limits<double>::infinity();
    };
    const auto skeleton_at = [&](const RecursionTerms& r) -> double {
        const SusceptTermReport sb = susceptibility_l1_bound(lambda, r, win.e_bar);
        return 1.0 / (m2 + inv_t_of(r.t)) + sb.p_value;
    };

    SusceptibilityProfile prof;
    prof.m2 = m2;
    prof.source = "skeleton";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const bool in_window = !win.window_empty && (win.all_scales || grid[i] <= win.t0);
        const double sk = in_window ? skeleton_at(terms[i]) : std::numeric_limits<double>::infinity();
        const double cv = convexity(grid[i]);
        const double chi = std::min(sk, cv);
        if (!std::isfinite(chi)) continue;
        prof.t.push_back(grid[i]);
        prof.chi.push_back(chi);
        prof.chi_stderr.push_back(0.0);
        prof.provenance.emplace_back(sk <= cv ? "skeleton_bound" : "convexity_bound");
    }

    // cap at all larger scales: convexity at t = inf, else the all-scale skeleton bound
    const double cv_inf = convexity(INFINITY);
    const double sk_inf = (!win.window_empty && win.all_scales)
                              ? skeleton_at(inf_terms)
                              : std::numeric_limits<double>::infinity();
    prof.chi_cap = std::min(cv_inf, sk_inf);
    if (std::isfinite(prof.chi_cap)) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s:%.17g",
                      cv_inf <= sk_inf ? "convexity_cap" : "skeleton_cap", prof.chi_cap);
        prof.tail_rule = buf;
    } else {
        prof.chi_cap = std::numeric_limits<double>::infinity();
        prof.tail_rule = "none";
    }

    // certified head: integral of p(s)/s^2 below the first profile scale, on a
    // refined sub-grid plus a geometric remainder for the leading decades
    prof.head_constant = 0.0;
    prof.head_certified = false;
    if (!prof.t.empty() && !win.window_empty && (win.all_scales || prof.t.front() <= win.t0)) {
        const double t1 = prof.t.front();
        const int per_decade = 40;
        const int decades = 8;
        std::vector<double> mass(static_cast<std::size_t>(decades), 0.0);
        const auto integrand = [&](double s) {  // p(s)/s, integrated in log s
            const RecursionTerms r = eng.terms_at(s);
            const SusceptTermReport sb = susceptibility_l1_bound(lambda, r, win.e_bar);
            return sb.p_value / s;
        };
        const double dlog = std::log(10.0) / per_decade;
        for (int dec = 0; dec < decades; ++dec) {
            double acc = 0.0;
            for (int j = 0; j < per_decade; ++j) {
                const double la = std::log(t1) - (dec + 1) * std::log(10.0) + j * dlog;
                const double lb = la + dlog;
                acc += 0.5 * (integrand(std::exp(la)) + integrand(std::exp(lb))) * dlog;
            }
            mass[static_cast<std::size_t>(dec)] = acc;
        }
        double total = 0.0;
        for (double v : mass) total += v;
        const double last = mass.back();
        const double prev = mass[mass.size() - 2];
        const double ratio = (prev > 0.0) ? last / prev : 0.0;
        if (ratio < 0.8) {
            const double remainder = (ratio > 0.0) ? 1.2 * last * ratio / (1.0 - ratio) : 0.0;
            prof.head_constant = total + remainder;
            prof.head_certified = true;
        }
    }
    return prof;
}

SusceptibilityProfile mc_profile(const Phi4Params& base, const ChainConfig& chain,
                                 const std::vector<double>& t_values) {
    if (t_values.empty()) throw ConfigError("sampled profile needs explicit scales");
    SusceptibilityProfile prof;
    prof.m2 = base.m2;
    prof.source = "mc";
    prof.tail_rule = "none";
    prof.chi_cap = std::numeric_limits<double>::infinity();
    prof.head_constant = 0.0;
    prof.head_certified = false;
    std::vector<double> sorted = t_values;
    std::sort(sorted.begin(), sorted.end());
    for (double t : sorted) {
        if (t <= 0.0) throw DomainError("profile scales must be positive");
        Phi4Params p = base;
        p.t = t;
        const CorrelationEstimate est = estimate_two_point(p, chain);
        prof.t.push_back(t);
        prof.chi.push_back(est.chi_hat);
        prof.chi_stderr.push_back(est.chi_stderr);
        prof.provenance.emplace_back("mc_estimate");
    }
    return prof;
}

}  // namespace phi4
