#pragma once

#include <string>
#include <vector>

#include "phi4lsi/free_field.hpp"
#include "phi4lsi/sampler.hpp"

namespace phi4 {

/** diagram norms of a concrete covariance kernel C = C_t; psi is the centred
 *  cube psi = C^3 - delta_0 eps^{-d} ||C^3||_L1 (its lattice integral vanishes) */
struct DiagramNorms {
    double psi_l1 = 0.0;    // ||psi||_L1
    double c_psi_l1 = 0.0;  // ||C * psi||_L1
    double c_psi_l2 = 0.0;  // ||C * psi||_L2
    double bubble5 = 0.0;   // ||C (C^2 * C^2)||_L1
    double psi_mass = 0.0;  // eps^d sum psi, zero up to roundoff
    CovarianceMoments moments;
};

DiagramNorms diagram_norms(const CovarianceKernel& kernel);

/** two-sided skeleton comparison of a sampled two-point function S against the
 *  free kernel C at the same mass schedule:
 *    S - C <= -3 lam S(0) (C*S) + 6 lam^2 (C*S^3*S) - (a_eps + mu - m2)(C*S)
 *    S - C >= [same] - 54 lam^3 (C*Q*S),   Q = S (S^2 * S^2)
 *  both sides evaluated on per-batch mean fields so the slack carries a stderr */
struct BfsReport {
    LatticeSpec spec;
    std::vector<double> upper_slack;   // per site, mean of RHS_upper - (S - C)
    std::vector<double> upper_stderr;
    std::vector<double> lower_slack;   // per site, mean of (S - C) - RHS_lower
    std::vector<double> lower_stderr;
    double worst_upper_sigma = 0.0;  // min over sites of slack/stderr
    double worst_lower_sigma = 0.0;
    bool violation = false;  // any slack below -3 stderr
};

BfsReport verify_bfs(const CorrelationEstimate& est, const CovarianceKernel& kernel,
                     const Phi4Params& params);

/** constants of the scale-uniform bound shapes (independent of eps and L).
 *  Defaults are suprema of the exact lattice values over a dense calibration
 *  grid (d in {2,3}, eps down to 1/8, L in {1,2,4}, m2 in [1/4,16], twelve
 *  decades of t) with 10% headroom; every field can be overridden */
struct BoundConstants {
    double c_sq_d2 = 0.0;      // ||C^2||_L1 <= c / m_t^2          (d=2)
    double c_sq_d3 = 0.0;      // ||C^2||_L1 <= c / m_t            (d=3)
    double c_eta_d2 = 0.0;     // eta_t <= c log(1 + 1/(m^2 t))    (d=2)
    double c_eta_d3 = 0.0;     // eta_t <= c m (sqrt(1+1/(t m^2)) - 1)  (d=3)
    double c_gam_d2 = 0.0;     // gamma_t <= c / (m^2 (m^2 t + 1)) (d=2)
    double c_gam_d3 = 0.0;     // gamma_t <= c log(1 + 1/(m^2 t))  (d=3)
    double c_psi_l1_d2 = 0.0;  // ||psi||_L1 <= c / m_t^2          (d=2)
    double c_cpsi_l1_d3 = 0.0;  // ||C*psi||_L1 <= c (m_t^{-1/2} + m_t^{-5/2}) (d=3)
    double c_cpsi_l2_d3 = 0.0;  // ||C*psi||_L2 <= c m_t^{-1/2}    (d=3)
    double c_bub5_d2 = 0.0;    // ||C (C^2*C^2)||_L1 <= c / m_t^4  (d=2)
    double c_bub5_d3 = 0.0;    // ||C (C^2*C^2)||_L1 <= c / m_t    (d=3)

    std::string provenance = "calibrated-default";
};

/** shape constants calibrated as documented on BoundConstants */
BoundConstants default_bound_constants();

/** per-scale inputs of the norm recursion; either closed shapes with fitted
 *  constants (eps,L-free) or exact diagram norms of a concrete lattice */
struct RecursionTerms {
    int d = 2;
    double m2 = 1.0;
    double t = 0.0;
    double k1 = 0.0;       // ||C||_L1 = 1 / m_t^2, exact
    double sq = 0.0;       // bound on ||C^2||_L1
    double eta = 0.0;      // bound on eta_t
    double gam = 0.0;      // bound on gamma_t
    double psi_l1 = 0.0;   // bound on ||psi||_L1 (d=2 route; unused for d=3)
    double cpsi_l1 = 0.0;  // bound on ||C*psi||_L1
    double cpsi_l2 = 0.0;  // bound on ||C*psi||_L2
    double bub5 = 0.0;     // bound on ||C (C^2*C^2)||_L1
    double dm = 0.0;       // |mu - m2|
    bool exact = false;    // true when built from a concrete lattice
};

RecursionTerms shape_terms(int d, double m2, double t, double mu, const BoundConstants& consts);
RecursionTerms exact_terms(const LatticeSpec& spec, double m2, double t, double mu);

/** ascending coefficients of the polynomial self-map f of the combined
 *  L1 + Linf norm; the scale-uniform first-order eta term is pulled out of f
 *  and returned by pulled_eta_term */
std::vector<double> recursion_polynomial(double lambda, const RecursionTerms& r);
double pulled_eta_term(double lambda, const RecursionTerms& r);

/** evaluates a polynomial with ascending coefficients */
double poly_eval(const std::vector<double>& coeffs, double x);

/** small-scale certificate: c0 is 1.1 times the grid supremum of the pulled
 *  eta term divided by lambda; the certificate f(2 c0 lambda) <= c0 lambda / 2
 *  holding on (0, t0] proves ||S - C||_{L1 cap Linf} <= 2 c0 lambda there */
struct WindowReport {
    int d = 2;
    double lambda = 0.0, mu = 0.0, m2 = 1.0;
    double c0 = 0.0;
    double e_bar = 0.0;       // certified norm bound 2 c0 lambda
    double t0 = 0.0;          // largest grid scale of the certified window (0 if empty)
    bool window_empty = true;
    bool all_scales = false;  // certificate holds on the whole grid and at t = inf
    std::vector<double> t_grid;
    std::vector<double> margin;  // c0 lambda / 2 - f(2 c0 lambda) per grid point
    std::string mode;            // "shape" or "exact"
};

std::vector<double> default_t_grid(double t_lo = 1e-6, double t_hi = 1e6, int per_decade = 200);

WindowReport small_scale_window(int d, double lambda, double mu, double m2,
                                const BoundConstants& consts,
                                const std::vector<double>& t_grid = {});
WindowReport small_scale_window_exact(const LatticeSpec& spec, double lambda, double mu, double m2,
                                      const std::vector<double>& t_grid = {});

/** lambda-polynomial upper bound with tagged provenance */
struct BoundPolynomial {
    std::vector<double> coeffs;  // ascending powers of lambda
    std::string provenance;      // "explicit" (exact lattice norms) or "fitted-c"
    int degree() const;
};

/** one-scale bound on ||S - C||_L1 from the L1 recursion seeded with the
 *  certified L1 cap Linf bound e_linf; iterates the cubic self-map downward,
 *  keeps the best valid iterate and applies a sound affine refinement */
struct SusceptTermReport {
    double p_value = 0.0;  // best certified bound on ||S - C||_L1
    double e_linf = 0.0;
    int iterations = 0;
    bool refined = false;
    bool converged = false;
    BoundPolynomial poly;  // single symbolic pass, valid but coarser than p_value
};

SusceptTermReport susceptibility_l1_bound(double lambda, const RecursionTerms& r, double e_linf);

/** certified susceptibility profiles chi_t and Monte Carlo estimates.
 *  provenance per point: gaussian_exact | skeleton_bound | convexity_bound |
 *  mc_estimate */
struct SusceptibilityProfile {
    std::vector<double> t;
    std::vector<double> chi;
    std::vector<double> chi_stderr;  // zero unless mc_estimate
    std::vector<std::string> provenance;
    double m2 = 1.0;           // gaussian reference mass of the schedule
    double chi_cap = 0.0;      // cap valid at every scale >= t.back(); inf when absent
    double head_constant = 0.0;  // bound on int_0^{t_front} (chi_s - gauss_s)/s^2 ds
    bool head_certified = false;
    std::string source;     // "gaussian" | "skeleton" | "mc"
    std::string tail_rule;  // description of the cap
};

SusceptibilityProfile gaussian_profile(double m2, const std::vector<double>& t_grid = {});

/** certified profile: gaussian + skeleton p(t) inside the certificate window,
 *  strict-convexity (Brascamp-Lieb) bound 1/(mu + a_eps + 1/t) elsewhere when
 *  positive; the cap is the convexity bound at t = inf when available */
SusceptibilityProfile skeleton_profile(const LatticeSpec& spec, double lambda, double mu, double m2,
                                       bool exact_norms, const BoundConstants& consts,
                                       const std::vector<double>& t_grid = {});

/** sampled profile; chi_hat with stderr at each requested scale */
SusceptibilityProfile mc_profile(const Phi4Params& base, const ChainConfig& chain,
                                 const std::vector<double>& t_values);

}  // namespace phi4
