#pragma once

#include <string>

#include "phi4lsi/sampler.hpp"
#include "phi4lsi/skeleton.hpp"

namespace phi4 {

/** scale derivative 1/t - chi_t / t^2 of the log-Sobolev exponent */
double kappa_dot(double t, double chi);

struct LsiOptions {
    double conservative_sigma = 3.0;  // stderr inflation of the conservative variant
    double refine_rtol = 1e-6;        // target relative gap of the interior bracket
    double divergence_cap = 1e15;     // integral size treated as divergent
};

struct LsiBoundReport {
    bool has_gamma_lower = false;
    double gamma_lower = 0.0;  // 1 / upper bound of int_0^inf e^{-2 kappa_t} dt
    bool has_conservative = false;
    double gamma_lower_conservative = 0.0;  // same with chi + sigma * stderr
    double kappa_integral = 0.0;            // the certified upper bound of the integral
    double head_value = 0.0;                // contribution below the first profile scale
    double interior_value = 0.0;
    double tail_value = 0.0;
    double bracket_gap = 0.0;  // relative gap between lower and upper interior brackets
    bool has_gamma_upper = false;
    double gamma_upper = 0.0;  // 1/chi at the largest scale (exact or estimated profiles)
    std::string profile_source;
    std::string tail_rule;
    std::string diagnostics;
    std::string divergence_decade;  // first decade whose integral mass stops decaying
    int cells = 0;
};

/** evaluates the log-Sobolev criterion on a susceptibility profile:
 *    1/gamma <= int_0^inf exp(-2 int_0^t kappa_dot_s ds) dt.
 *  The integrand is written as (m2 t + 1)^{-2} e^{2 R(t)} with
 *  R(t) = int_0^t (chi_s - gauss_s)/s^2 ds bracketed per profile cell; cells
 *  between gaussian_exact points are exact, other cells use the Griffiths
 *  monotonicity cap. Tail uses the profile cap, head the certified constant */
LsiBoundReport lsi_lower_bound(const SusceptibilityProfile& prof, const LsiOptions& opt = {});

/** unit-lattice closed form: upper bound for 1/gamma of the nearest-neighbour
 *  quartic model at quadratic coefficient nu and susceptibility chi:
 *    e^2/(2|nu|+1) + (2|nu|+1)^3 exp[2 + 2 (2|nu|+1) chi] */
double lattice_phi4_bound(double nu, double chi);

struct GapUpperReport {
    double gamma_upper = 0.0;     // 1 / chi_hat
    double var_check = 0.0;       // |var(F) - chi_hat| relative, F the normalised sum
    double dirichlet_check = 0.0;  // D(F), equals 1 identically
};

/** gamma <= spectral gap <= D(F)/var(F) = 1/chi with the trial function
 *  F = eps^d L^{-d/2} sum_x phi_x */
GapUpperReport spectral_gap_upper(const CorrelationEstimate& est);

}  // namespace phi4
