#pragma once

#include <vector>

namespace phi4 {

/** small quartic model on n sites:
 *    density(phi) ∝ exp[ -1/2 phi.A phi - sum_x (g/4 phi_x^4 + (nu + inv_t)/2 phi_x^2) + h.phi ]
 *  A symmetric positive definite with nonpositive off-diagonal entries (ferromagnetic) */
struct GeneralModel {
    std::vector<double> a;  // n x n, row-major
    int n = 0;
    double g = 0.0;     // quartic coupling, >= 0
    double nu = 0.0;    // per-site mass, enters as nu/2 phi^2
    double inv_t = 0.0;  // extra mass 1/t from the scale decomposition, >= 0
    std::vector<double> h;  // external field; empty means zero
};

/** tensor-product quadrature controls; the primary rule is the trapezoid in
 *  whitened coordinates (root-exponentially convergent for quartic tails),
 *  gated by node doubling, with an independent gauss-hermite cross-check */
struct QuadratureGrid {
    int nodes_per_dim = 128;    // gauss-hermite cross-check nodes per dimension
    int trapezoid_nodes = 96;   // primary-rule nodes per dimension (doubled for the gate)
    double halfwidth = 9.0;     // trapezoid half-width in whitened coordinates
    double gate_rtol = 1e-8;    // max relative drift allowed under node doubling
    double cross_rtol = 1e-6;   // max relative gap between the two rules
};

struct MomentReport {
    std::vector<double> first;   // <phi_x>, length n
    std::vector<double> second;  // <phi_x phi_y>, n x n row-major
    std::vector<double> fourth;  // <phi_x^4>, length n
    double gate_drift = 0.0;     // worst relative change under node doubling
    double rule_gap = 0.0;       // worst relative gap gauss-hermite vs trapezoid
};

/** exact moments by deterministic quadrature; n <= 4 */
MomentReport moments(const GeneralModel& m, const QuadratureGrid& grid = {});

/** <phi_x phi_y> - <phi_x><phi_y> at the model's own field h; n x n row-major */
std::vector<double> truncated_two_point(const GeneralModel& m, const QuadratureGrid& grid = {});

/** max_x sum_y <phi_x phi_y> evaluated at h = 0 */
double susceptibility_rowmax(const GeneralModel& m, const QuadratureGrid& grid = {});

/** scale-t renormalised potential
 *    V_t(phi) = -log E_C[ e^{-V_0(phi + zeta)} ] + const,   C = (A + inv_t)^{-1},
 *  normalised so V_t(0) = 0; V_0(phi) = sum_x (g/4 phi_x^4 + nu/2 phi_x^2); n <= 2 */
double renormalized_potential(const GeneralModel& m, const std::vector<double>& phi,
                              const QuadratureGrid& grid = {});

struct HessianReport {
    std::vector<double> analytic;  // B - B Sigma(phi) B with B = A + inv_t
    std::vector<double> fd;        // central differences of V_t with Richardson step halving
    double max_abs_diff = 0.0;     // max |analytic - fd|
    double sigma_radius_phi = 0.0;   // spectral radius of Sigma(phi)
    double sigma_radius_zero = 0.0;  // spectral radius of Sigma(0)
    double chi_zero = 0.0;           // max row sum of Sigma(0)
    double quad_form_min_eig = 0.0;  // min eigenvalue of Hess - (B - chi B^2); >= -tol
    double dss_min_entry = 0.0;      // min entry of Sigma(phi); >= -tol
    double dss_max_excess = 0.0;     // max entry of Sigma(phi) - Sigma(0); <= tol
    double resolvent_first_err = 0.0;   // rel. error of dC/dt = C^2/t^2 vs finite differences
    double resolvent_second_err = 0.0;  // rel. error of d2C/dt2 = -(2/t) A C dC/dt
};

/** verifies the Hessian identity of the renormalised potential at a point phi:
 *    Hess V_t(phi) = C^{-1} - C^{-1} Sigma_t(phi) C^{-1},
 *  where Sigma_t(phi) is the truncated two-point matrix of the model tilted by
 *  h = C^{-1} phi, together with the monotonicity and resolvent-derivative checks;
 *  requires inv_t > 0 and n <= 2 */
HessianReport verify_hessian_criterion(const GeneralModel& m, const std::vector<double>& phi,
                                       const QuadratureGrid& grid = {});

}  // namespace phi4
