#pragma once

#include <cmath>

#include "phi4lsi/lattice.hpp"

namespace phi4 {

/** Pauli–Villars schedule: mass m2 > 0 and scale t in (0, inf]; t = inf means 1/t = 0 */
struct MassSchedule {
    double m2 = 1.0;
    double t = INFINITY;

    double inv_t() const { return std::isinf(t) ? 0.0 : 1.0 / t; }
    double m2_t() const { return m2 + inv_t(); }
};

/** real-space kernel of (-Laplacian + m2 + 1/t)^{-1} on the torus */
struct CovarianceKernel {
    LatticeSpec spec;
    MassSchedule sched;
    Field values;
};

struct CovarianceMoments {
    double value0;    // C(0)
    double l1;        // ||C||_L1 = 1/m2_t
    double l2sq;      // ||C||_L2^2
    double sq_l1;     // ||C^2||_L1 (== l2sq)
    double cube_l1;   // ||C^3||_L1
};

struct CountertermReport {
    double lambda = 0.0;
    double m2 = 0.0;
    double a_eps = 0.0;    // -3 lambda tadpole + 6 lambda^2 sunset
    double tadpole = 0.0;  // C(0)
    double sunset = 0.0;   // ||C(0,.)||_{L3}^3 = eps^d sum C^3
};

struct GapReport {
    double eta_t = 0.0;    // C_inf(0) - C_t(0)
    double gamma_t = 0.0;  // ||C_inf^3||_L1 - ||C_t^3||_L1
};

CovarianceKernel covariance(const LatticeSpec& spec, const MassSchedule& sched);
CovarianceMoments covariance_moments(const CovarianceKernel& kernel);
CountertermReport counterterm(const LatticeSpec& spec, double lambda, double m2);
GapReport counterterm_gaps(const LatticeSpec& spec, double m2, double t);

}  // namespace phi4
