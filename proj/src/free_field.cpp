#include "phi4lsi/free_field.hpp"

#include <cmath>

#include "phi4lsi/errors.hpp"

namespace phi4 {

namespace {

void check_sched(const MassSchedule& s) {
    if (!(s.m2 > 0.0)) throw DomainError("mass schedule: m2 must be positive");
    if (!(s.t > 0.0)) throw DomainError("mass schedule: t must be positive (inf allowed)");
}

}  // namespace

CovarianceKernel covariance(const LatticeSpec& spec, const MassSchedule& sched) {
    check_sched(sched);
    DualLattice dual(spec);
    const std::int64_t v = spec.volume();
    std::vector<double> mult(static_cast<std::size_t>(v));
    const double m2t = sched.m2_t();
    for (std::int64_t k = 0; k < v; ++k)
        mult[static_cast<std::size_t>(k)] = 1.0 / (m2t + dual.theta(k));
    return CovarianceKernel{spec, sched, kernel_from_multiplier(spec, mult)};
}

CovarianceMoments covariance_moments(const CovarianceKernel& kernel) {
    const Field& c = kernel.values;
    const double w = kernel.spec.cell();
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (double x : c.values) {
        const double a = std::abs(x);
        s1 += a;
        s2 += a * a;
        s3 += a * a * a;
    }
    CovarianceMoments m;
    m.value0 = c[0];
    m.l1 = w * s1;
    m.l2sq = w * s2;
    m.sq_l1 = w * s2;
    m.cube_l1 = w * s3;
    return m;
}

CountertermReport counterterm(const LatticeSpec& spec, double lambda, double m2) {
    if (!(m2 > 0.0)) throw DomainError("counterterm: m2 must be positive");
    if (lambda < 0.0) throw DomainError("counterterm: lambda must be nonnegative");
    const auto mom = covariance_moments(covariance(spec, MassSchedule{m2, INFINITY}));
    CountertermReport r;
    r.lambda = lambda;
    r.m2 = m2;
    r.tadpole = mom.value0;
    r.sunset = mom.cube_l1;
    r.a_eps = -3.0 * lambda * r.tadpole + 6.0 * lambda * lambda * r.sunset;
    return r;
}

GapReport counterterm_gaps(const LatticeSpec& spec, double m2, double t) {
    const auto inf_mom = covariance_moments(covariance(spec, MassSchedule{m2, INFINITY}));
    const auto t_mom = covariance_moments(covariance(spec, MassSchedule{m2, t}));
    GapReport g;
    g.eta_t = inf_mom.value0 - t_mom.value0;
    g.gamma_t = inf_mom.cube_l1 - t_mom.cube_l1;
    return g;
}

}  // namespace phi4
