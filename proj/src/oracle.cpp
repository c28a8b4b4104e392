#include "phi4lsi/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <utility>

#include "phi4lsi/errors.hpp"

namespace phi4 {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd as_matrix(const std::vector<double>& a, int n) {
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = a[static_cast<std::size_t>(i) * n + j];
    return m;
}

std::vector<double> as_vector(const MatrixXd& m) {
    std::vector<double> out(static_cast<std::size_t>(m.rows()) * m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i) * m.cols() + j] = m(i, j);
    return out;
}

void validate_model(const GeneralModel& m, int max_sites, const char* op) {
    if (m.n < 1) throw ShapeError("quartic model needs at least one site");
    if (m.n > max_sites) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s supports at most %d sites, got %d", op, max_sites, m.n);
        throw CapabilityError(buf);
    }
    if (m.a.size() != static_cast<std::size_t>(m.n) * m.n)
        throw ShapeError("coupling matrix size does not match site count");
    if (!m.h.empty() && m.h.size() != static_cast<std::size_t>(m.n))
        throw ShapeError("external field size does not match site count");
    if (m.g < 0.0) throw DomainError("quartic coupling must be nonnegative");
    if (m.inv_t < 0.0) throw DomainError("scale mass 1/t must be nonnegative");
    const MatrixXd a = as_matrix(m.a, m.n);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) {
            if (std::abs(a(i, j) - a(j, i)) > 1e-12 * (1.0 + std::abs(a(i, j))))
                throw DomainError("coupling matrix must be symmetric");
            if (i != j && a(i, j) > 1e-12) throw DomainError("off-diagonal couplings must be nonpositive");
        }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
    if (es.eigenvalues().minCoeff() <= 0.0) throw DomainError("coupling matrix must be positive definite");
}

void validate_grid(const QuadratureGrid& grid) {
    if (grid.nodes_per_dim < 8 || grid.trapezoid_nodes < 8)
        throw ConfigError("quadrature needs at least 8 nodes per dimension");
    if (grid.halfwidth < 4.0) throw ConfigError("trapezoid half-width below 4 truncates the mass");
    if (grid.gate_rtol <= 0.0 || grid.cross_rtol <= 0.0)
        throw ConfigError("gate tolerances must be positive");
}

/** nodes/weights with weight e^{-z^2/2}, weights normalised to sum 1 (Golub-Welsch) */
void hermite_rule(int n, std::vector<double>& z, std::vector<double>& w) {
    static std::mutex mu;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(n);
        if (it != cache.end()) {
            z = it->second.first;
            w = it->second.second;
            return;
        }
    }
    MatrixXd jac = MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) {
        const double b = std::sqrt(k / 2.0);
        jac(k - 1, k) = b;
        jac(k, k - 1) = b;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(jac);
    z.resize(static_cast<std::size_t>(n));
    w.resize(static_cast<std::size_t>(n));
    double wsum = 0.0;
    for (int i = 0; i < n; ++i) {
        z[static_cast<std::size_t>(i)] = std::sqrt(2.0) * es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        w[static_cast<std::size_t>(i)] = v0 * v0;
        wsum += v0 * v0;
    }
    for (double& wi : w) wi /= wsum;
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(n, std::make_pair(z, w));
}

/** uniform nodes on [-R, R] with the normal density folded into the weights */
void trapezoid_rule(int n, double halfwidth, std::vector<double>& z, std::vector<double>& w) {
    z.resize(static_cast<std::size_t>(n));
    w.resize(static_cast<std::size_t>(n));
    const double step = 2.0 * halfwidth / (n - 1);
    for (int i = 0; i < n; ++i) {
        const double zi = -halfwidth + step * i;
        z[static_cast<std::size_t>(i)] = zi;
        const double edge = (i == 0 || i == n - 1) ? 0.5 : 1.0;
        w[static_cast<std::size_t>(i)] = edge * step * std::exp(-0.5 * zi * zi);
    }
}

/** whitened frame phi = center + T z for the gaussian part G = V D V^T, T = V D^{-1/2};
 *  resid is a leftover diagonal quadratic coefficient folded into the weight */
struct Frame {
    MatrixXd t;
    VectorXd center;
    double resid = 0.0;
};

Frame whiten(const MatrixXd& g0, const VectorXd& h) {
    Frame f;
    const int n = static_cast<int>(g0.rows());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g0);
    const double lo = es.eigenvalues().minCoeff();
    MatrixXd g = g0;
    f.resid = 0.0;
    if (lo <= 1e-10) {
        const double shift = 1e-10 - lo + 1e-12;
        g = g0 + shift * MatrixXd::Identity(n, n);
        f.resid = -shift;
        es.compute(g);
    }
    VectorXd dinv = es.eigenvalues().cwiseInverse().cwiseSqrt();
    f.t = es.eigenvectors() * dinv.asDiagonal();
    f.center = g.llt().solve(h);
    return f;
}

struct RawMoments {
    double z = 0.0;
    VectorXd first;
    MatrixXd second;
    VectorXd fourth;

    explicit RawMoments(int n) : first(VectorXd::Zero(n)), second(MatrixXd::Zero(n, n)), fourth(VectorXd::Zero(n)) {}

    void normalise() {
        first /= z;
        second /= z;
        fourth /= z;
    }
};

/** tensor-product sweep of a 1d rule over n dimensions accumulating the raw
 *  moments of phi = center + T z under weight prod_i w(z_i) * extra(phi) */
RawMoments sweep(const Frame& fr, double g, const std::vector<double>& z1, const std::vector<double>& w1) {
    const int n = static_cast<int>(fr.center.size());
    const int nn = static_cast<int>(z1.size());
    RawMoments acc(n);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    VectorXd zv(n), phi(n);
    for (;;) {
        double wt = 1.0;
        for (int k = 0; k < n; ++k) {
            zv(k) = z1[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
            wt *= w1[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
        }
        phi = fr.center + fr.t * zv;
        double excess = 0.0;
        for (int k = 0; k < n; ++k) {
            const double p2 = phi(k) * phi(k);
            excess += 0.25 * g * p2 * p2 + 0.5 * fr.resid * p2;
        }
        const double val = wt * std::exp(-excess);
        acc.z += val;
        for (int i = 0; i < n; ++i) {
            acc.first(i) += val * phi(i);
            const double p2 = phi(i) * phi(i);
            acc.fourth(i) += val * p2 * p2;
            for (int j = 0; j < n; ++j) acc.second(i, j) += val * phi(i) * phi(j);
        }
        int d = 0;
        while (d < n && ++idx[static_cast<std::size_t>(d)] == nn) {
            idx[static_cast<std::size_t>(d)] = 0;
            ++d;
        }
        if (d == n) break;
    }
    acc.normalise();
    return acc;
}

double mixed_diff(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

double report_diff(const RawMoments& a, const RawMoments& b) {
    double worst = 0.0;
    for (int i = 0; i < a.first.size(); ++i) {
        worst = std::max(worst, mixed_diff(a.first(i), b.first(i)));
        worst = std::max(worst, mixed_diff(a.fourth(i), b.fourth(i)));
        for (int j = 0; j < a.first.size(); ++j) worst = std::max(worst, mixed_diff(a.second(i, j), b.second(i, j)));
    }
    return worst;
}

/** moments with the gaussian part G0 explicit (allows mass tilts beyond the model struct);
 *  the trapezoid rule is primary: in whitened coordinates the integrands decay like
 *  exp(-c z^4), for which uniform nodes converge root-exponentially while gauss-hermite
 *  is subgeometric, so the latter serves as the independent cross-check only */
MomentReport moments_of(const MatrixXd& g0, double g, const VectorXd& h, const QuadratureGrid& grid) {
    const Frame fr = whiten(g0, h);
    std::vector<double> z1, w1;
    trapezoid_rule(grid.trapezoid_nodes, grid.halfwidth, z1, w1);
    const RawMoments coarse = sweep(fr, g, z1, w1);
    trapezoid_rule(2 * grid.trapezoid_nodes, grid.halfwidth, z1, w1);
    const RawMoments fine = sweep(fr, g, z1, w1);
    hermite_rule(grid.nodes_per_dim, z1, w1);
    const RawMoments cross = sweep(fr, g, z1, w1);

    MomentReport rep;
    rep.gate_drift = report_diff(coarse, fine);
    rep.rule_gap = report_diff(cross, fine);
    if (rep.gate_drift > grid.gate_rtol) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "moment quadrature drifted by %.3g under node doubling (gate %.3g)",
                      rep.gate_drift, grid.gate_rtol);
        throw PrecisionError(buf);
    }
    if (rep.rule_gap > grid.cross_rtol) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "gauss-hermite and trapezoid rules disagree by %.3g", rep.rule_gap);
        throw PrecisionError(buf);
    }
    const int n = static_cast<int>(fr.center.size());
    rep.first.assign(static_cast<std::size_t>(n), 0.0);
    rep.fourth.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        rep.first[static_cast<std::size_t>(i)] = fine.first(i);
        rep.fourth[static_cast<std::size_t>(i)] = fine.fourth(i);
    }
    rep.second = as_vector(fine.second);
    return rep;
}

MatrixXd gaussian_part(const GeneralModel& m) {
    return as_matrix(m.a, m.n) + (m.nu + m.inv_t) * MatrixXd::Identity(m.n, m.n);
}

VectorXd field_of(const GeneralModel& m) {
    VectorXd h = VectorXd::Zero(m.n);
    for (std::size_t i = 0; i < m.h.size(); ++i) h(static_cast<int>(i)) = m.h[i];
    return h;
}

MatrixXd truncated_of(const MatrixXd& g0, double g, const VectorXd& h, const QuadratureGrid& grid) {
    const MomentReport rep = moments_of(g0, g, h, grid);
    const int n = static_cast<int>(h.size());
    MatrixXd out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out(i, j) = rep.second[static_cast<std::size_t>(i) * n + j] -
                        rep.first[static_cast<std::size_t>(i)] * rep.first[static_cast<std::size_t>(j)];
    return out;
}

/** E[e^{-g/4 sum (mu0 + .)^4}] over N(0, M^{-1}), up to a phi-independent factor */
double quartic_partition(const Frame& fr, double g, const VectorXd& mu0, const std::vector<double>& z1,
                         const std::vector<double>& w1) {
    const int n = static_cast<int>(mu0.size());
    const int nn = static_cast<int>(z1.size());
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    VectorXd zv(n), phi(n);
    double acc = 0.0;
    for (;;) {
        double wt = 1.0;
        for (int k = 0; k < n; ++k) {
            zv(k) = z1[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
            wt *= w1[static_cast<std::size_t>(idx[static_cast<std::size_t>(k)])];
        }
        phi = mu0 + fr.t * zv;
        double excess = 0.0;
        for (int k = 0; k < n; ++k) {
            const double p2 = phi(k) * phi(k);
            excess += 0.25 * g * p2 * p2;
        }
        acc += wt * std::exp(-excess);
        int d = 0;
        while (d < n && ++idx[static_cast<std::size_t>(d)] == nn) {
            idx[static_cast<std::size_t>(d)] = 0;
            ++d;
        }
        if (d == n) break;
    }
    return acc;
}

double potential_ratio(const MatrixXd& mm, double g, const VectorXd& mu0, const QuadratureGrid& grid) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(mm);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw DomainError("renormalised potential needs A + (nu + 1/t) positive definite");
    Frame fr;
    fr.resid = 0.0;
    fr.center = VectorXd::Zero(mu0.size());
    fr.t = es.eigenvectors() * es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal();
    const VectorXd zero = VectorXd::Zero(mu0.size());

    std::vector<double> z1, w1;
    trapezoid_rule(grid.trapezoid_nodes, grid.halfwidth, z1, w1);
    const double coarse = quartic_partition(fr, g, mu0, z1, w1) / quartic_partition(fr, g, zero, z1, w1);
    trapezoid_rule(2 * grid.trapezoid_nodes, grid.halfwidth, z1, w1);
    const double fine = quartic_partition(fr, g, mu0, z1, w1) / quartic_partition(fr, g, zero, z1, w1);
    hermite_rule(grid.nodes_per_dim, z1, w1);
    const double cross = quartic_partition(fr, g, mu0, z1, w1) / quartic_partition(fr, g, zero, z1, w1);

    if (mixed_diff(coarse, fine) > grid.gate_rtol) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "potential quadrature drifted by %.3g under node doubling (gate %.3g)",
                      mixed_diff(coarse, fine), grid.gate_rtol);
        throw PrecisionError(buf);
    }
    if (mixed_diff(cross, fine) > grid.cross_rtol) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "potential rules disagree by %.3g", mixed_diff(cross, fine));
        throw PrecisionError(buf);
    }
    return fine;
}

double potential_at(const MatrixXd& b, const MatrixXd& mm, double g, const VectorXd& phi,
                    const QuadratureGrid& grid) {
    const VectorXd bphi = b * phi;
    const VectorXd mu0 = mm.llt().solve(bphi);
    const double quad = 0.5 * phi.dot(bphi) - 0.5 * bphi.dot(mu0);
    return quad - std::log(potential_ratio(mm, g, mu0, grid));
}

double spectral_radius(const MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double max_row_sum(const MatrixXd& m) {
    double best = 0.0;
    for (int i = 0; i < m.rows(); ++i) best = std::max(best, m.row(i).sum());
    return best;
}

}  // namespace

MomentReport moments(const GeneralModel& m, const QuadratureGrid& grid) {
    validate_model(m, 4, "moments");
    validate_grid(grid);
    return moments_of(gaussian_part(m), m.g, field_of(m), grid);
}

std::vector<double> truncated_two_point(const GeneralModel& m, const QuadratureGrid& grid) {
    validate_model(m, 4, "truncated_two_point");
    validate_grid(grid);
    return as_vector(truncated_of(gaussian_part(m), m.g, field_of(m), grid));
}

double susceptibility_rowmax(const GeneralModel& m, const QuadratureGrid& grid) {
    validate_model(m, 4, "susceptibility_rowmax");
    validate_grid(grid);
    return max_row_sum(truncated_of(gaussian_part(m), m.g, VectorXd::Zero(m.n), grid));
}

double renormalized_potential(const GeneralModel& m, const std::vector<double>& phi,
                              const QuadratureGrid& grid) {
    validate_model(m, 2, "renormalized_potential");
    validate_grid(grid);
    if (phi.size() != static_cast<std::size_t>(m.n)) throw ShapeError("potential point size mismatch");
    const MatrixXd b = as_matrix(m.a, m.n) + m.inv_t * MatrixXd::Identity(m.n, m.n);
    const MatrixXd mm = b + m.nu * MatrixXd::Identity(m.n, m.n);
    VectorXd p(m.n);
    for (int i = 0; i < m.n; ++i) p(i) = phi[static_cast<std::size_t>(i)];
    return potential_at(b, mm, m.g, p, grid);
}

HessianReport verify_hessian_criterion(const GeneralModel& m, const std::vector<double>& phi,
                                       const QuadratureGrid& grid) {
    validate_model(m, 2, "verify_hessian_criterion");
    validate_grid(grid);
    if (m.inv_t <= 0.0) throw DomainError("hessian check needs a finite scale t");
    if (phi.size() != static_cast<std::size_t>(m.n)) throw ShapeError("hessian point size mismatch");

    const int n = m.n;
    const MatrixXd a = as_matrix(m.a, n);
    const MatrixXd b = a + m.inv_t * MatrixXd::Identity(n, n);
    const MatrixXd mm = b + m.nu * MatrixXd::Identity(n, n);
    const MatrixXd g0 = a + (m.nu + m.inv_t) * MatrixXd::Identity(n, n);
    VectorXd p(n);
    for (int i = 0; i < n; ++i) p(i) = phi[static_cast<std::size_t>(i)];

    HessianReport rep;
    const MatrixXd sigma_phi = truncated_of(g0, m.g, b * p, grid);
    const MatrixXd sigma_zero = truncated_of(g0, m.g, VectorXd::Zero(n), grid);
    const MatrixXd analytic = b - b * sigma_phi * b;
    rep.analytic = as_vector(analytic);
    rep.sigma_radius_phi = spectral_radius(sigma_phi);
    rep.sigma_radius_zero = spectral_radius(sigma_zero);
    rep.chi_zero = max_row_sum(sigma_zero);
    rep.dss_min_entry = sigma_phi.minCoeff();
    rep.dss_max_excess = (sigma_phi - sigma_zero).maxCoeff();

    const auto value = [&](const VectorXd& point) { return potential_at(b, mm, m.g, point, grid); };
    const double v0 = value(p);
    const auto hessian_fd = [&](double step) {
        MatrixXd out(n, n);
        for (int i = 0; i < n; ++i) {
            VectorXd e = VectorXd::Zero(n);
            e(i) = step;
            out(i, i) = (value(p + e) - 2.0 * v0 + value(p - e)) / (step * step);
            for (int j = i + 1; j < n; ++j) {
                VectorXd f = VectorXd::Zero(n);
                f(j) = step;
                const double mixed = (value(p + e + f) - value(p + e - f) - value(p - e + f) + value(p - e - f)) /
                                     (4.0 * step * step);
                out(i, j) = mixed;
                out(j, i) = mixed;
            }
        }
        return out;
    };
    const double step = 1e-3 * (1.0 + p.cwiseAbs().maxCoeff());
    const MatrixXd coarse = hessian_fd(step);
    const MatrixXd fine = hessian_fd(0.5 * step);
    const MatrixXd richardson = (4.0 * fine - coarse) / 3.0;
    rep.fd = as_vector(richardson);
    rep.max_abs_diff = (richardson - analytic).cwiseAbs().maxCoeff();

    const MatrixXd floor_form = analytic - (b - rep.chi_zero * b * b);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (floor_form + floor_form.transpose()));
    rep.quad_form_min_eig = es.eigenvalues().minCoeff();

    const double t = 1.0 / m.inv_t;
    const auto cov_at = [&](double tt) -> MatrixXd {
        return (a + (1.0 / tt) * MatrixXd::Identity(n, n)).inverse();
    };
    const MatrixXd cov = cov_at(t);
    const MatrixXd cdot = cov * cov / (t * t);
    const MatrixXd cddot = -(2.0 / (t * t * t)) * a * cov * cov * cov;
    const auto rel_err = [](const MatrixXd& got, const MatrixXd& want) {
        return (got - want).norm() / std::max(want.norm(), 1e-300);
    };
    const double dt = 2e-3 * t;
    const auto first_fd = [&](double step_t) -> MatrixXd {
        return (cov_at(t + step_t) - cov_at(t - step_t)) / (2.0 * step_t);
    };
    const auto second_fd = [&](double step_t) -> MatrixXd {
        return (cov_at(t + step_t) - 2.0 * cov + cov_at(t - step_t)) / (step_t * step_t);
    };
    rep.resolvent_first_err = rel_err((4.0 * first_fd(0.5 * dt) - first_fd(dt)) / 3.0, cdot);
    rep.resolvent_second_err = rel_err((4.0 * second_fd(0.5 * dt) - second_fd(dt)) / 3.0, cddot);
    return rep;
}

}  // namespace phi4
