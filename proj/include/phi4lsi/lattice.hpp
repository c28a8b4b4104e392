#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace phi4 {

/** periodic lattice L*T^d ∩ eps*Z^d, sites indexed row-major (first coordinate slowest) */
struct LatticeSpec {
    int d = 2;
    double eps = 1.0;
    double L = 1.0;
    int n_per_side = 1;

    std::int64_t volume() const {
        std::int64_t v = 1;
        for (int i = 0; i < d; ++i) v *= n_per_side;
        return v;
    }
    double cell() const {  // eps^d
        double c = 1.0;
        for (int i = 0; i < d; ++i) c *= eps;
        return c;
    }
    bool operator==(const LatticeSpec& o) const {
        return d == o.d && eps == o.eps && L == o.L && n_per_side == o.n_per_side;
    }

    std::array<int, 3> coords(std::int64_t site) const;
    std::int64_t site(const std::array<int, 3>& c) const;  // coords reduced mod n
    std::int64_t wrap_sum(std::int64_t a, std::int64_t b) const;   // site index of x_a + x_b
    std::int64_t wrap_diff(std::int64_t a, std::int64_t b) const;  // site index of x_a - x_b
    std::vector<std::int64_t> neighbours(std::int64_t site) const;  // 2d entries, with repeats when n<=2
};

/** checks d in {2,3}, eps>0, L>0, L/eps a positive integer */
LatticeSpec build_lattice(int d, double eps, double L);

/** scalar field, one value per site in row-major site order */
struct Field {
    LatticeSpec spec;
    std::vector<double> values;

    Field() = default;
    explicit Field(const LatticeSpec& s, double fill = 0.0)
        : spec(s), values(static_cast<std::size_t>(s.volume()), fill) {}
    Field(const LatticeSpec& s, std::vector<double> v) : spec(s), values(std::move(v)) {}
    double& operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }
};

/** dual torus: momenta k = (2pi/L)*j with components mapped into (-pi/eps, pi/eps] */
struct DualLattice {
    LatticeSpec spec;
    explicit DualLattice(const LatticeSpec& s);

    /** momentum component for frequency index j in [0,n) */
    double momentum(int j) const;
    /** one-axis dispersion (4/eps^2) sin^2(k eps/2), indexed by frequency j */
    double theta_axis(int j) const { return theta_ax_[static_cast<std::size_t>(j)]; }
    /** full dispersion theta(k) at the mode with row-major frequency index */
    double theta(std::int64_t mode) const;

  private:
    std::vector<double> theta_ax_;
};

/** eps-weighted circular convolution (f*g)(x) = eps^d sum_y f(x-y) g(y), via FFT */
Field convolve(const Field& f, const Field& g);

/** eps-weighted norm: (eps^d sum |f|^p)^(1/p); p = infinity gives max|f| */
double lp_norm(const Field& f, double p);

/** builds the real-space kernel x -> (1/L^d) sum_k e^{ikx} mult[k] for a real even multiplier
 *  given in row-major frequency order; imaginary residue must stay below 1e-10 of the scale */
Field kernel_from_multiplier(const LatticeSpec& spec, const std::vector<double>& mult);

/** pointwise helpers */
Field pointwise_pow(const Field& f, int k);
Field pointwise_mul(const Field& f, const Field& g);

/** CSV with header coord_1,...,coord_d,value; coordinates in units of eps */
void write_field_csv(const Field& f, const std::string& path);
Field read_field_csv(const LatticeSpec& spec, const std::string& path);

}  // namespace phi4
