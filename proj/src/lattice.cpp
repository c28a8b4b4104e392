#include "phi4lsi/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "phi4lsi/errors.hpp"
#include "phi4lsi/fft.hpp"

namespace phi4 {

LatticeSpec build_lattice(int d, double eps, double L) {
    if (d != 2 && d != 3) throw ConfigError("lattice: d must be 2 or 3, got " + std::to_string(d));
    if (!(eps > 0.0)) throw ConfigError("lattice: eps must be positive");
    if (!(L > 0.0)) throw ConfigError("lattice: L must be positive");
    const double ratio = L / eps;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw ConfigError("lattice: L/eps must be a positive integer, got " + std::to_string(ratio));
    LatticeSpec s;
    s.d = d;
    s.eps = eps;
    s.L = L;
    s.n_per_side = static_cast<int>(rounded);
    return s;
}

std::array<int, 3> LatticeSpec::coords(std::int64_t site) const {
    std::array<int, 3> c{0, 0, 0};
    for (int i = d - 1; i >= 0; --i) {
        c[static_cast<std::size_t>(i)] = static_cast<int>(site % n_per_side);
        site /= n_per_side;
    }
    return c;
}

std::int64_t LatticeSpec::site(const std::array<int, 3>& c) const {
    std::int64_t s = 0;
    for (int i = 0; i < d; ++i) {
        int v = c[static_cast<std::size_t>(i)] % n_per_side;
        if (v < 0) v += n_per_side;
        s = s * n_per_side + v;
    }
    return s;
}

std::int64_t LatticeSpec::wrap_sum(std::int64_t a, std::int64_t b) const {
    auto ca = coords(a), cb = coords(b);
    std::array<int, 3> c{0, 0, 0};
    for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = ca[static_cast<std::size_t>(i)] + cb[static_cast<std::size_t>(i)];
    return site(c);
}

std::int64_t LatticeSpec::wrap_diff(std::int64_t a, std::int64_t b) const {
    auto ca = coords(a), cb = coords(b);
    std::array<int, 3> c{0, 0, 0};
    for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = ca[static_cast<std::size_t>(i)] - cb[static_cast<std::size_t>(i)];
    return site(c);
}

std::vector<std::int64_t> LatticeSpec::neighbours(std::int64_t s) const {
    std::vector<std::int64_t> out;
    out.reserve(static_cast<std::size_t>(2 * d));
    auto c = coords(s);
    for (int i = 0; i < d; ++i) {
        for (int dir : {+1, -1}) {
            auto cc = c;
            cc[static_cast<std::size_t>(i)] += dir;
            out.push_back(site(cc));
        }
    }
    return out;
}

DualLattice::DualLattice(const LatticeSpec& s) : spec(s) {
    const int n = s.n_per_side;
    theta_ax_.resize(static_cast<std::size_t>(n));
    const double pref = 4.0 / (s.eps * s.eps);
    for (int j = 0; j < n; ++j) {
        const double sj = std::sin(M_PI * j / n);
        theta_ax_[static_cast<std::size_t>(j)] = pref * sj * sj;
    }
}

double DualLattice::momentum(int j) const {
    const int n = spec.n_per_side;
    const int jj = (j > n / 2) ? j - n : j;  // components in (-pi/eps, pi/eps]
    return 2.0 * M_PI * jj / spec.L;
}

double DualLattice::theta(std::int64_t mode) const {
    double th = 0.0;
    for (int i = spec.d - 1; i >= 0; --i) {
        th += theta_ax_[static_cast<std::size_t>(mode % spec.n_per_side)];
        mode /= spec.n_per_side;
    }
    return th;
}

namespace {

void check_same_lattice(const Field& f, const Field& g) {
    if (!(f.spec == g.spec)) throw ShapeError("fields live on different lattices");
    if (f.values.size() != static_cast<std::size_t>(f.spec.volume()) ||
        g.values.size() != static_cast<std::size_t>(g.spec.volume()))
        throw ShapeError("field size does not match lattice volume");
}

}  // namespace

Field convolve(const Field& f, const Field& g) {
    check_same_lattice(f, g);
    const auto n = f.values.size();
    std::vector<std::complex<double>> a(f.values.begin(), f.values.end());
    std::vector<std::complex<double>> b(g.values.begin(), g.values.end());
    detail::dft(f.spec, a.data(), -1);
    detail::dft(f.spec, b.data(), -1);
    for (std::size_t i = 0; i < n; ++i) a[i] *= b[i];
    detail::dft(f.spec, a.data(), +1);
    const double scale = f.spec.cell() / static_cast<double>(f.spec.volume());
    Field out(f.spec);
    for (std::size_t i = 0; i < n; ++i) out.values[i] = a[i].real() * scale;
    return out;
}

double lp_norm(const Field& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0)) throw DomainError("lp_norm: p must be >= 1 or infinity");
    double s = 0.0;
    for (double v : f.values) s += std::pow(std::abs(v), p);
    return std::pow(f.spec.cell() * s, 1.0 / p);
}

Field kernel_from_multiplier(const LatticeSpec& spec, const std::vector<double>& mult) {
    if (mult.size() != static_cast<std::size_t>(spec.volume()))
        throw ShapeError("multiplier size does not match mode count");
    std::vector<std::complex<double>> a(mult.begin(), mult.end());
    detail::dft(spec, a.data(), +1);
    const double scale = 1.0 / std::pow(spec.L, spec.d);
    Field out(spec);
    double max_im = 0.0, max_re = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.values[i] = a[i].real() * scale;
        max_im = std::max(max_im, std::abs(a[i].imag() * scale));
        max_re = std::max(max_re, std::abs(out.values[i]));
    }
    if (max_im > 1e-10 * std::max(1.0, max_re))
        throw PrecisionError("kernel_from_multiplier: non-real inverse transform");
    return out;
}

Field pointwise_pow(const Field& f, int k) {
    Field out(f.spec);
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        double v = 1.0;
        for (int j = 0; j < k; ++j) v *= f.values[i];
        out.values[i] = v;
    }
    return out;
}

Field pointwise_mul(const Field& f, const Field& g) {
    check_same_lattice(f, g);
    Field out(f.spec);
    for (std::size_t i = 0; i < f.values.size(); ++i) out.values[i] = f.values[i] * g.values[i];
    return out;
}

void write_field_csv(const Field& f, const std::string& path) {
    std::ostringstream os;
    for (int i = 1; i <= f.spec.d; ++i) os << "coord_" << i << ",";
    os << "value\n";
    char buf[40];
    for (std::int64_t s = 0; s < f.spec.volume(); ++s) {
        auto c = f.spec.coords(s);
        for (int i = 0; i < f.spec.d; ++i) os << c[static_cast<std::size_t>(i)] << ",";
        std::snprintf(buf, sizeof buf, "%.17g", f[s]);
        os << buf << "\n";
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << os.str();
    if (!out) throw IoError("write failed: " + path);
}

Field read_field_csv(const LatticeSpec& spec, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty field csv: " + path);
    Field out(spec);
    std::vector<bool> seen(static_cast<std::size_t>(spec.volume()), false);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::array<int, 3> c{0, 0, 0};
        for (int i = 0; i < spec.d; ++i) {
            if (!std::getline(ss, tok, ',')) throw IoError("malformed field csv row: " + line);
            c[static_cast<std::size_t>(i)] = std::stoi(tok);
        }
        if (!std::getline(ss, tok, ',')) throw IoError("malformed field csv row: " + line);
        const std::int64_t s = spec.site(c);
        out[s] = std::stod(tok);
        seen[static_cast<std::size_t>(s)] = true;
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
        throw IoError("field csv does not cover every site: " + path);
    return out;
}

}  // namespace phi4
