// Recomputes the calibration suprema behind default_bound_constants().
//
// For every closed bound shape the tool scans the exact lattice values over
// d in {2,3}, eps in {1,1/2,1/4,1/8}, L in {1,2,4}, m2 in {1/4,...,16} and
// twelve decades of t, prints the supremum of value/shape per (bound, d) and
// the suggested defaults (supremum + 10% headroom).

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "phi4lsi/free_field.hpp"
#include "phi4lsi/lattice.hpp"
#include "phi4lsi/skeleton.hpp"

using namespace phi4;

namespace {

struct Sup {
    double value = 0.0;
    std::string at;

    void feed(double ratio, const std::string& where) {
        if (ratio > value) {
            value = ratio;
            at = where;
        }
    }
};

std::string tag(double eps, double boxl, double m2, double t) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "eps=%g L=%g m2=%g t=%g", eps, boxl, m2, t);
    return buf;
}

}  // namespace

int main() {
    const std::vector<double> epses{1.0, 0.5, 0.25, 0.125};
    const std::vector<double> boxes{1.0, 2.0, 4.0};
    const std::vector<double> masses{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    std::vector<double> scales;
    for (int k = -12; k <= 12; ++k) {
        scales.push_back(std::pow(10.0, 0.5 * k));
    }
    scales.push_back(INFINITY);

    for (int d : {2, 3}) {
        Sup sq, eta, gam, psi1, cpsi1, cpsi2, bub5;
        for (double eps : epses)
            for (double boxl : boxes) {
                const auto spec = build_lattice(d, eps, boxl);
                for (double m2 : masses)
                    for (double t : scales) {
                        const MassSchedule sched{m2, t};
                        const double m2t = sched.m2_t();
                        const double mt = std::sqrt(m2t);
                        const auto kern = covariance(spec, sched);
                        const auto n = diagram_norms(kern);
                        const auto where = tag(eps, boxl, m2, t);

                        if (d == 2) {
                            sq.feed(n.moments.sq_l1 * m2t, where);
                            psi1.feed(n.psi_l1 * m2t, where);
                            bub5.feed(n.bubble5 * m2t * m2t, where);
                        } else {
                            sq.feed(n.moments.sq_l1 * mt, where);
                            cpsi1.feed(n.c_psi_l1 / (1.0 / std::sqrt(mt) + std::pow(mt, -2.5)), where);
                            cpsi2.feed(n.c_psi_l2 * std::sqrt(mt), where);
                            bub5.feed(n.bubble5 * mt, where);
                        }
                        if (!std::isinf(t)) {
                            const auto g = counterterm_gaps(spec, m2, t);
                            if (d == 2) {
                                eta.feed(g.eta_t / std::log1p(1.0 / (m2 * t)), where);
                                gam.feed(g.gamma_t * m2 * (m2 * t + 1.0), where);
                            } else {
                                const double m = std::sqrt(m2);
                                eta.feed(g.eta_t / (m * (std::sqrt(1.0 + 1.0 / (t * m2)) - 1.0)), where);
                                gam.feed(g.gamma_t / std::log1p(1.0 / (m2 * t)), where);
                            }
                        }
                    }
            }

        std::printf("d=%d\n", d);
        auto show = [](const char* name, const Sup& s) {
            if (s.at.empty()) return;
            std::printf("  %-10s sup %.6f  (default %.4f)  at %s\n", name, s.value,
                        1.1 * s.value, s.at.c_str());
        };
        show("sq", sq);
        show("eta", eta);
        show("gam", gam);
        show("psi_l1", psi1);
        show("cpsi_l1", cpsi1);
        show("cpsi_l2", cpsi2);
        show("bub5", bub5);
    }
    return 0;
}
