#include "phi4lsi/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "phi4lsi/errors.hpp"

namespace phi4 {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gauss_chi(double m2, double t) { return 1.0 / (m2 + (std::isinf(t) ? 0.0 : 1.0 / t)); }

struct Sweep {
    double total = kInf;
    double head = 0.0, interior = 0.0, tail = 0.0;
    double interior_lo = 0.0;
    bool certified = true;
    bool divergent = false;
    std::string divergence_decade;
    std::string notes;
};

void append_note(std::string& notes, const std::string& msg) {
    if (!notes.empty()) notes += "; ";
    notes += msg;
}

Sweep sweep_profile(const SusceptibilityProfile& prof, const std::vector<double>& chi,
                    const LsiOptions& opt) {
    const double m2 = prof.m2;
    const std::size_t n = prof.t.size();
    Sweep s;

    // head: R(t) <= head_constant below the first scale
    double r_hi = 0.0;
    if (prof.head_certified) {
        r_hi = prof.head_constant;
    } else if (prof.source == "mc") {
        append_note(s.notes, "head assumed gaussian below the first sampled scale (uncertified)");
        s.certified = false;
    } else {
        append_note(s.notes, "head contribution is not certified");
        s.certified = false;
    }
    const double t1 = prof.t.front();
    s.head = std::exp(2.0 * r_hi) * (1.0 / m2) * (1.0 - 1.0 / (m2 * t1 + 1.0));

    // interior cells
    double r_lo = 0.0;
    double hi_sum = 0.0, lo_sum = 0.0;
    double decade_mass = 0.0, prev_decade_mass = -1.0;
    int decade = static_cast<int>(std::floor(std::log10(t1)));
    int growth_run = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double ta = prof.t[i], tb = prof.t[i + 1];
        if (!(tb > ta) || ta <= 0.0) throw DomainError("profile scales must be positive and increasing");
        const double qa = chi[i] - gauss_chi(m2, ta);
        const double qb = chi[i + 1] - gauss_chi(m2, tb);
        const bool exact_cell =
            prof.provenance[i] == "gaussian_exact" && prof.provenance[i + 1] == "gaussian_exact";
        const double dgauss = gauss_chi(m2, tb) - gauss_chi(m2, ta);
        const double weight = 1.0 / ta - 1.0 / tb;
        const double q_hi = exact_cell ? 0.0 : std::max(qa, qb) + dgauss;
        const double q_lo = exact_cell ? 0.0 : std::min(qa, qb);
        const double dgcell = (1.0 / m2) * (1.0 / (m2 * ta + 1.0) - 1.0 / (m2 * tb + 1.0));
        const double cell_hi = std::exp(2.0 * (r_hi + std::max(q_hi * weight, 0.0))) * dgcell;
        const double cell_lo = std::exp(2.0 * (r_lo + std::min(q_lo * weight, 0.0))) * dgcell;
        r_hi += q_hi * weight;
        r_lo += q_lo * weight;
        hi_sum += cell_hi;
        lo_sum += cell_lo;

        const int dec = static_cast<int>(std::floor(std::log10(tb * (1.0 - 1e-12))));
        decade_mass += cell_hi;
        if (dec != decade) {
            if (prev_decade_mass >= 0.0 && decade >= 0 && decade_mass > prev_decade_mass) {
                if (++growth_run >= 3 && s.divergence_decade.empty()) {
                    char buf[48];
                    std::snprintf(buf, sizeof buf, "1e%d", decade - growth_run + 1);
                    s.divergence_decade = buf;
                }
            } else {
                growth_run = 0;
            }
            prev_decade_mass = decade_mass;
            decade_mass = 0.0;
            decade = dec;
        }
        if (hi_sum > opt.divergence_cap) {
            s.divergent = true;
            if (s.divergence_decade.empty()) {
                char buf[48];
                std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::floor(std::log10(tb))));
                s.divergence_decade = buf;
            }
            break;
        }
    }
    s.interior = hi_sum;
    s.interior_lo = lo_sum;

    // tail beyond the largest scale
    const double tn = prof.t.back();
    const double damp = std::exp(2.0 * r_hi) / ((m2 * tn + 1.0) * (m2 * tn + 1.0));
    if (std::isfinite(prof.chi_cap)) {
        s.tail = damp * std::exp(2.0 * std::max(prof.chi_cap, 0.0) / tn) * tn;
    } else if (prof.tail_rule == "gaussian_exact") {
        s.tail = std::exp(2.0 * r_hi) * (1.0 / m2) / (m2 * tn + 1.0);
    } else if (prof.source == "mc") {
        s.tail = damp * std::exp(2.0 * std::max(chi.back(), 0.0) / tn) * tn;
        append_note(s.notes, "tail extrapolated from the last sampled susceptibility (uncertified)");
        s.certified = false;
    } else {
        append_note(s.notes, "no susceptibility cap at large scales");
        s.divergent = true;
        return s;
    }

    s.total = s.head + s.interior + s.tail;
    if (!(s.total < opt.divergence_cap) || !std::isfinite(s.total)) {
        s.divergent = true;
        if (s.divergence_decade.empty()) s.divergence_decade = "tail";
    }
    return s;
}

}  // namespace

double kappa_dot(double t, double chi) {
    if (t <= 0.0) throw DomainError("kappa_dot needs t > 0");
    return 1.0 / t - chi / (t * t);
}

LsiBoundReport lsi_lower_bound(const SusceptibilityProfile& prof, const LsiOptions& opt) {
    if (prof.t.empty()) {
        LsiBoundReport rep;
        rep.diagnostics = "empty susceptibility profile";
        rep.profile_source = prof.source;
        rep.tail_rule = prof.tail_rule;
        return rep;
    }
    if (prof.t.size() != prof.chi.size() || prof.t.size() != prof.provenance.size() ||
        prof.t.size() != prof.chi_stderr.size())
        throw ShapeError("profile arrays must have matching lengths");
    if (prof.m2 <= 0.0) throw DomainError("profile reference mass must be positive");

    LsiBoundReport rep;
    rep.profile_source = prof.source;
    rep.tail_rule = prof.tail_rule;
    rep.cells = static_cast<int>(prof.t.size()) - 1;

    const Sweep central = sweep_profile(prof, prof.chi, opt);
    rep.head_value = central.head;
    rep.interior_value = central.interior;
    rep.tail_value = central.tail;
    rep.kappa_integral = central.total;
    rep.divergence_decade = central.divergence_decade;
    std::string notes = central.notes;
    if (central.divergent) {
        append_note(notes, central.divergence_decade.empty()
                               ? "kappa integral diverges"
                               : "kappa integral diverges near t = " + central.divergence_decade);
        rep.diagnostics = notes;
        return rep;
    }
    if (central.interior > 0.0)
        rep.bracket_gap = (central.interior - central.interior_lo) / central.interior;
    if (rep.bracket_gap > opt.refine_rtol)
        append_note(notes, "interior bracket limited by profile resolution");
    rep.has_gamma_lower = true;
    rep.gamma_lower = 1.0 / central.total;

    bool any_stderr = false;
    for (double se : prof.chi_stderr) any_stderr = any_stderr || se > 0.0;
    if (any_stderr) {
        std::vector<double> inflated = prof.chi;
        for (std::size_t i = 0; i < inflated.size(); ++i)
            inflated[i] += opt.conservative_sigma * prof.chi_stderr[i];
        const Sweep conservative = sweep_profile(prof, inflated, opt);
        if (!conservative.divergent) {
            rep.has_conservative = true;
            rep.gamma_lower_conservative = 1.0 / conservative.total;
        }
    } else {
        rep.has_conservative = true;
        rep.gamma_lower_conservative = rep.gamma_lower;
    }

    if (prof.source == "gaussian") {
        rep.has_gamma_upper = true;
        rep.gamma_upper = prof.m2;
    } else if (prof.source == "mc") {
        rep.has_gamma_upper = true;
        rep.gamma_upper = 1.0 / prof.chi.back();
    }
    rep.diagnostics = notes;
    return rep;
}

double lattice_phi4_bound(double nu, double chi) {
    if (chi < 0.0) throw DomainError("susceptibility must be nonnegative");
    const double b = 2.0 * std::abs(nu) + 1.0;
    return std::exp(2.0) / b + b * b * b * std::exp(2.0 + 2.0 * b * chi);
}

GapUpperReport spectral_gap_upper(const CorrelationEstimate& est) {
    if (est.chi_hat <= 0.0) throw DomainError("spectral gap upper bound needs chi_hat > 0");
    GapUpperReport rep;
    double sum = 0.0;
    for (double v : est.s_hat.values) sum += v;
    const double var = est.spec.cell() * sum;
    rep.var_check = std::abs(var - est.chi_hat) / std::max(std::abs(est.chi_hat), 1e-300);
    double ld = 1.0;
    for (int i = 0; i < est.spec.d; ++i) ld *= est.spec.L;
    rep.dirichlet_check = est.spec.cell() * static_cast<double>(est.spec.volume()) / ld;
    rep.gamma_upper = 1.0 / est.chi_hat;
    return rep;
}

}  // namespace phi4
