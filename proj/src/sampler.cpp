#include "phi4lsi/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>

#include "phi4lsi/errors.hpp"
#include "phi4lsi/fft.hpp"
#include "phi4lsi/parallel.hpp"
#include "phi4lsi/rng.hpp"

namespace phi4 {

namespace {

constexpr double kFieldCap = 1e8;
constexpr std::int64_t kTuneWindow = 100;         // burn-in sweeps per diagnostics window
constexpr std::int64_t kMaxAdaptiveWindows = 200;

void validate_chain_config(const ChainConfig& cfg) {
    if (cfg.n_keep < 1) throw ConfigError("n_keep must be >= 1");
    if (cfg.thin < 1) throw ConfigError("thin must be >= 1");
    if (cfg.n_burn < 0) throw ConfigError("n_burn must be >= 0");
    if (cfg.n_chains < 1) throw ConfigError("n_chains must be >= 1");
    if (cfg.batches < 1) throw ConfigError("batches must be >= 1");
    if (cfg.scheme == Scheme::langevin_euler && !(cfg.step_dt > 0.0))
        throw ConfigError("step_dt must be > 0 for the langevin scheme");
    if (cfg.scheme == Scheme::metropolis_site && !(cfg.proposal_width > 0.0))
        throw ConfigError("proposal_width must be > 0");
}

struct SweepState {
    const SiteSystem& sys;
    const ChainConfig& cfg;
    std::uint64_t key;
    std::vector<double> phi;
    double width;
    std::uint64_t sweep = 0;
    std::vector<double> drift;  // langevin scratch
};

void sweep_once(SweepState& st, std::int64_t& accepted, std::int64_t& attempted) {
    const SiteSystem& sys = st.sys;
    const auto n = sys.n;
    switch (st.cfg.scheme) {
        case Scheme::metropolis_site: {
            for (std::int64_t x = 0; x < n; ++x) {
                CounterRng rng(st.key, static_cast<std::uint32_t>(x), st.sweep);
                const auto xi = static_cast<std::size_t>(x);
                const double cur = st.phi[xi];
                const double prop = cur + st.width * rng.gaussian();
                ++attempted;
                if (std::abs(prop) > kFieldCap) continue;
                const double b = sys.local_field(st.phi, x);
                const double d2 = prop * prop - cur * cur;
                const double d4 = prop * prop * prop * prop - cur * cur * cur * cur;
                const double ds = 0.5 * sys.c2[xi] * d2 + 0.25 * sys.c4[xi] * d4 - b * (prop - cur);
                if (ds <= 0.0 || rng.uniform() <= std::exp(-ds)) {
                    st.phi[xi] = prop;
                    ++accepted;
                }
            }
            break;
        }
        case Scheme::heatbath_site: {
            for (std::int64_t x = 0; x < n; ++x) {
                CounterRng rng(st.key, static_cast<std::uint32_t>(x), st.sweep);
                const auto xi = static_cast<std::size_t>(x);
                const double c2 = sys.c2[xi];
                const double c4 = sys.c4[xi];
                const double b = sys.local_field(st.phi, x);
                const double mean = b / c2;
                const double sd = 1.0 / std::sqrt(c2);
                if (c4 == 0.0) {
                    st.phi[xi] = mean + sd * rng.gaussian();
                    ++accepted;
                    ++attempted;
                    continue;
                }
                for (int tries = 0;; ++tries) {
                    if (tries == 1000000)
                        throw PrecisionError("heat-bath rejection sampling stalled; quartic weight too strong");
                    const double y = mean + sd * rng.gaussian();
                    ++attempted;
                    if (rng.uniform() <= std::exp(-0.25 * c4 * y * y * y * y)) {
                        st.phi[xi] = y;
                        ++accepted;
                        break;
                    }
                }
            }
            break;
        }
        case Scheme::langevin_euler: {
            if (st.drift.size() != st.phi.size()) st.drift.assign(st.phi.size(), 0.0);
            for (std::int64_t x = 0; x < n; ++x) {
                const auto xi = static_cast<std::size_t>(x);
                const double f = st.phi[xi];
                st.drift[xi] = sys.local_field(st.phi, x) - sys.c2[xi] * f - sys.c4[xi] * f * f * f;
            }
            const double gamma = sys.noise_metric;
            const double dt = st.cfg.step_dt;
            const double sd = std::sqrt(2.0 * gamma * dt);
            for (std::int64_t x = 0; x < n; ++x) {
                CounterRng rng(st.key, static_cast<std::uint32_t>(x), st.sweep);
                const auto xi = static_cast<std::size_t>(x);
                st.phi[xi] += gamma * dt * st.drift[xi] + sd * rng.gaussian();
                if (!std::isfinite(st.phi[xi]) || std::abs(st.phi[xi]) > kFieldCap) {
                    char msg[160];
                    std::snprintf(msg, sizeof msg,
                                  "langevin trajectory diverged at site %lld; reduce step_dt (current %.17g)",
                                  static_cast<long long>(x), dt);
                    throw StepSizeError(msg);
                }
            }
            accepted += n;
            attempted += n;
            break;
        }
    }
    ++st.sweep;
}

void tune_width(SweepState& st, std::int64_t wacc, std::int64_t watt) {
    if (st.cfg.scheme != Scheme::metropolis_site || watt == 0) return;
    const double rate = static_cast<double>(wacc) / static_cast<double>(watt);
    if (rate < 0.30)
        st.width *= 0.8;
    else if (rate > 0.50)
        st.width *= 1.25;
    st.width = std::clamp(st.width, 1e-4, 1e4);
}

}  // namespace

Scheme scheme_from_string(const std::string& s) {
    if (s == "metropolis" || s == "metropolis_site") return Scheme::metropolis_site;
    if (s == "heatbath" || s == "heatbath_site") return Scheme::heatbath_site;
    if (s == "langevin" || s == "langevin_euler") return Scheme::langevin_euler;
    throw ConfigError("unknown scheme '" + s + "' (expected metropolis|heatbath|langevin)");
}

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::metropolis_site: return "metropolis";
        case Scheme::heatbath_site: return "heatbath";
        case Scheme::langevin_euler: return "langevin";
    }
    return "?";
}

double SiteSystem::action(const std::vector<double>& phi) const {
    double s = 0.0;
    for (std::int64_t x = 0; x < n; ++x) {
        const auto xi = static_cast<std::size_t>(x);
        const double f = phi[xi];
        double bond = 0.0;
        for (const auto& [y, j] : bonds[xi]) bond += j * phi[static_cast<std::size_t>(y)];
        s += 0.5 * c2[xi] * f * f + 0.25 * c4[xi] * f * f * f * f - hext[xi] * f - 0.5 * f * bond;
    }
    return s;
}

SiteSystem site_system(const Phi4Params& p) {
    if (p.lambda < 0.0) throw DomainError("lambda must be >= 0");
    if (!(p.t > 0.0)) throw DomainError("scale t must be positive (or infinite)");
    const double inv_t = std::isinf(p.t) ? 0.0 : 1.0 / p.t;
    const auto& spec = p.spec;
    const auto v = spec.volume();

    double c2 = 0.0, c4 = 0.0, h = 0.0, bond_j = 0.0, noise = 1.0;
    if (p.norm == Normalisation::continuum) {
        double a_eps = 0.0;
        if (p.lambda > 0.0) a_eps = counterterm(spec, p.lambda, p.m2).a_eps;
        const double cell = spec.cell();
        bond_j = std::pow(spec.eps, spec.d - 2);
        c2 = cell * (p.mu + inv_t + a_eps) + 2.0 * spec.d * bond_j;
        c4 = cell * p.lambda;
        h = cell * p.h;
        noise = 1.0 / cell;
    } else {
        if (std::abs(spec.eps - 1.0) > 1e-12)
            throw ConfigError("unit_lattice normalisation requires eps == 1");
        bond_j = 1.0;
        c2 = 2.0 * (p.mu + inv_t) + 2.0 * spec.d;
        c4 = p.lambda;
        h = p.h;
        noise = 1.0;
    }

    SiteSystem sys;
    sys.n = v;
    sys.c2.assign(static_cast<std::size_t>(v), c2);
    sys.c4.assign(static_cast<std::size_t>(v), c4);
    sys.hext.assign(static_cast<std::size_t>(v), h);
    sys.noise_metric = noise;
    sys.bonds.resize(static_cast<std::size_t>(v));
    for (std::int64_t x = 0; x < v; ++x) {
        const auto nb = spec.neighbours(x);
        auto& bx = sys.bonds[static_cast<std::size_t>(x)];
        bx.reserve(nb.size());
        for (auto y : nb) {
            // wraparound self-neighbours are a quadratic term, not a coupling:
            // keeping them in the bond list would bias the single-site updates
            if (y == x)
                sys.c2[static_cast<std::size_t>(x)] -= bond_j;
            else
                bx.emplace_back(static_cast<std::int32_t>(y), bond_j);
        }
    }
    return sys;
}

SiteSystem site_system_from_matrix(const std::vector<double>& a_rowmajor, int n, double g,
                                   double nu, const std::vector<double>& h, double inv_t) {
    if (n < 1) throw DomainError("matrix system needs n >= 1");
    if (a_rowmajor.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n))
        throw ShapeError("coupling matrix must be n x n row-major");
    if (!h.empty() && h.size() != static_cast<std::size_t>(n))
        throw ShapeError("external field must have n entries");
    if (g < 0.0) throw DomainError("quartic coupling must be >= 0");
    if (inv_t < 0.0) throw DomainError("1/t must be >= 0");

    SiteSystem sys;
    sys.n = n;
    sys.c2.resize(static_cast<std::size_t>(n));
    sys.c4.assign(static_cast<std::size_t>(n), g);
    sys.hext.assign(static_cast<std::size_t>(n), 0.0);
    if (!h.empty()) sys.hext = h;
    sys.bonds.resize(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        for (int y = 0; y < n; ++y) {
            const double axy = a_rowmajor[static_cast<std::size_t>(x) * n + y];
            const double ayx = a_rowmajor[static_cast<std::size_t>(y) * n + x];
            if (std::abs(axy - ayx) > 1e-12 * (1.0 + std::abs(axy)))
                throw DomainError("coupling matrix must be symmetric");
            if (x == y) {
                sys.c2[static_cast<std::size_t>(x)] = axy + nu + inv_t;
            } else if (axy != 0.0) {
                if (axy > 0.0) throw DomainError("off-diagonal couplings must be <= 0 (ferromagnetic)");
                sys.bonds[static_cast<std::size_t>(x)].emplace_back(y, -axy);
            }
        }
    }
    return sys;
}

ChainDiagnostics run_chain(const SiteSystem& sys, const ChainConfig& cfg, int chain,
                           const SampleSink& sink) {
    validate_chain_config(cfg);
    if (cfg.scheme == Scheme::heatbath_site)
        for (double c : sys.c2)
            if (!(c > 0.0))
                throw DomainError("heat-bath scheme needs every local quadratic coefficient > 0");

    SweepState st{sys, cfg, chain_key(cfg.seed, static_cast<std::uint32_t>(chain)),
                  std::vector<double>(static_cast<std::size_t>(sys.n), 0.0),
                  cfg.proposal_width};

    ChainDiagnostics diag;
    std::vector<double> awin(static_cast<std::size_t>(kTuneWindow));
    if (cfg.n_burn > 0) {
        std::int64_t wacc = 0, watt = 0;
        for (std::int64_t i = 0; i < cfg.n_burn; ++i) {
            sweep_once(st, wacc, watt);
            if ((i + 1) % kTuneWindow == 0) {
                tune_width(st, wacc, watt);
                wacc = watt = 0;
            }
        }
        diag.n_burn_used = cfg.n_burn;
        diag.stabilised = true;
    } else {
        double prev_m = 0.0, prev_se = 0.0;
        bool have_prev = false;
        int stable = 0;
        std::int64_t windows = 0;
        while (stable < 2 && windows < kMaxAdaptiveWindows) {
            std::int64_t wacc = 0, watt = 0;
            for (std::int64_t i = 0; i < kTuneWindow; ++i) {
                sweep_once(st, wacc, watt);
                awin[static_cast<std::size_t>(i)] = sys.action(st.phi);
            }
            tune_width(st, wacc, watt);
            double m = 0.0;
            for (double a : awin) m += a;
            m /= static_cast<double>(kTuneWindow);
            double var = 0.0;
            for (double a : awin) var += (a - m) * (a - m);
            var /= static_cast<double>(kTuneWindow - 1);
            const double se = std::sqrt(var / static_cast<double>(kTuneWindow));
            if (have_prev && std::abs(m - prev_m) <= std::sqrt(se * se + prev_se * prev_se) +
                                                         1e-12 * (1.0 + std::abs(m)))
                ++stable;
            else
                stable = 0;
            prev_m = m;
            prev_se = se;
            have_prev = true;
            ++windows;
        }
        diag.n_burn_used = windows * kTuneWindow;
        diag.stabilised = stable >= 2;
    }

    std::int64_t acc = 0, att = 0;
    double action_sum = 0.0;
    for (std::int64_t k = 0; k < cfg.n_keep; ++k) {
        for (int j = 0; j < cfg.thin; ++j) sweep_once(st, acc, att);
        sink(k, st.phi);
        action_sum += sys.action(st.phi);
    }
    diag.acceptance = att > 0 ? static_cast<double>(acc) / static_cast<double>(att) : 1.0;
    diag.proposal_width = st.width;
    diag.action_mean = action_sum / static_cast<double>(cfg.n_keep);
    return diag;
}

namespace {

/** per-sample translation-averaged correlation (1/V) sum_x phi_x phi_{x+r}, added into acc */
class CorrelationAccumulator {
  public:
    explicit CorrelationAccumulator(const LatticeSpec& spec) : spec_(spec), v_(spec.volume()) {
        if (v_ <= 256) {
            table_.resize(static_cast<std::size_t>(v_) * static_cast<std::size_t>(v_));
            for (std::int64_t x = 0; x < v_; ++x)
                for (std::int64_t r = 0; r < v_; ++r)
                    table_[static_cast<std::size_t>(x * v_ + r)] =
                        static_cast<std::int32_t>(spec.wrap_sum(x, r));
        } else {
            buf_.resize(static_cast<std::size_t>(v_));
        }
    }

    void add(const std::vector<double>& phi, std::vector<double>& acc) {
        const double inv_v = 1.0 / static_cast<double>(v_);
        if (!table_.empty()) {
            for (std::int64_t x = 0; x < v_; ++x) {
                const double f = phi[static_cast<std::size_t>(x)];
                const auto* row = &table_[static_cast<std::size_t>(x * v_)];
                for (std::int64_t r = 0; r < v_; ++r)
                    acc[static_cast<std::size_t>(r)] += inv_v * f * phi[static_cast<std::size_t>(row[r])];
            }
        } else {
            for (std::int64_t i = 0; i < v_; ++i) buf_[static_cast<std::size_t>(i)] = phi[static_cast<std::size_t>(i)];
            detail::dft(spec_, buf_.data(), -1);
            for (auto& z : buf_) z = std::norm(z);
            detail::dft(spec_, buf_.data(), +1);
            const double scale = inv_v * inv_v;
            for (std::int64_t r = 0; r < v_; ++r)
                acc[static_cast<std::size_t>(r)] += scale * buf_[static_cast<std::size_t>(r)].real();
        }
    }

  private:
    LatticeSpec spec_;
    std::int64_t v_;
    std::vector<std::int32_t> table_;
    std::vector<std::complex<double>> buf_;
};

struct BatchLayout {
    int b_eff;                // batches per chain actually used
    std::int64_t per_batch;   // samples per batch
    std::int64_t n_used;      // kept samples per chain contributing to batches
};

BatchLayout batch_layout(const ChainConfig& cfg) {
    BatchLayout lay{};
    lay.b_eff = static_cast<int>(std::min<std::int64_t>(cfg.batches, cfg.n_keep));
    lay.per_batch = cfg.n_keep / lay.b_eff;
    lay.n_used = lay.per_batch * lay.b_eff;
    return lay;
}

double sample_variance_pooled(double sum, double sumsq, double count) {
    const double mean = sum / count;
    double var = sumsq / count - mean * mean;
    return var > 0.0 ? var : 0.0;
}

double ess_from_batches(double n_total, double per_batch, double var_sample,
                        const std::vector<double>& batch_means) {
    if (var_sample <= 0.0 || batch_means.empty()) return n_total;
    double bm = 0.0;
    for (double b : batch_means) bm += b;
    bm /= static_cast<double>(batch_means.size());
    double bv = 0.0;
    for (double b : batch_means) bv += (b - bm) * (b - bm);
    bv /= static_cast<double>(batch_means.size());
    const double tau = std::max(1.0, per_batch * bv / var_sample);
    return std::min(n_total, n_total / tau);
}

}  // namespace

CorrelationEstimate estimate_two_point(const Phi4Params& p, const ChainConfig& cfg) {
    validate_chain_config(cfg);
    const SiteSystem sys = site_system(p);
    const auto& spec = p.spec;
    const std::int64_t v = spec.volume();
    const BatchLayout lay = batch_layout(cfg);
    const double cell = spec.cell();

    const int nc = cfg.n_chains;
    const auto vz = static_cast<std::size_t>(v);
    const auto units = static_cast<std::size_t>(nc) * static_cast<std::size_t>(lay.b_eff);

    std::vector<std::vector<double>> corr_b(units, std::vector<double>(vz, 0.0));
    std::vector<std::vector<double>> mean_b(units, std::vector<double>(vz, 0.0));
    std::vector<double> chi_sum(static_cast<std::size_t>(nc), 0.0);
    std::vector<double> chi_sumsq(static_cast<std::size_t>(nc), 0.0);
    std::vector<ChainDiagnostics> diags(static_cast<std::size_t>(nc));

    ChainConfig per_chain = cfg;
    per_chain.n_keep = lay.n_used;

    parallel_for(nc, cfg.workers, [&](int c) {
        CorrelationAccumulator accum(spec);
        const auto base = static_cast<std::size_t>(c) * static_cast<std::size_t>(lay.b_eff);
        auto sink = [&](std::int64_t k, const std::vector<double>& phi) {
            const auto u = base + static_cast<std::size_t>(k / lay.per_batch);
            accum.add(phi, corr_b[u]);
            double tot = 0.0;
            auto& mb = mean_b[u];
            for (std::int64_t x = 0; x < v; ++x) {
                mb[static_cast<std::size_t>(x)] += phi[static_cast<std::size_t>(x)];
                tot += phi[static_cast<std::size_t>(x)];
            }
            const double chi = cell * tot * tot / static_cast<double>(v);
            chi_sum[static_cast<std::size_t>(c)] += chi;
            chi_sumsq[static_cast<std::size_t>(c)] += chi * chi;
        };
        diags[static_cast<std::size_t>(c)] = run_chain(sys, per_chain, c, sink);
    });

    const double inv_m = 1.0 / static_cast<double>(lay.per_batch);
    for (auto& f : corr_b)
        for (auto& x : f) x *= inv_m;
    for (auto& f : mean_b)
        for (auto& x : f) x *= inv_m;

    CorrelationEstimate est;
    est.spec = spec;
    est.chains = diags;
    est.s_hat = Field{spec, std::vector<double>(vz, 0.0)};
    est.s_stderr = Field{spec, std::vector<double>(vz, 0.0)};
    est.mean_site.assign(vz, 0.0);
    est.mean_site_stderr.assign(vz, 0.0);

    const double uu = static_cast<double>(units);
    for (std::size_t r = 0; r < vz; ++r) {
        double m = 0.0;
        for (const auto& f : corr_b) m += f[r];
        m /= uu;
        est.s_hat.values[r] = m;
        double sm = 0.0;
        for (const auto& f : mean_b) sm += f[r];
        sm /= uu;
        est.mean_site[r] = sm;
        if (units > 1) {
            double var = 0.0, varm = 0.0;
            for (const auto& f : corr_b) var += (f[r] - m) * (f[r] - m);
            for (const auto& f : mean_b) varm += (f[r] - sm) * (f[r] - sm);
            est.s_stderr.values[r] = std::sqrt(var / (uu - 1.0) / uu);
            est.mean_site_stderr[r] = std::sqrt(varm / (uu - 1.0) / uu);
        }
    }

    std::vector<double> chi_batch(units, 0.0);
    for (std::size_t u = 0; u < units; ++u) {
        double s = 0.0;
        for (std::size_t r = 0; r < vz; ++r) s += corr_b[u][r];
        chi_batch[u] = cell * s;
    }
    double chi_m = 0.0;
    for (double x : chi_batch) chi_m += x;
    chi_m /= uu;
    est.chi_hat = chi_m;
    if (units > 1) {
        double var = 0.0;
        for (double x : chi_batch) var += (x - chi_m) * (x - chi_m);
        est.chi_stderr = std::sqrt(var / (uu - 1.0) / uu);
    }

    double tot_sum = 0.0, tot_sumsq = 0.0;
    for (int c = 0; c < nc; ++c) {
        tot_sum += chi_sum[static_cast<std::size_t>(c)];
        tot_sumsq += chi_sumsq[static_cast<std::size_t>(c)];
    }
    const double n_total = static_cast<double>(lay.n_used) * static_cast<double>(nc);
    const double var_sample = sample_variance_pooled(tot_sum, tot_sumsq, n_total);
    est.ess = ess_from_batches(n_total, static_cast<double>(lay.per_batch), var_sample, chi_batch);

    est.batch_fields.reserve(units);
    for (std::size_t u = 0; u < units; ++u) est.batch_fields.push_back(Field{spec, corr_b[u]});

    std::string warn;
    for (const auto& d : diags)
        if (!d.stabilised) {
            warn = "burn-in did not stabilise on at least one chain";
            break;
        }
    if (est.ess < 100.0) {
        if (!warn.empty()) warn += "; ";
        warn += "effective sample size below 100";
    }
    est.quality_warning = !warn.empty();
    est.warning = warn;
    return est;
}

GeneralEstimate estimate_moments(const SiteSystem& sys, const ChainConfig& cfg) {
    validate_chain_config(cfg);
    const std::int64_t n = sys.n;
    const auto nz = static_cast<std::size_t>(n);
    const BatchLayout lay = batch_layout(cfg);
    const int nc = cfg.n_chains;
    const auto units = static_cast<std::size_t>(nc) * static_cast<std::size_t>(lay.b_eff);

    std::vector<std::vector<double>> first_b(units, std::vector<double>(nz, 0.0));
    std::vector<std::vector<double>> second_b(units, std::vector<double>(nz * nz, 0.0));
    std::vector<double> q_sum(static_cast<std::size_t>(nc), 0.0);
    std::vector<double> q_sumsq(static_cast<std::size_t>(nc), 0.0);
    std::vector<ChainDiagnostics> diags(static_cast<std::size_t>(nc));

    ChainConfig per_chain = cfg;
    per_chain.n_keep = lay.n_used;

    parallel_for(nc, cfg.workers, [&](int c) {
        const auto base = static_cast<std::size_t>(c) * static_cast<std::size_t>(lay.b_eff);
        auto sink = [&](std::int64_t k, const std::vector<double>& phi) {
            const auto u = base + static_cast<std::size_t>(k / lay.per_batch);
            auto& fb = first_b[u];
            auto& sb = second_b[u];
            double tot = 0.0;
            for (std::size_t x = 0; x < nz; ++x) {
                fb[x] += phi[x];
                tot += phi[x];
                for (std::size_t y = 0; y < nz; ++y) sb[x * nz + y] += phi[x] * phi[y];
            }
            const double q = tot * tot;
            q_sum[static_cast<std::size_t>(c)] += q;
            q_sumsq[static_cast<std::size_t>(c)] += q * q;
        };
        diags[static_cast<std::size_t>(c)] = run_chain(sys, per_chain, c, sink);
    });

    const double inv_m = 1.0 / static_cast<double>(lay.per_batch);
    for (auto& f : first_b)
        for (auto& x : f) x *= inv_m;
    for (auto& f : second_b)
        for (auto& x : f) x *= inv_m;

    GeneralEstimate est;
    est.chains = diags;
    est.first.assign(nz, 0.0);
    est.first_stderr.assign(nz, 0.0);
    est.second.assign(nz * nz, 0.0);
    est.second_stderr.assign(nz * nz, 0.0);
    const double uu = static_cast<double>(units);

    for (std::size_t x = 0; x < nz; ++x) {
        double m = 0.0;
        for (const auto& f : first_b) m += f[x];
        m /= uu;
        est.first[x] = m;
        if (units > 1) {
            double var = 0.0;
            for (const auto& f : first_b) var += (f[x] - m) * (f[x] - m);
            est.first_stderr[x] = std::sqrt(var / (uu - 1.0) / uu);
        }
    }
    for (std::size_t i = 0; i < nz * nz; ++i) {
        double m = 0.0;
        for (const auto& f : second_b) m += f[i];
        m /= uu;
        est.second[i] = m;
        if (units > 1) {
            double var = 0.0;
            for (const auto& f : second_b) var += (f[i] - m) * (f[i] - m);
            est.second_stderr[i] = std::sqrt(var / (uu - 1.0) / uu);
        }
    }

    auto max_row_sum = [&](const std::vector<double>& mat) {
        double best = 0.0;
        for (std::size_t x = 0; x < nz; ++x) {
            double s = 0.0;
            for (std::size_t y = 0; y < nz; ++y) s += mat[x * nz + y];
            best = std::max(best, s);
        }
        return best;
    };
    est.chi_hat = max_row_sum(est.second);
    std::vector<double> chi_batch(units, 0.0);
    for (std::size_t u = 0; u < units; ++u) chi_batch[u] = max_row_sum(second_b[u]);
    if (units > 1) {
        double m = 0.0;
        for (double x : chi_batch) m += x;
        m /= uu;
        double var = 0.0;
        for (double x : chi_batch) var += (x - m) * (x - m);
        est.chi_stderr = std::sqrt(var / (uu - 1.0) / uu);
    }

    double tot_sum = 0.0, tot_sumsq = 0.0;
    for (int c = 0; c < nc; ++c) {
        tot_sum += q_sum[static_cast<std::size_t>(c)];
        tot_sumsq += q_sumsq[static_cast<std::size_t>(c)];
    }
    const double n_total = static_cast<double>(lay.n_used) * static_cast<double>(nc);
    const double var_sample = sample_variance_pooled(tot_sum, tot_sumsq, n_total);
    std::vector<double> q_batch(units, 0.0);
    for (std::size_t u = 0; u < units; ++u) {
        double tr = 0.0;
        for (std::size_t x = 0; x < nz; ++x)
            for (std::size_t y = 0; y < nz; ++y) tr += second_b[u][x * nz + y];
        q_batch[u] = tr;
    }
    est.ess = ess_from_batches(n_total, static_cast<double>(lay.per_batch), var_sample, q_batch);

    bool unstable = false;
    for (const auto& d : diags) unstable = unstable || !d.stabilised;
    est.quality_warning = unstable || est.ess < 100.0;

    est.batch_second = std::move(second_b);
    return est;
}

}  // namespace phi4
