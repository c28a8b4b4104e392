#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "phi4lsi/free_field.hpp"
#include "phi4lsi/lattice.hpp"

namespace phi4 {

enum class Normalisation { continuum, unit_lattice };

/** interacting measure parameters; scale t adds the usual 1/t mass shift */
struct Phi4Params {
    LatticeSpec spec;
    double lambda = 0.0;
    double mu = 0.0;
    double m2 = 1.0;   // reference mass entering the counterterm (continuum mode)
    double t = INFINITY;
    Normalisation norm = Normalisation::continuum;
    double h = 0.0;    // external field per site
};

enum class Scheme { metropolis_site, heatbath_site, langevin_euler };

Scheme scheme_from_string(const std::string& s);
std::string to_string(Scheme s);

struct ChainConfig {
    Scheme scheme = Scheme::metropolis_site;
    double step_dt = 0.01;        // langevin time step
    std::int64_t n_burn = 0;      // burn-in sweeps; 0 = adaptive (action-mean stabilisation)
    std::int64_t n_keep = 10000;  // kept samples per chain
    int thin = 1;                 // sweeps between kept samples
    int n_chains = 4;
    std::uint64_t seed = 1;
    int workers = 1;
    double proposal_width = 1.0;  // metropolis start width, tuned during burn-in
    int batches = 32;             // batch-means blocks per chain
};

/** generic site system: action sum_x [c2/2 phi^2 + c4/4 phi^4 - h phi] - sum_bonds J phi_x phi_y */
struct SiteSystem {
    std::int64_t n = 0;
    std::vector<double> c2, c4, hext;
    std::vector<std::vector<std::pair<std::int32_t, double>>> bonds;  // per site: (partner, J)
    double noise_metric = 1.0;  // Langevin mobility (eps^{-d} in continuum normalisation)

    double local_field(const std::vector<double>& phi, std::int64_t x) const {
        double b = hext[static_cast<std::size_t>(x)];
        for (const auto& [y, j] : bonds[static_cast<std::size_t>(x)]) b += j * phi[static_cast<std::size_t>(y)];
        return b;
    }
    double action(const std::vector<double>& phi) const;
};

/** torus phi4 system; continuum normalisation includes the counterterm a_eps(lambda, m2) */
SiteSystem site_system(const Phi4Params& p);

/** small explicit coupling matrix (row-major n x n, SPD with nonpositive off-diagonals),
 *  measure exp(-phi.A phi/2 - sum[g phi^4/4 + (nu+1/t) phi^2/2] + h.phi) */
SiteSystem site_system_from_matrix(const std::vector<double>& a_rowmajor, int n, double g,
                                   double nu, const std::vector<double>& h, double inv_t);

struct ChainDiagnostics {
    double acceptance = 1.0;
    std::int64_t n_burn_used = 0;
    bool stabilised = true;
    double proposal_width = 0.0;
    double action_mean = 0.0;
};

using SampleSink = std::function<void(std::int64_t index, const std::vector<double>& phi)>;

/** runs one chain and streams kept samples to the sink, deterministically in (seed, chain) */
ChainDiagnostics run_chain(const SiteSystem& sys, const ChainConfig& cfg, int chain, const SampleSink& sink);

struct CorrelationEstimate {
    LatticeSpec spec;
    Field s_hat;                     // displacement-averaged two point <phi_0 phi_r>
    Field s_stderr;
    std::vector<Field> batch_fields; // per (chain, batch) mean correlation fields
    std::vector<double> mean_site;   // <phi_x>
    std::vector<double> mean_site_stderr;
    double chi_hat = 0.0;            // eps^d sum_r s_hat(r)
    double chi_stderr = 0.0;
    double ess = 0.0;
    bool quality_warning = false;
    std::string warning;
    std::vector<ChainDiagnostics> chains;
};

CorrelationEstimate estimate_two_point(const Phi4Params& p, const ChainConfig& cfg);

/** moment estimates for explicit-matrix systems (no translation averaging) */
struct GeneralEstimate {
    std::vector<double> first, first_stderr;       // n
    std::vector<double> second, second_stderr;     // n*n row-major, <phi_x phi_y>
    std::vector<std::vector<double>> batch_second; // per (chain,batch)
    double chi_hat = 0.0, chi_stderr = 0.0;        // max row sum convention (unit weights)
    double ess = 0.0;
    bool quality_warning = false;
    std::vector<ChainDiagnostics> chains;
};

GeneralEstimate estimate_moments(const SiteSystem& sys, const ChainConfig& cfg);

}  // namespace phi4
