#include "phi4lsi/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace phi4::detail {

namespace {

// FFTW's planner is not thread-safe (execution is), and planning with
// FFTW_ESTIMATE still costs more than a small transform.  Plans created with
// FFTW_UNALIGNED work on any buffer, so one plan per (rank, n, sign) is
// cached for the lifetime of the process.
std::mutex planner_mutex;
std::map<std::pair<std::pair<int, int>, int>, fftw_plan> plan_cache;

fftw_plan cached_plan(int rank, int n, int sign) {
    std::lock_guard<std::mutex> lock(planner_mutex);
    const auto key = std::make_pair(std::make_pair(rank, n), sign);
    auto it = plan_cache.find(key);
    if (it != plan_cache.end()) return it->second;
    int dims[3] = {n, n, n};
    std::size_t total = 1;
    for (int i = 0; i < rank; ++i) total *= static_cast<std::size_t>(n);
    fftw_complex* buf = fftw_alloc_complex(total);
    fftw_plan plan = fftw_plan_dft(rank, dims, buf, buf,
                                   sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plan_cache.emplace(key, plan);
    return plan;
}

}  // namespace

void dft(const LatticeSpec& spec, std::complex<double>* data, int sign) {
    fftw_plan plan = cached_plan(spec.d, spec.n_per_side, sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plan, buf, buf);
}

std::vector<std::complex<double>> fourier(const Field& f) {
    std::vector<std::complex<double>> out(f.values.begin(), f.values.end());
    dft(f.spec, out.data(), -1);
    const double w = f.spec.cell();
    for (auto& z : out) z *= w;
    return out;
}

}  // namespace phi4::detail
