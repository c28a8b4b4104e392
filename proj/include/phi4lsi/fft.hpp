#pragma once

#include <complex>
#include <vector>

#include "phi4lsi/lattice.hpp"

namespace phi4::detail {

/** in-place unnormalised DFT over the n^d torus; sign -1 forward, +1 backward */
void dft(const LatticeSpec& spec, std::complex<double>* data, int sign);

/** forward transform with the eps^d weight: fhat(k) = eps^d sum_x e^{-ikx} f(x) */
std::vector<std::complex<double>> fourier(const Field& f);

}  // namespace phi4::detail
