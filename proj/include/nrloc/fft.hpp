#pragma once

#include <complex>
#include <vector>

namespace nrloc {

/// In-place iterative radix-2 transform. n must be a power of two.
/// The inverse applies the 1/n scale.
void fft_inplace(std::complex<double>* data, std::size_t n, bool inverse);

std::vector<std::complex<double>> fft(std::vector<std::complex<double>> data, bool inverse);

}  // namespace nrloc
