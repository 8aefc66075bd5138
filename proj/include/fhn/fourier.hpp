#pragma once

#include <vector>

namespace fhn {

// One-sided DFT magnitudes |X_k|, k = 0..floor(n/2), with the unnormalized
// convention X_k = sum_j x_j exp(-2*pi*i*j*k/n). Thread-safe.
std::vector<double> dft_magnitudes(const std::vector<double>& x);

// Output length for an input of length n.
inline std::size_t dft_magnitude_len(std::size_t n) { return n / 2 + 1; }

} // namespace fhn
