#pragma once

#include <cstdint>

namespace fhn {

// Counter-based random stream. A (seed, stream_id) pair fully determines the
// byte sequence, independent of platform and of any other stream, so samples
// can be generated out of order or in parallel. The generator is SplitMix64
// in counter mode with a per-stream base derived from (seed, stream_id).
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    // Uniform on the open interval (0, 1), 53-bit granularity.
    double next_uniform();

    // Standard normal via the inverse-CDF transform (bit-stable across
    // platforms, unlike ziggurat/polar methods).
    double next_gaussian();

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

// Inverse of the standard normal CDF (Wichura's AS 241, double precision).
// Defined for p in (0, 1).
double inverse_normal_cdf(double p);

} // namespace fhn
