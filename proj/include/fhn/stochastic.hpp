#pragma once

#include <vector>

#include "fhn/errors.hpp"
#include "fhn/fhn_model.hpp"
#include "fhn/rng.hpp"

namespace fhn {

// Truncated-Gaussian prior on (theta0, theta1): independent normals with
// per-component rejection bounds.
struct PriorSpec {
    double mean0 = 0.4, sd0 = 0.3, lo0 = -0.2, hi0 = 1.0;
    double mean1 = 0.4, sd1 = 0.4, lo1 = -0.4, hi1 = 1.2;
};

// Gaussian prior on the AR(1) noise parameters.
struct NoisePrior {
    double mean_sigma = 0.07, sd_sigma = 0.01;
    double mean_rho = 0.8, sd_rho = 0.05;
};

struct NoiseParams {
    double sigma = 0.07;  // > 0
    double rho = 0.8;     // |rho| < 1
};

// Draws each component from its Gaussian and redraws the whole pair until
// both fall inside the bounds. Throws RejectionExhausted after 10000
// consecutive rejections.
ThetaPair sample_theta(RngStream& rng, const PriorSpec& prior);

// Independent Gaussian draws; sigma redrawn while <= 0, rho while |rho| >= 1.
NoiseParams sample_noise_params(RngStream& rng, const NoisePrior& prior);

// First-order autoregressive path of length n with stationary marginal
// N(0, (sigma/dt)^2):
//   eta_1 ~ N(0, (sigma/dt)^2)
//   eta_i = rho*eta_{i-1} + eps_i,  eps_i ~ N(0, (sigma/dt)^2 (1 - rho^2))
std::vector<double> ar1_path(RngStream& rng, const NoiseParams& params,
                             double dt, std::size_t n);

} // namespace fhn
