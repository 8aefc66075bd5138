#include "fhn/stochastic.hpp"

#include <cmath>

namespace fhn {

namespace {
constexpr int kMaxRejections = 10000;
}

ThetaPair sample_theta(RngStream& rng, const PriorSpec& prior) {
    if (!(prior.sd0 > 0.0) || !(prior.sd1 > 0.0) || !(prior.lo0 < prior.hi0) ||
        !(prior.lo1 < prior.hi1))
        throw Error("sample_theta: invalid prior");
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
        ThetaPair th;
        th.theta0 = prior.mean0 + prior.sd0 * rng.next_gaussian();
        th.theta1 = prior.mean1 + prior.sd1 * rng.next_gaussian();
        if (th.theta0 >= prior.lo0 && th.theta0 <= prior.hi0 && th.theta1 >= prior.lo1 &&
            th.theta1 <= prior.hi1)
            return th;
    }
    throw RejectionExhausted("sample_theta: 10000 consecutive rejections");
}

NoiseParams sample_noise_params(RngStream& rng, const NoisePrior& prior) {
    NoiseParams p;
    int attempt = 0;
    do {
        if (attempt++ >= kMaxRejections)
            throw RejectionExhausted("sample_noise_params: sigma rejections exhausted");
        p.sigma = prior.mean_sigma + prior.sd_sigma * rng.next_gaussian();
    } while (p.sigma <= 0.0);
    attempt = 0;
    do {
        if (attempt++ >= kMaxRejections)
            throw RejectionExhausted("sample_noise_params: rho rejections exhausted");
        p.rho = prior.mean_rho + prior.sd_rho * rng.next_gaussian();
    } while (std::abs(p.rho) >= 1.0);
    return p;
}

std::vector<double> ar1_path(RngStream& rng, const NoiseParams& params,
                             double dt, std::size_t n) {
    if (n < 1) throw Error("ar1_path: n must be >= 1");
    if (!(dt > 0.0)) throw Error("ar1_path: dt must be positive");

    const double stat_sd = params.sigma / dt;
    const double innov_sd = stat_sd * std::sqrt(1.0 - params.rho * params.rho);

    std::vector<double> eta(n);
    eta[0] = stat_sd * rng.next_gaussian();
    for (std::size_t i = 1; i < n; ++i)
        eta[i] = params.rho * eta[i - 1] + innov_sd * rng.next_gaussian();
    return eta;
}

} // namespace fhn
