#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fhn/errors.hpp"
#include "fhn/fhn_model.hpp"
#include "fhn/stochastic.hpp"

namespace fhn {

enum class FeatureKind : std::uint8_t { Time = 0, Fourier = 1, TimeAndFourier = 2 };

const char* feature_kind_name(FeatureKind k);
FeatureKind feature_kind_from_name(const std::string& name);

// Feature length for a raw series of length n_t.
std::size_t feature_len_for(FeatureKind kind, std::size_t n_t);

struct SampleMeta {
    ThetaPair theta;
    bool has_noise = false;
    NoiseParams noise;        // valid only when has_noise
    std::uint64_t stream_id = 0;
};

struct Sample {
    std::vector<double> features;
    std::vector<double> target;  // (theta0, theta1) or (theta0, theta1, sigma, rho)
    SampleMeta meta;
};

// Per-coordinate standardization parameters for features and targets.
// Zero-variance coordinates get sd = 1.
struct Scaler {
    std::vector<double> feature_mean, feature_sd;
    std::vector<double> target_mean, target_sd;
};

struct DatasetProvenance {
    std::uint64_t seed = 0;
    PriorSpec prior;
    NoisePrior noise_prior;
    SimConstants consts;
    IntegrateOptions integrate;
    std::uint64_t noise_pool_seed = 0;
    std::uint32_t noise_pool_size = 100;
};

struct Dataset {
    std::vector<Sample> samples;
    FeatureKind feature_kind = FeatureKind::Time;
    bool noise_applied = false;
    std::optional<Scaler> scaler;
    DatasetProvenance provenance;

    std::size_t size() const { return samples.size(); }
    std::size_t feature_len() const { return samples.empty() ? 0 : samples[0].features.size(); }
    std::size_t target_len() const { return samples.empty() ? 0 : samples[0].target.size(); }
};

struct BuildOptions {
    std::size_t n = 0;
    FeatureKind kind = FeatureKind::Time;
    bool with_noise = false;
    bool joint_targets = false;  // requires with_noise
    std::uint64_t seed = 0;
    std::uint64_t noise_pool_seed = 0;
    std::uint32_t noise_pool_size = 100;
    IntegrateOptions integrate;
    Exec exec = Exec::Parallel;
    int max_attempts = 16;  // substream redraws per sample before giving up
};

// Prior draw -> ODE solve -> optional AR(1) noise -> features. Sample i uses
// substream i of the dataset seed, so the build is order- and
// thread-independent; the (sigma, rho) pool is drawn from its own seed and
// assigned round-robin over sample indices.
Dataset build_dataset(const BuildOptions& opts, const PriorSpec& prior,
                      const NoisePrior& noise_prior, const SimConstants& consts);

// The (sigma, rho) pool used by build_dataset, exposed for tests/tools.
std::vector<NoiseParams> noise_pool(std::uint64_t pool_seed, std::uint32_t pool_size,
                                    const NoisePrior& prior);

// Splits every time-series sample into two halves, doubling the sample
// count. Targets and meta are duplicated.
Dataset split_halves(const Dataset& ds);

// Emits one sample per (input sample, window) pair; windows are half-open
// index intervals of equal length inside [0, feature_len).
Dataset extract_windows(const Dataset& ds,
                        const std::vector<std::pair<std::size_t, std::size_t>>& windows);

// Recomputes features of a time-series dataset under another feature kind
// (e.g. Fourier magnitudes of each stored series). Targets and meta are kept.
Dataset with_feature_kind(const Dataset& time_ds, FeatureKind kind);

// Samples at the given indices, in the given order.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

Scaler fit_scaler(const Dataset& ds);
Dataset apply_scaler(const Scaler& s, Dataset ds);
Dataset invert_scaler(const Scaler& s, Dataset ds);
std::vector<double> apply_scaler_target(const Scaler& s, const std::vector<double>& target);
std::vector<double> invert_scaler_target(const Scaler& s, const std::vector<double>& target);

// Binary container (magic "FHNDS1"), bit-exact floats, with scaler and
// provenance appended after the sample records. Loading a truncated or
// foreign file throws; no partial datasets.
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Interoperability export: one row per sample, targets then features.
void write_dataset_csv(const std::string& path, const Dataset& ds);

} // namespace fhn
