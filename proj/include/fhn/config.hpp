#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fhn/dataset.hpp"
#include "fhn/errors.hpp"
#include "fhn/fhn_model.hpp"
#include "fhn/stochastic.hpp"

namespace fhn {

// Flat key-value experiment configuration with one section per module.
// Defaults reproduce the reference settings (N=1000, M=2000, 2000 validation
// samples, N_t=1000, lr=0.002, batch 32, 200/50 epochs, kernel 3 stride 2,
// average pooling 2/2, no padding, two trailing Dense{32} in the CNN).
struct ExperimentConfig {
    PriorSpec prior;
    NoisePrior noise_prior;
    SimConstants consts;
    IntegrateOptions integrate;
    double spike_threshold = 1.5;

    std::size_t n_train = 1000;
    std::size_t n_valid = 2000;
    std::size_t n_test = 2000;
    FeatureKind feature = FeatureKind::Time;
    bool with_noise = false;
    bool joint = false;
    std::uint64_t seed_train = 1001;
    std::uint64_t seed_valid = 2002;
    std::uint64_t seed_test = 3003;
    std::uint64_t seed_noise_pool = 4004;
    std::uint32_t noise_pool_size = 100;
    std::vector<std::pair<std::size_t, std::size_t>> windows = {
        {30, 530}, {146, 646}, {174, 674}, {362, 862}, {370, 870}};

    std::string family = "cnn";  // dense | cnn
    int dense_layers = 4;
    int dense_units = 32;
    int cnn_blocks = 3;
    int cnn_filters = 8;
    std::uint64_t init_seed = 7;

    double lr = 0.002;
    int batch_size = 32;
    int epochs_clean = 200;
    int epochs_noisy = 50;
    std::uint64_t shuffle_seed = 42;
    std::uint64_t fold_seed = 5005;

    std::string out_dir = "out";
};

// Parses `[section]` / `key = value` text over the defaults; '#' starts a
// comment. Unknown sections or keys raise ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Applies one "section.key" = value entry (the CLI's --set override).
void apply_config_override(ExperimentConfig& cfg, const std::string& section_key,
                           const std::string& value);

// Canonical text form: every key in a fixed order. parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical form, 16 hex digits. Keys every emitted table
// row back to the exact configuration that produced it.
std::string config_hash(const ExperimentConfig& cfg);

} // namespace fhn
