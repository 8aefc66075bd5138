#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fhn/config.hpp"
#include "fhn/csv.hpp"
#include "fhn/dataset.hpp"
#include "fhn/metrics.hpp"
#include "fhn/neuralnet.hpp"

namespace fhn {

// ---------------------------------------------------------------------------
// Building blocks shared by the experiment drivers

// Dataset builders wired to the configuration's seeds; the test set comes
// from its dedicated seed so it stays fixed across experiments.
Dataset build_train_set(const ExperimentConfig& cfg, std::size_t n, FeatureKind kind,
                        bool with_noise, bool joint, Exec exec = Exec::Parallel);
Dataset build_valid_set(const ExperimentConfig& cfg, FeatureKind kind, bool with_noise,
                        bool joint, Exec exec = Exec::Parallel);
Dataset build_test_set(const ExperimentConfig& cfg, FeatureKind kind, bool with_noise,
                       bool joint, Exec exec = Exec::Parallel);

// Network from the configuration's [network] section for a given input size.
NetworkSpec network_from_config(const ExperimentConfig& cfg, int input_len, int output_len);
NetworkSpec network_for_family(const ExperimentConfig& cfg, const std::string& family,
                               int input_len, int output_len);

struct FitOutcome {
    Network net;
    Scaler scaler;  // fitted on the training set only
    std::vector<EpochStats> history;
};

// Standardizes train/valid with a scaler fitted on train, then trains.
FitOutcome fit_reconstruction(const Dataset& train_raw, const Dataset& valid_raw,
                              const NetworkSpec& spec, std::uint64_t init_seed,
                              const TrainConfig& cfg);

TargetMatrix truth_targets(const Dataset& raw);

// Predictions mapped back to original units via the training scaler.
TargetMatrix predict_original_units(const Network& net, const Scaler& scaler,
                                    const Dataset& test_raw, Exec exec = Exec::Parallel);

// Train on (train_raw, valid_raw), evaluate on test_raw in original units.
EvalReport train_and_evaluate(const Dataset& train_raw, const Dataset& valid_raw,
                              const Dataset& test_raw, const NetworkSpec& spec,
                              std::uint64_t init_seed, const TrainConfig& cfg,
                              const std::string& dataset_id = "",
                              const std::string& model_id = "");

// Discretized negative-log-posterior landscape on a theta grid:
//   0.5*dt*sum_i ((d_i - u_theta(t_i))/sigma_noise)^2
// + 0.5*sum_c ((theta_c - prior_mean_c)/prior_sd_c)^2
// with either term optional. Missing cells (integration failures) hold NaN.
struct LossGrid {
    std::vector<double> theta0s;
    std::vector<double> theta1s;
    std::vector<double> loss;  // row-major, NaN = missing

    double at(std::size_t i0, std::size_t i1) const { return loss[i0 * theta1s.size() + i1]; }
    // Grid argmin over non-missing cells.
    std::pair<std::size_t, std::size_t> argmin() const;
};

LossGrid loss_grid(const std::vector<double>& data, const SimConstants& consts,
                   const IntegrateOptions& integrate, std::pair<double, double> theta0_range,
                   std::pair<double, double> theta1_range, int resolution0, int resolution1,
                   double sigma_noise, bool use_misfit, bool use_prior, const PriorSpec& prior,
                   Exec exec = Exec::Parallel);

void write_loss_grid_csv(const std::string& path, const LossGrid& grid);

// ---------------------------------------------------------------------------
// Experiment drivers. Each one writes its artifacts (plus manifest.json)
// under <out_dir>/<experiment>/<config-hash>/ and also returns its results.
// Outputs are deterministic functions of the configuration: a rerun
// overwrites byte-identical files.

// Directory for a given experiment under the current config (created).
std::string experiment_dir(const ExperimentConfig& cfg, const std::string& experiment);
void write_manifest(const ExperimentConfig& cfg, const std::string& experiment,
                    const std::vector<std::string>& outputs);

struct SimulateResult {
    TimeSeries series;
    std::optional<std::vector<double>> noisy;
    std::string csv_path;
};
SimulateResult run_simulate(const ExperimentConfig& cfg, const ThetaPair& theta, bool with_noise,
                            const NoiseParams& noise, std::uint64_t noise_seed);

// role: "train" | "valid" | "test"; returns the dataset file path.
std::string run_gen_data(const ExperimentConfig& cfg, const std::string& role, bool export_csv);

void save_scaler_json(const std::string& path, const Scaler& s);
Scaler load_scaler_json(const std::string& path);

struct TrainRunResult {
    std::string model_path;
    std::string scaler_path;
    std::string history_path;
    FitOutcome fit;
};
TrainRunResult run_train(const ExperimentConfig& cfg);

EvalReport run_evaluate(const ExperimentConfig& cfg, const std::string& model_path,
                        const std::string& scaler_path, const std::string& dataset_path);

struct SweepCell {
    std::string family;
    int depth = 0;  // dense layers or conv blocks
    int width = 0;  // units or base filters
    std::int64_t n_params = 0;
    bool failed = false;
    std::string error;
    EvalReport report;
};
std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::string& family,
                                 const std::vector<int>& depths, const std::vector<int>& widths);
CsvTable sweep_table(const ExperimentConfig& cfg, const std::vector<SweepCell>& cells);

struct NoiseStudyRow {
    std::string scenario;  // clean-clean | clean-noisy | noisy-noisy
    std::size_t n_train = 0;
    bool failed = false;
    std::string error;
    EvalReport report;
};
std::vector<NoiseStudyRow> run_noise_study(const ExperimentConfig& cfg, const std::string& family,
                                           const std::vector<std::size_t>& train_sizes,
                                           const std::vector<std::string>& scenarios);

struct WindowStudyRow {
    std::string family;
    FeatureKind kind = FeatureKind::Time;
    bool failed = false;
    std::string error;
    EvalReport report;
};
std::vector<WindowStudyRow> run_window_study(const ExperimentConfig& cfg,
                                             const std::vector<std::string>& families,
                                             const std::vector<FeatureKind>& kinds);

struct JointRow {
    std::size_t n_train = 0;
    FeatureKind kind = FeatureKind::Time;
    bool failed = false;
    std::string error;
    EvalReport report;  // per-coordinate order: theta0, theta1, sigma, rho
};
std::vector<JointRow> run_joint(const ExperimentConfig& cfg,
                                const std::vector<std::size_t>& train_sizes,
                                const std::vector<FeatureKind>& kinds);

struct ResimulateRow {
    int percentile = 0;
    std::size_t sample_index = 0;
    double param_mse = 0.0;
    bool failed = false;       // re-integration at the predicted theta failed
    double ts_squared_bias = 0.0;
    double ts_c_mse = 0.0;
    std::string series_path;
};
std::vector<ResimulateRow> run_resimulate(const ExperimentConfig& cfg, const Network& net,
                                          const Scaler& scaler, const Dataset& test_raw,
                                          const std::vector<int>& percentiles);

// Same, with the predictions supplied directly (original units).
std::vector<ResimulateRow> resimulate_from_predictions(const ExperimentConfig& cfg,
                                                       const TargetMatrix& pred,
                                                       const Dataset& test_raw,
                                                       const std::vector<int>& percentiles);

struct CrossvalRow {
    std::uint64_t weight_seed = 0;
    double mean_squared_bias = 0.0, std_squared_bias = 0.0;
    double mean_c_mse = 0.0, std_c_mse = 0.0;
    double mean_median_ape = 0.0, std_median_ape = 0.0;
    double mean_r2 = 0.0, std_r2 = 0.0;
};
std::vector<CrossvalRow> run_crossval(const ExperimentConfig& cfg, const std::string& family,
                                      int k, int n_seeds);

SpikeGrid run_spike_grid(const ExperimentConfig& cfg, int resolution);

struct LossGridRun {
    LossGrid grid;
    ThetaPair data_theta;  // the theta that generated the data series
    std::string csv_path;
};
LossGridRun run_loss_grid(const ExperimentConfig& cfg, const ThetaPair& data_theta,
                          bool with_noise, int resolution, double sigma_noise, bool use_prior);

} // namespace fhn
