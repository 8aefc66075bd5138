#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fhn/errors.hpp"

namespace fhn {

// truth/pred are sample-major: truth[j][c] is coordinate c of sample j.
using TargetMatrix = std::vector<std::vector<double>>;

struct MseParts {
    double mse = 0.0;
    double squared_bias = 0.0;
    double c_mse = 0.0;
};

// MSE = squared bias + centered MSE over a scalar sequence of paired values.
MseParts mse_decompose_flat(const std::vector<double>& truth, const std::vector<double>& pred);

// Per-coordinate decomposition; index c of the result is coordinate c.
std::vector<MseParts> mse_decompose(const TargetMatrix& truth, const TargetMatrix& pred);

// Median over all (sample, coordinate) pairs of |t - p| / |t|. Throws
// ZeroTruthValue if any truth coordinate is exactly zero.
double median_ape(const TargetMatrix& truth, const TargetMatrix& pred);

// Same, but zero-truth pairs are dropped and counted instead of throwing.
struct MedianApeResult {
    double value = 0.0;
    std::size_t excluded = 0;
};
MedianApeResult median_ape_excluding_zeros(const TargetMatrix& truth, const TargetMatrix& pred);

// 1 - SS_res/SS_tot per coordinate. Throws ConstantTruth when a coordinate
// of the truth is constant.
std::vector<double> r_squared(const TargetMatrix& truth, const TargetMatrix& pred);

// Pooled variant: numerator and denominator summed over coordinates (each
// coordinate centered at its own mean).
double r_squared_pooled(const TargetMatrix& truth, const TargetMatrix& pred);

struct EvalReport {
    // Aggregates pool all (sample, coordinate) pairs; Median-APE drops
    // zero-truth pairs and reports how many.
    double mse = 0.0;
    double squared_bias = 0.0;
    double c_mse = 0.0;
    double median_ape = 0.0;
    double r2 = 0.0;
    std::size_t ape_excluded = 0;
    std::size_t n_samples = 0;
    std::size_t n_coords = 0;
    std::vector<MseParts> per_coordinate;
    std::vector<double> per_coordinate_r2;
    std::vector<double> per_coordinate_median_ape;
    std::string dataset_id;
    std::string model_id;
};

EvalReport evaluate_predictions(const TargetMatrix& truth, const TargetMatrix& pred,
                                const std::string& dataset_id = "",
                                const std::string& model_id = "");

std::string eval_report_to_json(const EvalReport& r);
void write_eval_report_json(const std::string& path, const EvalReport& r);
// One-row CSV (with header) for table assembly.
void write_eval_report_csv(const std::string& path, const EvalReport& r);

struct FoldPlan {
    int k = 0;
    std::vector<int> assignment;  // sample index -> fold id in [0, k)

    std::vector<std::size_t> fold_indices(int fold) const;
    std::vector<std::size_t> complement_indices(int fold) const;
};

// Seeded random permutation chunked into k near-equal contiguous folds
// (sizes differ by at most one).
FoldPlan kfold(std::size_t n, int k, std::uint64_t seed);

} // namespace fhn
