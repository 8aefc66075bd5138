#include "fhn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fhn/csv.hpp"
#include "fhn/rng.hpp"

namespace fhn {

namespace {

void check_shapes(const TargetMatrix& truth, const TargetMatrix& pred) {
    if (truth.empty() || pred.empty()) throw EmptyInput("metrics: empty input");
    if (truth.size() != pred.size()) throw LengthMismatch("metrics: sample count mismatch");
    const std::size_t c = truth[0].size();
    if (c == 0) throw EmptyInput("metrics: zero-dimensional targets");
    for (std::size_t j = 0; j < truth.size(); ++j)
        if (truth[j].size() != c || pred[j].size() != c)
            throw LengthMismatch("metrics: coordinate count mismatch at sample " +
                                 std::to_string(j));
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

MseParts mse_decompose_flat(const std::vector<double>& truth, const std::vector<double>& pred) {
    if (truth.empty()) throw EmptyInput("mse_decompose_flat: empty input");
    if (truth.size() != pred.size())
        throw LengthMismatch("mse_decompose_flat: length mismatch");
    const double n = static_cast<double>(truth.size());

    double mt = 0.0, mp = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        mt += truth[j];
        mp += pred[j];
    }
    mt /= n;
    mp /= n;

    MseParts out;
    for (std::size_t j = 0; j < truth.size(); ++j) {
        const double d = truth[j] - pred[j];
        out.mse += d * d;
        const double dc = (truth[j] - mt) - (pred[j] - mp);
        out.c_mse += dc * dc;
    }
    out.mse /= n;
    out.c_mse /= n;
    out.squared_bias = (mt - mp) * (mt - mp);
    return out;
}

std::vector<MseParts> mse_decompose(const TargetMatrix& truth, const TargetMatrix& pred) {
    check_shapes(truth, pred);
    const std::size_t n_coords = truth[0].size();
    std::vector<MseParts> out(n_coords);
    std::vector<double> t(truth.size()), p(truth.size());
    for (std::size_t c = 0; c < n_coords; ++c) {
        for (std::size_t j = 0; j < truth.size(); ++j) {
            t[j] = truth[j][c];
            p[j] = pred[j][c];
        }
        out[c] = mse_decompose_flat(t, p);
    }
    return out;
}

double median_ape(const TargetMatrix& truth, const TargetMatrix& pred) {
    check_shapes(truth, pred);
    std::vector<double> apes;
    apes.reserve(truth.size() * truth[0].size());
    for (std::size_t j = 0; j < truth.size(); ++j)
        for (std::size_t c = 0; c < truth[j].size(); ++c) {
            if (truth[j][c] == 0.0)
                throw ZeroTruthValue("median_ape: zero truth at sample " + std::to_string(j) +
                                     " coordinate " + std::to_string(c));
            apes.push_back(std::abs(truth[j][c] - pred[j][c]) / std::abs(truth[j][c]));
        }
    return median_of(std::move(apes));
}

MedianApeResult median_ape_excluding_zeros(const TargetMatrix& truth, const TargetMatrix& pred) {
    check_shapes(truth, pred);
    MedianApeResult res;
    std::vector<double> apes;
    apes.reserve(truth.size() * truth[0].size());
    for (std::size_t j = 0; j < truth.size(); ++j)
        for (std::size_t c = 0; c < truth[j].size(); ++c) {
            if (truth[j][c] == 0.0) {
                ++res.excluded;
                continue;
            }
            apes.push_back(std::abs(truth[j][c] - pred[j][c]) / std::abs(truth[j][c]));
        }
    if (apes.empty()) throw EmptyInput("median_ape: all pairs excluded");
    res.value = median_of(std::move(apes));
    return res;
}

namespace {

// Per-coordinate residual and total sums of squares.
void r2_sums(const TargetMatrix& truth, const TargetMatrix& pred, std::vector<double>& ss_res,
             std::vector<double>& ss_tot) {
    const std::size_t n_coords = truth[0].size();
    const double n = static_cast<double>(truth.size());
    std::vector<double> mean(n_coords, 0.0);
    for (const auto& row : truth)
        for (std::size_t c = 0; c < n_coords; ++c) mean[c] += row[c];
    for (std::size_t c = 0; c < n_coords; ++c) mean[c] /= n;

    ss_res.assign(n_coords, 0.0);
    ss_tot.assign(n_coords, 0.0);
    for (std::size_t j = 0; j < truth.size(); ++j)
        for (std::size_t c = 0; c < n_coords; ++c) {
            const double r = truth[j][c] - pred[j][c];
            const double t = truth[j][c] - mean[c];
            ss_res[c] += r * r;
            ss_tot[c] += t * t;
        }
}

} // namespace

std::vector<double> r_squared(const TargetMatrix& truth, const TargetMatrix& pred) {
    check_shapes(truth, pred);
    if (truth.size() < 2) throw EmptyInput("r_squared: need at least 2 samples");
    std::vector<double> ss_res, ss_tot;
    r2_sums(truth, pred, ss_res, ss_tot);
    std::vector<double> out(ss_res.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        if (ss_tot[c] == 0.0)
            throw ConstantTruth("r_squared: constant truth in coordinate " + std::to_string(c));
        out[c] = 1.0 - ss_res[c] / ss_tot[c];
    }
    return out;
}

double r_squared_pooled(const TargetMatrix& truth, const TargetMatrix& pred) {
    check_shapes(truth, pred);
    if (truth.size() < 2) throw EmptyInput("r_squared_pooled: need at least 2 samples");
    std::vector<double> ss_res, ss_tot;
    r2_sums(truth, pred, ss_res, ss_tot);
    double num = 0.0, den = 0.0;
    for (std::size_t c = 0; c < ss_res.size(); ++c) {
        num += ss_res[c];
        den += ss_tot[c];
    }
    if (den == 0.0) throw ConstantTruth("r_squared_pooled: constant truth");
    return 1.0 - num / den;
}

EvalReport evaluate_predictions(const TargetMatrix& truth, const TargetMatrix& pred,
                                const std::string& dataset_id, const std::string& model_id) {
    check_shapes(truth, pred);
    EvalReport r;
    r.n_samples = truth.size();
    r.n_coords = truth[0].size();
    r.dataset_id = dataset_id;
    r.model_id = model_id;

    r.per_coordinate = mse_decompose(truth, pred);
    r.per_coordinate_r2 = r_squared(truth, pred);
    r.r2 = r_squared_pooled(truth, pred);

    // Aggregate MSE parts over the flattened (sample, coordinate) pairs.
    std::vector<double> t_flat, p_flat;
    t_flat.reserve(r.n_samples * r.n_coords);
    p_flat.reserve(r.n_samples * r.n_coords);
    for (std::size_t j = 0; j < truth.size(); ++j)
        for (std::size_t c = 0; c < r.n_coords; ++c) {
            t_flat.push_back(truth[j][c]);
            p_flat.push_back(pred[j][c]);
        }
    const MseParts agg = mse_decompose_flat(t_flat, p_flat);
    r.mse = agg.mse;
    r.squared_bias = agg.squared_bias;
    r.c_mse = agg.c_mse;

    const MedianApeResult ape = median_ape_excluding_zeros(truth, pred);
    r.median_ape = ape.value;
    r.ape_excluded = ape.excluded;

    r.per_coordinate_median_ape.resize(r.n_coords);
    std::vector<std::vector<double>> tc(truth.size()), pc(truth.size());
    for (std::size_t c = 0; c < r.n_coords; ++c) {
        for (std::size_t j = 0; j < truth.size(); ++j) {
            tc[j] = {truth[j][c]};
            pc[j] = {pred[j][c]};
        }
        r.per_coordinate_median_ape[c] = median_ape_excluding_zeros(tc, pc).value;
    }
    return r;
}

std::string eval_report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["mse"] = r.mse;
    j["squared_bias"] = r.squared_bias;
    j["c_mse"] = r.c_mse;
    j["median_ape"] = r.median_ape;
    j["r2"] = r.r2;
    j["ape_excluded"] = r.ape_excluded;
    j["n_samples"] = r.n_samples;
    j["n_coords"] = r.n_coords;
    j["dataset_id"] = r.dataset_id;
    j["model_id"] = r.model_id;
    j["per_coordinate"] = nlohmann::json::array();
    for (std::size_t c = 0; c < r.n_coords; ++c) {
        nlohmann::json pc;
        pc["mse"] = r.per_coordinate[c].mse;
        pc["squared_bias"] = r.per_coordinate[c].squared_bias;
        pc["c_mse"] = r.per_coordinate[c].c_mse;
        pc["median_ape"] = r.per_coordinate_median_ape[c];
        pc["r2"] = r.per_coordinate_r2[c];
        j["per_coordinate"].push_back(pc);
    }
    return j.dump(2);
}

void write_eval_report_json(const std::string& path, const EvalReport& r) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << eval_report_to_json(r) << '\n';
    if (!os) throw IoError("write failed: " + path);
}

void write_eval_report_csv(const std::string& path, const EvalReport& r) {
    CsvTable t;
    t.header = {"mse", "squared_bias", "c_mse", "median_ape", "r2", "ape_excluded",
                "n_samples", "n_coords", "dataset_id", "model_id"};
    t.rows.push_back({format_double(r.mse), format_double(r.squared_bias),
                      format_double(r.c_mse), format_double(r.median_ape), format_double(r.r2),
                      std::to_string(r.ape_excluded), std::to_string(r.n_samples),
                      std::to_string(r.n_coords), r.dataset_id, r.model_id});
    t.write(path);
}

std::vector<std::size_t> FoldPlan::fold_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::complement_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
        if (assignment[i] != fold) out.push_back(i);
    return out;
}

FoldPlan kfold(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2 || static_cast<std::size_t>(k) > n)
        throw InvalidK("kfold: need 2 <= k <= n, got k=" + std::to_string(k) +
                       " n=" + std::to_string(n));

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    RngStream rng(seed, 0);
    for (std::size_t i = n; i-- > 1;) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(perm[i], perm[j]);
    }

    FoldPlan plan;
    plan.k = k;
    plan.assignment.assign(n, -1);
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t pos = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t len = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
        for (std::size_t i = 0; i < len; ++i) plan.assignment[perm[pos++]] = f;
    }
    return plan;
}

} // namespace fhn
