#include "fhn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "fhn/csv.hpp"
#include "fhn/fourier.hpp"

namespace fs = std::filesystem;

namespace fhn {

namespace {

BuildOptions base_build_options(const ExperimentConfig& cfg, std::size_t n, FeatureKind kind,
                                bool with_noise, bool joint, std::uint64_t seed, Exec exec) {
    BuildOptions o;
    o.n = n;
    o.kind = kind;
    o.with_noise = with_noise;
    o.joint_targets = joint;
    o.seed = seed;
    o.noise_pool_seed = cfg.seed_noise_pool;
    o.noise_pool_size = cfg.noise_pool_size;
    o.integrate = cfg.integrate;
    o.exec = exec;
    return o;
}

} // namespace

Dataset build_train_set(const ExperimentConfig& cfg, std::size_t n, FeatureKind kind,
                        bool with_noise, bool joint, Exec exec) {
    return build_dataset(base_build_options(cfg, n, kind, with_noise, joint, cfg.seed_train, exec),
                         cfg.prior, cfg.noise_prior, cfg.consts);
}

Dataset build_valid_set(const ExperimentConfig& cfg, FeatureKind kind, bool with_noise,
                        bool joint, Exec exec) {
    return build_dataset(
        base_build_options(cfg, cfg.n_valid, kind, with_noise, joint, cfg.seed_valid, exec),
        cfg.prior, cfg.noise_prior, cfg.consts);
}

Dataset build_test_set(const ExperimentConfig& cfg, FeatureKind kind, bool with_noise, bool joint,
                       Exec exec) {
    return build_dataset(
        base_build_options(cfg, cfg.n_test, kind, with_noise, joint, cfg.seed_test, exec),
        cfg.prior, cfg.noise_prior, cfg.consts);
}

NetworkSpec network_for_family(const ExperimentConfig& cfg, const std::string& family,
                               int input_len, int output_len) {
    if (family == "dense")
        return dense_network(input_len, cfg.dense_layers, cfg.dense_units, output_len);
    if (family == "cnn")
        return cnn_network(input_len, cfg.cnn_blocks, cfg.cnn_filters, output_len);
    throw ConfigError("unknown network family: " + family);
}

NetworkSpec network_from_config(const ExperimentConfig& cfg, int input_len, int output_len) {
    return network_for_family(cfg, cfg.family, input_len, output_len);
}

FitOutcome fit_reconstruction(const Dataset& train_raw, const Dataset& valid_raw,
                              const NetworkSpec& spec, std::uint64_t init_seed,
                              const TrainConfig& cfg) {
    FitOutcome out;
    out.scaler = fit_scaler(train_raw);
    const Dataset train_scaled = apply_scaler(out.scaler, train_raw);
    Dataset valid_scaled;
    if (!valid_raw.samples.empty()) valid_scaled = apply_scaler(out.scaler, valid_raw);

    Network net = init_weights(spec, init_seed);
    TrainResult res = train(std::move(net), train_scaled, valid_scaled, cfg);
    out.net = std::move(res.net);
    out.history = std::move(res.history);
    return out;
}

TargetMatrix truth_targets(const Dataset& raw) {
    TargetMatrix m(raw.samples.size());
    for (std::size_t i = 0; i < raw.samples.size(); ++i) m[i] = raw.samples[i].target;
    return m;
}

TargetMatrix predict_original_units(const Network& net, const Scaler& scaler,
                                    const Dataset& test_raw, Exec exec) {
    const Dataset scaled = apply_scaler(scaler, test_raw);
    TargetMatrix pred = predict(net, scaled, exec);
    for (auto& row : pred) row = invert_scaler_target(scaler, row);
    return pred;
}

EvalReport train_and_evaluate(const Dataset& train_raw, const Dataset& valid_raw,
                              const Dataset& test_raw, const NetworkSpec& spec,
                              std::uint64_t init_seed, const TrainConfig& cfg,
                              const std::string& dataset_id, const std::string& model_id) {
    const FitOutcome fit = fit_reconstruction(train_raw, valid_raw, spec, init_seed, cfg);
    const TargetMatrix pred = predict_original_units(fit.net, fit.scaler, test_raw, cfg.exec);
    return evaluate_predictions(truth_targets(test_raw), pred, dataset_id, model_id);
}

// ---------------------------------------------------------------------------
// Loss landscape

std::pair<std::size_t, std::size_t> LossGrid::argmin() const {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = 0;
    bool found = false;
    for (std::size_t i = 0; i < loss.size(); ++i) {
        if (std::isnan(loss[i])) continue;
        if (!found || loss[i] < best) {
            best = loss[i];
            best_idx = i;
            found = true;
        }
    }
    if (!found) throw Error("loss grid: all cells missing");
    return {best_idx / theta1s.size(), best_idx % theta1s.size()};
}

LossGrid loss_grid(const std::vector<double>& data, const SimConstants& consts,
                   const IntegrateOptions& integrate_opts,
                   std::pair<double, double> theta0_range, std::pair<double, double> theta1_range,
                   int resolution0, int resolution1, double sigma_noise, bool use_misfit,
                   bool use_prior, const PriorSpec& prior, Exec exec) {
    if (resolution0 < 2 || resolution1 < 2)
        throw Error("loss_grid: resolution must be >= 2 per axis");
    if (use_misfit) {
        if (data.size() != static_cast<std::size_t>(consts.grid_points()))
            throw LengthMismatch("loss_grid: data length does not match the output grid");
        if (!(sigma_noise > 0.0)) throw Error("loss_grid: sigma_noise must be positive");
    }

    LossGrid grid;
    grid.theta0s.resize(static_cast<std::size_t>(resolution0));
    grid.theta1s.resize(static_cast<std::size_t>(resolution1));
    for (int i = 0; i < resolution0; ++i)
        grid.theta0s[static_cast<std::size_t>(i)] =
            theta0_range.first +
            (theta0_range.second - theta0_range.first) * i / (resolution0 - 1);
    for (int j = 0; j < resolution1; ++j)
        grid.theta1s[static_cast<std::size_t>(j)] =
            theta1_range.first +
            (theta1_range.second - theta1_range.first) * j / (resolution1 - 1);

    const std::size_t total = grid.theta0s.size() * grid.theta1s.size();
    grid.loss.assign(total, std::numeric_limits<double>::quiet_NaN());

    auto eval_cell = [&](std::size_t idx) {
        const std::size_t i0 = idx / grid.theta1s.size();
        const std::size_t i1 = idx % grid.theta1s.size();
        const ThetaPair th{grid.theta0s[i0], grid.theta1s[i1]};
        double value = 0.0;
        if (use_misfit) {
            try {
                const TimeSeries sim = integrate(th, consts, integrate_opts);
                double ss = 0.0;
                for (std::size_t i = 0; i < data.size(); ++i) {
                    const double r = (data[i] - sim.values[i]) / sigma_noise;
                    ss += r * r;
                }
                value += 0.5 * consts.dt_out * ss;
            } catch (const Error&) {
                return;  // leave NaN
            }
        }
        if (use_prior) {
            const double r0 = (th.theta0 - prior.mean0) / prior.sd0;
            const double r1 = (th.theta1 - prior.mean1) / prior.sd1;
            value += 0.5 * (r0 * r0 + r1 * r1);
        }
        grid.loss[idx] = value;
    };

    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long idx = 0; idx < static_cast<long long>(total); ++idx)
            eval_cell(static_cast<std::size_t>(idx));
    } else {
        for (std::size_t idx = 0; idx < total; ++idx) eval_cell(idx);
    }
    return grid;
}

void write_loss_grid_csv(const std::string& path, const LossGrid& grid) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "theta0,theta1,loss\n";
    for (std::size_t i0 = 0; i0 < grid.theta0s.size(); ++i0)
        for (std::size_t i1 = 0; i1 < grid.theta1s.size(); ++i1)
            os << format_double(grid.theta0s[i0]) << ',' << format_double(grid.theta1s[i1]) << ','
               << format_double(grid.at(i0, i1)) << '\n';
    if (!os) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Driver plumbing

std::string experiment_dir(const ExperimentConfig& cfg, const std::string& experiment) {
    const fs::path dir = fs::path(cfg.out_dir) / experiment / config_hash(cfg);
    fs::create_directories(dir);
    return dir.string();
}

void write_manifest(const ExperimentConfig& cfg, const std::string& experiment,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["config_hash"] = config_hash(cfg);
    j["config"] = serialize_config(cfg);
    j["outputs"] = outputs;
    const fs::path path = fs::path(experiment_dir(cfg, experiment)) / "manifest.json";
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path.string());
    os << j.dump(2) << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

namespace {

TrainConfig train_config(const ExperimentConfig& cfg, bool noisy_training) {
    TrainConfig t;
    t.epochs = noisy_training ? cfg.epochs_noisy : cfg.epochs_clean;
    t.batch_size = cfg.batch_size;
    t.lr = cfg.lr;
    t.shuffle_seed = cfg.shuffle_seed;
    return t;
}

} // namespace

void save_scaler_json(const std::string& path, const Scaler& s) {
    nlohmann::json j;
    j["feature_mean"] = s.feature_mean;
    j["feature_sd"] = s.feature_sd;
    j["target_mean"] = s.target_mean;
    j["target_sd"] = s.target_sd;
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << j.dump() << '\n';
    if (!os) throw IoError("write failed: " + path);
}

Scaler load_scaler_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open: " + path);
    nlohmann::json j;
    is >> j;
    Scaler s;
    s.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    s.feature_sd = j.at("feature_sd").get<std::vector<double>>();
    s.target_mean = j.at("target_mean").get<std::vector<double>>();
    s.target_sd = j.at("target_sd").get<std::vector<double>>();
    return s;
}

namespace {

std::string sanitize_csv(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

void write_scatter_csv(const std::string& path, const TargetMatrix& truth,
                       const TargetMatrix& pred) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "sample,coordinate,truth,prediction\n";
    for (std::size_t c = 0; c < truth[0].size(); ++c)
        for (std::size_t j = 0; j < truth.size(); ++j)
            os << j << ',' << c << ',' << format_double(truth[j][c]) << ','
               << format_double(pred[j][c]) << '\n';
    if (!os) throw IoError("write failed: " + path);
}

std::vector<std::string> report_columns() {
    return {"squared_bias", "c_mse", "median_ape", "r2", "ape_excluded"};
}

std::vector<std::string> report_fields(const EvalReport& r) {
    return {format_double(r.squared_bias), format_double(r.c_mse), format_double(r.median_ape),
            format_double(r.r2), std::to_string(r.ape_excluded)};
}

} // namespace

// ---------------------------------------------------------------------------
// simulate

SimulateResult run_simulate(const ExperimentConfig& cfg, const ThetaPair& theta, bool with_noise,
                            const NoiseParams& noise, std::uint64_t noise_seed) {
    SimulateResult res;
    res.series = integrate(theta, cfg.consts, cfg.integrate);
    if (with_noise) {
        RngStream rng(noise_seed, 0);
        std::vector<double> noisy = res.series.values;
        const std::vector<double> eta =
            ar1_path(rng, noise, cfg.consts.dt_out, noisy.size());
        for (std::size_t i = 0; i < noisy.size(); ++i) noisy[i] += eta[i];
        res.noisy = std::move(noisy);
    }
    const std::string dir = experiment_dir(cfg, "simulate");
    res.csv_path = (fs::path(dir) / "series.csv").string();
    write_series_csv(res.csv_path, res.series, res.noisy ? &*res.noisy : nullptr);
    write_manifest(cfg, "simulate", {"series.csv"});
    return res;
}

// ---------------------------------------------------------------------------
// gen-data

std::string run_gen_data(const ExperimentConfig& cfg, const std::string& role, bool export_csv) {
    Dataset ds;
    if (role == "train")
        ds = build_train_set(cfg, cfg.n_train, cfg.feature, cfg.with_noise, cfg.joint);
    else if (role == "valid")
        ds = build_valid_set(cfg, cfg.feature, cfg.with_noise, cfg.joint);
    else if (role == "test")
        ds = build_test_set(cfg, cfg.feature, cfg.with_noise, cfg.joint);
    else
        throw ConfigError("gen-data: role must be train, valid, or test");

    const std::string dir = experiment_dir(cfg, "gen-data");
    const std::string filename = role + ".fhnds";
    const std::string path = (fs::path(dir) / filename).string();
    save_dataset(path, ds);
    std::vector<std::string> outputs{filename};
    if (export_csv) {
        const std::string csv = role + ".csv";
        write_dataset_csv((fs::path(dir) / csv).string(), ds);
        outputs.push_back(csv);
    }
    write_manifest(cfg, "gen-data", outputs);
    return path;
}

// ---------------------------------------------------------------------------
// train / evaluate

TrainRunResult run_train(const ExperimentConfig& cfg) {
    const Dataset train_raw =
        build_train_set(cfg, cfg.n_train, cfg.feature, cfg.with_noise, cfg.joint);
    const Dataset valid_raw = build_valid_set(cfg, cfg.feature, cfg.with_noise, cfg.joint);

    const NetworkSpec spec = network_from_config(cfg, static_cast<int>(train_raw.feature_len()),
                                                 static_cast<int>(train_raw.target_len()));
    TrainRunResult res;
    res.fit = fit_reconstruction(train_raw, valid_raw, spec, cfg.init_seed,
                                 train_config(cfg, cfg.with_noise));

    const std::string dir = experiment_dir(cfg, "train");
    res.model_path = (fs::path(dir) / "model.fhnnn").string();
    res.scaler_path = (fs::path(dir) / "scaler.json").string();
    res.history_path = (fs::path(dir) / "history.csv").string();
    save_network(res.model_path, res.fit.net);
    save_scaler_json(res.scaler_path, res.fit.scaler);
    write_history_csv(res.history_path, res.fit.history);
    write_manifest(cfg, "train", {"model.fhnnn", "scaler.json", "history.csv"});
    return res;
}

EvalReport run_evaluate(const ExperimentConfig& cfg, const std::string& model_path,
                        const std::string& scaler_path, const std::string& dataset_path) {
    const Network net = load_network(model_path);
    const Scaler scaler = load_scaler_json(scaler_path);
    const Dataset test_raw = load_dataset(dataset_path);
    const TargetMatrix pred = predict_original_units(net, scaler, test_raw);
    const EvalReport report =
        evaluate_predictions(truth_targets(test_raw), pred,
                             fs::path(dataset_path).filename().string(),
                             fs::path(model_path).filename().string());
    const std::string dir = experiment_dir(cfg, "evaluate");
    write_eval_report_json((fs::path(dir) / "report.json").string(), report);
    write_eval_report_csv((fs::path(dir) / "report.csv").string(), report);
    write_manifest(cfg, "evaluate", {"report.json", "report.csv"});
    return report;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::string& family,
                                 const std::vector<int>& depths, const std::vector<int>& widths) {
    // Tables 3-6 are noise-free studies: datasets are built once, cells only
    // differ in architecture.
    const Dataset train_raw = build_train_set(cfg, cfg.n_train, cfg.feature, false, false);
    const Dataset valid_raw = build_valid_set(cfg, cfg.feature, false, false);
    const Dataset test_raw = build_test_set(cfg, cfg.feature, false, false);
    const int input_len = static_cast<int>(train_raw.feature_len());
    const int output_len = static_cast<int>(train_raw.target_len());

    std::vector<SweepCell> cells;
    for (const int depth : depths) {
        for (const int width : widths) {
            SweepCell cell;
            cell.family = family;
            cell.depth = depth;
            cell.width = width;
            try {
                const NetworkSpec spec = (family == "dense")
                                             ? dense_network(input_len, depth, width, output_len)
                                             : cnn_network(input_len, depth, width, output_len);
                cell.n_params = param_count(spec);
                cell.report = train_and_evaluate(train_raw, valid_raw, test_raw, spec,
                                                 cfg.init_seed, train_config(cfg, false));
            } catch (const Error& e) {
                cell.failed = true;
                cell.error = e.what();
            }
            cells.push_back(std::move(cell));
        }
    }

    const std::string dir = experiment_dir(cfg, "sweep");
    sweep_table(cfg, cells).write((fs::path(dir) / ("sweep_" + family + ".csv")).string());
    write_manifest(cfg, "sweep", {"sweep_" + family + ".csv"});
    return cells;
}

CsvTable sweep_table(const ExperimentConfig& cfg, const std::vector<SweepCell>& cells) {
    CsvTable t;
    t.header = {"family", "depth", "width", "n_params"};
    for (const auto& c : report_columns()) t.header.push_back(c);
    t.header.insert(t.header.end(), {"status", "error", "config_hash", "seed"});
    const std::string hash = config_hash(cfg);
    for (const SweepCell& c : cells) {
        std::vector<std::string> row{c.family, std::to_string(c.depth), std::to_string(c.width),
                                     std::to_string(c.n_params)};
        if (c.failed) {
            for (std::size_t i = 0; i < report_columns().size(); ++i) row.push_back("nan");
            row.push_back("failed");
            row.push_back(sanitize_csv(c.error));
        } else {
            for (const auto& f : report_fields(c.report)) row.push_back(f);
            row.push_back("ok");
            row.emplace_back();
        }
        row.push_back(hash);
        row.push_back(std::to_string(cfg.init_seed));
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------
// noise study

std::vector<NoiseStudyRow> run_noise_study(const ExperimentConfig& cfg, const std::string& family,
                                           const std::vector<std::size_t>& train_sizes,
                                           const std::vector<std::string>& scenarios) {
    const Dataset test_clean = build_test_set(cfg, cfg.feature, false, false);
    const Dataset test_noisy = build_test_set(cfg, cfg.feature, true, false);
    const int input_len = static_cast<int>(test_clean.feature_len());
    const int output_len = static_cast<int>(test_clean.target_len());
    const NetworkSpec spec = network_for_family(cfg, family, input_len, output_len);

    const std::string dir = experiment_dir(cfg, "noise-study");
    std::vector<std::string> outputs;
    std::vector<NoiseStudyRow> rows;

    for (const std::size_t n : train_sizes) {
        for (const std::string& scenario : scenarios) {
            bool train_noise = false, test_noise = false;
            if (scenario == "clean-clean") {
            } else if (scenario == "clean-noisy") {
                test_noise = true;
            } else if (scenario == "noisy-noisy") {
                train_noise = test_noise = true;
            } else {
                throw ConfigError("noise-study: unknown scenario " + scenario);
            }

            NoiseStudyRow row;
            row.scenario = scenario;
            row.n_train = n;
            try {
                const Dataset train_raw =
                    build_train_set(cfg, n, cfg.feature, train_noise, false);
                const Dataset valid_raw = build_valid_set(cfg, cfg.feature, train_noise, false);
                const Dataset& test_raw = test_noise ? test_noisy : test_clean;

                const FitOutcome fit = fit_reconstruction(train_raw, valid_raw, spec,
                                                          cfg.init_seed,
                                                          train_config(cfg, train_noise));
                const TargetMatrix pred = predict_original_units(fit.net, fit.scaler, test_raw);
                const TargetMatrix truth = truth_targets(test_raw);
                row.report = evaluate_predictions(truth, pred);

                const std::string scatter =
                    "scatter_" + scenario + "_N" + std::to_string(n) + ".csv";
                write_scatter_csv((fs::path(dir) / scatter).string(), truth, pred);
                outputs.push_back(scatter);
            } catch (const Error& e) {
                row.failed = true;
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }

    CsvTable t;
    t.header = {"scenario", "n_train"};
    for (const auto& c : report_columns()) t.header.push_back(c);
    t.header.insert(t.header.end(), {"status", "error", "config_hash", "seed"});
    const std::string hash = config_hash(cfg);
    for (const NoiseStudyRow& r : rows) {
        std::vector<std::string> row{r.scenario, std::to_string(r.n_train)};
        if (r.failed) {
            for (std::size_t i = 0; i < report_columns().size(); ++i) row.push_back("nan");
            row.push_back("failed");
            row.push_back(sanitize_csv(r.error));
        } else {
            for (const auto& f : report_fields(r.report)) row.push_back(f);
            row.push_back("ok");
            row.emplace_back();
        }
        row.push_back(hash);
        row.push_back(std::to_string(cfg.init_seed));
        t.rows.push_back(std::move(row));
    }
    t.write((fs::path(dir) / "noise_study.csv").string());
    outputs.push_back("noise_study.csv");
    write_manifest(cfg, "noise-study", outputs);
    return rows;
}

// ---------------------------------------------------------------------------
// window study

std::vector<WindowStudyRow> run_window_study(const ExperimentConfig& cfg,
                                             const std::vector<std::string>& families,
                                             const std::vector<FeatureKind>& kinds) {
    // Train on the two halves of each series (N doubles, length halves);
    // test on the overlapping windows of the full-length test series.
    const Dataset train_full = build_train_set(cfg, cfg.n_train, FeatureKind::Time, false, false);
    const Dataset valid_full = build_valid_set(cfg, FeatureKind::Time, false, false);
    const Dataset test_full = build_test_set(cfg, FeatureKind::Time, false, false);

    const Dataset train_halves = split_halves(train_full);
    const Dataset valid_halves = split_halves(valid_full);
    const Dataset test_windows = extract_windows(test_full, cfg.windows);

    std::vector<WindowStudyRow> rows;
    for (const std::string& family : families) {
        for (const FeatureKind kind : kinds) {
            WindowStudyRow row;
            row.family = family;
            row.kind = kind;
            try {
                const Dataset train_k = (kind == FeatureKind::Time)
                                            ? train_halves
                                            : with_feature_kind(train_halves, kind);
                const Dataset valid_k = (kind == FeatureKind::Time)
                                            ? valid_halves
                                            : with_feature_kind(valid_halves, kind);
                const Dataset test_k = (kind == FeatureKind::Time)
                                           ? test_windows
                                           : with_feature_kind(test_windows, kind);
                const NetworkSpec spec =
                    network_for_family(cfg, family, static_cast<int>(train_k.feature_len()),
                                       static_cast<int>(train_k.target_len()));
                row.report = train_and_evaluate(train_k, valid_k, test_k, spec, cfg.init_seed,
                                                train_config(cfg, false));
            } catch (const Error& e) {
                row.failed = true;
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }

    CsvTable t;
    t.header = {"family", "feature"};
    for (const auto& c : report_columns()) t.header.push_back(c);
    t.header.insert(t.header.end(), {"status", "error", "config_hash", "seed"});
    const std::string hash = config_hash(cfg);
    for (const WindowStudyRow& r : rows) {
        std::vector<std::string> row{r.family, feature_kind_name(r.kind)};
        if (r.failed) {
            for (std::size_t i = 0; i < report_columns().size(); ++i) row.push_back("nan");
            row.push_back("failed");
            row.push_back(sanitize_csv(r.error));
        } else {
            for (const auto& f : report_fields(r.report)) row.push_back(f);
            row.push_back("ok");
            row.emplace_back();
        }
        row.push_back(hash);
        row.push_back(std::to_string(cfg.init_seed));
        t.rows.push_back(std::move(row));
    }
    const std::string dir = experiment_dir(cfg, "window-study");
    t.write((fs::path(dir) / "window_study.csv").string());
    write_manifest(cfg, "window-study", {"window_study.csv"});
    return rows;
}

// ---------------------------------------------------------------------------
// joint ODE + noise estimation

std::vector<JointRow> run_joint(const ExperimentConfig& cfg,
                                const std::vector<std::size_t>& train_sizes,
                                const std::vector<FeatureKind>& kinds) {
    const Dataset test_time = build_test_set(cfg, FeatureKind::Time, true, true);
    const Dataset valid_time = build_valid_set(cfg, FeatureKind::Time, true, true);

    std::vector<JointRow> rows;
    for (const std::size_t n : train_sizes) {
        const Dataset train_time = build_train_set(cfg, n, FeatureKind::Time, true, true);
        for (const FeatureKind kind : kinds) {
            JointRow row;
            row.n_train = n;
            row.kind = kind;
            try {
                const Dataset train_k =
                    (kind == FeatureKind::Time) ? train_time : with_feature_kind(train_time, kind);
                const Dataset valid_k =
                    (kind == FeatureKind::Time) ? valid_time : with_feature_kind(valid_time, kind);
                const Dataset test_k =
                    (kind == FeatureKind::Time) ? test_time : with_feature_kind(test_time, kind);
                const NetworkSpec spec = network_from_config(
                    cfg, static_cast<int>(train_k.feature_len()), 4);
                row.report = train_and_evaluate(train_k, valid_k, test_k, spec, cfg.init_seed,
                                                train_config(cfg, true));
            } catch (const Error& e) {
                row.failed = true;
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }

    CsvTable t;
    t.header = {"n_train", "feature"};
    const char* coords[4] = {"theta0", "theta1", "sigma", "rho"};
    for (const char* c : coords) {
        t.header.push_back(std::string("median_ape_") + c);
        t.header.push_back(std::string("r2_") + c);
    }
    t.header.insert(t.header.end(), {"status", "error", "config_hash", "seed"});
    const std::string hash = config_hash(cfg);
    for (const JointRow& r : rows) {
        std::vector<std::string> row{std::to_string(r.n_train), feature_kind_name(r.kind)};
        if (r.failed) {
            for (int i = 0; i < 8; ++i) row.push_back("nan");
            row.push_back("failed");
            row.push_back(sanitize_csv(r.error));
        } else {
            for (std::size_t c = 0; c < 4; ++c) {
                row.push_back(format_double(r.report.per_coordinate_median_ape[c]));
                row.push_back(format_double(r.report.per_coordinate_r2[c]));
            }
            row.push_back("ok");
            row.emplace_back();
        }
        row.push_back(hash);
        row.push_back(std::to_string(cfg.init_seed));
        t.rows.push_back(std::move(row));
    }
    const std::string dir = experiment_dir(cfg, "joint");
    t.write((fs::path(dir) / "joint.csv").string());
    write_manifest(cfg, "joint", {"joint.csv"});
    return rows;
}

// ---------------------------------------------------------------------------
// re-simulation at predicted parameters

std::vector<ResimulateRow> run_resimulate(const ExperimentConfig& cfg, const Network& net,
                                          const Scaler& scaler, const Dataset& test_raw,
                                          const std::vector<int>& percentiles) {
    return resimulate_from_predictions(cfg, predict_original_units(net, scaler, test_raw),
                                       test_raw, percentiles);
}

std::vector<ResimulateRow> resimulate_from_predictions(const ExperimentConfig& cfg,
                                                       const TargetMatrix& pred,
                                                       const Dataset& test_raw,
                                                       const std::vector<int>& percentiles) {
    if (test_raw.feature_kind == FeatureKind::Fourier)
        throw Error("resimulate: test set must carry the time series (time or time_fourier)");
    const std::size_t n_t = static_cast<std::size_t>(test_raw.provenance.consts.grid_points());
    if (test_raw.feature_len() < n_t)
        throw LengthMismatch("resimulate: features shorter than the simulation grid");
    if (pred.size() != test_raw.samples.size())
        throw LengthMismatch("resimulate: prediction count mismatch");

    const TargetMatrix truth = truth_targets(test_raw);

    // Parameter MSE over the two ODE parameters, per sample.
    std::vector<double> mse(pred.size());
    for (std::size_t j = 0; j < pred.size(); ++j) {
        const double d0 = truth[j][0] - pred[j][0];
        const double d1 = truth[j][1] - pred[j][1];
        mse[j] = 0.5 * (d0 * d0 + d1 * d1);
    }
    std::vector<std::size_t> by_mse(pred.size());
    for (std::size_t j = 0; j < by_mse.size(); ++j) by_mse[j] = j;
    std::sort(by_mse.begin(), by_mse.end(),
              [&](std::size_t a, std::size_t b) { return mse[a] < mse[b]; });

    const std::string dir = experiment_dir(cfg, "resimulate");
    std::vector<std::string> outputs;
    std::vector<ResimulateRow> rows;

    for (const int p : percentiles) {
        if (p < 0 || p > 100) throw Error("resimulate: percentile out of range");
        // Nearest-rank percentile over samples ordered by parameter MSE.
        std::size_t rank = 0;
        if (p > 0)
            rank = static_cast<std::size_t>(
                       std::ceil(static_cast<double>(p) / 100.0 *
                                 static_cast<double>(by_mse.size()))) - 1;
        rank = std::min(rank, by_mse.size() - 1);
        const std::size_t idx = by_mse[rank];

        ResimulateRow row;
        row.percentile = p;
        row.sample_index = idx;
        row.param_mse = mse[idx];

        const std::vector<double> data(test_raw.samples[idx].features.begin(),
                                       test_raw.samples[idx].features.begin() +
                                           static_cast<long>(n_t));
        try {
            const ThetaPair theta_hat{pred[idx][0], pred[idx][1]};
            const TimeSeries sim = integrate(theta_hat, test_raw.provenance.consts,
                                             test_raw.provenance.integrate);
            const MseParts parts = mse_decompose_flat(data, sim.values);
            row.ts_squared_bias = parts.squared_bias;
            row.ts_c_mse = parts.c_mse;

            const std::string name = "resim_p" + std::to_string(p) + ".csv";
            const std::string path = (fs::path(dir) / name).string();
            std::ofstream os(path);
            if (!os) throw IoError("cannot open for writing: " + path);
            os << "t,data,simulated\n";
            for (std::size_t i = 0; i < n_t; ++i)
                os << format_double(static_cast<double>(i + 1) * sim.dt) << ','
                   << format_double(data[i]) << ',' << format_double(sim.values[i]) << '\n';
            row.series_path = path;
            outputs.push_back(name);
        } catch (const Error&) {
            row.failed = true;
        }
        rows.push_back(std::move(row));
    }

    CsvTable t;
    t.header = {"percentile", "sample", "param_mse", "ts_squared_bias", "ts_c_mse",
                "status", "config_hash", "seed"};
    const std::string hash = config_hash(cfg);
    for (const ResimulateRow& r : rows)
        t.rows.push_back({std::to_string(r.percentile), std::to_string(r.sample_index),
                          format_double(r.param_mse),
                          r.failed ? "nan" : format_double(r.ts_squared_bias),
                          r.failed ? "nan" : format_double(r.ts_c_mse),
                          r.failed ? "failed" : "ok", hash,
                          std::to_string(test_raw.provenance.seed)});
    t.write((fs::path(dir) / "resimulate.csv").string());
    outputs.push_back("resimulate.csv");
    write_manifest(cfg, "resimulate", outputs);
    return rows;
}

// ---------------------------------------------------------------------------
// cross-validation

std::vector<CrossvalRow> run_crossval(const ExperimentConfig& cfg, const std::string& family,
                                      int k, int n_seeds) {
    const Dataset full = build_train_set(cfg, cfg.n_train, cfg.feature, false, false);
    const FoldPlan plan = kfold(full.size(), k, cfg.fold_seed);
    const NetworkSpec spec =
        network_for_family(cfg, family, static_cast<int>(full.feature_len()),
                           static_cast<int>(full.target_len()));

    auto mean_std = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        double m = 0.0;
        for (const double x : v) m += x;
        m /= n;
        double s2 = 0.0;
        for (const double x : v) s2 += (x - m) * (x - m);
        const double sd = v.size() > 1 ? std::sqrt(s2 / (n - 1.0)) : 0.0;
        return std::pair<double, double>{m, sd};
    };

    std::vector<CrossvalRow> rows;
    for (int s = 1; s <= n_seeds; ++s) {
        std::vector<double> bias, cmse, ape, r2;
        for (int f = 0; f < k; ++f) {
            const Dataset train_raw = subset(full, plan.complement_indices(f));
            const Dataset eval_raw = subset(full, plan.fold_indices(f));
            const EvalReport rep =
                train_and_evaluate(train_raw, eval_raw, eval_raw, spec,
                                   static_cast<std::uint64_t>(s), train_config(cfg, false));
            bias.push_back(rep.squared_bias);
            cmse.push_back(rep.c_mse);
            ape.push_back(rep.median_ape);
            r2.push_back(rep.r2);
        }
        CrossvalRow row;
        row.weight_seed = static_cast<std::uint64_t>(s);
        std::tie(row.mean_squared_bias, row.std_squared_bias) = mean_std(bias);
        std::tie(row.mean_c_mse, row.std_c_mse) = mean_std(cmse);
        std::tie(row.mean_median_ape, row.std_median_ape) = mean_std(ape);
        std::tie(row.mean_r2, row.std_r2) = mean_std(r2);
        rows.push_back(row);
    }

    CsvTable t;
    t.header = {"seed", "mean_squared_bias", "std_squared_bias", "mean_c_mse", "std_c_mse",
                "mean_median_ape", "std_median_ape", "mean_r2", "std_r2", "k", "config_hash"};
    const std::string hash = config_hash(cfg);
    for (const CrossvalRow& r : rows)
        t.rows.push_back({std::to_string(r.weight_seed), format_double(r.mean_squared_bias),
                          format_double(r.std_squared_bias), format_double(r.mean_c_mse),
                          format_double(r.std_c_mse), format_double(r.mean_median_ape),
                          format_double(r.std_median_ape), format_double(r.mean_r2),
                          format_double(r.std_r2), std::to_string(k), hash});
    const std::string dir = experiment_dir(cfg, "crossval");
    t.write((fs::path(dir) / ("crossval_" + family + ".csv")).string());
    write_manifest(cfg, "crossval", {"crossval_" + family + ".csv"});
    return rows;
}

// ---------------------------------------------------------------------------
// rasters

SpikeGrid run_spike_grid(const ExperimentConfig& cfg, int resolution) {
    const SpikeGrid grid =
        spike_grid({cfg.prior.lo0, cfg.prior.hi0}, {cfg.prior.lo1, cfg.prior.hi1}, resolution,
                   resolution, cfg.consts, cfg.spike_threshold, cfg.integrate);
    const std::string dir = experiment_dir(cfg, "spike-grid");
    write_spike_grid_csv((fs::path(dir) / "spike_grid.csv").string(), grid);
    write_manifest(cfg, "spike-grid", {"spike_grid.csv"});
    return grid;
}

LossGridRun run_loss_grid(const ExperimentConfig& cfg, const ThetaPair& data_theta,
                          bool with_noise, int resolution, double sigma_noise, bool use_prior) {
    TimeSeries data = integrate(data_theta, cfg.consts, cfg.integrate);
    if (with_noise) {
        RngStream rng(cfg.seed_noise_pool, 0xF17ULL);
        const NoiseParams np{cfg.noise_prior.mean_sigma, cfg.noise_prior.mean_rho};
        const std::vector<double> eta = ar1_path(rng, np, cfg.consts.dt_out, data.values.size());
        for (std::size_t i = 0; i < data.values.size(); ++i) data.values[i] += eta[i];
    }
    if (!(sigma_noise > 0.0))
        sigma_noise = cfg.noise_prior.mean_sigma / cfg.consts.dt_out;  // stationary noise std

    LossGridRun run;
    run.data_theta = data_theta;
    run.grid = loss_grid(data.values, cfg.consts, cfg.integrate, {cfg.prior.lo0, cfg.prior.hi0},
                         {cfg.prior.lo1, cfg.prior.hi1}, resolution, resolution, sigma_noise,
                         true, use_prior, cfg.prior);
    const std::string dir = experiment_dir(cfg, "loss-grid");
    run.csv_path = (fs::path(dir) / "loss_grid.csv").string();
    write_loss_grid_csv(run.csv_path, run.grid);
    write_manifest(cfg, "loss-grid", {"loss_grid.csv"});
    return run;
}

} // namespace fhn
