// Command-line driver for the FitzHugh-Nagumo reconstruction experiments.
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fhn/csv.hpp"
#include "fhn/experiments.hpp"

namespace {

using namespace fhn;

std::vector<std::size_t> parse_size_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stoull(item));
    if (out.empty()) throw ConfigError("empty list: " + s);
    return out;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw ConfigError("empty list: " + s);
    return out;
}

std::vector<std::string> parse_string_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream is(s);
    std::string item;
    while (std::getline(is, item, ',')) out.push_back(item);
    if (out.empty()) throw ConfigError("empty list: " + s);
    return out;
}

std::vector<FeatureKind> parse_kind_list(const std::string& s) {
    std::vector<FeatureKind> out;
    for (const std::string& name : parse_string_list(s)) out.push_back(feature_kind_from_name(name));
    return out;
}

// Reads the last column of a t,u[,d] CSV as the data series.
std::vector<double> read_series_column(const std::string& path) {
    const CsvTable t = CsvTable::read(path);
    if (t.header.size() < 2 || t.rows.empty())
        throw ConfigError("series CSV needs a header and at least one row: " + path);
    std::vector<double> out;
    out.reserve(t.rows.size());
    for (const auto& row : t.rows) out.push_back(std::stod(row.back()));
    return out;
}

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;

    ExperimentConfig resolve() const {
        ExperimentConfig cfg =
            config_path.empty() ? ExperimentConfig{} : load_config(config_path);
        for (const std::string& ov : overrides) {
            const auto eq = ov.find('=');
            if (eq == std::string::npos)
                throw ConfigError("--set expects section.key=value, got '" + ov + "'");
            apply_config_override(cfg, ov.substr(0, eq), ov.substr(eq + 1));
        }
        return cfg;
    }
};

void add_common(CLI::App* cmd, CommonOpts& common) {
    cmd->add_option("--config", common.config_path, "Experiment configuration file");
    cmd->add_option("--set", common.overrides,
                    "Override a config entry as section.key=value (repeatable)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"FitzHugh-Nagumo parameter reconstruction toolkit"};
    app.require_subcommand(1);

    CommonOpts common;

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Integrate the ODE and write a t,u CSV");
    add_common(simulate, common);
    double sim_theta0 = 0.7, sim_theta1 = 0.8, sim_sigma = 0.07, sim_rho = 0.8;
    double sim_t_end = -1.0, sim_dt_out = -1.0;
    bool sim_noise = false;
    std::uint64_t sim_noise_seed = 9001;
    simulate->add_option("--theta0", sim_theta0, "ODE parameter theta0");
    simulate->add_option("--theta1", sim_theta1, "ODE parameter theta1");
    simulate->add_flag("--with-noise", sim_noise, "Also emit a noisy data column");
    simulate->add_option("--sigma", sim_sigma, "Noise sigma");
    simulate->add_option("--rho", sim_rho, "Noise autocorrelation");
    simulate->add_option("--noise-seed", sim_noise_seed, "Noise path seed");
    simulate->add_option("--t-end", sim_t_end, "Override simulation end time [ms]");
    simulate->add_option("--dt-out", sim_dt_out, "Override output step [ms]");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Build and save a dataset");
    add_common(gen, common);
    std::string gen_role;
    bool gen_csv = false;
    gen->add_option("--role", gen_role, "train | valid | test")->required();
    gen->add_flag("--csv", gen_csv, "Also export the dataset as CSV");

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a reconstruction network");
    add_common(train_cmd, common);

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained model on a dataset");
    add_common(evaluate, common);
    std::string eval_model, eval_scaler, eval_data;
    evaluate->add_option("--model", eval_model, "Model file")->required();
    evaluate->add_option("--scaler", eval_scaler, "Scaler JSON from the training run")->required();
    evaluate->add_option("--data", eval_data, "Dataset file")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Architecture sweep on noise-free data");
    add_common(sweep, common);
    std::string sweep_family = "dense", sweep_depths, sweep_widths;
    sweep->add_option("--family", sweep_family, "dense | cnn");
    sweep->add_option("--depths", sweep_depths, "Comma-separated layer/block counts");
    sweep->add_option("--widths", sweep_widths, "Comma-separated unit/filter counts");

    // noise-study
    auto* noise = app.add_subcommand("noise-study", "Train/test under noise scenarios");
    add_common(noise, common);
    std::string noise_family = "cnn", noise_sizes = "500,1000,4000,8000";
    std::string noise_scenarios = "clean-clean,clean-noisy,noisy-noisy";
    noise->add_option("--family", noise_family, "dense | cnn");
    noise->add_option("--sizes", noise_sizes, "Training-set sizes");
    noise->add_option("--scenarios", noise_scenarios, "Scenario list");

    // window-study
    auto* window = app.add_subcommand("window-study", "Partial-observation study");
    add_common(window, common);
    std::string window_families = "dense,cnn", window_features = "time,fourier,time_fourier";
    window->add_option("--families", window_families, "Network families");
    window->add_option("--features", window_features, "Feature kinds");

    // joint
    auto* joint = app.add_subcommand("joint", "Joint ODE + noise parameter estimation");
    add_common(joint, common);
    std::string joint_sizes = "500,1000,4000,8000";
    std::string joint_features = "time,fourier,time_fourier";
    joint->add_option("--sizes", joint_sizes, "Training-set sizes");
    joint->add_option("--features", joint_features, "Feature kinds");

    // resimulate
    auto* resim = app.add_subcommand("resimulate", "Re-integrate at predicted parameters");
    add_common(resim, common);
    std::string resim_model, resim_scaler, resim_percentiles = "10,25,50,75,90";
    resim->add_option("--model", resim_model, "Model file")->required();
    resim->add_option("--scaler", resim_scaler, "Scaler JSON")->required();
    resim->add_option("--percentiles", resim_percentiles, "MSE percentiles");

    // crossval
    auto* crossval = app.add_subcommand("crossval", "K-fold cross-validation over weight seeds");
    add_common(crossval, common);
    std::string cv_family = "cnn";
    int cv_k = 6, cv_seeds = 10;
    crossval->add_option("--family", cv_family, "dense | cnn");
    crossval->add_option("--k", cv_k, "Fold count");
    crossval->add_option("--seeds", cv_seeds, "Number of weight seeds (1..n)");

    // spike-grid
    auto* spike = app.add_subcommand("spike-grid", "Spike rate/duration raster");
    add_common(spike, common);
    int spike_res = 60;
    spike->add_option("--resolution", spike_res, "Grid resolution per axis");

    // loss-grid
    auto* loss = app.add_subcommand("loss-grid", "Negative-log-posterior landscape");
    add_common(loss, common);
    double lg_theta0 = 0.7, lg_theta1 = 0.8, lg_sigma_noise = 0.0;
    int lg_res = 200;
    bool lg_noise = false, lg_no_prior = false;
    std::string lg_data;
    loss->add_option("--theta0", lg_theta0, "Data-generating theta0");
    loss->add_option("--theta1", lg_theta1, "Data-generating theta1");
    loss->add_flag("--with-noise", lg_noise, "Add AR(1) noise to the generated data");
    loss->add_option("--data", lg_data, "Use a series CSV instead of simulating");
    loss->add_option("--resolution", lg_res, "Grid resolution per axis");
    loss->add_option("--sigma-noise", lg_sigma_noise,
                     "Misfit noise std (default: stationary sigma/dt)");
    loss->add_flag("--no-prior", lg_no_prior, "Disable the prior term");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        const ExperimentConfig base = common.resolve();

        if (simulate->parsed()) {
            ExperimentConfig cfg = base;
            if (sim_t_end > 0) cfg.consts.t_end = sim_t_end;
            if (sim_dt_out > 0) cfg.consts.dt_out = sim_dt_out;
            const SimulateResult r = run_simulate(cfg, {sim_theta0, sim_theta1}, sim_noise,
                                                  {sim_sigma, sim_rho}, sim_noise_seed);
            std::cout << r.csv_path << '\n';
        } else if (gen->parsed()) {
            std::cout << run_gen_data(base, gen_role, gen_csv) << '\n';
        } else if (train_cmd->parsed()) {
            const TrainRunResult r = run_train(base);
            std::cout << r.model_path << '\n';
            if (!r.fit.history.empty())
                std::cout << "final train_loss "
                          << format_double(r.fit.history.back().train_loss) << " valid_loss "
                          << format_double(r.fit.history.back().valid_loss) << '\n';
        } else if (evaluate->parsed()) {
            const EvalReport rep = run_evaluate(base, eval_model, eval_scaler, eval_data);
            std::cout << eval_report_to_json(rep) << '\n';
        } else if (sweep->parsed()) {
            if (sweep_depths.empty()) sweep_depths = (sweep_family == "cnn") ? "2,3,4" : "2,4,8,12,16";
            if (sweep_widths.empty())
                sweep_widths = (sweep_family == "cnn") ? "2,4,8,16,32" : "4,8,16,32,64,128";
            const auto cells =
                run_sweep(base, sweep_family, parse_int_list(sweep_depths),
                          parse_int_list(sweep_widths));
            std::cout << sweep_table(base, cells).to_string();
        } else if (noise->parsed()) {
            const auto rows = run_noise_study(base, noise_family, parse_size_list(noise_sizes),
                                              parse_string_list(noise_scenarios));
            for (const auto& r : rows)
                std::cout << r.scenario << " N=" << r.n_train << " r2="
                          << (r.failed ? "failed" : format_double(r.report.r2)) << '\n';
        } else if (window->parsed()) {
            const auto rows = run_window_study(base, parse_string_list(window_families),
                                               parse_kind_list(window_features));
            for (const auto& r : rows)
                std::cout << r.family << ' ' << feature_kind_name(r.kind) << " r2="
                          << (r.failed ? "failed" : format_double(r.report.r2)) << '\n';
        } else if (joint->parsed()) {
            const auto rows = run_joint(base, parse_size_list(joint_sizes),
                                        parse_kind_list(joint_features));
            for (const auto& r : rows)
                std::cout << "N=" << r.n_train << ' ' << feature_kind_name(r.kind)
                          << (r.failed ? " failed"
                                       : " r2_sigma=" +
                                             format_double(r.report.per_coordinate_r2[2]) +
                                             " r2_rho=" +
                                             format_double(r.report.per_coordinate_r2[3]))
                          << '\n';
        } else if (resim->parsed()) {
            const Network net = load_network(resim_model);
            const Scaler scaler = load_scaler_json(resim_scaler);
            // The test set is rebuilt from the configuration so the truth
            // parameters are available for percentile selection.
            const Dataset test_raw =
                build_test_set(base, base.feature, base.with_noise, base.joint);
            const auto rows =
                run_resimulate(base, net, scaler, test_raw, parse_int_list(resim_percentiles));
            for (const auto& r : rows)
                std::cout << "p" << r.percentile << " sample=" << r.sample_index
                          << " param_mse=" << format_double(r.param_mse)
                          << (r.failed ? " failed" : "") << '\n';
        } else if (crossval->parsed()) {
            const auto rows = run_crossval(base, cv_family, cv_k, cv_seeds);
            for (const auto& r : rows)
                std::cout << "seed " << r.weight_seed << " mean_r2=" << format_double(r.mean_r2)
                          << " std_r2=" << format_double(r.std_r2) << '\n';
        } else if (spike->parsed()) {
            run_spike_grid(base, spike_res);
            std::cout << "spike grid " << spike_res << "x" << spike_res << " written\n";
        } else if (loss->parsed()) {
            if (!lg_data.empty()) {
                const std::vector<double> data = read_series_column(lg_data);
                double sn = lg_sigma_noise > 0
                                ? lg_sigma_noise
                                : base.noise_prior.mean_sigma / base.consts.dt_out;
                const LossGrid grid = loss_grid(
                    data, base.consts, base.integrate, {base.prior.lo0, base.prior.hi0},
                    {base.prior.lo1, base.prior.hi1}, lg_res, lg_res, sn, true, !lg_no_prior,
                    base.prior);
                const std::string dir = experiment_dir(base, "loss-grid");
                write_loss_grid_csv(dir + "/loss_grid.csv", grid);
                write_manifest(base, "loss-grid", {"loss_grid.csv"});
                std::cout << dir + "/loss_grid.csv" << '\n';
            } else {
                const LossGridRun r = run_loss_grid(base, {lg_theta0, lg_theta1}, lg_noise,
                                                    lg_res, lg_sigma_noise, !lg_no_prior);
                const auto [i0, i1] = r.grid.argmin();
                std::cout << r.csv_path << '\n'
                          << "argmin theta0=" << format_double(r.grid.theta0s[i0])
                          << " theta1=" << format_double(r.grid.theta1s[i1]) << '\n';
            }
        }
        return 0;
    } catch (const fhn::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
