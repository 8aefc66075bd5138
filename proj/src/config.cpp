#include "fhn/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fhn/csv.hpp"

namespace fhn {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: bad number for " + key + ": '" + v + "'");
    return x;
}

long long parse_int(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const long long x = std::strtoll(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: bad integer for " + key + ": '" + v + "'");
    return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError("config: bad seed for " + key + ": '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: bad boolean for " + key + ": '" + v + "'");
}

std::vector<std::pair<std::size_t, std::size_t>> parse_windows(const std::string& v) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::istringstream is(v);
    std::string item;
    while (std::getline(is, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("config: window must be lo:hi, got '" + item + "'");
        out.emplace_back(static_cast<std::size_t>(parse_int("windows", item.substr(0, colon))),
                         static_cast<std::size_t>(parse_int("windows", item.substr(colon + 1))));
    }
    if (out.empty()) throw ConfigError("config: empty window list");
    return out;
}

std::string windows_to_string(const std::vector<std::pair<std::size_t, std::size_t>>& ws) {
    std::ostringstream os;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (i) os << ',';
        os << ws[i].first << ':' << ws[i].second;
    }
    return os.str();
}

void apply(ExperimentConfig& c, const std::string& sk, const std::string& v) {
    // prior
    if (sk == "prior.mean0") c.prior.mean0 = parse_double(sk, v);
    else if (sk == "prior.sd0") c.prior.sd0 = parse_double(sk, v);
    else if (sk == "prior.lo0") c.prior.lo0 = parse_double(sk, v);
    else if (sk == "prior.hi0") c.prior.hi0 = parse_double(sk, v);
    else if (sk == "prior.mean1") c.prior.mean1 = parse_double(sk, v);
    else if (sk == "prior.sd1") c.prior.sd1 = parse_double(sk, v);
    else if (sk == "prior.lo1") c.prior.lo1 = parse_double(sk, v);
    else if (sk == "prior.hi1") c.prior.hi1 = parse_double(sk, v);
    // noise prior
    else if (sk == "noise_prior.mean_sigma") c.noise_prior.mean_sigma = parse_double(sk, v);
    else if (sk == "noise_prior.sd_sigma") c.noise_prior.sd_sigma = parse_double(sk, v);
    else if (sk == "noise_prior.mean_rho") c.noise_prior.mean_rho = parse_double(sk, v);
    else if (sk == "noise_prior.sd_rho") c.noise_prior.sd_rho = parse_double(sk, v);
    // simulation
    else if (sk == "sim.gamma") c.consts.gamma = parse_double(sk, v);
    else if (sk == "sim.zeta") c.consts.zeta = parse_double(sk, v);
    else if (sk == "sim.u0") c.consts.u0 = parse_double(sk, v);
    else if (sk == "sim.v0") c.consts.v0 = parse_double(sk, v);
    else if (sk == "sim.t_end") c.consts.t_end = parse_double(sk, v);
    else if (sk == "sim.dt_out") c.consts.dt_out = parse_double(sk, v);
    else if (sk == "sim.rtol") c.integrate.rtol = parse_double(sk, v);
    else if (sk == "sim.atol") c.integrate.atol = parse_double(sk, v);
    else if (sk == "sim.spike_threshold") c.spike_threshold = parse_double(sk, v);
    // data
    else if (sk == "data.n_train") c.n_train = static_cast<std::size_t>(parse_int(sk, v));
    else if (sk == "data.n_valid") c.n_valid = static_cast<std::size_t>(parse_int(sk, v));
    else if (sk == "data.n_test") c.n_test = static_cast<std::size_t>(parse_int(sk, v));
    else if (sk == "data.feature") c.feature = feature_kind_from_name(v);
    else if (sk == "data.with_noise") c.with_noise = parse_bool(sk, v);
    else if (sk == "data.joint") c.joint = parse_bool(sk, v);
    else if (sk == "data.seed_train") c.seed_train = parse_u64(sk, v);
    else if (sk == "data.seed_valid") c.seed_valid = parse_u64(sk, v);
    else if (sk == "data.seed_test") c.seed_test = parse_u64(sk, v);
    else if (sk == "data.seed_noise_pool") c.seed_noise_pool = parse_u64(sk, v);
    else if (sk == "data.noise_pool_size") c.noise_pool_size = static_cast<std::uint32_t>(parse_int(sk, v));
    else if (sk == "data.windows") c.windows = parse_windows(v);
    // network
    else if (sk == "network.family") {
        if (v != "dense" && v != "cnn") throw ConfigError("config: family must be dense or cnn");
        c.family = v;
    }
    else if (sk == "network.dense_layers") c.dense_layers = static_cast<int>(parse_int(sk, v));
    else if (sk == "network.dense_units") c.dense_units = static_cast<int>(parse_int(sk, v));
    else if (sk == "network.cnn_blocks") c.cnn_blocks = static_cast<int>(parse_int(sk, v));
    else if (sk == "network.cnn_filters") c.cnn_filters = static_cast<int>(parse_int(sk, v));
    else if (sk == "network.init_seed") c.init_seed = parse_u64(sk, v);
    // training
    else if (sk == "train.lr") c.lr = parse_double(sk, v);
    else if (sk == "train.batch_size") c.batch_size = static_cast<int>(parse_int(sk, v));
    else if (sk == "train.epochs_clean") c.epochs_clean = static_cast<int>(parse_int(sk, v));
    else if (sk == "train.epochs_noisy") c.epochs_noisy = static_cast<int>(parse_int(sk, v));
    else if (sk == "train.shuffle_seed") c.shuffle_seed = parse_u64(sk, v);
    else if (sk == "train.fold_seed") c.fold_seed = parse_u64(sk, v);
    // output
    else if (sk == "output.dir") c.out_dir = v;
    else throw ConfigError("config: unknown key '" + sk + "'");
}

} // namespace

void apply_config_override(ExperimentConfig& cfg, const std::string& section_key,
                           const std::string& value) {
    apply(cfg, section_key, value);
}

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": bad section");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty())
            throw ConfigError("config line " + std::to_string(lineno) + ": key outside a section");
        apply(cfg, section + "." + key, value);
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[prior]\n";
    os << "mean0 = " << format_double(c.prior.mean0) << '\n';
    os << "sd0 = " << format_double(c.prior.sd0) << '\n';
    os << "lo0 = " << format_double(c.prior.lo0) << '\n';
    os << "hi0 = " << format_double(c.prior.hi0) << '\n';
    os << "mean1 = " << format_double(c.prior.mean1) << '\n';
    os << "sd1 = " << format_double(c.prior.sd1) << '\n';
    os << "lo1 = " << format_double(c.prior.lo1) << '\n';
    os << "hi1 = " << format_double(c.prior.hi1) << '\n';
    os << "[noise_prior]\n";
    os << "mean_sigma = " << format_double(c.noise_prior.mean_sigma) << '\n';
    os << "sd_sigma = " << format_double(c.noise_prior.sd_sigma) << '\n';
    os << "mean_rho = " << format_double(c.noise_prior.mean_rho) << '\n';
    os << "sd_rho = " << format_double(c.noise_prior.sd_rho) << '\n';
    os << "[sim]\n";
    os << "gamma = " << format_double(c.consts.gamma) << '\n';
    os << "zeta = " << format_double(c.consts.zeta) << '\n';
    os << "u0 = " << format_double(c.consts.u0) << '\n';
    os << "v0 = " << format_double(c.consts.v0) << '\n';
    os << "t_end = " << format_double(c.consts.t_end) << '\n';
    os << "dt_out = " << format_double(c.consts.dt_out) << '\n';
    os << "rtol = " << format_double(c.integrate.rtol) << '\n';
    os << "atol = " << format_double(c.integrate.atol) << '\n';
    os << "spike_threshold = " << format_double(c.spike_threshold) << '\n';
    os << "[data]\n";
    os << "n_train = " << c.n_train << '\n';
    os << "n_valid = " << c.n_valid << '\n';
    os << "n_test = " << c.n_test << '\n';
    os << "feature = " << feature_kind_name(c.feature) << '\n';
    os << "with_noise = " << (c.with_noise ? "true" : "false") << '\n';
    os << "joint = " << (c.joint ? "true" : "false") << '\n';
    os << "seed_train = " << c.seed_train << '\n';
    os << "seed_valid = " << c.seed_valid << '\n';
    os << "seed_test = " << c.seed_test << '\n';
    os << "seed_noise_pool = " << c.seed_noise_pool << '\n';
    os << "noise_pool_size = " << c.noise_pool_size << '\n';
    os << "windows = " << windows_to_string(c.windows) << '\n';
    os << "[network]\n";
    os << "family = " << c.family << '\n';
    os << "dense_layers = " << c.dense_layers << '\n';
    os << "dense_units = " << c.dense_units << '\n';
    os << "cnn_blocks = " << c.cnn_blocks << '\n';
    os << "cnn_filters = " << c.cnn_filters << '\n';
    os << "init_seed = " << c.init_seed << '\n';
    os << "[train]\n";
    os << "lr = " << format_double(c.lr) << '\n';
    os << "batch_size = " << c.batch_size << '\n';
    os << "epochs_clean = " << c.epochs_clean << '\n';
    os << "epochs_noisy = " << c.epochs_noisy << '\n';
    os << "shuffle_seed = " << c.shuffle_seed << '\n';
    os << "fold_seed = " << c.fold_seed << '\n';
    os << "[output]\n";
    os << "dir = " << c.out_dir << '\n';
    return os.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char ch : text) {
        h ^= static_cast<unsigned char>(ch);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace fhn
