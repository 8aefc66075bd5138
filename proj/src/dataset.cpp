#include "fhn/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "fhn/csv.hpp"
#include "fhn/fourier.hpp"

namespace fhn {

namespace {

// Substream layout: sample i, redraw attempt a -> (a << 48) | i.
// The noise pool lives under a tagged stream range of its own seed so the
// two stream spaces cannot collide even if the seeds are set equal.
constexpr std::uint64_t kAttemptShift = 48;
constexpr std::uint64_t kPoolTag = 0xA5ULL << 56;

std::vector<double> make_features(FeatureKind kind, const std::vector<double>& series) {
    switch (kind) {
        case FeatureKind::Time:
            return series;
        case FeatureKind::Fourier:
            return dft_magnitudes(series);
        case FeatureKind::TimeAndFourier: {
            std::vector<double> f = series;
            const std::vector<double> mags = dft_magnitudes(series);
            f.insert(f.end(), mags.begin(), mags.end());
            return f;
        }
    }
    throw Error("make_features: bad feature kind");
}

} // namespace

const char* feature_kind_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::Time: return "time";
        case FeatureKind::Fourier: return "fourier";
        case FeatureKind::TimeAndFourier: return "time_fourier";
    }
    throw Error("feature_kind_name: bad feature kind");
}

FeatureKind feature_kind_from_name(const std::string& name) {
    if (name == "time") return FeatureKind::Time;
    if (name == "fourier") return FeatureKind::Fourier;
    if (name == "time_fourier") return FeatureKind::TimeAndFourier;
    throw ConfigError("unknown feature kind: " + name);
}

std::size_t feature_len_for(FeatureKind kind, std::size_t n_t) {
    switch (kind) {
        case FeatureKind::Time: return n_t;
        case FeatureKind::Fourier: return dft_magnitude_len(n_t);
        case FeatureKind::TimeAndFourier: return n_t + dft_magnitude_len(n_t);
    }
    throw Error("feature_len_for: bad feature kind");
}

std::vector<NoiseParams> noise_pool(std::uint64_t pool_seed, std::uint32_t pool_size,
                                    const NoisePrior& prior) {
    std::vector<NoiseParams> pool(pool_size);
    for (std::uint32_t k = 0; k < pool_size; ++k) {
        RngStream rng(pool_seed, kPoolTag | k);
        pool[k] = sample_noise_params(rng, prior);
    }
    return pool;
}

Dataset build_dataset(const BuildOptions& opts, const PriorSpec& prior,
                      const NoisePrior& noise_prior, const SimConstants& consts) {
    if (opts.n < 1) throw Error("build_dataset: n must be >= 1");
    if (opts.joint_targets && !opts.with_noise)
        throw Error("build_dataset: joint targets require noise");

    const std::size_t n_t = static_cast<std::size_t>(consts.grid_points());
    std::vector<NoiseParams> pool;
    if (opts.with_noise) {
        if (opts.noise_pool_size < 1) throw Error("build_dataset: empty noise pool");
        pool = noise_pool(opts.noise_pool_seed, opts.noise_pool_size, noise_prior);
    }

    Dataset ds;
    ds.feature_kind = opts.kind;
    ds.noise_applied = opts.with_noise;
    ds.provenance = {opts.seed, prior, noise_prior, consts, opts.integrate,
                     opts.noise_pool_seed, opts.noise_pool_size};
    ds.samples.resize(opts.n);

    std::string first_error;

    auto build_one = [&](std::size_t i) -> std::string {
        std::string last;
        for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
            const std::uint64_t stream =
                (static_cast<std::uint64_t>(attempt) << kAttemptShift) | i;
            RngStream rng(opts.seed, stream);
            try {
                Sample s;
                s.meta.stream_id = stream;
                s.meta.theta = sample_theta(rng, prior);
                TimeSeries series = integrate(s.meta.theta, consts, opts.integrate);
                if (opts.with_noise) {
                    s.meta.has_noise = true;
                    s.meta.noise = pool[i % pool.size()];
                    const std::vector<double> eta =
                        ar1_path(rng, s.meta.noise, consts.dt_out, n_t);
                    for (std::size_t j = 0; j < n_t; ++j) series.values[j] += eta[j];
                }
                s.features = make_features(opts.kind, series.values);
                s.target = {s.meta.theta.theta0, s.meta.theta.theta1};
                if (opts.joint_targets) {
                    s.target.push_back(s.meta.noise.sigma);
                    s.target.push_back(s.meta.noise.rho);
                }
                ds.samples[i] = std::move(s);
                return {};
            } catch (const Error& e) {
                last = e.what();
            }
        }
        return "sample " + std::to_string(i) + ": " + last;
    };

    if (opts.exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (long long i = 0; i < static_cast<long long>(opts.n); ++i) {
            const std::string err = build_one(static_cast<std::size_t>(i));
            if (!err.empty()) {
#pragma omp critical
                if (first_error.empty()) first_error = err;
            }
        }
    } else {
        for (std::size_t i = 0; i < opts.n && first_error.empty(); ++i)
            first_error = build_one(i);
    }
    if (!first_error.empty()) throw Error("build_dataset: " + first_error);
    return ds;
}

Dataset split_halves(const Dataset& ds) {
    if (ds.feature_kind != FeatureKind::Time)
        throw Error("split_halves: requires time-series features");
    const std::size_t len = ds.feature_len();
    if (len % 2 != 0) throw LengthMismatch("split_halves: odd feature length");

    Dataset out;
    out.feature_kind = ds.feature_kind;
    out.noise_applied = ds.noise_applied;
    out.provenance = ds.provenance;
    out.samples.reserve(2 * ds.samples.size());
    const std::size_t half = len / 2;
    for (const Sample& s : ds.samples) {
        Sample a{std::vector<double>(s.features.begin(),
                                     s.features.begin() + static_cast<long>(half)),
                 s.target, s.meta};
        Sample b{std::vector<double>(s.features.begin() + static_cast<long>(half),
                                     s.features.end()),
                 s.target, s.meta};
        out.samples.push_back(std::move(a));
        out.samples.push_back(std::move(b));
    }
    return out;
}

Dataset extract_windows(const Dataset& ds,
                        const std::vector<std::pair<std::size_t, std::size_t>>& windows) {
    if (ds.feature_kind != FeatureKind::Time)
        throw Error("extract_windows: requires time-series features");
    if (windows.empty()) throw Error("extract_windows: no windows given");
    const std::size_t len = ds.feature_len();
    const std::size_t wlen = windows[0].second - windows[0].first;
    for (const auto& [lo, hi] : windows) {
        if (lo >= hi || hi > len)
            throw IndexOutOfRange("extract_windows: window [" + std::to_string(lo) + "," +
                                  std::to_string(hi) + ") outside [0," + std::to_string(len) + ")");
        if (hi - lo != wlen) throw LengthMismatch("extract_windows: unequal window lengths");
    }

    Dataset out;
    out.feature_kind = ds.feature_kind;
    out.noise_applied = ds.noise_applied;
    out.provenance = ds.provenance;
    out.samples.reserve(ds.samples.size() * windows.size());
    for (const Sample& s : ds.samples) {
        for (const auto& [lo, hi] : windows) {
            Sample w{std::vector<double>(s.features.begin() + static_cast<long>(lo),
                                         s.features.begin() + static_cast<long>(hi)),
                     s.target, s.meta};
            out.samples.push_back(std::move(w));
        }
    }
    return out;
}

Dataset with_feature_kind(const Dataset& time_ds, FeatureKind kind) {
    if (time_ds.feature_kind != FeatureKind::Time)
        throw Error("with_feature_kind: source must hold time-series features");
    Dataset out;
    out.feature_kind = kind;
    out.noise_applied = time_ds.noise_applied;
    out.provenance = time_ds.provenance;
    out.samples.reserve(time_ds.samples.size());
    for (const Sample& s : time_ds.samples) {
        Sample t;
        t.features = make_features(kind, s.features);
        t.target = s.target;
        t.meta = s.meta;
        out.samples.push_back(std::move(t));
    }
    return out;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.feature_kind = ds.feature_kind;
    out.noise_applied = ds.noise_applied;
    out.provenance = ds.provenance;
    out.samples.reserve(indices.size());
    for (const std::size_t i : indices) {
        if (i >= ds.samples.size()) throw IndexOutOfRange("subset: index out of range");
        out.samples.push_back(ds.samples[i]);
    }
    return out;
}

namespace {

void fit_moments(const std::vector<Sample>& samples, bool features,
                 std::vector<double>& mean, std::vector<double>& sd) {
    const std::size_t dim = features ? samples[0].features.size() : samples[0].target.size();
    const double n = static_cast<double>(samples.size());
    mean.assign(dim, 0.0);
    sd.assign(dim, 0.0);
    for (const Sample& s : samples) {
        const auto& v = features ? s.features : s.target;
        for (std::size_t j = 0; j < dim; ++j) mean[j] += v[j];
    }
    for (std::size_t j = 0; j < dim; ++j) mean[j] /= n;
    for (const Sample& s : samples) {
        const auto& v = features ? s.features : s.target;
        for (std::size_t j = 0; j < dim; ++j) {
            const double d = v[j] - mean[j];
            sd[j] += d * d;
        }
    }
    for (std::size_t j = 0; j < dim; ++j) {
        sd[j] = std::sqrt(sd[j] / n);
        if (sd[j] < 1e-12 * std::max(1.0, std::abs(mean[j]))) sd[j] = 1.0;
    }
}

} // namespace

Scaler fit_scaler(const Dataset& ds) {
    if (ds.samples.empty()) throw EmptyInput("fit_scaler: empty dataset");
    Scaler s;
    fit_moments(ds.samples, true, s.feature_mean, s.feature_sd);
    fit_moments(ds.samples, false, s.target_mean, s.target_sd);
    return s;
}

Dataset apply_scaler(const Scaler& s, Dataset ds) {
    if (ds.feature_len() != s.feature_mean.size() || ds.target_len() != s.target_mean.size())
        throw LengthMismatch("apply_scaler: scaler shape mismatch");
    for (Sample& sm : ds.samples) {
        for (std::size_t j = 0; j < sm.features.size(); ++j)
            sm.features[j] = (sm.features[j] - s.feature_mean[j]) / s.feature_sd[j];
        for (std::size_t j = 0; j < sm.target.size(); ++j)
            sm.target[j] = (sm.target[j] - s.target_mean[j]) / s.target_sd[j];
    }
    ds.scaler = s;
    return ds;
}

Dataset invert_scaler(const Scaler& s, Dataset ds) {
    if (ds.feature_len() != s.feature_mean.size() || ds.target_len() != s.target_mean.size())
        throw LengthMismatch("invert_scaler: scaler shape mismatch");
    for (Sample& sm : ds.samples) {
        for (std::size_t j = 0; j < sm.features.size(); ++j)
            sm.features[j] = sm.features[j] * s.feature_sd[j] + s.feature_mean[j];
        for (std::size_t j = 0; j < sm.target.size(); ++j)
            sm.target[j] = sm.target[j] * s.target_sd[j] + s.target_mean[j];
    }
    ds.scaler.reset();
    return ds;
}

std::vector<double> apply_scaler_target(const Scaler& s, const std::vector<double>& target) {
    if (target.size() != s.target_mean.size())
        throw LengthMismatch("apply_scaler_target: shape mismatch");
    std::vector<double> out(target.size());
    for (std::size_t j = 0; j < target.size(); ++j)
        out[j] = (target[j] - s.target_mean[j]) / s.target_sd[j];
    return out;
}

std::vector<double> invert_scaler_target(const Scaler& s, const std::vector<double>& target) {
    if (target.size() != s.target_mean.size())
        throw LengthMismatch("invert_scaler_target: shape mismatch");
    std::vector<double> out(target.size());
    for (std::size_t j = 0; j < target.size(); ++j)
        out[j] = target[j] * s.target_sd[j] + s.target_mean[j];
    return out;
}

namespace {

constexpr char kMagic[6] = {'F', 'H', 'N', 'D', 'S', '1'};

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_doubles(std::ofstream& os, const double* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

template <typename T>
T get(std::ifstream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatVersionMismatch("dataset file truncated");
    return v;
}

void get_doubles(std::ifstream& is, double* p, std::size_t n) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
    if (!is) throw FormatVersionMismatch("dataset file truncated");
}

} // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
    static_assert(std::endian::native == std::endian::little,
                  "dataset container assumes a little-endian host");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);

    os.write(kMagic, sizeof(kMagic));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(ds.feature_kind));
    put<std::uint8_t>(os, ds.noise_applied ? 1 : 0);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.target_len()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ds.feature_len()));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(ds.samples.size()));
    put<std::uint64_t>(os, ds.provenance.seed);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const Sample& s : ds.samples) {
        put<std::uint64_t>(os, s.meta.stream_id);
        put_doubles(os, s.target.data(), s.target.size());
        const double meta[4] = {s.meta.theta.theta0, s.meta.theta.theta1,
                                s.meta.has_noise ? s.meta.noise.sigma : nan,
                                s.meta.has_noise ? s.meta.noise.rho : nan};
        put_doubles(os, meta, 4);
        put_doubles(os, s.features.data(), s.features.size());
    }

    put<std::uint8_t>(os, ds.scaler ? 1 : 0);
    if (ds.scaler) {
        put_doubles(os, ds.scaler->feature_mean.data(), ds.scaler->feature_mean.size());
        put_doubles(os, ds.scaler->feature_sd.data(), ds.scaler->feature_sd.size());
        put_doubles(os, ds.scaler->target_mean.data(), ds.scaler->target_mean.size());
        put_doubles(os, ds.scaler->target_sd.data(), ds.scaler->target_sd.size());
    }

    const DatasetProvenance& p = ds.provenance;
    const double prov[20] = {p.prior.mean0, p.prior.sd0, p.prior.lo0, p.prior.hi0,
                             p.prior.mean1, p.prior.sd1, p.prior.lo1, p.prior.hi1,
                             p.noise_prior.mean_sigma, p.noise_prior.sd_sigma,
                             p.noise_prior.mean_rho, p.noise_prior.sd_rho,
                             p.consts.gamma, p.consts.zeta, p.consts.u0, p.consts.v0,
                             p.consts.t_end, p.consts.dt_out,
                             p.integrate.rtol, p.integrate.atol};
    put_doubles(os, prov, 20);
    put<std::uint64_t>(os, p.noise_pool_seed);
    put<std::uint32_t>(os, p.noise_pool_size);

    if (!os) throw IoError("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);

    char magic[6];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw FormatVersionMismatch("not a FHNDS1 dataset: " + path);

    Dataset ds;
    ds.feature_kind = static_cast<FeatureKind>(get<std::uint8_t>(is));
    if (static_cast<int>(ds.feature_kind) > 2)
        throw FormatVersionMismatch("bad feature kind byte");
    ds.noise_applied = get<std::uint8_t>(is) != 0;
    const std::uint32_t target_len = get<std::uint32_t>(is);
    const std::uint32_t feature_len = get<std::uint32_t>(is);
    const std::uint64_t n = get<std::uint64_t>(is);
    ds.provenance.seed = get<std::uint64_t>(is);

    ds.samples.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Sample& s = ds.samples[i];
        s.meta.stream_id = get<std::uint64_t>(is);
        s.target.resize(target_len);
        get_doubles(is, s.target.data(), target_len);
        double meta[4];
        get_doubles(is, meta, 4);
        s.meta.theta = {meta[0], meta[1]};
        s.meta.has_noise = !std::isnan(meta[2]);
        if (s.meta.has_noise) s.meta.noise = {meta[2], meta[3]};
        s.features.resize(feature_len);
        get_doubles(is, s.features.data(), feature_len);
    }

    if (get<std::uint8_t>(is) != 0) {
        Scaler sc;
        sc.feature_mean.resize(feature_len);
        sc.feature_sd.resize(feature_len);
        sc.target_mean.resize(target_len);
        sc.target_sd.resize(target_len);
        get_doubles(is, sc.feature_mean.data(), feature_len);
        get_doubles(is, sc.feature_sd.data(), feature_len);
        get_doubles(is, sc.target_mean.data(), target_len);
        get_doubles(is, sc.target_sd.data(), target_len);
        ds.scaler = std::move(sc);
    }

    double prov[20];
    get_doubles(is, prov, 20);
    DatasetProvenance& p = ds.provenance;
    p.prior = {prov[0], prov[1], prov[2], prov[3], prov[4], prov[5], prov[6], prov[7]};
    p.noise_prior = {prov[8], prov[9], prov[10], prov[11]};
    p.consts.gamma = prov[12];
    p.consts.zeta = prov[13];
    p.consts.u0 = prov[14];
    p.consts.v0 = prov[15];
    p.consts.t_end = prov[16];
    p.consts.dt_out = prov[17];
    p.integrate.rtol = prov[18];
    p.integrate.atol = prov[19];
    p.noise_pool_seed = get<std::uint64_t>(is);
    p.noise_pool_size = get<std::uint32_t>(is);
    return ds;
}

void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    for (std::size_t j = 0; j < ds.target_len(); ++j) os << "target_" << j << ',';
    for (std::size_t j = 0; j < ds.feature_len(); ++j) {
        os << "f_" << j;
        if (j + 1 < ds.feature_len()) os << ',';
    }
    os << '\n';
    for (const Sample& s : ds.samples) {
        for (std::size_t j = 0; j < s.target.size(); ++j) os << format_double(s.target[j]) << ',';
        for (std::size_t j = 0; j < s.features.size(); ++j) {
            os << format_double(s.features[j]);
            if (j + 1 < s.features.size()) os << ',';
        }
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

} // namespace fhn
