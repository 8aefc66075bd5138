#include "fhn/fhn_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fhn/csv.hpp"

namespace fhn {

int SimConstants::grid_points() const {
    if (!(t_end > 0.0) || !(dt_out > 0.0))
        throw Error("SimConstants: t_end and dt_out must be positive");
    const double ratio = t_end / dt_out;
    const long long n = std::llround(ratio);
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
        throw Error("SimConstants: t_end must be an integer multiple of dt_out");
    return static_cast<int>(n);
}

State fhn_rhs(const State& s, const ThetaPair& theta, const SimConstants& c) {
    State d;
    d.u = c.gamma * (s.u - s.u * s.u * s.u / 3.0 + s.v + c.zeta);
    d.v = -(1.0 / c.gamma) * (s.u - theta.theta0 + theta.theta1 * s.v);
    return d;
}

namespace {

bool finite(const State& s) { return std::isfinite(s.u) && std::isfinite(s.v); }

double rms2(double a, double b) { return std::sqrt(0.5 * (a * a + b * b)); }

// Step-size heuristic for the first step (same scheme as the usual adaptive
// RK drivers: probe the RHS once and bound by the local Lipschitz estimate).
double initial_step(const State& y0, const State& f0, const ThetaPair& theta,
                    const SimConstants& c, double rtol, double atol, double t_span) {
    const double su = atol + rtol * std::abs(y0.u);
    const double sv = atol + rtol * std::abs(y0.v);
    const double d0 = rms2(y0.u / su, y0.v / sv);
    const double d1 = rms2(f0.u / su, f0.v / sv);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;

    State y1{y0.u + h0 * f0.u, y0.v + h0 * f0.v};
    State f1 = fhn_rhs(y1, theta, c);
    const double d2 = rms2((f1.u - f0.u) / su, (f1.v - f0.v) / sv) / h0;

    double h1;
    if (d1 <= 1e-15 && d2 <= 1e-15)
        h1 = std::max(1e-6, h0 * 1e-3);
    else
        h1 = std::cbrt(0.01 / std::max(d1, d2));

    return std::min({100.0 * h0, h1, t_span});
}

// Cubic Hermite interpolation of the u component on [t, t+h], local
// coordinate s in [0, 1].
double hermite_u(const State& y0, const State& f0, const State& y1,
                 const State& f1, double h, double s) {
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * y0.u + h10 * h * f0.u + h01 * y1.u + h11 * h * f1.u;
}

} // namespace

TimeSeries integrate(const ThetaPair& theta, const SimConstants& c,
                     const IntegrateOptions& opts) {
    const int n_out = c.grid_points();
    TimeSeries out;
    out.dt = c.dt_out;
    out.values.resize(static_cast<std::size_t>(n_out));

    State y{c.u0, c.v0};
    if (!finite(y)) throw NonFiniteState("integrate: non-finite initial state");
    State f = fhn_rhs(y, theta, c);

    double t = 0.0;
    double h = initial_step(y, f, theta, c, opts.rtol, opts.atol, c.t_end);
    int next_out = 1;  // next grid index to emit (1-based)

    constexpr double kSafety = 0.9;
    constexpr double kMinFactor = 0.2;
    constexpr double kMaxFactor = 10.0;

    while (next_out <= n_out && t < c.t_end) {
        h = std::min(h, c.t_end - t);
        if (h < opts.min_step)
            throw StepSizeUnderflow("integrate: step size underflow at t=" + std::to_string(t));

        // Bogacki-Shampine 3(2) pair, FSAL: f holds the RHS at (t, y).
        const State k1 = f;
        const State y2{y.u + 0.5 * h * k1.u, y.v + 0.5 * h * k1.v};
        const State k2 = fhn_rhs(y2, theta, c);
        const State y3{y.u + 0.75 * h * k2.u, y.v + 0.75 * h * k2.v};
        const State k3 = fhn_rhs(y3, theta, c);
        const State ynew{
            y.u + h * (2.0 / 9.0 * k1.u + 1.0 / 3.0 * k2.u + 4.0 / 9.0 * k3.u),
            y.v + h * (2.0 / 9.0 * k1.v + 1.0 / 3.0 * k2.v + 4.0 / 9.0 * k3.v)};

        if (!finite(ynew)) {
            h *= 0.1;
            if (h < opts.min_step)
                throw NonFiniteState("integrate: state diverged at t=" + std::to_string(t));
            continue;
        }
        const State k4 = fhn_rhs(ynew, theta, c);

        const double eu = h * (-5.0 / 72.0 * k1.u + 1.0 / 12.0 * k2.u +
                               1.0 / 9.0 * k3.u - 1.0 / 8.0 * k4.u);
        const double ev = h * (-5.0 / 72.0 * k1.v + 1.0 / 12.0 * k2.v +
                               1.0 / 9.0 * k3.v - 1.0 / 8.0 * k4.v);
        const double su = opts.atol + opts.rtol * std::max(std::abs(y.u), std::abs(ynew.u));
        const double sv = opts.atol + opts.rtol * std::max(std::abs(y.v), std::abs(ynew.v));
        const double err = rms2(eu / su, ev / sv);

        if (std::isfinite(err) && err <= 1.0) {
            const double t_new = t + h;
            // Emit every grid point inside (t, t_new]; the boundary tolerance
            // absorbs rounding in i*dt vs the accumulated step sum.
            const double t_eps = 1e-9 * c.dt_out;
            while (next_out <= n_out) {
                const double ti = static_cast<double>(next_out) * c.dt_out;
                if (ti > t_new + t_eps) break;
                const double s = std::clamp((ti - t) / h, 0.0, 1.0);
                out.values[static_cast<std::size_t>(next_out - 1)] =
                    hermite_u(y, k1, ynew, k4, h, s);
                ++next_out;
            }
            t = t_new;
            y = ynew;
            f = k4;
            const double factor =
                (err == 0.0) ? kMaxFactor
                             : std::min(kMaxFactor, kSafety * std::pow(err, -1.0 / 3.0));
            h *= factor;
        } else {
            const double factor =
                std::isfinite(err) ? std::max(kMinFactor, kSafety * std::pow(err, -1.0 / 3.0))
                                   : 0.1;
            h *= factor;
            if (h < opts.min_step) {
                if (!std::isfinite(err))
                    throw NonFiniteState("integrate: state diverged at t=" + std::to_string(t));
                throw StepSizeUnderflow("integrate: step size underflow at t=" +
                                        std::to_string(t));
            }
        }
    }

    // t_end reached; any still-pending indices sit within rounding of t_end.
    while (next_out <= n_out) {
        out.values[static_cast<std::size_t>(next_out - 1)] = y.u;
        ++next_out;
    }
    return out;
}

SpikeStats spike_stats(const TimeSeries& series, double threshold) {
    const auto& v = series.values;
    if (v.empty()) throw Error("spike_stats: empty series");

    SpikeStats st;
    double total_duration = 0.0;
    const std::size_t n = v.size();
    std::size_t i = 0;
    while (i < n) {
        const bool starts = v[i] >= threshold && (i == 0 || v[i - 1] < threshold);
        if (!starts) {
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < n && v[j] >= threshold) ++j;
        ++st.count;
        total_duration += static_cast<double>(j - i) * series.dt;
        i = j;
    }
    st.rate = static_cast<double>(st.count) / (static_cast<double>(n) * series.dt);
    st.mean_duration = (st.count > 0) ? total_duration / st.count : 0.0;
    return st;
}

SpikeGrid spike_grid(std::pair<double, double> theta0_range,
                     std::pair<double, double> theta1_range,
                     int resolution0, int resolution1,
                     const SimConstants& consts, double threshold,
                     const IntegrateOptions& opts, Exec exec) {
    if (resolution0 < 2 || resolution1 < 2)
        throw Error("spike_grid: resolution must be >= 2 per axis");

    SpikeGrid grid;
    grid.theta0s.resize(static_cast<std::size_t>(resolution0));
    grid.theta1s.resize(static_cast<std::size_t>(resolution1));
    for (int i = 0; i < resolution0; ++i)
        grid.theta0s[static_cast<std::size_t>(i)] =
            theta0_range.first + (theta0_range.second - theta0_range.first) * i / (resolution0 - 1);
    for (int j = 0; j < resolution1; ++j)
        grid.theta1s[static_cast<std::size_t>(j)] =
            theta1_range.first + (theta1_range.second - theta1_range.first) * j / (resolution1 - 1);

    const std::size_t total = grid.theta0s.size() * grid.theta1s.size();
    grid.cells.resize(total);

    auto eval_cell = [&](std::size_t idx) {
        const std::size_t i0 = idx / grid.theta1s.size();
        const std::size_t i1 = idx % grid.theta1s.size();
        const ThetaPair th{grid.theta0s[i0], grid.theta1s[i1]};
        try {
            grid.cells[idx] = spike_stats(integrate(th, consts, opts), threshold);
        } catch (const Error&) {
            grid.cells[idx] = std::nullopt;
        }
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

void write_series_csv(const std::string& path, const TimeSeries& series,
                      const std::vector<double>* noisy) {
    if (noisy && noisy->size() != series.values.size())
        throw LengthMismatch("write_series_csv: noisy column length mismatch");
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << (noisy ? "t,u,d\n" : "t,u\n");
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        os << format_double(static_cast<double>(i + 1) * series.dt) << ','
           << format_double(series.values[i]);
        if (noisy) os << ',' << format_double((*noisy)[i]);
        os << '\n';
    }
    if (!os) throw IoError("write failed: " + path);
}

void write_spike_grid_csv(const std::string& path, const SpikeGrid& grid) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "theta0,theta1,rate,mean_duration,count\n";
    for (std::size_t i0 = 0; i0 < grid.theta0s.size(); ++i0) {
        for (std::size_t i1 = 0; i1 < grid.theta1s.size(); ++i1) {
            const auto& cell = grid.cell(i0, i1);
            os << format_double(grid.theta0s[i0]) << ',' << format_double(grid.theta1s[i1]) << ',';
            if (cell)
                os << format_double(cell->rate) << ',' << format_double(cell->mean_duration)
                   << ',' << cell->count;
            else
                os << "nan,nan,-1";  // missing cell
            os << '\n';
        }
    }
    if (!os) throw IoError("write failed: " + path);
}

} // namespace fhn
