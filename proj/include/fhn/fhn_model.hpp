#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fhn/errors.hpp"

namespace fhn {

// The two inference parameters of the FitzHugh-Nagumo system.
struct ThetaPair {
    double theta0 = 0.0;
    double theta1 = 0.0;
};

// Fixed simulation constants. t_end / dt_out must be a positive integer.
struct SimConstants {
    double gamma = 3.0;
    double zeta = -0.4;
    double u0 = 0.0;
    double v0 = 0.0;
    double t_end = 200.0;  // ms
    double dt_out = 0.2;   // ms

    // Number of output grid points N_t (grid t_i = i*dt_out, i = 1..N_t).
    int grid_points() const;
};

struct State {
    double u = 0.0;
    double v = 0.0;
};

// Membrane potential u sampled on the uniform grid t_i = i*dt, i = 1..N.
struct TimeSeries {
    double dt = 0.0;
    std::vector<double> values;
};

struct SpikeStats {
    double rate = 0.0;           // spikes per ms
    double mean_duration = 0.0;  // ms, 0 when count == 0
    int count = 0;
};

struct IntegrateOptions {
    double rtol = 1e-3;
    double atol = 1e-6;
    double min_step = 1e-10;  // ms; going below raises StepSizeUnderflow
};

// Right-hand side of the FitzHugh-Nagumo ODE:
//   du/dt = gamma*(u - u^3/3 + v + zeta)
//   dv/dt = -(1/gamma)*(u - theta0 + theta1*v)
State fhn_rhs(const State& state, const ThetaPair& theta, const SimConstants& consts);

// Adaptive Bogacki-Shampine RK3(2) from t=0 to t_end with cubic Hermite
// dense output on the uniform grid. Throws StepSizeUnderflow / NonFiniteState
// for pathological parameter sets.
TimeSeries integrate(const ThetaPair& theta, const SimConstants& consts,
                     const IntegrateOptions& opts = {});

// Threshold-crossing spike statistics. A spike starts where the series first
// reaches the threshold from below (or at index 0 if it starts at/above it)
// and lasts until the series drops below the threshold; a spike still open at
// the end contributes its partial duration.
SpikeStats spike_stats(const TimeSeries& series, double threshold);

// Cartesian rate/duration raster over a theta box. Cells where integration
// fails are left empty; the grid never aborts.
struct SpikeGrid {
    std::vector<double> theta0s;
    std::vector<double> theta1s;
    // Row-major: cell(i0, i1) = cells[i0 * theta1s.size() + i1].
    std::vector<std::optional<SpikeStats>> cells;

    const std::optional<SpikeStats>& cell(std::size_t i0, std::size_t i1) const {
        return cells[i0 * theta1s.size() + i1];
    }
};

SpikeGrid spike_grid(std::pair<double, double> theta0_range,
                     std::pair<double, double> theta1_range,
                     int resolution0, int resolution1,
                     const SimConstants& consts, double threshold,
                     const IntegrateOptions& opts = {},
                     Exec exec = Exec::Parallel);

// CSV serialization (17 significant digits, decimal-point floats).
void write_series_csv(const std::string& path, const TimeSeries& series,
                      const std::vector<double>* noisy = nullptr);
void write_spike_grid_csv(const std::string& path, const SpikeGrid& grid);

} // namespace fhn
