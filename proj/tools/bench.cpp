// Serial vs OpenMP timings for the data-parallel kernels: batch gradients,
// spike-grid evaluation, and dataset construction.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "fhn/experiments.hpp"

using namespace fhn;
namespace chrono = std::chrono;

namespace {

double ms_since(chrono::steady_clock::time_point t0) {
    return chrono::duration<double, std::milli>(chrono::steady_clock::now() - t0).count();
}

Dataset random_dataset(std::size_t n, std::size_t feature_len, std::size_t target_len,
                       std::uint64_t seed) {
    Dataset ds;
    ds.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(seed, i);
        ds.samples[i].features.resize(feature_len);
        ds.samples[i].target.resize(target_len);
        for (double& x : ds.samples[i].features) x = rng.next_gaussian();
        for (double& x : ds.samples[i].target) x = rng.next_gaussian();
    }
    return ds;
}

void bench_batch_gradient(const char* name, const NetworkSpec& spec, int batch, int reps) {
    const Network net = init_weights(spec, 1);
    const Dataset ds = random_dataset(static_cast<std::size_t>(batch),
                                      static_cast<std::size_t>(spec.input_len),
                                      static_cast<std::size_t>(spec.output_len), 2);
    std::vector<std::size_t> idx(static_cast<std::size_t>(batch));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    std::vector<double> grad_serial, grad_parallel;
    auto t0 = chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) batch_gradient(net, ds, idx, grad_serial, Exec::Serial);
    const double serial = ms_since(t0) / reps;

    t0 = chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) batch_gradient(net, ds, idx, grad_parallel, Exec::Parallel);
    const double parallel = ms_since(t0) / reps;

    const bool identical = grad_serial == grad_parallel;
    std::printf("%-28s %10.3f %10.3f %8.2fx   %s\n", name, serial, parallel, serial / parallel,
                identical ? "bit-identical" : "MISMATCH");
}

void bench_spike_grid(int res) {
    const SimConstants consts;
    auto t0 = chrono::steady_clock::now();
    const SpikeGrid gs = spike_grid({-0.2, 1.0}, {-0.4, 1.2}, res, res, consts, 1.5, {},
                                    Exec::Serial);
    const double serial = ms_since(t0);
    t0 = chrono::steady_clock::now();
    const SpikeGrid gp = spike_grid({-0.2, 1.0}, {-0.4, 1.2}, res, res, consts, 1.5, {},
                                    Exec::Parallel);
    const double parallel = ms_since(t0);

    bool identical = gs.cells.size() == gp.cells.size();
    for (std::size_t i = 0; identical && i < gs.cells.size(); ++i)
        identical = gs.cells[i].has_value() == gp.cells[i].has_value() &&
                    (!gs.cells[i] || (gs.cells[i]->rate == gp.cells[i]->rate &&
                                      gs.cells[i]->count == gp.cells[i]->count));
    char name[64];
    std::snprintf(name, sizeof(name), "spike_grid %dx%d", res, res);
    std::printf("%-28s %10.3f %10.3f %8.2fx   %s\n", name, serial, parallel, serial / parallel,
                identical ? "bit-identical" : "MISMATCH");
}

void bench_build_dataset(std::size_t n) {
    ExperimentConfig cfg;
    BuildOptions opts;
    opts.n = n;
    opts.seed = 77;
    opts.with_noise = true;
    opts.noise_pool_seed = 78;

    auto t0 = chrono::steady_clock::now();
    opts.exec = Exec::Serial;
    const Dataset a = build_dataset(opts, cfg.prior, cfg.noise_prior, cfg.consts);
    const double serial = ms_since(t0);

    t0 = chrono::steady_clock::now();
    opts.exec = Exec::Parallel;
    const Dataset b = build_dataset(opts, cfg.prior, cfg.noise_prior, cfg.consts);
    const double parallel = ms_since(t0);

    bool identical = a.samples.size() == b.samples.size();
    for (std::size_t i = 0; identical && i < a.samples.size(); ++i)
        identical = a.samples[i].features == b.samples[i].features &&
                    a.samples[i].target == b.samples[i].target;
    char name[64];
    std::snprintf(name, sizeof(name), "build_dataset n=%zu", n);
    std::printf("%-28s %10.3f %10.3f %8.2fx   %s\n", name, serial, parallel, serial / parallel,
                identical ? "bit-identical" : "MISMATCH");
}

} // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled\n\n");
#endif
    std::printf("%-28s %10s %10s %9s\n", "kernel", "serial[ms]", "omp[ms]", "speedup");

    bench_batch_gradient("batch_grad dense 4x32", dense_network(1000, 4, 32, 2), 32, 20);
    bench_batch_gradient("batch_grad dense 16x128", dense_network(1000, 16, 128, 2), 32, 5);
    bench_batch_gradient("batch_grad cnn 8x[1,2,4]", cnn_network(1000, 3, 8, 2), 32, 20);
    bench_spike_grid(16);
    bench_build_dataset(256);
    return 0;
}
