#include "fhn/fourier.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>

#include <fftw3.h>

#include "fhn/errors.hpp"

namespace fhn {

namespace {

// One cached r2c plan (with its own buffers) per input length. FFTW plan
// creation and execution on the plan's buffers are serialized; the transform
// is a negligible fraction of dataset construction so the lock is harmless.
struct PlanEntry {
    fftw_plan plan = nullptr;
    double* in = nullptr;
    fftw_complex* out = nullptr;
    std::size_t n = 0;

    explicit PlanEntry(std::size_t len) : n(len) {
        in = fftw_alloc_real(len);
        out = fftw_alloc_complex(len / 2 + 1);
        std::memset(in, 0, len * sizeof(double));
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in, out, FFTW_ESTIMATE);
        if (!plan) throw Error("dft_magnitudes: fftw plan creation failed");
    }
    ~PlanEntry() {
        if (plan) fftw_destroy_plan(plan);
        if (in) fftw_free(in);
        if (out) fftw_free(out);
    }
    PlanEntry(const PlanEntry&) = delete;
    PlanEntry& operator=(const PlanEntry&) = delete;
};

std::mutex g_fft_mutex;
std::map<std::size_t, PlanEntry>& plan_cache() {
    static std::map<std::size_t, PlanEntry> cache;
    return cache;
}

} // namespace

std::vector<double> dft_magnitudes(const std::vector<double>& x) {
    if (x.size() < 2) throw Error("dft_magnitudes: need at least 2 points");
    const std::size_t n = x.size();
    const std::size_t m = dft_magnitude_len(n);
    std::vector<double> mags(m);

    std::lock_guard<std::mutex> lock(g_fft_mutex);
    auto it = plan_cache().find(n);
    if (it == plan_cache().end())
        it = plan_cache().emplace(std::piecewise_construct, std::forward_as_tuple(n),
                                  std::forward_as_tuple(n)).first;
    PlanEntry& e = it->second;
    std::memcpy(e.in, x.data(), n * sizeof(double));
    fftw_execute(e.plan);
    for (std::size_t k = 0; k < m; ++k)
        mags[k] = std::hypot(e.out[k][0], e.out[k][1]);
    return mags;
}

} // namespace fhn
