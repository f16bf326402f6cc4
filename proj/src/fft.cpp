#include "nematic/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

namespace nematic::fft {

namespace {

// One cached c2c plan pair per (dim, m), with attached work buffers.
// FFTW's planner is not thread-safe and execution reuses the plan buffers,
// so both are guarded; the surrounding code calls transforms from the
// orchestrating thread and parallelizes mode loops instead.
struct PlanEntry {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    fftw_complex* in = nullptr;
    fftw_complex* out = nullptr;
    std::size_t n = 0;
    std::mutex mtx;

    PlanEntry(const Grid& g) {
        n = g.size();
        in = fftw_alloc_complex(n);
        out = fftw_alloc_complex(n);
        int dims[3] = {g.m, g.m, g.m};
        fwd = fftw_plan_dft(g.dim, dims, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
        inv = fftw_plan_dft(g.dim, dims, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~PlanEntry() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(inv);
        fftw_free(in);
        fftw_free(out);
    }
};

PlanEntry& plan_for(const Grid& g) {
    static std::mutex registry_mtx;
    static std::map<std::pair<int, int>, std::unique_ptr<PlanEntry>> registry;
    std::lock_guard lk(registry_mtx);
    auto key = std::make_pair(g.dim, g.m);
    auto it = registry.find(key);
    if (it == registry.end())
        it = registry.emplace(key, std::make_unique<PlanEntry>(g)).first;
    return *it->second;
}

} // namespace

void forward(const Grid& g, const double* in, std::complex<double>* out) {
    PlanEntry& p = plan_for(g);
    std::lock_guard lk(p.mtx);
    for (std::size_t i = 0; i < p.n; ++i) {
        p.in[i][0] = in[i];
        p.in[i][1] = 0.0;
    }
    fftw_execute(p.fwd);
    const double scale = 1.0 / static_cast<double>(p.n);
    for (std::size_t i = 0; i < p.n; ++i)
        out[i] = std::complex<double>(p.out[i][0] * scale, p.out[i][1] * scale);
}

void inverse(const Grid& g, const std::complex<double>* in, double* out) {
    PlanEntry& p = plan_for(g);
    std::lock_guard lk(p.mtx);
    for (std::size_t i = 0; i < p.n; ++i) {
        p.in[i][0] = in[i].real();
        p.in[i][1] = in[i].imag();
    }
    fftw_execute(p.inv);
    for (std::size_t i = 0; i < p.n; ++i) out[i] = p.out[i][0];
}

void forward_c2c(const Grid& g, const std::complex<double>* in, std::complex<double>* out) {
    PlanEntry& p = plan_for(g);
    std::lock_guard lk(p.mtx);
    for (std::size_t i = 0; i < p.n; ++i) {
        p.in[i][0] = in[i].real();
        p.in[i][1] = in[i].imag();
    }
    fftw_execute(p.fwd);
    for (std::size_t i = 0; i < p.n; ++i)
        out[i] = std::complex<double>(p.out[i][0], p.out[i][1]);
}

} // namespace nematic::fft
