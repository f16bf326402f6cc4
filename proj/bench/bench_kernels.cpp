// Timing comparison of the data-parallel inner kernels against the serial
// reference path. Every kernel is exercised through the same chunked
// primitives the library uses, so serial and OpenMP results are
// bit-identical; the table reports the wall-clock ratio.
//
//   bench_kernels [M] [repeats]

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "nematic/interp.hpp"
#include "nematic/spectral.hpp"

using namespace nematic;
using clock_type = std::chrono::steady_clock;

namespace {

double time_best(int repeats, const std::function<void()>& fn) {
    double best = 1e30;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = clock_type::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(clock_type::now() - t0).count());
    }
    return best;
}

void report(const char* name, double serial, double parallel) {
    std::printf("%-28s %10.3f ms %10.3f ms   x%.2f\n", name, serial * 1e3, parallel * 1e3,
                serial / parallel);
}

} // namespace

int main(int argc, char** argv) {
    kern::init_threads();
    const int m = argc > 1 ? std::atoi(argv[1]) : 128;
    const int repeats = argc > 2 ? std::atoi(argv[2]) : 5;
    Grid g(2, m);
    const std::size_t n = g.size();
    std::printf("grid %dx%d, best of %d\n", m, m, repeats);
    std::printf("%-28s %13s %13s %7s\n", "kernel", "serial", "openmp", "speedup");

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> a(n), b(n), out(n);
    for (auto& v : a) v = unif(rng);
    for (auto& v : b) v = unif(rng);

    // pointwise product with a transcendental, the shape of the nonlinear
    // source assembly
    for (auto how : {kern::exec::serial, kern::exec::openmp}) {
        double t = time_best(repeats, [&] {
            kern::parallel_for(n, [&](std::size_t i) { out[i] = std::exp(a[i]) * b[i]; }, how);
        });
        static double serial_t = 0.0;
        if (how == kern::exec::serial) serial_t = t;
        else report("pointwise exp-product", serial_t, t);
    }

    // chunked reduction (norm accumulation)
    {
        double ts = time_best(repeats, [&] {
            volatile double s = kern::sum(n, [&](std::size_t i) { return a[i] * a[i]; },
                                          kern::exec::serial);
            (void)s;
        });
        double tp = time_best(repeats, [&] {
            volatile double s = kern::sum(n, [&](std::size_t i) { return a[i] * a[i]; },
                                          kern::exec::openmp);
            (void)s;
        });
        report("chunked norm reduction", ts, tp);
    }

    // heat-semigroup multiplier over all modes
    {
        std::vector<std::complex<double>> spec(n), dst(n);
        for (auto& v : spec) v = {unif(rng), unif(rng)};
        auto kernel = [&](kern::exec how) {
            kern::parallel_for(n, [&](std::size_t i) {
                auto ix = g.unflatten(i);
                double k2 = 0.0;
                for (int ax = 0; ax < 2; ++ax) {
                    double kap = g.wavenumber(ix[ax]);
                    k2 += kap * kap;
                }
                dst[i] = std::exp(-k2 * 0.01) * spec[i];
            }, how);
        };
        double ts = time_best(repeats, [&] { kernel(kern::exec::serial); });
        double tp = time_best(repeats, [&] { kernel(kern::exec::openmp); });
        report("heat multiplier", ts, tp);
    }

    // exponential-integrator step update (the inner solver recurrence)
    {
        std::vector<std::complex<double>> prev(n), s0(n), s1(n), next(n);
        std::vector<double> E(n), i0(n), i1(n);
        for (std::size_t i = 0; i < n; ++i) {
            prev[i] = {a[i], b[i]};
            s0[i] = {b[i], -a[i]};
            s1[i] = {a[i] * b[i], a[i]};
            E[i] = std::exp(-std::abs(a[i]));
            i0[i] = 0.4;
            i1[i] = 0.6;
        }
        auto kernel = [&](kern::exec how) {
            kern::parallel_for(n, [&](std::size_t i) {
                next[i] = E[i] * prev[i] + 0.01 * (i0[i] * s0[i] + i1[i] * s1[i]);
            }, how);
        };
        double ts = time_best(repeats, [&] { kernel(kern::exec::serial); });
        double tp = time_best(repeats, [&] { kernel(kern::exec::openmp); });
        report("integrator step update", ts, tp);
    }

    // scattered interpolation gather (semi-Lagrangian foot evaluation)
    {
        auto f = SpectralField::from_function(g, 1, [&](int, const auto& x) {
            return std::sin(x[0]) * std::cos(2.0 * x[1]);
        });
        std::vector<double> pos(n * 2);
        for (std::size_t i = 0; i < n; ++i) {
            auto ix = g.unflatten(i);
            pos[2 * i] = g.coord(ix[0]) + 0.37;
            pos[2 * i + 1] = g.coord(ix[1]) - 0.81;
        }
        auto kernel = [&](kern::exec how) {
            kern::parallel_for(n, [&](std::size_t i) {
                out[i] = interp::sample(f, 0, pos.data() + 2 * i);
            }, how);
        };
        double ts = time_best(repeats, [&] { kernel(kern::exec::serial); });
        double tp = time_best(repeats, [&] { kernel(kern::exec::openmp); });
        report("interpolation gather", ts, tp);
    }

    return 0;
}
