// Data-parallel inner loops shared by every field operation.
//
// Each kernel exists in two flavours selected by kern::exec: an OpenMP
// version used in production and a serial reference used by the tests and
// the benchmark target. Reductions are chunked with a fixed decomposition
// that does not depend on the thread count, so serial and parallel runs
// produce bit-identical sums and repeated runs are deterministic.
#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nematic::kern {

enum class exec { serial, openmp };

/// Default execution policy; flipped to serial by NEMATIC_SERIAL=1.
inline exec default_exec() {
    static const exec e = [] {
        const char* s = std::getenv("NEMATIC_SERIAL");
        return (s && s[0] == '1') ? exec::serial : exec::openmp;
    }();
    return e;
}

/// Cap internal parallelism; reads EL_THREADS once at startup.
inline void init_threads() {
#ifdef _OPENMP
    if (const char* s = std::getenv("EL_THREADS")) {
        int n = std::atoi(s);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

inline constexpr std::size_t reduce_chunks = 64;

template <class F>
inline void parallel_for(std::size_t n, F&& body, exec how = default_exec()) {
    if (how == exec::openmp) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            body(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) body(i);
    }
}

namespace detail {
inline std::size_t chunk_begin(std::size_t n, std::size_t c) {
    return n * c / reduce_chunks;
}
} // namespace detail

/// Deterministic chunked sum: partial sums per fixed chunk, combined in
/// chunk order regardless of the execution policy.
template <class F>
inline double sum(std::size_t n, F&& term, exec how = default_exec()) {
    double partial[reduce_chunks] = {0.0};
    if (how == exec::openmp) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(reduce_chunks); ++c) {
            double s = 0.0;
            const std::size_t b = detail::chunk_begin(n, c);
            const std::size_t e = detail::chunk_begin(n, c + 1);
            for (std::size_t i = b; i < e; ++i) s += term(i);
            partial[c] = s;
        }
    } else {
        for (std::size_t c = 0; c < reduce_chunks; ++c) {
            double s = 0.0;
            const std::size_t b = detail::chunk_begin(n, c);
            const std::size_t e = detail::chunk_begin(n, c + 1);
            for (std::size_t i = b; i < e; ++i) s += term(i);
            partial[c] = s;
        }
    }
    double total = 0.0;
    for (std::size_t c = 0; c < reduce_chunks; ++c) total += partial[c];
    return total;
}

template <class F>
inline double max(std::size_t n, F&& term, exec how = default_exec()) {
    double partial[reduce_chunks];
    std::fill(partial, partial + reduce_chunks, -std::numeric_limits<double>::infinity());
    if (how == exec::openmp) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(reduce_chunks); ++c) {
            double s = -std::numeric_limits<double>::infinity();
            const std::size_t b = detail::chunk_begin(n, c);
            const std::size_t e = detail::chunk_begin(n, c + 1);
            for (std::size_t i = b; i < e; ++i) s = std::max(s, term(i));
            partial[c] = s;
        }
    } else {
        for (std::size_t c = 0; c < reduce_chunks; ++c) {
            double s = -std::numeric_limits<double>::infinity();
            const std::size_t b = detail::chunk_begin(n, c);
            const std::size_t e = detail::chunk_begin(n, c + 1);
            for (std::size_t i = b; i < e; ++i) s = std::max(s, term(i));
            partial[c] = s;
        }
    }
    double total = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < reduce_chunks; ++c) total = std::max(total, partial[c]);
    return n == 0 ? 0.0 : total;
}

} // namespace nematic::kern
