// SpectralField: a real vector- or scalar-valued field on a periodic grid
// with a lazily computed Fourier-coefficient cache. The universal carrier
// of velocity, director, reciprocal-density and pressure-gradient data.
#pragma once

#include <complex>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "nematic/fft.hpp"
#include "nematic/grid.hpp"
#include "nematic/kernels.hpp"

namespace nematic {

class SpectralField {
public:
    SpectralField() = default;

    SpectralField(Grid grid, int components)
        : grid_(grid), comps_(components),
          vals_(static_cast<std::size_t>(components) * grid.size(), 0.0) {
        if (components < 1)
            throw std::invalid_argument("SpectralField: components must be >= 1");
    }

    /// Fill from a pointwise generator fn(component, x[3]) -> value.
    static SpectralField from_function(
        const Grid& g, int components,
        const std::function<double(int, const std::array<double, 3>&)>& fn) {
        SpectralField f(g, components);
        const std::size_t n = g.size();
        for (int c = 0; c < components; ++c) {
            double* dst = f.component_data(c);
            for (std::size_t i = 0; i < n; ++i) {
                auto ix = g.unflatten(i);
                std::array<double, 3> x{g.coord(ix[0]), g.coord(ix[1]),
                                        g.dim == 3 ? g.coord(ix[2]) : 0.0};
                dst[i] = fn(c, x);
            }
        }
        return f;
    }

    static SpectralField from_fourier(const Grid& g, int components,
                                      std::vector<std::complex<double>> spec) {
        SpectralField f(g, components);
        if (spec.size() != f.vals_.size())
            throw std::invalid_argument("from_fourier: size mismatch");
        f.four_ = std::move(spec);
        const std::size_t n = g.size();
        for (int c = 0; c < components; ++c)
            fft::inverse(g, f.four_.data() + static_cast<std::size_t>(c) * n,
                         f.vals_.data() + static_cast<std::size_t>(c) * n);
        f.four_ok_ = true;
        return f;
    }

    const Grid& grid() const { return grid_; }
    int components() const { return comps_; }
    std::size_t points() const { return grid_.size(); }
    std::size_t total_size() const { return vals_.size(); }

    std::span<const double> values() const { return vals_; }
    std::span<double> mutable_values() {
        four_ok_ = false;
        return vals_;
    }

    const double* component_ptr(int c) const {
        return vals_.data() + static_cast<std::size_t>(c) * points();
    }
    double* component_data(int c) {
        four_ok_ = false;
        return vals_.data() + static_cast<std::size_t>(c) * points();
    }

    double at(int c, std::size_t i) const { return component_ptr(c)[i]; }

    /// Fourier coefficients of one component; computed on first use.
    const std::complex<double>* fourier(int c) const {
        ensure_fourier();
        return four_.data() + static_cast<std::size_t>(c) * points();
    }

    void ensure_fourier() const {
        if (four_ok_) return;
        four_.resize(vals_.size());
        const std::size_t n = points();
        for (int c = 0; c < comps_; ++c)
            fft::forward(grid_, vals_.data() + static_cast<std::size_t>(c) * n,
                         four_.data() + static_cast<std::size_t>(c) * n);
        four_ok_ = true;
    }

    bool fourier_cached() const { return four_ok_; }

    /// Drop the cache (used before long-term storage of trajectories).
    void drop_fourier() const {
        four_ok_ = false;
        four_.clear();
        four_.shrink_to_fit();
    }

private:
    Grid grid_{};
    int comps_ = 0;
    std::vector<double> vals_;
    mutable std::vector<std::complex<double>> four_;
    mutable bool four_ok_ = false;
};

// ---------------------------------------------------------------------------
// pointwise arithmetic (allocating, pure)
// ---------------------------------------------------------------------------

inline void check_same_shape(const SpectralField& a, const SpectralField& b,
                             const char* what) {
    if (!(a.grid() == b.grid()) || a.components() != b.components())
        throw std::invalid_argument(std::string(what) + ": field shape mismatch");
}

inline SpectralField axpy(double alpha, const SpectralField& x, const SpectralField& y) {
    check_same_shape(x, y, "axpy");
    SpectralField r(x.grid(), x.components());
    auto xs = x.values();
    auto ys = y.values();
    auto rs = r.mutable_values();
    kern::parallel_for(rs.size(), [&](std::size_t i) { rs[i] = alpha * xs[i] + ys[i]; });
    return r;
}

inline SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    return axpy(1.0, a, b);
}

inline SpectralField operator-(const SpectralField& a, const SpectralField& b) {
    return axpy(-1.0, b, a);
}

inline SpectralField scaled(const SpectralField& a, double s) {
    SpectralField r(a.grid(), a.components());
    auto as = a.values();
    auto rs = r.mutable_values();
    kern::parallel_for(rs.size(), [&](std::size_t i) { rs[i] = s * as[i]; });
    return r;
}

/// Pointwise product of a scalar field with every component of f.
inline SpectralField pointwise_scale(const SpectralField& scalar, const SpectralField& f) {
    if (scalar.components() != 1)
        throw std::invalid_argument("pointwise_scale: first argument must be scalar");
    SpectralField r(f.grid(), f.components());
    const std::size_t n = f.points();
    const double* s = scalar.component_ptr(0);
    for (int c = 0; c < f.components(); ++c) {
        const double* fc = f.component_ptr(c);
        double* rc = r.component_data(c);
        kern::parallel_for(n, [&](std::size_t i) { rc[i] = s[i] * fc[i]; });
    }
    return r;
}

/// Pointwise Euclidean magnitude across components (scalar field).
inline SpectralField magnitude(const SpectralField& f) {
    SpectralField r(f.grid(), 1);
    const std::size_t n = f.points();
    double* rc = r.component_data(0);
    kern::parallel_for(n, [&](std::size_t i) {
        double s = 0.0;
        for (int c = 0; c < f.components(); ++c) {
            double v = f.at(c, i);
            s += v * v;
        }
        rc[i] = std::sqrt(s);
    });
    return r;
}

} // namespace nematic
