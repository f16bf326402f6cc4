// Periodic isotropic grid on [0,L)^N and the physical constants of the
// coupled flow/director system.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace nematic {

inline constexpr double two_pi = 6.283185307179586476925286766559;

/// Isotropic periodic grid: N in {2,3}, M points per axis (power of two),
/// box [0,L)^N.
struct Grid {
    int dim = 2;
    int m = 32;
    double length = two_pi;

    Grid() = default;
    Grid(int dim_, int m_, double length_ = two_pi)
        : dim(dim_), m(m_), length(length_) {
        validate();
    }

    void validate() const {
        if (dim != 2 && dim != 3)
            throw std::invalid_argument("Grid: dim must be 2 or 3, got " + std::to_string(dim));
        if (m < 8 || (m & (m - 1)) != 0)
            throw std::invalid_argument("Grid: M must be a power of two >= 8, got " + std::to_string(m));
        if (!(length > 0.0))
            throw std::invalid_argument("Grid: box length must be positive");
    }

    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(m);
        return s;
    }

    double spacing() const { return length / m; }

    /// Signed integer mode number for a storage index along one axis.
    int mode(int idx) const { return idx <= m / 2 ? idx : idx - m; }

    /// Physical wavenumber 2*pi*k/L for a storage index along one axis.
    double wavenumber(int idx) const { return two_pi * mode(idx) / length; }

    /// Decompose a flat row-major index into per-axis indices.
    std::array<int, 3> unflatten(std::size_t flat) const {
        std::array<int, 3> ix{0, 0, 0};
        for (int a = dim - 1; a >= 0; --a) {
            ix[a] = static_cast<int>(flat % static_cast<std::size_t>(m));
            flat /= static_cast<std::size_t>(m);
        }
        return ix;
    }

    std::size_t flatten(const std::array<int, 3>& ix) const {
        std::size_t f = 0;
        for (int a = 0; a < dim; ++a)
            f = f * static_cast<std::size_t>(m) + static_cast<std::size_t>(ix[a]);
        return f;
    }

    /// Physical coordinate of grid point index along one axis.
    double coord(int idx) const { return spacing() * idx; }

    /// Largest wavenumber magnitude present on the grid (corner mode).
    double max_wavenumber() const {
        return two_pi * (m / 2) / length * std::sqrt(static_cast<double>(dim));
    }

    /// Smallest nonzero wavenumber magnitude.
    double min_wavenumber() const { return two_pi / length; }

    bool operator==(const Grid& o) const {
        return dim == o.dim && m == o.m && length == o.length;
    }
};

/// Viscosity nu, elastic coupling lambda, director relaxation gamma.
struct PhysicalConstants {
    double nu = 1.0;
    double lambda = 1.0;
    double gamma = 1.0;

    void validate() const {
        if (!(nu > 0.0) || !(lambda > 0.0) || !(gamma > 0.0))
            throw std::invalid_argument("PhysicalConstants: nu, lambda, gamma must be positive");
    }
};

} // namespace nematic
