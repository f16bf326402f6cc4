/// @file test_spectral.cpp
/// @brief Spectral-core primitives: derivatives against a finite-difference
/// oracle, heat semigroup identities, Leray/Riesz projector algebra,
/// transform round trips, Parseval, and the serial-vs-OpenMP kernel match.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nematic/spectral.hpp"

using namespace nematic;

namespace {

// Deterministic band-limited random field: modes with |k_axis| <= kmax.
SpectralField random_band_limited(const Grid& g, int comps, int kmax,
                                  unsigned seed, bool mean_zero = true) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    SpectralField f(g, comps);
    for (int c = 0; c < comps; ++c) {
        double* p = f.component_data(c);
        std::fill(p, p + g.size(), 0.0);
        for (int kx = mean_zero ? 1 : 0; kx <= kmax; ++kx)
            for (int ky = -kmax; ky <= kmax; ++ky)
                for (int kz = (g.dim == 3 ? -kmax : 0); kz <= (g.dim == 3 ? kmax : 0); ++kz) {
                    if (mean_zero && kx == 0 && ky == 0 && kz == 0) continue;
                    double a = amp(rng), b = amp(rng);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        auto ix = g.unflatten(i);
                        double phase = two_pi / g.length *
                                       (kx * g.coord(ix[0]) + ky * g.coord(ix[1]) +
                                        (g.dim == 3 ? kz * g.coord(ix[2]) : 0.0));
                        p[i] += a * std::cos(phase) + b * std::sin(phase);
                    }
                }
    }
    return f;
}

// 4th-order centered finite difference along an axis on the same grid —
// the independent oracle for the spectral derivative.
SpectralField fd4_derivative(const SpectralField& f, int axis) {
    const Grid& g = f.grid();
    SpectralField out(g, f.components());
    const double h = g.spacing();
    for (int c = 0; c < f.components(); ++c) {
        const double* in = f.component_ptr(c);
        double* dst = out.component_data(c);
        for (std::size_t i = 0; i < g.size(); ++i) {
            auto ix = g.unflatten(i);
            auto shifted = [&](int offset) {
                auto jx = ix;
                jx[axis] = ((jx[axis] + offset) % g.m + g.m) % g.m;
                return in[g.flatten(jx)];
            };
            dst[i] = (-shifted(2) + 8.0 * shifted(1) - 8.0 * shifted(-1) + shifted(-2)) / (12.0 * h);
        }
    }
    return out;
}

} // namespace

TEST_CASE("derivative of a constant field is zero") {
    Grid g(2, 32);
    SpectralField f = SpectralField::from_function(g, 1, [](int, const auto&) { return 3.7; });
    for (int a = 0; a < 2; ++a)
        CHECK(linf_norm(derivative(f, a)) < 1e-13);
}

TEST_CASE("derivative of sin(2 pi x/L) is exact to 1e-12 at M=32") {
    Grid g(2, 32);
    const double k = two_pi / g.length;
    auto f = SpectralField::from_function(g, 1, [&](int, const auto& x) { return std::sin(k * x[0]); });
    auto expect = SpectralField::from_function(g, 1, [&](int, const auto& x) { return k * std::cos(k * x[0]); });
    CHECK(max_abs_diff(derivative(f, 0), expect) < 1e-12);
}

TEST_CASE("derivative matches 4th-order finite differences to O(h^4)") {
    // band-limited field, low modes: FD4 error ~ (kh)^4/30 * |f|
    for (int m : {32, 64}) {
        Grid g(2, m);
        auto f = random_band_limited(g, 1, 2, 99);
        double h = g.spacing();
        double scale = linf_norm(f);
        for (int a = 0; a < 2; ++a) {
            double err = max_abs_diff(derivative(f, a), fd4_derivative(f, a));
            double kmax_h = 2.0 * two_pi / g.length * h;
            CHECK(err < 0.2 * scale * std::pow(kmax_h, 4) * 2 * two_pi / g.length);
        }
    }
}

TEST_CASE("derivative axis out of range throws") {
    Grid g(2, 32);
    SpectralField f(g, 1);
    CHECK_THROWS_AS(derivative(f, 2), std::invalid_argument);
    CHECK_THROWS_AS(derivative(f, -1), std::invalid_argument);
}

TEST_CASE("heat semigroup: t=0 identity, eigenmode decay, semigroup law") {
    Grid g(2, 32);
    auto f = random_band_limited(g, 1, 3, 7);
    CHECK(max_abs_diff(heat_semigroup(f, 0.0), f) == 0.0);

    const double k = two_pi / g.length;
    auto mode = SpectralField::from_function(g, 1, [&](int, const auto& x) {
        return std::cos(k * (x[0] + 2.0 * x[1]));
    });
    double mu = k * k * 5.0;
    double t = 0.17;
    auto decayed = heat_semigroup(mode, t);
    auto expect = scaled(mode, std::exp(-mu * t));
    CHECK(max_abs_diff(decayed, expect) < 1e-13);

    auto once = heat_semigroup(f, 0.3);
    auto twice = heat_semigroup(heat_semigroup(f, 0.11), 0.19);
    CHECK(max_abs_diff(once, twice) < 1e-12);

    CHECK_THROWS_AS(heat_semigroup(f, -0.1), std::invalid_argument);
}

TEST_CASE("heat semigroup is an L2 contraction") {
    Grid g(2, 32);
    auto f = random_band_limited(g, 2, 4, 21);
    double n0 = l2_norm(f);
    for (double t : {0.01, 0.1, 1.0, 10.0})
        CHECK(l2_norm(heat_semigroup(f, t)) <= n0 * (1.0 + 1e-14));
}

TEST_CASE("derivative commutes with heat semigroup") {
    Grid g(2, 32);
    auto f = random_band_limited(g, 1, 4, 31);
    auto a = derivative(heat_semigroup(f, 0.2), 1);
    auto b = heat_semigroup(derivative(f, 1), 0.2);
    CHECK(max_abs_diff(a, b) < 1e-12);
}

TEST_CASE("Leray projector: kills gradients, fixes div-free fields, idempotent") {
    Grid g(2, 64);
    auto phi = random_band_limited(g, 1, 4, 3);
    auto grad_phi = gradient(remove_mean(phi));
    CHECK(linf_norm(leray_project(grad_phi)) < 1e-12);

    // divergence-free field from a stream function
    auto psi = random_band_limited(g, 1, 4, 5);
    SpectralField u(g, 2);
    {
        auto dpsi_dy = derivative(psi, 1);
        auto dpsi_dx = derivative(psi, 0);
        std::copy(dpsi_dy.component_ptr(0), dpsi_dy.component_ptr(0) + g.size(), u.component_data(0));
        auto* u1 = u.component_data(1);
        const double* s = dpsi_dx.component_ptr(0);
        for (std::size_t i = 0; i < g.size(); ++i) u1[i] = -s[i];
    }
    CHECK(max_abs_diff(leray_project(u), u) < 1e-12);

    auto v = random_band_limited(g, 2, 4, 11);
    auto pv = leray_project(v);
    CHECK(spectral_divergence_norm(pv) < 1e-12);
    CHECK(max_abs_diff(leray_project(pv), pv) < 1e-12);

    SpectralField bad(g, 1);
    CHECK_THROWS_AS(leray_project(bad), std::invalid_argument);
}

TEST_CASE("Leray projector passes the zero mode through") {
    Grid g(2, 32);
    SpectralField v = SpectralField::from_function(g, 2, [](int c, const auto&) {
        return c == 0 ? 1.5 : -0.25;
    });
    CHECK(max_abs_diff(leray_project(v), v) < 1e-13);
}

TEST_CASE("Riesz-Riesz projector: Helmholtz algebra") {
    Grid g(2, 64);
    auto v = random_band_limited(g, 2, 4, 17);

    // zero on divergence-free input
    auto pv = leray_project(v);
    CHECK(linf_norm(riesz_riesz(pv)) < 1e-12);

    // identity on gradients
    auto phi = remove_mean(random_band_limited(g, 1, 4, 19));
    auto gphi = gradient(phi);
    CHECK(max_abs_diff(riesz_riesz(gphi), gphi) < 1e-12);

    // Helmholtz decomposition: P v + RR v = v (zero mode handled by P)
    auto sum = leray_project(v) + riesz_riesz(v);
    CHECK(max_abs_diff(sum, v) < 1e-12);

    // output is curl-free: RR v is a gradient, so Leray kills it
    CHECK(linf_norm(leray_project(riesz_riesz(v))) < 1e-12);
}

TEST_CASE("transform round trip and Parseval") {
    for (int dim : {2, 3}) {
        Grid g(dim, dim == 2 ? 64 : 16);
        auto f = random_band_limited(g, 2, 3, 41);
        double scale = linf_norm(f);
        SpectralField back = SpectralField::from_fourier(
            g, f.components(),
            [&] {
                f.ensure_fourier();
                std::vector<std::complex<double>> spec;
                for (int c = 0; c < f.components(); ++c)
                    spec.insert(spec.end(), f.fourier(c), f.fourier(c) + g.size());
                return spec;
            }());
        CHECK(max_abs_diff(back, f) < 1e-12 * scale);
        CHECK(l2_norm(f) == doctest::Approx(spectral_l2_norm(f)).epsilon(1e-10));
    }
}

TEST_CASE("dealias removes high modes and preserves low ones") {
    Grid g(2, 32);
    const double k = two_pi / g.length;
    auto low = SpectralField::from_function(g, 1, [&](int, const auto& x) { return std::sin(3 * k * x[0]); });
    auto high = SpectralField::from_function(g, 1, [&](int, const auto& x) { return std::sin(14 * k * x[1]); });
    CHECK(max_abs_diff(dealias(low), low) < 1e-13);
    CHECK(linf_norm(dealias(high)) < 1e-13);
}

TEST_CASE("serial and OpenMP kernels produce bit-identical results") {
    Grid g(2, 64);
    auto f = random_band_limited(g, 2, 5, 77);
    auto vals = f.values();
    double s_par = kern::sum(vals.size(), [&](std::size_t i) { return vals[i] * vals[i]; },
                             kern::exec::openmp);
    double s_ser = kern::sum(vals.size(), [&](std::size_t i) { return vals[i] * vals[i]; },
                             kern::exec::serial);
    CHECK(s_par == s_ser);

    double m_par = kern::max(vals.size(), [&](std::size_t i) { return std::abs(vals[i]); },
                             kern::exec::openmp);
    double m_ser = kern::max(vals.size(), [&](std::size_t i) { return std::abs(vals[i]); },
                             kern::exec::serial);
    CHECK(m_par == m_ser);

    std::vector<double> a(vals.size()), b(vals.size());
    kern::parallel_for(vals.size(), [&](std::size_t i) { a[i] = std::sin(vals[i]); },
                       kern::exec::openmp);
    kern::parallel_for(vals.size(), [&](std::size_t i) { b[i] = std::sin(vals[i]); },
                       kern::exec::serial);
    CHECK(a == b);
}

TEST_CASE("advect and elastic stress divergence sanity") {
    Grid g(2, 32);
    // constant velocity advecting a single mode: v . grad f exact
    const double k = two_pi / g.length;
    SpectralField v = SpectralField::from_function(g, 2, [](int c, const auto&) {
        return c == 0 ? 0.3 : -0.2;
    });
    auto f = SpectralField::from_function(g, 1, [&](int, const auto& x) { return std::sin(k * x[0]); });
    auto adv = advect(v, f);
    auto expect = SpectralField::from_function(g, 1, [&](int, const auto& x) {
        return 0.3 * k * std::cos(k * x[0]);
    });
    CHECK(max_abs_diff(adv, expect) < 1e-12);

    // director wave d = (cos(m x), sin(m x)): grad d (.) grad d is constant,
    // so its divergence vanishes
    auto d = SpectralField::from_function(g, 2, [&](int c, const auto& x) {
        return c == 0 ? std::cos(k * x[0]) : std::sin(k * x[0]);
    });
    CHECK(linf_norm(elastic_stress_divergence(d)) < 1e-12);
    auto gm = grad_magnitude_squared(gradient(d));
    auto gm_expect = SpectralField::from_function(g, 1, [&](int, const auto&) { return k * k; });
    CHECK(max_abs_diff(gm, gm_expect) < 1e-12);
}

TEST_CASE("grid validation") {
    CHECK_THROWS_AS(Grid(4, 32), std::invalid_argument);
    CHECK_THROWS_AS(Grid(2, 33), std::invalid_argument);
    CHECK_THROWS_AS(Grid(2, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid(2, 32, -1.0), std::invalid_argument);
    PhysicalConstants bad{-1.0, 1.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
