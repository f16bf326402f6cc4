/// @file test_besov.cpp
/// @brief Dyadic decomposition and Besov norm calculus: partition of unity,
/// annulus support, reconstruction, single-mode values against a direct
/// quadrature oracle, heat-kernel characterization equivalence, embedding
/// ratios, r-monotonicity, scaling invariance, and the smallness functional.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "nematic/besov.hpp"

using namespace nematic;
using namespace nematic::besov;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

SpectralField random_band_limited(const Grid& g, int comps, int kmax, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    SpectralField f(g, comps);
    for (int c = 0; c < comps; ++c) {
        double* p = f.component_data(c);
        std::fill(p, p + g.size(), 0.0);
        for (int kx = 0; kx <= kmax; ++kx)
            for (int ky = -kmax; ky <= kmax; ++ky) {
                if (kx == 0 && ky <= 0) continue;
                double a = amp(rng), b = amp(rng);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    auto ix = g.unflatten(i);
                    double ph = two_pi / g.length * (kx * g.coord(ix[0]) + ky * g.coord(ix[1]));
                    p[i] += a * std::cos(ph) + b * std::sin(ph);
                }
            }
    }
    return f;
}

/// Single real mode A cos(k . x) with |kappa| = 2pi|k|/L.
SpectralField cosine_mode(const Grid& g, int kx, int ky, double amplitude) {
    return SpectralField::from_function(g, 1, [&](int, const auto& x) {
        return amplitude * std::cos(two_pi / g.length * (kx * x[0] + ky * x[1]));
    });
}

/// Direct quadrature oracle for the Besov norm of a single cosine mode:
/// block q of A cos(k.x) is phi_q(|kappa|) A cos(k.x), and the definition's
/// grid L^p quadrature of that block is evaluated by a plain double loop
/// over grid points. No FFT or block machinery is involved.
double single_mode_besov_oracle(const Grid& g, int kx, int ky, double amplitude,
                                const BesovIndex& idx) {
    double kabs = two_pi / g.length * std::hypot(kx, ky);
    double lp_of_mode;
    if (std::isinf(idx.p)) {
        lp_of_mode = std::abs(amplitude);
    } else {
        double s = 0.0;
        for (int i = 0; i < g.m; ++i)
            for (int j = 0; j < g.m; ++j) {
                double ph = two_pi / g.length * (kx * g.coord(i) + ky * g.coord(j));
                s += std::pow(std::abs(amplitude * std::cos(ph)), idx.p);
            }
        lp_of_mode = std::pow(s * std::pow(g.spacing(), g.dim), 1.0 / idx.p);
    }
    auto [q0, q1] = dyadic_q_range(g);
    double acc = 0.0, sup = 0.0;
    for (int q = q0; q <= q1; ++q) {
        double phi = annulus_phi(kabs, q);
        if (phi == 0.0) continue;
        double w = std::exp2(idx.s * q) * phi * lp_of_mode;
        if (std::isinf(idx.r))
            sup = std::max(sup, w);
        else
            acc += std::pow(w, idx.r);
    }
    return std::isinf(idx.r) ? sup : std::pow(acc, 1.0 / idx.r);
}

} // namespace

TEST_CASE("partition of unity holds on every active frequency") {
    Grid g(2, 64);
    auto [q0, q1] = dyadic_q_range(g);
    for (std::size_t i = 1; i < g.size(); ++i) {
        auto ix = g.unflatten(i);
        double k2 = 0.0;
        for (int a = 0; a < 2; ++a) {
            double k = g.wavenumber(ix[a]);
            k2 += k * k;
        }
        double kabs = std::sqrt(k2);
        if (kabs == 0.0) continue;
        double s = 0.0;
        for (int q = q0; q <= q1; ++q) s += annulus_phi(kabs, q);
        REQUIRE(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single mode at |kappa| = 2^q concentrates in blocks q-1, q, q+1") {
    Grid g(2, 64); // L = 2pi, so |kappa| = |k|
    auto f = cosine_mode(g, 4, 0, 1.0); // |kappa| = 4 = 2^2
    auto dec = dyadic_blocks(f);
    for (auto& [q, blk] : dec.blocks) {
        double n = linf_norm(blk);
        if (q < 1 || q > 3)
            CHECK(n < 1e-13);
    }
    // and the sum over exactly those three blocks reconstructs the mode
    auto sum = dyadic_block(f, 1) + dyadic_block(f, 2) + dyadic_block(f, 3);
    CHECK(max_abs_diff(sum, f) < 1e-12);
}

TEST_CASE("zero field decomposes into zero blocks and has zero norm") {
    Grid g(2, 32);
    SpectralField z(g, 2);
    auto dec = dyadic_blocks(z);
    for (auto& [q, blk] : dec.blocks) CHECK(linf_norm(blk) == 0.0);
    CHECK(besov_norm(z, BesovIndex(0.5, 2, 2)) == 0.0);
}

TEST_CASE("blocks reconstruct a random mean-zero field") {
    Grid g(2, 64);
    auto f = random_band_limited(g, 2, 6, 13);
    auto dec = dyadic_blocks(f);
    SpectralField sum(g, 2);
    for (auto& [q, blk] : dec.blocks) sum = sum + blk;
    CHECK(max_abs_diff(sum, f) < 1e-10 * linf_norm(f));
}

TEST_CASE("almost orthogonality: blocks two octaves apart do not interact") {
    Grid g(2, 64);
    auto f = random_band_limited(g, 1, 8, 29);
    auto [q0, q1] = dyadic_q_range(g);
    for (int q = q0; q <= q1; ++q)
        for (int qq = q0; qq <= q1; ++qq) {
            if (std::abs(q - qq) < 2) continue;
            auto twice = dyadic_block(dyadic_block(f, q), qq);
            REQUIRE(linf_norm(twice) < 1e-12);
        }
}

TEST_CASE("non-mean-zero input is rejected") {
    Grid g(2, 32);
    auto f = SpectralField::from_function(g, 1, [](int, const auto&) { return 1.0; });
    CHECK_THROWS_AS(dyadic_blocks(f), std::invalid_argument);
    CHECK_THROWS_AS(besov_norm(f, BesovIndex(0, 2, 2)), std::invalid_argument);
}

TEST_CASE("single-mode Besov norm matches the direct quadrature oracle") {
    Grid g(2, 64);
    struct Case { int kx, ky; double amp; BesovIndex idx; };
    std::vector<Case> cases = {
        {4, 0, 2.0, BesovIndex(1.0, 2.0, 2.0)},
        {4, 0, 2.0, BesovIndex(-0.5, 4.0, 1.0)},
        {3, 4, 0.7, BesovIndex(0.0, 2.0, inf)},
        {1, 1, 1.3, BesovIndex(-1.0, inf, 2.0)},
        {8, 0, 1.0, BesovIndex(0.3, 3.0, 1.5)},
    };
    for (auto& cs : cases) {
        auto f = cosine_mode(g, cs.kx, cs.ky, cs.amp);
        double got = besov_norm(f, cs.idx);
        double want = single_mode_besov_oracle(g, cs.kx, cs.ky, cs.amp, cs.idx);
        CHECK(got == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("B^0_{2,2} is equivalent to L2 on band-limited fields") {
    Grid g(2, 64);
    for (unsigned seed : {1u, 2u, 3u, 4u, 5u}) {
        auto f = random_band_limited(g, 1, 6, seed);
        double ratio = besov_norm(f, BesovIndex(0, 2, 2)) / l2_norm(f);
        CHECK(ratio > 0.9);
        CHECK(ratio < 1.1);
    }
}

TEST_CASE("Besov norm is nonincreasing in r") {
    Grid g(2, 64);
    auto f = random_band_limited(g, 1, 6, 101);
    for (double s : {-1.0, 0.0, 0.7})
        for (double p : {2.0, 4.0}) {
            double prev = besov_norm(f, BesovIndex(s, p, 1.0));
            for (double r : {1.5, 2.0, 4.0, inf}) {
                double cur = besov_norm(f, BesovIndex(s, p, r));
                CHECK(cur <= prev * (1 + 1e-12));
                prev = cur;
            }
        }
}

TEST_CASE("heat characterization: zero field and single-mode analytic value") {
    Grid g(2, 64);
    SpectralField z(g, 1);
    CHECK(heat_characterization_norm(z, BesovIndex(-1, 2, 2), default_heat_time_grid(g)) == 0.0);

    // s = -1, p = r = 2: per-mode integral of t e^{-2 mu t} dt/t = 1/(2 mu),
    // so the norm equals ||f||_2 / sqrt(2 mu).
    auto f = cosine_mode(g, 4, 0, 1.0);
    double mu = 16.0;
    double want = l2_norm(f) / std::sqrt(2.0 * mu);
    double got = heat_characterization_norm(f, BesovIndex(-1, 2, 2), default_heat_time_grid(g));
    CHECK(got == doctest::Approx(want).epsilon(0.05));
}

TEST_CASE("heat characterization is equivalent to the Besov norm within a factor 10") {
    Grid g(2, 64);
    auto tg = default_heat_time_grid(g);
    for (unsigned seed = 1; seed <= 8; ++seed) {
        auto f = random_band_limited(g, 1, 6, seed * 17);
        for (double s : {-1.0, -0.5})
            for (double r : {1.5, 2.0}) {
                BesovIndex idx(s, 2.0, r);
                double ratio = heat_characterization_norm(f, idx, tg) / besov_norm(f, idx);
                CHECK(ratio > 0.1);
                CHECK(ratio < 10.0);
            }
    }
    CHECK_THROWS_AS(heat_characterization_norm(random_band_limited(g, 1, 2, 3),
                                               BesovIndex(0.5, 2, 2), tg),
                    std::invalid_argument);
}

TEST_CASE("L^r_t L^p_x of the heat flow matches the -2/r characterization") {
    Grid g(2, 32);
    auto f = random_band_limited(g, 1, 4, 55);
    auto tg = default_heat_time_grid(g);
    double a = lr_in_time_norm(f, 2.0, 2.0, tg);
    double b = heat_characterization_norm(f, BesovIndex(-1.0, 2.0, 2.0), tg);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK_THROWS_AS(lr_in_time_norm(f, 2.0, inf, tg), std::invalid_argument);
}

TEST_CASE("embedding ratio: hypothesis checks and single-mode value") {
    Grid g(2, 64);
    SpectralField z(g, 1);
    BesovIndex i1(1.0, 2.0, 1.0);
    BesovIndex i2(1.0 - 2.0 * (1.0 / 2.0 - 1.0 / 4.0), 4.0, 2.0);
    CHECK(embedding_ratio(z, i1, i2) == 0.0);

    auto f = cosine_mode(g, 4, 0, 1.0);
    double got = embedding_ratio(f, i1, i2);
    double want = single_mode_besov_oracle(g, 4, 0, 1.0, i2) /
                  single_mode_besov_oracle(g, 4, 0, 1.0, i1);
    CHECK(got == doctest::Approx(want).epsilon(1e-9));

    CHECK_THROWS_AS(embedding_ratio(f, BesovIndex(0, 4, 2), BesovIndex(0, 2, 2)),
                    std::invalid_argument);
    CHECK_THROWS_AS(embedding_ratio(f, BesovIndex(0, 2, 2), BesovIndex(0, 4, 1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(embedding_ratio(f, i1, BesovIndex(i2.s + 0.1, 4.0, 2.0)),
                    std::invalid_argument);
}

TEST_CASE("embedding bound is uniform over a field family and stable in M") {
    BesovIndex i1(0.5, 2.0, 2.0);
    double worst32 = 0.0, worst64 = 0.0;
    for (int m : {32, 64}) {
        Grid g(2, m);
        BesovIndex i2(0.5 - 2.0 * (0.5 - 0.25), 4.0, 2.0);
        double worst = 0.0;
        for (unsigned seed = 1; seed <= 20; ++seed) {
            auto f = random_band_limited(g, 1, 5, 1000 + seed);
            worst = std::max(worst, embedding_ratio(f, i1, i2));
        }
        (m == 32 ? worst32 : worst64) = worst;
    }
    CHECK(worst32 < 5.0);
    CHECK(worst64 < 5.0);
    CHECK(std::abs(worst64 - worst32) / worst32 < 0.25);
}

TEST_CASE("critical norm is invariant under dyadic rescaling") {
    // lambda u(lambda x), lambda = 2, realized exactly by halving the box:
    // samples are reused, the frequency content shifts one octave up.
    Grid g(2, 64);
    auto u0 = random_band_limited(g, 2, 4, 202);
    auto u0_scaled = dyadic_rescale(u0, 1, 1);
    double p = 1.5, r = 1.5;
    BesovIndex idx(2.0 / p - 1.0, p, r);
    double n0 = besov_norm(u0, idx);
    double n1 = besov_norm(u0_scaled, idx);
    CHECK(std::abs(n1 - n0) / n0 < 0.05);
}

TEST_CASE("smallness functional: trivial data, sphere check, single-mode oracle") {
    Grid g(2, 64);
    SpectralField a0(g, 1), u0(g, 2);
    auto d0 = SpectralField::from_function(g, 2, [](int c, const auto&) {
        return c == 0 ? 1.0 : 0.0;
    });
    CHECK(smallness_eta(a0, u0, d0, 1.5, 1.5) == 0.0);

    auto bad_d = SpectralField::from_function(g, 2, [](int c, const auto&) {
        return c == 0 ? 1.1 : 0.0;
    });
    CHECK_THROWS_AS(smallness_eta(a0, u0, bad_d, 1.5, 1.5), std::invalid_argument);

    // single-mode u0: eta equals its Besov norm (other two terms vanish)
    SpectralField u1(g, 2);
    {
        auto m = cosine_mode(g, 0, 4, 0.3);
        std::copy(m.component_ptr(0), m.component_ptr(0) + g.size(), u1.component_data(0));
    }
    double p = 1.5, r = 1.5;
    double eta = smallness_eta(a0, u1, d0, p, r);
    double want = single_mode_besov_oracle(g, 0, 4, 0.3, BesovIndex(2.0 / p - 1.0, p, r));
    CHECK(eta == doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("smallness functional is scale invariant for dyadic rescaling") {
    Grid g(2, 64);
    // u0 single mode; d0 a gentle unit-sphere modulation; a0 smooth bump
    auto u0 = SpectralField(g, 2);
    {
        auto m = cosine_mode(g, 2, 1, 0.1);
        std::copy(m.component_ptr(0), m.component_ptr(0) + g.size(), u0.component_data(0));
    }
    u0 = leray_project(remove_mean(u0));
    auto d0 = SpectralField::from_function(g, 2, [&](int c, const auto& x) {
        double th = 0.2 * std::sin(two_pi / g.length * x[0]);
        return c == 0 ? std::cos(th) : std::sin(th);
    });
    auto a0 = SpectralField::from_function(g, 1, [&](int, const auto& x) {
        return 0.02 * std::cos(two_pi / g.length * x[1]);
    });
    double p = 1.5, r = 1.5;
    double eta0 = smallness_eta(a0, u0, d0, p, r);
    double eta1 = smallness_eta(dyadic_rescale(a0, 1, 0), dyadic_rescale(u0, 1, 1),
                                dyadic_rescale(d0, 1, 0), p, r);
    CHECK(std::abs(eta1 - eta0) / eta0 < 0.05);
}
