#include "nematic/scenarios.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace nematic::scenarios {

namespace {

double param(const std::map<std::string, std::string>& params, const std::string& key,
             double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : std::stod(it->second);
}

SpectralField constant_director(const Grid& g) {
    return SpectralField::from_function(g, g.dim, [](int c, const auto&) {
        return c == 0 ? 1.0 : 0.0;
    });
}

SpectralField random_stream_velocity(const Grid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    SpectralField psi(g, g.dim == 2 ? 1 : g.dim);
    for (int c = 0; c < psi.components(); ++c) {
        double* p = psi.component_data(c);
        std::fill(p, p + g.size(), 0.0);
        for (int kx = 0; kx <= 2; ++kx)
            for (int ky = -2; ky <= 2; ++ky)
                for (int kz = (g.dim == 3 ? -2 : 0); kz <= (g.dim == 3 ? 2 : 0); ++kz) {
                    if (kx == 0 && (ky < 0 || (ky == 0 && kz <= 0))) continue;
                    double a = unif(rng), b = unif(rng);
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        auto ix = g.unflatten(i);
                        double ph = two_pi / g.length *
                                    (kx * g.coord(ix[0]) + ky * g.coord(ix[1]) +
                                     (g.dim == 3 ? kz * g.coord(ix[2]) : 0.0));
                        p[i] += a * std::cos(ph) + b * std::sin(ph);
                    }
                }
    }
    if (g.dim == 2) {
        SpectralField u(g, 2);
        auto dy = derivative(psi, 1);
        auto dx = derivative(psi, 0);
        std::copy(dy.component_ptr(0), dy.component_ptr(0) + g.size(), u.component_data(0));
        double* u1 = u.component_data(1);
        const double* s = dx.component_ptr(0);
        for (std::size_t i = 0; i < g.size(); ++i) u1[i] = -s[i];
        return u;
    }
    // 3D: curl of the vector potential
    SpectralField u(g, 3);
    for (int c = 0; c < 3; ++c) {
        int a = (c + 1) % 3, b = (c + 2) % 3;
        auto da = derivative(psi, a);
        auto db = derivative(psi, b);
        double* uc = u.component_data(c);
        const double* pa = da.component_ptr(b);
        const double* pb = db.component_ptr(a);
        for (std::size_t i = 0; i < g.size(); ++i) uc[i] = pa[i] - pb[i];
    }
    return u;
}

} // namespace

std::vector<std::string> scenario_names() {
    return {"zero", "stationary_director", "taylor_green", "mixture_step_density",
            "random_small"};
}

Scenario make_scenario(const std::string& name, const Grid& g,
                       const PhysicalConstants& pc,
                       const std::map<std::string, std::string>& params) {
    Scenario sc;
    sc.name = name;
    sc.defaults.constants = pc;
    sc.a0 = SpectralField(g, 1);
    sc.u0 = SpectralField(g, g.dim);
    sc.d0 = constant_director(g);

    if (name == "zero") {
        sc.defaults.T = 0.25;
        sc.defaults.dt = sc.defaults.T / 64;
        return sc;
    }

    if (name == "stationary_director") {
        if (g.dim != 2)
            throw std::invalid_argument("stationary_director: defined on N = 2 grids");
        int m = static_cast<int>(param(params, "m", 1));
        const double k = two_pi / g.length * m;
        sc.d0 = SpectralField::from_function(g, 2, [&](int c, const auto& x) {
            return c == 0 ? std::cos(k * x[0]) : std::sin(k * x[0]);
        });
        // equilibrium data is order one: the smallness gate runs warn-only
        sc.defaults.enforce_smallness = false;
        sc.defaults.T = 1.0;
        sc.defaults.dt = 1.0 / 256.0;
        sc.defaults.tol = 1e-8;
        return sc;
    }

    if (name == "taylor_green") {
        if (g.dim != 2)
            throw std::invalid_argument("taylor_green: defined on N = 2 grids");
        sc.u0 = SpectralField::from_function(g, 2, [&](int c, const auto& x) {
            double kx = two_pi / g.length;
            return c == 0 ? std::cos(kx * x[0]) * std::sin(kx * x[1])
                          : -std::sin(kx * x[0]) * std::cos(kx * x[1]);
        });
        sc.defaults.enforce_smallness = false; // amplitude-one vortex
        sc.defaults.T = 0.5;
        sc.defaults.dt = 1.0 / 256.0;
        return sc;
    }

    if (name == "mixture_step_density") {
        // smoothed two-level step in the reciprocal density: two fluids of
        // different densities separated by a steep interface
        double amp = param(params, "amplitude", 0.04);
        sc.a0 = SpectralField::from_function(g, 1, [&](int, const auto& x) {
            return amp * std::tanh(6.0 * std::sin(two_pi / g.length * x[0]));
        });
        sc.u0 = random_stream_velocity(g, 11);
        sc.u0 = leray_project(remove_mean(sc.u0));
        double n = besov::besov_norm(sc.u0,
                                     besov::BesovIndex(g.dim / 1.2 - 1.0, 1.2, 1.5));
        sc.u0 = scaled(sc.u0, 0.2 * amp / std::max(n, 1e-30));
        sc.defaults.T = 0.25;
        sc.defaults.dt = sc.defaults.T / 64;
        return sc;
    }

    if (name == "random_small") {
        double eta_target = param(params, "eta_target", 0.01);
        unsigned seed = static_cast<unsigned>(param(params, "seed", 2024));
        const double p = sc.defaults.p, r = sc.defaults.r;
        besov::BesovIndex idx(g.dim / p - 1.0, p, r);

        // one third of the budget per data component
        sc.a0 = SpectralField::from_function(g, 1, [&](int, const auto& x) {
            return std::cos(two_pi / g.length * x[0]) *
                   std::cos(two_pi / g.length * x[1]);
        });
        sc.a0 = scaled(sc.a0, eta_target / 3.0 / linf_norm(sc.a0));

        sc.u0 = leray_project(remove_mean(random_stream_velocity(g, seed)));
        sc.u0 = scaled(sc.u0, eta_target / 3.0 / besov::besov_norm(sc.u0, idx));

        // director: normalized perturbation of a constant, rescaled once so
        // the gradient norm lands on the remaining third
        SpectralField w = random_stream_velocity(g, seed + 1);
        double eps = 0.1;
        for (int pass = 0; pass < 2; ++pass) {
            SpectralField d(g, g.dim);
            for (int c = 0; c < g.dim; ++c) {
                double* pd = d.component_data(c);
                const double* pw = w.component_ptr(c % w.components());
                for (std::size_t i = 0; i < g.size(); ++i)
                    pd[i] = (c == 0 ? 1.0 : 0.0) + eps * pw[i];
            }
            // normalize onto the sphere
            SpectralField mag = magnitude(d);
            for (int c = 0; c < g.dim; ++c) {
                double* pd = d.component_data(c);
                const double* pm = mag.component_ptr(0);
                for (std::size_t i = 0; i < g.size(); ++i) pd[i] /= pm[i];
            }
            sc.d0 = d;
            double gnorm = besov::besov_norm(gradient(sc.d0), idx);
            if (std::abs(gnorm - eta_target / 3.0) < 0.02 * eta_target) break;
            eps *= (eta_target / 3.0) / std::max(gnorm, 1e-30);
        }
        sc.defaults.T = 0.5;
        sc.defaults.dt = sc.defaults.T / 128;
        return sc;
    }

    throw std::invalid_argument("unknown scenario '" + name + "'");
}

} // namespace nematic::scenarios
