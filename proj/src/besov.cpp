#include "nematic/besov.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nematic::besov {

namespace {
constexpr double inf = std::numeric_limits<double>::infinity();

void require_mean_zero(const SpectralField& f, const char* what) {
    double scale = std::max(1.0, linf_norm(f));
    if (!is_mean_zero(f, 1e-10 * scale))
        throw std::invalid_argument(std::string(what) + ": input must be mean-zero per component");
}
} // namespace

void BesovIndex::validate() const {
    if (!(p > 1.0))
        throw std::invalid_argument("BesovIndex: p must be in (1, inf]");
    if (!(r >= 1.0))
        throw std::invalid_argument("BesovIndex: r must be in [1, inf]");
}

double cutoff_chi(double rho) {
    // 1 on B(0,3/4), quintic smoothstep down to 0 at 1. The transition is
    // kept above 1/2 so the two-block overlap region is a minority of each
    // octave and the l^2 block sum stays close to Parseval.
    if (rho <= 0.75) return 1.0;
    if (rho >= 1.0) return 0.0;
    double x = (rho - 0.75) / 0.25;
    double s = x * x * x * (x * (6.0 * x - 15.0) + 10.0); // quintic smoothstep
    return 1.0 - s;
}

double annulus_phi(double kappa_abs, int q) {
    return cutoff_chi(kappa_abs * std::exp2(-(q + 1))) - cutoff_chi(kappa_abs * std::exp2(-q));
}

SpectralField dyadic_rescale(const SpectralField& f, int lam_power, int amplitude_power) {
    const Grid& g = f.grid();
    Grid g2(g.dim, g.m, g.length * std::exp2(-lam_power));
    SpectralField out(g2, f.components());
    const double amp = std::exp2(static_cast<double>(lam_power) * amplitude_power);
    auto in = f.values();
    auto dst = out.mutable_values();
    kern::parallel_for(dst.size(), [&](std::size_t i) { dst[i] = amp * in[i]; });
    return out;
}

std::pair<int, int> dyadic_q_range(const Grid& g) {
    int q_min = static_cast<int>(std::floor(std::log2(g.min_wavenumber())));
    int q_max = static_cast<int>(std::ceil(std::log2(g.max_wavenumber())));
    return {q_min, q_max};
}

SpectralField dyadic_block(const SpectralField& f, int q) {
    const Grid& g = f.grid();
    const std::size_t n = g.size();
    std::vector<std::complex<double>> out(static_cast<std::size_t>(f.components()) * n);
    f.ensure_fourier();
    for (int c = 0; c < f.components(); ++c) {
        const std::complex<double>* in = f.fourier(c);
        std::complex<double>* dst = out.data() + static_cast<std::size_t>(c) * n;
        kern::parallel_for(n, [&](std::size_t i) {
            auto ix = g.unflatten(i);
            double k2 = 0.0;
            for (int a = 0; a < g.dim; ++a) {
                double k = g.wavenumber(ix[a]);
                k2 += k * k;
            }
            double kabs = std::sqrt(k2);
            dst[i] = kabs == 0.0 ? 0.0 : annulus_phi(kabs, q) * in[i];
        });
    }
    return SpectralField::from_fourier(g, f.components(), std::move(out));
}

DyadicDecomposition dyadic_blocks(const SpectralField& f) {
    require_mean_zero(f, "dyadic_blocks");
    DyadicDecomposition d;
    auto [q0, q1] = dyadic_q_range(f.grid());
    d.q_min = q0;
    d.q_max = q1;
    for (int q = q0; q <= q1; ++q)
        d.blocks.emplace_back(q, dyadic_block(f, q));
    return d;
}

double besov_norm(const SpectralField& f, const BesovIndex& idx) {
    idx.validate();
    require_mean_zero(f, "besov_norm");
    auto [q0, q1] = dyadic_q_range(f.grid());
    double acc = 0.0;
    double sup = 0.0;
    for (int q = q0; q <= q1; ++q) {
        double bq = lp_norm(dyadic_block(f, q), idx.p);
        if (bq == 0.0) continue;
        double w = std::exp2(idx.s * q) * bq;
        if (std::isinf(idx.r))
            sup = std::max(sup, w);
        else
            acc += std::pow(w, idx.r);
    }
    return std::isinf(idx.r) ? sup : std::pow(acc, 1.0 / idx.r);
}

std::vector<double> default_heat_time_grid(const Grid& g) {
    auto [q0, q1] = dyadic_q_range(g);
    std::vector<double> ts;
    for (int j = -2 * q1; j <= -2 * q0; ++j) ts.push_back(std::exp2(j));
    return ts;
}

double heat_characterization_norm(const SpectralField& f, const BesovIndex& idx,
                                  const std::vector<double>& t_grid) {
    idx.validate();
    if (!(idx.s < 0.0))
        throw std::invalid_argument("heat_characterization_norm: requires s < 0");
    require_mean_zero(f, "heat_characterization_norm");
    if (t_grid.size() < 2)
        throw std::invalid_argument("heat_characterization_norm: time grid too short");

    std::vector<double> vals(t_grid.size());
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        double t = t_grid[j];
        vals[j] = std::pow(t, -0.5 * idx.s) * lp_norm(heat_semigroup(f, t), idx.p);
    }
    if (std::isinf(idx.r)) {
        double sup = 0.0;
        for (double v : vals) sup = std::max(sup, v);
        return sup;
    }
    // trapezoid in u = log t against du
    double acc = 0.0;
    for (std::size_t j = 0; j + 1 < t_grid.size(); ++j) {
        double du = std::log(t_grid[j + 1] / t_grid[j]);
        acc += 0.5 * du * (std::pow(vals[j], idx.r) + std::pow(vals[j + 1], idx.r));
    }
    return std::pow(acc, 1.0 / idx.r);
}

double lr_in_time_norm(const SpectralField& f, double p, double r,
                       const std::vector<double>& t_grid) {
    if (std::isinf(r))
        throw std::invalid_argument("lr_in_time_norm: r must be finite");
    return heat_characterization_norm(f, BesovIndex(-2.0 / r, p, r), t_grid);
}

double embedding_ratio(const SpectralField& f, const BesovIndex& idx1,
                       const BesovIndex& idx2) {
    idx1.validate();
    idx2.validate();
    const int N = f.grid().dim;
    if (idx1.p > idx2.p)
        throw std::invalid_argument("embedding_ratio: requires p1 <= p2");
    if (idx1.r > idx2.r)
        throw std::invalid_argument("embedding_ratio: requires r1 <= r2");
    auto inv = [](double p) { return std::isinf(p) ? 0.0 : 1.0 / p; };
    double want_s2 = idx1.s - N * (inv(idx1.p) - inv(idx2.p));
    if (std::abs(idx2.s - want_s2) > 1e-12)
        throw std::invalid_argument("embedding_ratio: s2 must equal s1 - N(1/p1 - 1/p2)");
    double n1 = besov_norm(f, idx1);
    double n2 = besov_norm(f, idx2);
    if (n1 == 0.0 && n2 == 0.0) return 0.0;
    return n2 / n1;
}

double smallness_eta(const SpectralField& a0, const SpectralField& u0,
                     const SpectralField& d0, double p, double r) {
    const Grid& g = u0.grid();
    // director must live on the unit sphere
    double drift = 0.0;
    {
        SpectralField m = magnitude(d0);
        const double* mp = m.component_ptr(0);
        drift = kern::max(g.size(), [&](std::size_t i) { return std::abs(mp[i] - 1.0); });
    }
    if (drift > 1e-8)
        throw std::invalid_argument("smallness_eta: director is not on the unit sphere");
    require_mean_zero(u0, "smallness_eta(u0)");

    BesovIndex idx(g.dim / p - 1.0, p, r);
    double eta = linf_norm(a0);
    eta += besov_norm(u0, idx);
    SpectralField gd = gradient(d0);
    if (linf_norm(gd) > 0.0) eta += besov_norm(gd, idx);
    return eta;
}

} // namespace nematic::besov
