#include "nematic/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nematic {

namespace {

using cplx = std::complex<double>;

// Apply fn(mode_index_flat, kappa[3], in) -> out over all modes of every
// component; in/out are Fourier coefficient arrays.
template <class Fn>
SpectralField map_modes(const SpectralField& f, int out_comps_per_in, Fn&& fn) {
    const Grid& g = f.grid();
    const std::size_t n = g.size();
    const int ci = f.components();
    std::vector<cplx> out(static_cast<std::size_t>(ci) * out_comps_per_in * n);
    f.ensure_fourier();
    for (int c = 0; c < ci; ++c) {
        const cplx* in = f.fourier(c);
        cplx* dst = out.data() + static_cast<std::size_t>(c) * out_comps_per_in * n;
        kern::parallel_for(n, [&](std::size_t i) {
            auto ix = g.unflatten(i);
            double kap[3] = {g.wavenumber(ix[0]), g.wavenumber(ix[1]),
                             g.dim == 3 ? g.wavenumber(ix[2]) : 0.0};
            fn(i, ix, kap, in[i], dst, n);
        });
    }
    return SpectralField::from_fourier(g, ci * out_comps_per_in, std::move(out));
}

} // namespace

SpectralField derivative(const SpectralField& f, int axis) {
    const Grid& g = f.grid();
    if (axis < 0 || axis >= g.dim)
        throw std::invalid_argument("derivative: axis out of range");
    const int half = g.m / 2;
    return map_modes(f, 1, [&](std::size_t i, const std::array<int, 3>& ix,
                               const double* kap, cplx v, cplx* dst, std::size_t) {
        if (ix[axis] == half)
            dst[i] = 0.0; // Nyquist has no well-defined sign
        else
            dst[i] = cplx(0.0, kap[axis]) * v;
    });
}

SpectralField gradient(const SpectralField& f) {
    const Grid& g = f.grid();
    const int half = g.m / 2;
    return map_modes(f, g.dim, [&](std::size_t i, const std::array<int, 3>& ix,
                                   const double* kap, cplx v, cplx* dst, std::size_t n) {
        for (int a = 0; a < g.dim; ++a)
            dst[static_cast<std::size_t>(a) * n + i] =
                ix[a] == half ? cplx(0.0) : cplx(0.0, kap[a]) * v;
    });
}

SpectralField divergence(const SpectralField& v) {
    const Grid& g = v.grid();
    if (v.components() != g.dim)
        throw std::invalid_argument("divergence: component count must equal dim");
    const std::size_t n = g.size();
    const int half = g.m / 2;
    std::vector<cplx> out(n);
    v.ensure_fourier();
    kern::parallel_for(n, [&](std::size_t i) {
        auto ix = g.unflatten(i);
        cplx s = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            if (ix[a] == half) continue;
            s += cplx(0.0, g.wavenumber(ix[a])) * v.fourier(a)[i];
        }
        out[i] = s;
    });
    return SpectralField::from_fourier(g, 1, std::move(out));
}

SpectralField laplacian(const SpectralField& f) {
    return map_modes(f, 1, [&](std::size_t i, const std::array<int, 3>&,
                               const double* kap, cplx v, cplx* dst, std::size_t) {
        double k2 = kap[0] * kap[0] + kap[1] * kap[1] + kap[2] * kap[2];
        dst[i] = -k2 * v;
    });
}

SpectralField heat_semigroup(const SpectralField& f, double t) {
    if (t < 0.0) throw std::invalid_argument("heat_semigroup: t must be nonnegative");
    if (t == 0.0) return f;
    return map_modes(f, 1, [&](std::size_t i, const std::array<int, 3>&,
                               const double* kap, cplx v, cplx* dst, std::size_t) {
        double k2 = kap[0] * kap[0] + kap[1] * kap[1] + kap[2] * kap[2];
        dst[i] = std::exp(-k2 * t) * v;
    });
}

SpectralField leray_project(const SpectralField& v) {
    const Grid& g = v.grid();
    if (v.components() != g.dim)
        throw std::invalid_argument("leray_project: component count must equal dim");
    const std::size_t n = g.size();
    std::vector<cplx> out(static_cast<std::size_t>(g.dim) * n);
    v.ensure_fourier();
    kern::parallel_for(n, [&](std::size_t i) {
        auto ix = g.unflatten(i);
        double kap[3] = {g.wavenumber(ix[0]), g.wavenumber(ix[1]),
                         g.dim == 3 ? g.wavenumber(ix[2]) : 0.0};
        double k2 = kap[0] * kap[0] + kap[1] * kap[1] + kap[2] * kap[2];
        if (k2 == 0.0) {
            for (int a = 0; a < g.dim; ++a) out[static_cast<std::size_t>(a) * n + i] = v.fourier(a)[i];
            return;
        }
        cplx kdotv = 0.0;
        for (int a = 0; a < g.dim; ++a) kdotv += kap[a] * v.fourier(a)[i];
        for (int a = 0; a < g.dim; ++a)
            out[static_cast<std::size_t>(a) * n + i] = v.fourier(a)[i] - kap[a] * kdotv / k2;
    });
    return SpectralField::from_fourier(g, g.dim, std::move(out));
}

SpectralField riesz_riesz(const SpectralField& f) {
    const Grid& g = f.grid();
    if (f.components() != g.dim)
        throw std::invalid_argument("riesz_riesz: component count must equal dim");
    const std::size_t n = g.size();
    std::vector<cplx> out(static_cast<std::size_t>(g.dim) * n);
    f.ensure_fourier();
    kern::parallel_for(n, [&](std::size_t i) {
        auto ix = g.unflatten(i);
        double kap[3] = {g.wavenumber(ix[0]), g.wavenumber(ix[1]),
                         g.dim == 3 ? g.wavenumber(ix[2]) : 0.0};
        double k2 = kap[0] * kap[0] + kap[1] * kap[1] + kap[2] * kap[2];
        if (k2 == 0.0) {
            for (int a = 0; a < g.dim; ++a) out[static_cast<std::size_t>(a) * n + i] = 0.0;
            return;
        }
        cplx kdotf = 0.0;
        for (int a = 0; a < g.dim; ++a) kdotf += kap[a] * f.fourier(a)[i];
        for (int a = 0; a < g.dim; ++a)
            out[static_cast<std::size_t>(a) * n + i] = kap[a] * kdotf / k2;
    });
    return SpectralField::from_fourier(g, g.dim, std::move(out));
}

SpectralField dealias(const SpectralField& f) {
    const Grid& g = f.grid();
    const int kcut = g.m / 3;
    return map_modes(f, 1, [&](std::size_t i, const std::array<int, 3>& ix,
                               const double*, cplx v, cplx* dst, std::size_t) {
        bool keep = true;
        for (int a = 0; a < g.dim; ++a)
            if (std::abs(g.mode(ix[a])) > kcut) keep = false;
        dst[i] = keep ? v : cplx(0.0);
    });
}

double component_mean(const SpectralField& f, int c) {
    const std::size_t n = f.points();
    const double* p = f.component_ptr(c);
    return kern::sum(n, [&](std::size_t i) { return p[i]; }) / static_cast<double>(n);
}

SpectralField remove_mean(const SpectralField& f) {
    SpectralField r = f;
    for (int c = 0; c < f.components(); ++c) {
        double mu = component_mean(f, c);
        double* p = r.component_data(c);
        kern::parallel_for(f.points(), [&](std::size_t i) { p[i] -= mu; });
    }
    return r;
}

bool is_mean_zero(const SpectralField& f, double tol) {
    for (int c = 0; c < f.components(); ++c)
        if (std::abs(component_mean(f, c)) > tol) return false;
    return true;
}

double lp_norm(const SpectralField& f, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("lp_norm: p must be > 1");
    const std::size_t n = f.points();
    const int nc = f.components();
    if (std::isinf(p)) {
        return kern::max(n, [&](std::size_t i) {
            double s = 0.0;
            for (int c = 0; c < nc; ++c) {
                double v = f.at(c, i);
                s += v * v;
            }
            return std::sqrt(s);
        });
    }
    const double cell = std::pow(f.grid().spacing(), f.grid().dim);
    double s = kern::sum(n, [&](std::size_t i) {
        double m2 = 0.0;
        for (int c = 0; c < nc; ++c) {
            double v = f.at(c, i);
            m2 += v * v;
        }
        return std::pow(m2, 0.5 * p);
    });
    return std::pow(cell * s, 1.0 / p);
}

double l2_norm(const SpectralField& f) {
    const std::size_t n = f.points();
    const int nc = f.components();
    const double cell = std::pow(f.grid().spacing(), f.grid().dim);
    double s = kern::sum(n, [&](std::size_t i) {
        double m2 = 0.0;
        for (int c = 0; c < nc; ++c) {
            double v = f.at(c, i);
            m2 += v * v;
        }
        return m2;
    });
    return std::sqrt(cell * s);
}

double linf_norm(const SpectralField& f) {
    return lp_norm(f, std::numeric_limits<double>::infinity());
}

double spectral_l2_norm(const SpectralField& f) {
    const std::size_t n = f.points();
    const double vol = std::pow(f.grid().length, f.grid().dim);
    f.ensure_fourier();
    double s = 0.0;
    for (int c = 0; c < f.components(); ++c) {
        const cplx* fc = f.fourier(c);
        s += kern::sum(n, [&](std::size_t i) { return std::norm(fc[i]); });
    }
    return std::sqrt(vol * s);
}

double spectral_divergence_norm(const SpectralField& v) {
    const Grid& g = v.grid();
    if (v.components() != g.dim)
        throw std::invalid_argument("spectral_divergence_norm: needs N components");
    const std::size_t n = g.size();
    v.ensure_fourier();
    return kern::max(n, [&](std::size_t i) {
        auto ix = g.unflatten(i);
        cplx s = 0.0;
        for (int a = 0; a < g.dim; ++a)
            s += cplx(0.0, g.wavenumber(ix[a])) * v.fourier(a)[i];
        return std::abs(s);
    });
}

double max_abs_diff(const SpectralField& a, const SpectralField& b) {
    check_same_shape(a, b, "max_abs_diff");
    auto as = a.values();
    auto bs = b.values();
    return kern::max(as.size(), [&](std::size_t i) { return std::abs(as[i] - bs[i]); });
}

SpectralField advect(const SpectralField& v, const SpectralField& f) {
    const Grid& g = f.grid();
    if (v.components() != g.dim)
        throw std::invalid_argument("advect: velocity must have N components");
    SpectralField out(g, f.components());
    const std::size_t n = g.size();
    std::vector<SpectralField> df;
    df.reserve(g.dim);
    for (int a = 0; a < g.dim; ++a) df.push_back(derivative(f, a));
    for (int c = 0; c < f.components(); ++c) {
        double* oc = out.component_data(c);
        for (int a = 0; a < g.dim; ++a) {
            const double* dc = df[a].component_ptr(c);
            const double* va = v.component_ptr(a);
            if (a == 0)
                kern::parallel_for(n, [&](std::size_t i) { oc[i] = va[i] * dc[i]; });
            else
                kern::parallel_for(n, [&](std::size_t i) { oc[i] += va[i] * dc[i]; });
        }
    }
    return dealias(out);
}

SpectralField grad_magnitude_squared(const SpectralField& grad_d) {
    const Grid& g = grad_d.grid();
    SpectralField out(g, 1);
    const std::size_t n = g.size();
    double* oc = out.component_data(0);
    kern::parallel_for(n, [&](std::size_t i) {
        double s = 0.0;
        for (int c = 0; c < grad_d.components(); ++c) {
            double v = grad_d.at(c, i);
            s += v * v;
        }
        oc[i] = s;
    });
    return dealias(out);
}

SpectralField elastic_stress_divergence(const SpectralField& d) {
    const Grid& g = d.grid();
    const std::size_t n = g.size();
    SpectralField gd = gradient(d); // components ordered (c, axis)
    const int nc = d.components();
    // stress S_ij = sum_c (d_i d_c)(d_j d_c); result_j = sum_i d_i S_ij
    SpectralField result(g, g.dim);
    for (int j = 0; j < g.dim; ++j) {
        SpectralField col(g, g.dim); // S_(i)j as an N-vector over i
        for (int i = 0; i < g.dim; ++i) {
            double* ci = col.component_data(i);
            kern::parallel_for(n, [&](std::size_t p) {
                double s = 0.0;
                for (int c = 0; c < nc; ++c)
                    s += gd.at(c * g.dim + i, p) * gd.at(c * g.dim + j, p);
                ci[p] = s;
            });
        }
        col = dealias(col);
        SpectralField dj = divergence(col);
        std::copy(dj.component_ptr(0), dj.component_ptr(0) + n, result.component_data(j));
    }
    return result;
}

} // namespace nematic
