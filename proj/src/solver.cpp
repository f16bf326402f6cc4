#include "nematic/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace nematic::solver {

namespace {

using cplx = std::complex<double>;
constexpr double inf = std::numeric_limits<double>::infinity();

// Per-mode exponential-integrator factors for one uniform step of the heat
// flow with a given diffusivity: E = e^{-z}, i1 = dt phi2(z),
// i0m1 = dt (phi1 - phi2)(z), z = diffusivity |kappa|^2 dt.
struct StepKernel {
    std::vector<double> E, i0m1, i1;

    StepKernel(const Grid& g, double nu_dt) {
        const std::size_t n = g.size();
        E.resize(n);
        i0m1.resize(n);
        i1.resize(n);
        kern::parallel_for(n, [&](std::size_t i) {
            auto ix = g.unflatten(i);
            double k2 = 0.0;
            for (int a = 0; a < g.dim; ++a) {
                double kap = g.wavenumber(ix[a]);
                k2 += kap * kap;
            }
            double z = k2 * nu_dt;
            double ph1, ph2;
            if (z < 1e-4) {
                ph1 = 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
                ph2 = 0.5 - z / 6.0 + z * z / 24.0 - z * z * z / 120.0;
            } else {
                ph1 = (1.0 - std::exp(-z)) / z;
                ph2 = (z - 1.0 + std::exp(-z)) / (z * z);
            }
            E[i] = std::exp(-z);
            i0m1[i] = ph1 - ph2; // still to be multiplied by dt
            i1[i] = ph2;
        });
    }
};

std::vector<cplx> spectra_of(const SpectralField& f) {
    f.ensure_fourier();
    std::vector<cplx> s(f.total_size());
    const std::size_t n = f.points();
    for (int c = 0; c < f.components(); ++c)
        std::copy(f.fourier(c), f.fourier(c) + n, s.begin() + static_cast<std::size_t>(c) * n);
    return s;
}

// next = E*prev + dt*(i0m1*s0 + i1*s1), all per mode, per component.
void advance_modes(const Grid& g, int comps, const StepKernel& ker, double dt,
                   const std::vector<cplx>& prev, const std::vector<cplx>& s0,
                   const std::vector<cplx>& s1, std::vector<cplx>& next) {
    const std::size_t n = g.size();
    next.resize(prev.size());
    for (int c = 0; c < comps; ++c) {
        const std::size_t off = static_cast<std::size_t>(c) * n;
        kern::parallel_for(n, [&](std::size_t i) {
            next[off + i] = ker.E[i] * prev[off + i] +
                            dt * (ker.i0m1[i] * s0[off + i] + ker.i1[i] * s1[off + i]);
        });
    }
}

double lp_norm_stack(const std::vector<const SpectralField*>& fs, double p) {
    const Grid& g = fs.at(0)->grid();
    const std::size_t n = g.size();
    auto mag2 = [&](std::size_t i) {
        double s = 0.0;
        for (const SpectralField* f : fs)
            for (int c = 0; c < f->components(); ++c) {
                double v = f->at(c, i);
                s += v * v;
            }
        return s;
    };
    if (std::isinf(p))
        return kern::max(n, [&](std::size_t i) { return std::sqrt(mag2(i)); });
    const double cell = std::pow(g.spacing(), g.dim);
    double acc = kern::sum(n, [&](std::size_t i) { return std::pow(mag2(i), 0.5 * p); });
    return std::pow(cell * acc, 1.0 / p);
}

// || t^w v(t) ||_{L^rho_t} over a discrete grid of per-time values;
// same conventions as duhamel::weighted_norm.
double time_norm(const std::vector<double>& times, const std::vector<double>& vals,
                 double w, double rho) {
    if (std::isinf(rho)) {
        double sup = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            double t = times[k];
            if (t == 0.0) {
                if (w == 0.0) sup = std::max(sup, vals[k]);
                continue;
            }
            sup = std::max(sup, std::pow(t, w) * vals[k]);
        }
        return sup;
    }
    auto integrand = [&](std::size_t k) {
        double t = times[k];
        double tw = t == 0.0 ? (w == 0.0 ? 1.0 : 0.0) : std::pow(t, w);
        return std::pow(tw * vals[k], rho);
    };
    // a singular weight drops the t = 0 sample; the (0, t_k0) mass is
    // extrapolated below assuming the values stay bounded near 0
    std::size_t k0 = (times.front() == 0.0 && w < 0.0) ? 1 : 0;
    double acc = 0.0;
    for (std::size_t k = k0; k + 1 < times.size(); ++k)
        acc += 0.5 * (times[k + 1] - times[k]) * (integrand(k) + integrand(k + 1));
    if (times[k0] > 0.0) {
        double wr = w * rho;
        if (wr <= -1.0)
            throw std::invalid_argument("time_norm: weight * rho <= -1, mass at 0 diverges");
        acc += std::pow(vals[k0], rho) * std::pow(times[k0], wr + 1.0) / (wr + 1.0);
    }
    return std::pow(acc, 1.0 / rho);
}

std::string norm_label(const std::string& what, double w, double rho, double p) {
    std::ostringstream os;
    if (w != 0.0) os << "t^" << w << " ";
    os << what << " | L^";
    if (std::isinf(rho)) os << "inf"; else os << rho;
    os << "_t L^";
    if (std::isinf(p)) os << "inf"; else os << p;
    os << "_x";
    return os.str();
}

SpectralField normalized_director(const SpectralField& d) {
    SpectralField out = d;
    const std::size_t n = d.points();
    const int nc = d.components();
    std::vector<double*> comps(nc);
    for (int c = 0; c < nc; ++c) comps[c] = out.component_data(c);
    kern::parallel_for(n, [&](std::size_t i) {
        double m2 = 0.0;
        for (int c = 0; c < nc; ++c) m2 += comps[c][i] * comps[c][i];
        double m = std::sqrt(m2);
        if (m > 1e-14)
            for (int c = 0; c < nc; ++c) comps[c][i] /= m;
    });
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// trajectory helpers
// ---------------------------------------------------------------------------

namespace {
TimeSeriesField extract(const Trajectory& traj, SpectralField StateSnapshot::*field) {
    std::vector<double> times;
    std::vector<SpectralField> fields;
    for (const auto& s : traj.snapshots) {
        times.push_back(s.time);
        fields.push_back(s.*field);
    }
    return TimeSeriesField(std::move(times), std::move(fields));
}
} // namespace

TimeSeriesField Trajectory::series_a() const { return extract(*this, &StateSnapshot::a); }
TimeSeriesField Trajectory::series_u() const { return extract(*this, &StateSnapshot::u); }
TimeSeriesField Trajectory::series_d() const { return extract(*this, &StateSnapshot::d); }
TimeSeriesField Trajectory::series_grad_pi() const {
    return extract(*this, &StateSnapshot::grad_pi);
}

std::pair<double, double> default_weighted_exponents(int dim, double r, double p) {
    double lower = std::max(p, dim * r / (2.0 * r - 1.0));
    double p1 = 0.5 * (lower + dim);
    if (!(p1 > lower && p1 < dim))
        throw std::invalid_argument("default_weighted_exponents: no valid p1 for this (p, r)");
    double p3 = 2.0 * dim * r / (r - 1.0);
    return {p1, p3};
}

// ---------------------------------------------------------------------------
// data preparation
// ---------------------------------------------------------------------------

std::tuple<SpectralField, SpectralField, SpectralField>
regularize_data(const SpectralField& a0, const SpectralField& u0,
                const SpectralField& d0, int n) {
    if (n < 0) throw std::invalid_argument("regularize_data: n must be >= 0");
    const Grid& g = a0.grid();
    const std::size_t np = g.size();

    // Gaussian mollifier of width 1/n (n = 0 degenerates to heavy smoothing)
    const double sigma = n >= 1 ? 1.0 / n : g.length;
    SpectralField a0n(g, a0.components());
    {
        a0.ensure_fourier();
        std::vector<cplx> spec(a0.total_size());
        for (int c = 0; c < a0.components(); ++c) {
            const cplx* in = a0.fourier(c);
            cplx* dst = spec.data() + static_cast<std::size_t>(c) * np;
            kern::parallel_for(np, [&](std::size_t i) {
                auto ix = g.unflatten(i);
                double k2 = 0.0;
                for (int ax = 0; ax < g.dim; ++ax) {
                    double kap = g.wavenumber(ix[ax]);
                    k2 += kap * kap;
                }
                dst[i] = std::exp(-0.5 * sigma * sigma * k2) * in[i];
            });
        }
        a0n = SpectralField::from_fourier(g, a0.components(), std::move(spec));
        // periodized Gaussian kernel is positive with unit mass: clamp only
        // to shave FFT round-off so the sup bound holds exactly
        double lo = kern::max(np, [&](std::size_t i) { return -a0.at(0, i); });
        double hi = kern::max(np, [&](std::size_t i) { return a0.at(0, i); });
        double* p = a0n.component_data(0);
        kern::parallel_for(np, [&](std::size_t i) { p[i] = std::clamp(p[i], -lo, hi); });
    }

    // dyadic truncation sum_{|q| <= n}: telescoping multiplier
    auto truncate = [&](const SpectralField& f, bool keep_mean) {
        f.ensure_fourier();
        std::vector<cplx> spec(f.total_size());
        for (int c = 0; c < f.components(); ++c) {
            const cplx* in = f.fourier(c);
            cplx* dst = spec.data() + static_cast<std::size_t>(c) * np;
            kern::parallel_for(np, [&](std::size_t i) {
                auto ix = g.unflatten(i);
                double k2 = 0.0;
                for (int ax = 0; ax < g.dim; ++ax) {
                    double kap = g.wavenumber(ix[ax]);
                    k2 += kap * kap;
                }
                double kabs = std::sqrt(k2);
                if (kabs == 0.0) {
                    dst[i] = keep_mean ? in[i] : cplx(0.0);
                } else {
                    double mult = besov::cutoff_chi(kabs * std::exp2(-(n + 1))) -
                                  besov::cutoff_chi(kabs * std::exp2(n));
                    dst[i] = mult * in[i];
                }
            });
        }
        return SpectralField::from_fourier(g, f.components(), std::move(spec));
    };

    return {std::move(a0n), truncate(u0, false), truncate(d0, true)};
}

// ---------------------------------------------------------------------------
// transport
// ---------------------------------------------------------------------------

SpectralField transport_step(const SpectralField& a_prev, const SpectralField& u_begin,
                             const SpectralField& u_end, double dt) {
    const Grid& g = a_prev.grid();
    const std::size_t n = g.size();
    if (u_begin.components() != g.dim || u_end.components() != g.dim)
        throw std::invalid_argument("transport_step: velocity must have N components");

    SpectralField u_mid = axpy(0.5, u_begin, scaled(u_end, 0.5));

    // two-stage midpoint backward characteristics
    std::vector<double> half(n * g.dim), foot(n * g.dim);
    for (int a = 0; a < g.dim; ++a) {
        const double* ue = u_end.component_ptr(a);
        kern::parallel_for(n, [&](std::size_t i) {
            auto ix = g.unflatten(i);
            half[i * g.dim + a] = g.coord(ix[a]) - 0.5 * dt * ue[i];
        });
    }
    std::vector<double> umid_at_half(n * g.dim);
    interp::sample_field(u_mid, half, umid_at_half);

    double max_disp = 0.0;
    for (int a = 0; a < g.dim; ++a) {
        const double* ua = umid_at_half.data() + static_cast<std::size_t>(a) * n;
        double m = kern::max(n, [&](std::size_t i) { return std::abs(dt * ua[i]); });
        max_disp = std::max(max_disp, m);
    }
    if (max_disp > g.length / 4.0) {
        std::ostringstream os;
        os << "transport_step: CFL violation, backward displacement " << max_disp
           << " exceeds L/4 = " << g.length / 4.0 << " (dt = " << dt << ")";
        throw std::runtime_error(os.str());
    }

    for (int a = 0; a < g.dim; ++a) {
        const double* ua = umid_at_half.data() + static_cast<std::size_t>(a) * n;
        kern::parallel_for(n, [&](std::size_t i) {
            auto ix = g.unflatten(i);
            foot[i * g.dim + a] = g.coord(ix[a]) - dt * ua[i];
        });
    }

    SpectralField out = interp::pullback(a_prev, foot);
    // max principle: interpolation overshoot clamped away
    for (int c = 0; c < a_prev.components(); ++c) {
        const double* src = a_prev.component_ptr(c);
        double lo = -kern::max(n, [&](std::size_t i) { return -src[i]; });
        double hi = kern::max(n, [&](std::size_t i) { return src[i]; });
        double* p = out.component_data(c);
        kern::parallel_for(n, [&](std::size_t i) { p[i] = std::clamp(p[i], lo, hi); });
    }
    return out;
}

TimeSeriesField transport_trajectory(const SpectralField& a0, const TimeSeriesField& u) {
    u.validate();
    std::vector<SpectralField> fields;
    fields.reserve(u.steps());
    fields.push_back(a0);
    for (std::size_t k = 0; k + 1 < u.steps(); ++k)
        fields.push_back(transport_step(fields.back(), u.fields[k], u.fields[k + 1],
                                        u.times[k + 1] - u.times[k]));
    return TimeSeriesField(u.times, std::move(fields));
}

// ---------------------------------------------------------------------------
// director step
// ---------------------------------------------------------------------------

namespace {

// Sweep controller: relative-residual inner iteration with divergence guard.
struct SweepGuard {
    double tol;
    int max_sweeps;
    const char* what;
    double prev_delta = inf;
    int growth = 0;
    int sweeps = 0;

    // returns true when converged; throws on divergence / exhaustion
    bool step(double delta, double scale) {
        ++sweeps;
        if (delta <= tol * scale) return true;
        if (delta > prev_delta) {
            if (++growth >= 5) {
                std::ostringstream os;
                os << what << ": inner sweeps diverging (residual grew 5 times, now "
                   << delta << ")";
                throw std::runtime_error(os.str());
            }
        } else {
            growth = 0;
        }
        prev_delta = delta;
        if (sweeps >= max_sweeps) {
            std::ostringstream os;
            os << what << ": inner sweeps did not reach tol " << tol << " in "
               << max_sweeps << " sweeps (residual " << delta << ")";
            throw std::runtime_error(os.str());
        }
        return false;
    }
};

} // namespace

TimeSeriesField director_step(const TimeSeriesField& d_prev_iter,
                              const TimeSeriesField& u_prev_iter,
                              const SpectralField& d0, const PhysicalConstants& pc,
                              const SolveConfig& cfg) {
    d_prev_iter.validate();
    u_prev_iter.validate();
    if (d_prev_iter.times != u_prev_iter.times)
        throw std::invalid_argument("director_step: trajectories must share the time grid");
    const Grid& g = d0.grid();
    const std::size_t K = d_prev_iter.steps();
    const double dt = d_prev_iter.times[1] - d_prev_iter.times[0];
    const double gam = pc.gamma;

    // sources from the previous iterate: advection and the gradient-square
    // coefficient of the implicit cubic term
    std::vector<SpectralField> adv(K), coeff(K);
    for (std::size_t k = 0; k < K; ++k) {
        adv[k] = scaled(advect(u_prev_iter.fields[k], d_prev_iter.fields[k]), -1.0);
        coeff[k] = grad_magnitude_squared(gradient(d_prev_iter.fields[k]));
    }

    StepKernel ker(g, gam * dt);
    std::vector<SpectralField> out;
    out.reserve(K);
    out.push_back(d0);

    const double scale = std::max(1.0, linf_norm(d0));
    std::vector<cplx> prev_hat = spectra_of(d0);

    for (std::size_t k = 0; k + 1 < K; ++k) {
        // source at the known endpoint
        SpectralField s0 = adv[k] + scaled(dealias(pointwise_scale(coeff[k], out[k])), gam);
        std::vector<cplx> s0_hat = spectra_of(s0);

        SpectralField w = out[k]; // initial guess
        SweepGuard guard{cfg.inner_tol, cfg.inner_max_sweeps, "director_step"};
        std::vector<cplx> w_hat;
        while (true) {
            SpectralField s1 = adv[k + 1] + scaled(dealias(pointwise_scale(coeff[k + 1], w)), gam);
            std::vector<cplx> s1_hat = spectra_of(s1);
            advance_modes(g, d0.components(), ker, dt, prev_hat, s0_hat, s1_hat, w_hat);
            SpectralField w_new = SpectralField::from_fourier(g, d0.components(),
                                                              std::vector<cplx>(w_hat));
            double delta = max_abs_diff(w_new, w);
            w = std::move(w_new);
            if (guard.step(delta, scale)) break;
        }
        if (cfg.normalize_director) {
            w = normalized_director(w);
            prev_hat = spectra_of(w);
        } else {
            prev_hat = w_hat;
        }
        out.push_back(std::move(w));
    }
    return TimeSeriesField(d_prev_iter.times, std::move(out));
}

// ---------------------------------------------------------------------------
// velocity step
// ---------------------------------------------------------------------------

std::pair<TimeSeriesField, TimeSeriesField>
velocity_step(const TimeSeriesField& u_prev_iter, const TimeSeriesField& d_n,
              const TimeSeriesField& a_n, const TimeSeriesField& grad_pi_prev_iter,
              const SpectralField& u0, const PhysicalConstants& pc,
              const SolveConfig& cfg) {
    u_prev_iter.validate();
    if (u_prev_iter.times != d_n.times || u_prev_iter.times != a_n.times ||
        u_prev_iter.times != grad_pi_prev_iter.times)
        throw std::invalid_argument("velocity_step: trajectories must share the time grid");
    const Grid& g = u0.grid();
    const std::size_t K = u_prev_iter.steps();
    const double dt = u_prev_iter.times[1] - u_prev_iter.times[0];
    const double nu = pc.nu;

    // forcing from the current density/director and the previous pressure:
    // F = a (nu Lap u_prev - grad Pi_prev) - lambda div(grad d (.) grad d)
    std::vector<SpectralField> forcing(K);
    for (std::size_t k = 0; k < K; ++k) {
        SpectralField visc = axpy(nu, laplacian(u_prev_iter.fields[k]),
                                  scaled(grad_pi_prev_iter.fields[k], -1.0));
        forcing[k] = dealias(pointwise_scale(a_n.fields[k], visc)) -
                     scaled(elastic_stress_divergence(d_n.fields[k]), pc.lambda);
    }

    StepKernel ker(g, nu * dt);
    std::vector<SpectralField> out;
    out.reserve(K);
    out.push_back(leray_project(u0));

    // smallness proxy for the fixed-point hypothesis, reported on failure
    double v_size = 0.0;
    for (std::size_t k = 0; k < K; ++k)
        v_size = std::max(v_size, linf_norm(u_prev_iter.fields[k]));

    const double scale = std::max(1.0, linf_norm(u0));
    std::vector<cplx> prev_hat = spectra_of(out[0]);

    for (std::size_t k = 0; k + 1 < K; ++k) {
        SpectralField s0 = leray_project(
            forcing[k] - advect(u_prev_iter.fields[k], out[k]));
        std::vector<cplx> s0_hat = spectra_of(s0);

        SpectralField w = out[k];
        SweepGuard guard{cfg.inner_tol, cfg.inner_max_sweeps, "velocity_step"};
        std::vector<cplx> w_hat;
        while (true) {
            SpectralField s1 = leray_project(
                forcing[k + 1] - advect(u_prev_iter.fields[k + 1], w));
            std::vector<cplx> s1_hat = spectra_of(s1);
            advance_modes(g, g.dim, ker, dt, prev_hat, s0_hat, s1_hat, w_hat);
            SpectralField w_new = SpectralField::from_fourier(g, g.dim,
                                                              std::vector<cplx>(w_hat));
            double delta = max_abs_diff(w_new, w);
            w = std::move(w_new);
            bool done = false;
            try {
                done = guard.step(delta, scale);
            } catch (const std::runtime_error& e) {
                std::ostringstream os;
                os << e.what() << "; advecting velocity sup " << v_size
                   << " violates the smallness hypothesis of the inner fixed point";
                throw std::runtime_error(os.str());
            }
            if (done) break;
        }
        prev_hat = w_hat;
        out.push_back(std::move(w));
    }

    // pressure gradient: gradient part of the momentum source
    std::vector<SpectralField> gp;
    gp.reserve(K);
    for (std::size_t k = 0; k < K; ++k)
        gp.push_back(riesz_riesz(forcing[k] - advect(u_prev_iter.fields[k], out[k])));

    return {TimeSeriesField(u_prev_iter.times, std::move(out)),
            TimeSeriesField(u_prev_iter.times, std::move(gp))};
}

// ---------------------------------------------------------------------------
// norm ledgers
// ---------------------------------------------------------------------------

namespace {

struct LedgerBuilder {
    const std::vector<double>& times;
    NormLedger ledger;

    void add(const std::string& label, const std::vector<double>& vals, double w, double rho) {
        double v = time_norm(times, vals, w, rho);
        ledger.components.emplace_back(label, v);
        ledger.total += v;
    }
};

} // namespace

NormLedger x_norm_ledger(const TimeSeriesField& u, const TimeSeriesField& grad_d,
                         const TimeSeriesField& grad_pi, double r) {
    if (!(r > 1.0 && r < 2.0))
        throw std::invalid_argument("x_norm_ledger: requires 1 < r < 2");
    u.validate();
    const double N = u.grid().dim;
    const std::size_t K = u.steps();

    const double q_gd = 3.0 * N * r / (3.0 * r - 2.0);
    const double q_g1 = N * r / (2.0 * r - 1.0);
    const double q_g2 = N * r / (2.0 * (r - 1.0));
    const double q_low = N * r / (r - 1.0);
    const double q_top = N * r / (3.0 * r - 2.0);

    std::vector<double> v1(K), v2(K), v3(K), v4(K), v5(K);
    for (std::size_t k = 0; k < K; ++k) {
        const SpectralField& uk = u.fields[k];
        const SpectralField& gdk = grad_d.fields[k];
        SpectralField gu = gradient(uk);
        SpectralField ggd = gradient(gdk);
        SpectralField ggu = gradient(gu);
        SpectralField gggd = gradient(ggd);
        v1[k] = lp_norm(gdk, q_gd);
        v2[k] = lp_norm_stack({&gu, &ggd}, q_g1);
        v3[k] = lp_norm_stack({&gu, &ggd}, q_g2);
        v4[k] = lp_norm_stack({&uk, &gdk}, q_low);
        v5[k] = lp_norm_stack({&ggu, &gggd, &grad_pi.fields[k]}, q_top);
    }

    LedgerBuilder b{u.times, {}};
    b.add(norm_label("grad d", 0, 3 * r, q_gd), v1, 0, 3 * r);
    b.add(norm_label("grad(u, grad d)", 0, 2 * r, q_g1), v2, 0, 2 * r);
    b.add(norm_label("grad(u, grad d)", 0, r, q_g2), v3, 0, r);
    b.add(norm_label("(u, grad d)", 0, 2 * r, q_low), v4, 0, 2 * r);
    b.add(norm_label("(grad^2 u, grad^3 d, grad Pi)", 0, r, q_top), v5, 0, r);
    return b.ledger;
}

NormLedger x_norm_ledger(const Trajectory& traj, double r) {
    TimeSeriesField u = traj.series_u();
    TimeSeriesField d = traj.series_d();
    std::vector<SpectralField> gds;
    gds.reserve(d.steps());
    for (auto& f : d.fields) gds.push_back(gradient(f));
    TimeSeriesField gd(d.times, std::move(gds));
    return x_norm_ledger(u, gd, traj.series_grad_pi(), r);
}

NormLedger y_norm_ledger(const TimeSeriesField& u, const TimeSeriesField& grad_d,
                         const TimeSeriesField& grad_pi,
                         const WeightedExponentTable& tbl) {
    u.validate();
    const std::size_t K = u.steps();
    const double r = tbl.r;
    if (auto viol = tbl.violated_hypothesis(1.0 + 1e-9))
        throw std::invalid_argument("y_norm_ledger: " + *viol);

    std::vector<double> g_p2(K), g_p32(K), low_p3(K), gd_3p1(K), top1(K), top2(K);
    for (std::size_t k = 0; k < K; ++k) {
        const SpectralField& uk = u.fields[k];
        const SpectralField& gdk = grad_d.fields[k];
        SpectralField gu = gradient(uk);
        SpectralField ggd = gradient(gdk);
        SpectralField ggu = gradient(gu);
        SpectralField gggd = gradient(ggd);
        g_p2[k] = lp_norm_stack({&gu, &ggd}, tbl.p2);
        g_p32[k] = lp_norm_stack({&gu, &ggd}, tbl.p3 / 2.0);
        low_p3[k] = lp_norm_stack({&uk, &gdk}, tbl.p3);
        gd_3p1[k] = lp_norm(gdk, 3.0 * tbl.p1);
        top1[k] = lp_norm_stack({&ggu, &grad_pi.fields[k]}, tbl.p1);
        top2[k] = lp_norm_stack({&ggu, &gggd, &grad_pi.fields[k]}, tbl.p1);
    }

    LedgerBuilder b{u.times, {}};
    b.add(norm_label("grad(u, grad d)", tbl.beta1, 2 * r, tbl.p2), g_p2, tbl.beta1, 2 * r);
    b.add(norm_label("grad(u, grad d)", tbl.beta2, inf, tbl.p2), g_p2, tbl.beta2, inf);
    b.add(norm_label("grad(u, grad d)", tbl.beta3, 2 * r, tbl.p3 / 2), g_p32, tbl.beta3, 2 * r);
    b.add(norm_label("grad(u, grad d)", tbl.beta4, inf, tbl.p3 / 2), g_p32, tbl.beta4, inf);
    b.add(norm_label("(u, grad d)", tbl.gamma1, 2 * r, tbl.p3), low_p3, tbl.gamma1, 2 * r);
    b.add(norm_label("(u, grad d)", tbl.gamma2, inf, tbl.p3), low_p3, tbl.gamma2, inf);
    b.add(norm_label("grad d", tbl.gamma3, 2 * r, 3 * tbl.p1), gd_3p1, tbl.gamma3, 2 * r);
    b.add(norm_label("grad d", tbl.gamma4, inf, 3 * tbl.p1), gd_3p1, tbl.gamma4, inf);
    b.add(norm_label("(grad^2 u, grad Pi)", tbl.alpha1, 2 * r, tbl.p1), top1, tbl.alpha1, 2 * r);
    b.add(norm_label("(grad^2 u, grad^3 d, grad Pi)", tbl.alpha2, r, tbl.p1), top2,
          tbl.alpha2, r);
    return b.ledger;
}

NormLedger y_norm_ledger(const Trajectory& traj, const WeightedExponentTable& tbl) {
    TimeSeriesField u = traj.series_u();
    TimeSeriesField d = traj.series_d();
    std::vector<SpectralField> gds;
    gds.reserve(d.steps());
    for (auto& f : d.fields) gds.push_back(gradient(f));
    TimeSeriesField gd(d.times, std::move(gds));
    return y_norm_ledger(u, gd, traj.series_grad_pi(), tbl);
}

// ---------------------------------------------------------------------------
// Picard loop
// ---------------------------------------------------------------------------

namespace {

TimeSeriesField zero_series(const Grid& g, int comps, const std::vector<double>& times) {
    std::vector<SpectralField> fields(times.size(), SpectralField(g, comps));
    return TimeSeriesField(times, std::move(fields));
}

TimeSeriesField series_diff(const TimeSeriesField& a, const TimeSeriesField& b) {
    std::vector<SpectralField> fields;
    fields.reserve(a.steps());
    for (std::size_t k = 0; k < a.steps(); ++k) fields.push_back(a.fields[k] - b.fields[k]);
    return TimeSeriesField(a.times, std::move(fields));
}

TimeSeriesField gradient_series(const TimeSeriesField& f) {
    std::vector<SpectralField> fields;
    fields.reserve(f.steps());
    for (auto& fl : f.fields) fields.push_back(gradient(fl));
    return TimeSeriesField(f.times, std::move(fields));
}

} // namespace

SolveResult picard_solve(const SpectralField& a0, const SpectralField& u0_in,
                         const SpectralField& d0_in, const SolveConfig& cfg) {
    cfg.constants.validate();
    const Grid& g = u0_in.grid();

    SpectralField a0r = a0, u0 = u0_in, d0 = d0_in;
    if (cfg.regularize_level >= 0)
        std::tie(a0r, u0, d0) = regularize_data(a0, u0_in, d0_in, cfg.regularize_level);

    SolveResult result;
    result.eta = besov::smallness_eta(a0r, u0, d0, cfg.p, cfg.r);
    result.smallness_ok = result.eta <= cfg.c0;
    if (!result.smallness_ok && cfg.enforce_smallness) {
        std::ostringstream os;
        os << "picard_solve: smallness eta = " << result.eta << " exceeds c0 = " << cfg.c0
           << " (set smallness = warn to proceed)";
        throw std::invalid_argument(os.str());
    }

    const int K = static_cast<int>(std::llround(cfg.T / cfg.dt));
    if (K < 2 || std::abs(K * cfg.dt - cfg.T) > 1e-9 * cfg.T)
        throw std::invalid_argument("picard_solve: T must be an (>=2) integer multiple of dt");
    std::vector<double> times(K + 1);
    for (int k = 0; k <= K; ++k) times[k] = cfg.dt * k;

    // zero initial iterates; the director starts from the spatial mean of
    // d0 (a constant field, so its gradient vanishes as the scheme demands
    // while the increment monitor stays finite for unit-sphere data)
    TimeSeriesField u_prev = zero_series(g, g.dim, times);
    TimeSeriesField gp_prev = zero_series(g, g.dim, times);
    TimeSeriesField a_cur = zero_series(g, 1, times);
    TimeSeriesField d_prev = zero_series(g, g.dim, times);
    {
        SpectralField d_const(g, g.dim);
        for (int c = 0; c < g.dim; ++c) {
            double mu = component_mean(d0, c);
            double* p = d_const.component_data(c);
            kern::parallel_for(g.size(), [&](std::size_t i) { p[i] = mu; });
        }
        for (auto& f : d_prev.fields) f = d_const;
    }

    const bool x_path = cfg.r < 2.0;
    WeightedExponentTable tbl;
    if (!x_path) {
        double p1 = cfg.p1, p3 = cfg.p3;
        if (p1 == 0.0 || p3 == 0.0)
            std::tie(p1, p3) = default_weighted_exponents(g.dim, cfg.r, cfg.p);
        tbl = WeightedExponentTable::make(g.dim, cfg.r, p1, p3);
    }

    for (int n = 1; n <= cfg.n_max; ++n) {
        a_cur = transport_trajectory(a0r, u_prev);
        TimeSeriesField d_cur = director_step(d_prev, u_prev, d0, cfg.constants, cfg);
        auto [u_cur, gp_cur] =
            velocity_step(u_prev, d_cur, a_cur, gp_prev, u0, cfg.constants, cfg);

        // increment monitor between consecutive iterates
        TimeSeriesField du = series_diff(u_cur, u_prev);
        TimeSeriesField dd = series_diff(d_cur, d_prev);
        TimeSeriesField dgp = series_diff(gp_cur, gp_prev);
        TimeSeriesField dgd = gradient_series(dd);

        IterationReport rep;
        rep.n = n;
        {
            std::vector<double> dsup(du.steps()), mix(du.steps()), wsup(du.steps());
            for (std::size_t k = 0; k < du.steps(); ++k) {
                dsup[k] = linf_norm(dd.fields[k]);
                mix[k] = lp_norm_stack({&du.fields[k], &dgd.fields[k]}, inf);
                wsup[k] = linf_norm(du.fields[k]);
            }
            rep.d_sup = *std::max_element(dsup.begin(), dsup.end());
            if (x_path) {
                rep.ledger_total = x_norm_ledger(du, dgd, dgp, cfg.r).total;
                rep.tail_term = time_norm(times, mix, 0.0, 2.0);
            } else {
                rep.ledger_total = y_norm_ledger(du, dgd, dgp, tbl).total;
                rep.tail_term = time_norm(times, wsup, 0.5, inf);
            }
        }
        rep.delta_U = rep.d_sup + rep.ledger_total + rep.tail_term;
        rep.converged = rep.delta_U <= cfg.tol;
        result.reports.push_back(rep);

        u_prev = std::move(u_cur);
        d_prev = std::move(d_cur);
        gp_prev = std::move(gp_cur);

        if (rep.converged) {
            result.converged = true;
            break;
        }
    }

    Trajectory traj;
    traj.iterations = static_cast<int>(result.reports.size());
    for (int k = 0; k <= K; ++k) {
        StateSnapshot s;
        s.time = times[k];
        s.a = a_cur.fields[k];
        s.u = u_prev.fields[k];
        s.d = d_prev.fields[k];
        s.grad_pi = gp_prev.fields[k];
        s.constants = cfg.constants;
        s.a.drop_fourier();
        s.u.drop_fourier();
        s.d.drop_fourier();
        s.grad_pi.drop_fourier();
        traj.snapshots.push_back(std::move(s));
    }
    result.trajectory = std::move(traj);
    return result;
}

// ---------------------------------------------------------------------------
// weak-form residuals
// ---------------------------------------------------------------------------

std::vector<SpaceTimeTestFunction> make_test_functions(const Grid& g, double T,
                                                       int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto band_limited = [&](int comps) {
        SpectralField f(g, comps);
        for (int c = 0; c < comps; ++c) {
            double* p = f.component_data(c);
            std::fill(p, p + g.size(), 0.0);
            for (int kx = 0; kx <= 2; ++kx)
                for (int ky = -2; ky <= 2; ++ky)
                    for (int kz = (g.dim == 3 ? -2 : 0); kz <= (g.dim == 3 ? 2 : 0); ++kz) {
                        if (kx == 0 && (ky < 0 || (ky == 0 && kz <= 0))) continue;
                        double ca = unif(rng), cb = unif(rng);
                        for (std::size_t i = 0; i < g.size(); ++i) {
                            auto ix = g.unflatten(i);
                            double ph = two_pi / g.length *
                                        (kx * g.coord(ix[0]) + ky * g.coord(ix[1]) +
                                         (g.dim == 3 ? kz * g.coord(ix[2]) : 0.0));
                            p[i] += ca * std::cos(ph) + cb * std::sin(ph);
                        }
                    }
        }
        return f;
    };

    // smooth bump supported strictly inside (0, T)
    const double span = 0.95;
    auto psi = [T, span](double t) {
        double tau = (2.0 * t / T - 1.0) / span;
        if (std::abs(tau) >= 1.0) return 0.0;
        return std::exp(-1.0 / (1.0 - tau * tau) + 1.0);
    };
    auto dpsi = [T, span, psi](double t) {
        double tau = (2.0 * t / T - 1.0) / span;
        if (std::abs(tau) >= 1.0) return 0.0;
        double om = 1.0 - tau * tau;
        return psi(t) * (-2.0 * tau / (om * om)) * (2.0 / (T * span));
    };

    std::vector<SpaceTimeTestFunction> tests;
    for (int i = 0; i < n; ++i) {
        SpaceTimeTestFunction s;
        s.shape = band_limited(1);
        s.psi = psi;
        s.dpsi = dpsi;
        s.label = "s" + std::to_string(i);
        tests.push_back(std::move(s));

        SpaceTimeTestFunction v;
        v.shape = band_limited(g.dim);
        v.psi = psi;
        v.dpsi = dpsi;
        v.label = "v" + std::to_string(i);
        tests.push_back(std::move(v));
    }
    return tests;
}

namespace {

double space_integral(const SpectralField& f) {
    const double cell = std::pow(f.grid().spacing(), f.grid().dim);
    auto vals = f.values();
    return cell * kern::sum(vals.size(), [&](std::size_t i) { return vals[i]; });
}

double dot_integral(const SpectralField& a, const SpectralField& b) {
    check_same_shape(a, b, "dot_integral");
    const double cell = std::pow(a.grid().spacing(), a.grid().dim);
    auto av = a.values();
    auto bv = b.values();
    return cell * kern::sum(av.size(), [&](std::size_t i) { return av[i] * bv[i]; });
}

// composite Simpson over the uniform snapshot grid (trapezoid fallback)
double time_integral(const std::vector<double>& times, const std::vector<double>& v) {
    const std::size_t K = times.size() - 1;
    const double dt = times[1] - times[0];
    if (K % 2 == 0) {
        double acc = v[0] + v[K];
        for (std::size_t k = 1; k < K; ++k) acc += (k % 2 == 1 ? 4.0 : 2.0) * v[k];
        return acc * dt / 3.0;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < K; ++k) acc += 0.5 * dt * (v[k] + v[k + 1]);
    return acc;
}

} // namespace

std::vector<std::pair<std::string, double>>
weak_form_residual(const Trajectory& traj,
                   const std::vector<SpaceTimeTestFunction>& tests) {
    const Grid& g = traj.grid();
    const PhysicalConstants& pc = traj.constants();
    const std::size_t K = traj.steps();
    std::vector<double> times;
    for (const auto& s : traj.snapshots) times.push_back(s.time);

    std::vector<std::pair<std::string, double>> out;
    for (const auto& tf : tests) {
        const bool scalar = tf.shape.components() == 1;
        if (scalar) {
            SpectralField grad_phi = gradient(tf.shape);
            std::vector<double> transport(K), divres(K);
            for (std::size_t k = 0; k < K; ++k) {
                const auto& s = traj.snapshots[k];
                double psi = tf.psi(s.time), dps = tf.dpsi(s.time);
                // a (psi' phi + psi u . grad phi)
                SpectralField u_dot_gphi(g, 1);
                {
                    double* p = u_dot_gphi.component_data(0);
                    kern::parallel_for(g.size(), [&](std::size_t i) {
                        double acc = 0.0;
                        for (int ax = 0; ax < g.dim; ++ax)
                            acc += s.u.at(ax, i) * grad_phi.at(ax, i);
                        p[i] = acc;
                    });
                }
                SpectralField integrand(g, 1);
                {
                    double* p = integrand.component_data(0);
                    const double* ug = u_dot_gphi.component_ptr(0);
                    const double* ph = tf.shape.component_ptr(0);
                    const double* av = s.a.component_ptr(0);
                    kern::parallel_for(g.size(), [&](std::size_t i) {
                        p[i] = av[i] * (dps * ph[i] + psi * ug[i]);
                    });
                }
                transport[k] = space_integral(integrand);
                divres[k] = psi * space_integral(u_dot_gphi);
            }
            out.emplace_back("transport/" + tf.label,
                             std::abs(time_integral(times, transport)));
            out.emplace_back("divergence/" + tf.label,
                             std::abs(time_integral(times, divres)));
        } else {
            SpectralField grad_shape = gradient(tf.shape); // (c, axis)
            std::vector<double> momentum(K), director(K);
            for (std::size_t k = 0; k < K; ++k) {
                const auto& s = traj.snapshots[k];
                double psi = tf.psi(s.time), dps = tf.dpsi(s.time);

                // momentum: u.Phi psi' - [u.grad u + (1+a)(grad Pi - nu Lap u)].Phi psi
                //           + lambda (grad d (.) grad d) : grad Phi psi
                SpectralField uu = advect(s.u, s.u);
                SpectralField lap_u = laplacian(s.u);
                SpectralField gd = gradient(s.d);
                double term = dps * dot_integral(s.u, tf.shape);
                {
                    SpectralField bulk(g, g.dim);
                    for (int c = 0; c < g.dim; ++c) {
                        double* p = bulk.component_data(c);
                        const double* av = s.a.component_ptr(0);
                        kern::parallel_for(g.size(), [&](std::size_t i) {
                            p[i] = uu.at(c, i) + (1.0 + av[i]) * (s.grad_pi.at(c, i) -
                                                                   pc.nu * lap_u.at(c, i));
                        });
                    }
                    term -= psi * dot_integral(bulk, tf.shape);
                }
                {
                    // sum_{i,j} D_ij d_i Phi_j with D_ij = sum_c d_i d_c d_j d_c
                    SpectralField contr(g, 1);
                    double* p = contr.component_data(0);
                    kern::parallel_for(g.size(), [&](std::size_t i) {
                        double acc = 0.0;
                        for (int ii = 0; ii < g.dim; ++ii)
                            for (int jj = 0; jj < g.dim; ++jj) {
                                double dij = 0.0;
                                for (int c = 0; c < g.dim; ++c)
                                    dij += gd.at(c * g.dim + ii, i) * gd.at(c * g.dim + jj, i);
                                acc += dij * grad_shape.at(jj * g.dim + ii, i);
                            }
                        p[i] = acc;
                    });
                    term += psi * pc.lambda * space_integral(contr);
                }
                momentum[k] = term;

                // director: d.Phi psi' - [u.grad d - gamma Lap d - gamma |grad d|^2 d].Phi psi
                SpectralField ud = advect(s.u, s.d);
                SpectralField lap_d = laplacian(s.d);
                SpectralField gm = grad_magnitude_squared(gd);
                double dterm = dps * dot_integral(s.d, tf.shape);
                {
                    SpectralField bulk(g, g.dim);
                    for (int c = 0; c < g.dim; ++c) {
                        double* p = bulk.component_data(c);
                        const double* gmp = gm.component_ptr(0);
                        kern::parallel_for(g.size(), [&](std::size_t i) {
                            p[i] = ud.at(c, i) - pc.gamma * lap_d.at(c, i) -
                                   pc.gamma * gmp[i] * s.d.at(c, i);
                        });
                    }
                    dterm -= psi * dot_integral(bulk, tf.shape);
                }
                director[k] = dterm;
            }
            out.emplace_back("momentum/" + tf.label,
                             std::abs(time_integral(times, momentum)));
            out.emplace_back("director/" + tf.label,
                             std::abs(time_integral(times, director)));
        }
    }
    return out;
}

} // namespace nematic::solver
