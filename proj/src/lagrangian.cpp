#include "nematic/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace nematic::lagrangian {

namespace {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// pointwise matrix-field algebra; matrices stored row-major (i*dim + j)
// ---------------------------------------------------------------------------

SpectralField mat_identity(const Grid& g) {
    SpectralField I(g, g.dim * g.dim);
    for (int i = 0; i < g.dim; ++i) {
        double* p = I.component_data(i * g.dim + i);
        kern::parallel_for(g.size(), [&](std::size_t q) { p[q] = 1.0; });
    }
    return I;
}

SpectralField mat_mul(const SpectralField& A, const SpectralField& B) {
    const Grid& g = A.grid();
    const int d = g.dim;
    SpectralField R(g, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double* r = R.component_data(i * d + j);
            kern::parallel_for(g.size(), [&](std::size_t q) {
                double acc = 0.0;
                for (int m = 0; m < d; ++m)
                    acc += A.at(i * d + m, q) * B.at(m * d + j, q);
                r[q] = acc;
            });
        }
    return R;
}

/// sup over points of the matrix infinity norm (max abs row sum).
double mat_sup_norm(const SpectralField& M) {
    const Grid& g = M.grid();
    const int d = g.dim;
    return kern::max(g.size(), [&](std::size_t q) {
        double worst = 0.0;
        for (int i = 0; i < d; ++i) {
            double row = 0.0;
            for (int j = 0; j < d; ++j) row += std::abs(M.at(i * d + j, q));
            worst = std::max(worst, row);
        }
        return worst;
    });
}

// Jacobian of a displacement field: J_ij = delta_ij + d disp_i / d y_j.
SpectralField jacobian_of(const SpectralField& disp) {
    const Grid& g = disp.grid();
    SpectralField gd = gradient(disp); // (c, axis) = d disp_c / d y_axis
    SpectralField J(g, g.dim * g.dim);
    for (int i = 0; i < g.dim; ++i)
        for (int j = 0; j < g.dim; ++j) {
            double* p = J.component_data(i * g.dim + j);
            const double* src = gd.component_ptr(i * g.dim + j);
            const double one = i == j ? 1.0 : 0.0;
            kern::parallel_for(g.size(), [&](std::size_t q) { p[q] = one + src[q]; });
        }
    return J;
}

} // namespace

SpectralField direct_inverse(const SpectralField& M) {
    const Grid& g = M.grid();
    const int d = g.dim;
    if (M.components() != d * d)
        throw std::invalid_argument("direct_inverse: not a matrix field");
    SpectralField out(g, d * d);
    std::vector<double*> o(d * d);
    for (int c = 0; c < d * d; ++c) o[c] = out.component_data(c);
    kern::parallel_for(g.size(), [&](std::size_t q) {
        if (d == 2) {
            double a = M.at(0, q), b = M.at(1, q), c = M.at(2, q), e = M.at(3, q);
            double det = a * e - b * c;
            o[0][q] = e / det;
            o[1][q] = -b / det;
            o[2][q] = -c / det;
            o[3][q] = a / det;
        } else {
            double a = M.at(0, q), b = M.at(1, q), c = M.at(2, q);
            double e = M.at(3, q), f = M.at(4, q), h = M.at(5, q);
            double i = M.at(6, q), j = M.at(7, q), k = M.at(8, q);
            double A = f * k - h * j, B = -(e * k - h * i), C = e * j - f * i;
            double det = a * A + b * B + c * C;
            o[0][q] = A / det;
            o[1][q] = -(b * k - c * j) / det;
            o[2][q] = (b * h - c * f) / det;
            o[3][q] = B / det;
            o[4][q] = (a * k - c * i) / det;
            o[5][q] = -(a * h - c * e) / det;
            o[6][q] = C / det;
            o[7][q] = -(a * j - b * i) / det;
            o[8][q] = (a * f - b * e) / det;
        }
    });
    return out;
}

std::pair<SpectralField, NeumannCertificate> neumann_inverse(const SpectralField& C) {
    const Grid& g = C.grid();
    NeumannCertificate cert;
    cert.rho = mat_sup_norm(C);
    SpectralField A = mat_identity(g);
    SpectralField term = mat_identity(g);
    for (int k = 1; k <= 64; ++k) {
        term = scaled(mat_mul(C, term), -1.0);
        A = A + term;
        cert.terms = k;
        double inc = linf_norm(term);
        if (inc <= 1e-12) {
            cert.converged = true;
            break;
        }
    }
    cert.tail_bound = cert.rho < 1.0
                          ? std::pow(cert.rho, cert.terms + 1) / (1.0 - cert.rho)
                          : std::numeric_limits<double>::infinity();
    return {std::move(A), cert};
}

std::pair<TimeSeriesField, std::vector<NeumannCertificate>>
neumann_A(const TimeSeriesField& jacobian) {
    jacobian.validate();
    std::vector<SpectralField> As;
    std::vector<NeumannCertificate> certs;
    const Grid& g = jacobian.grid();
    SpectralField I = mat_identity(g);
    for (const auto& J : jacobian.fields) {
        SpectralField C = J - I;
        double rho = mat_sup_norm(C);
        if (rho >= 1.0) {
            std::ostringstream os;
            os << "neumann_A: contraction proxy rho = " << rho << " >= 1";
            throw std::invalid_argument(os.str());
        }
        auto [A, cert] = neumann_inverse(C);
        As.push_back(std::move(A));
        certs.push_back(cert);
    }
    return {TimeSeriesField(jacobian.times, std::move(As)), std::move(certs)};
}

// ---------------------------------------------------------------------------
// flow map
// ---------------------------------------------------------------------------

std::vector<double> FlowMap::positions(std::size_t k) const {
    const Grid& g = displacement.grid();
    const std::size_t n = g.size();
    std::vector<double> pos(n * g.dim);
    const SpectralField& disp = displacement.fields.at(k);
    for (int a = 0; a < g.dim; ++a) {
        const double* da = disp.component_ptr(a);
        kern::parallel_for(n, [&](std::size_t i) {
            auto ix = g.unflatten(i);
            pos[i * g.dim + a] = g.coord(ix[a]) + da[i];
        });
    }
    return pos;
}

std::vector<double> FlowMap::inverse_positions(std::size_t k) const {
    const Grid& g = inverse_disp.grid();
    const std::size_t n = g.size();
    std::vector<double> pos(n * g.dim);
    const SpectralField& disp = inverse_disp.fields.at(k);
    for (int a = 0; a < g.dim; ++a) {
        const double* da = disp.component_ptr(a);
        kern::parallel_for(n, [&](std::size_t i) {
            auto ix = g.unflatten(i);
            pos[i * g.dim + a] = g.coord(ix[a]) + da[i];
        });
    }
    return pos;
}

namespace {

// one RK4 advance of positions along linearly interpolated-in-time velocity;
// sign = +1 integrates forward (u_a at start), sign = -1 backward from u_b.
std::vector<double> rk4_displacement(const Grid& g, const std::vector<double>& pos,
                                     const SpectralField& u_a, const SpectralField& u_mid,
                                     const SpectralField& u_b, double dt) {
    const std::size_t n = g.size();
    const int d = g.dim;
    std::vector<double> k1(n * d), k2(n * d), k3(n * d), k4(n * d), probe(n * d);

    interp::sample_field(u_a, pos, k1);
    kern::parallel_for(n * d, [&](std::size_t i) { probe[i] = pos[i]; });
    auto advance_probe = [&](const std::vector<double>& slope, double frac) {
        kern::parallel_for(n, [&](std::size_t i) {
            for (int a = 0; a < d; ++a)
                probe[i * d + a] = pos[i * d + a] + frac * dt * slope[i * d + a];
        });
    };
    // sample_field writes component-major; repack to point-major slopes
    auto repack = [&](std::vector<double>& slope) {
        std::vector<double> tmp(n * d);
        kern::parallel_for(n, [&](std::size_t i) {
            for (int a = 0; a < d; ++a) tmp[i * d + a] = slope[a * n + i];
        });
        slope.swap(tmp);
    };
    repack(k1);
    advance_probe(k1, 0.5);
    interp::sample_field(u_mid, probe, k2);
    repack(k2);
    advance_probe(k2, 0.5);
    interp::sample_field(u_mid, probe, k3);
    repack(k3);
    advance_probe(k3, 1.0);
    interp::sample_field(u_b, probe, k4);
    repack(k4);

    std::vector<double> out(n * d);
    kern::parallel_for(n, [&](std::size_t i) {
        for (int a = 0; a < d; ++a)
            out[i * d + a] = pos[i * d + a] +
                             dt / 6.0 *
                                 (k1[i * d + a] + 2.0 * k2[i * d + a] +
                                  2.0 * k3[i * d + a] + k4[i * d + a]);
    });
    return out;
}

std::vector<double> grid_positions(const Grid& g) {
    const std::size_t n = g.size();
    std::vector<double> pos(n * g.dim);
    for (std::size_t i = 0; i < n; ++i) {
        auto ix = g.unflatten(i);
        for (int a = 0; a < g.dim; ++a) pos[i * g.dim + a] = g.coord(ix[a]);
    }
    return pos;
}

SpectralField displacement_from(const Grid& g, const std::vector<double>& pos) {
    SpectralField disp(g, g.dim);
    const std::size_t n = g.size();
    for (int a = 0; a < g.dim; ++a) {
        double* p = disp.component_data(a);
        kern::parallel_for(n, [&](std::size_t i) {
            auto ix = g.unflatten(i);
            p[i] = pos[i * g.dim + a] - g.coord(ix[a]);
        });
    }
    return disp;
}

} // namespace

FlowMap flow_map(const TimeSeriesField& u) {
    u.validate();
    const Grid& g = u.grid();
    if (u.components() != g.dim)
        throw std::invalid_argument("flow_map: velocity must have N components");
    const std::size_t K = u.steps();
    const std::size_t n = g.size();

    FlowMap fm;
    fm.times = u.times;

    std::vector<SpectralField> disp, idisp, jac, vlag;
    disp.push_back(SpectralField(g, g.dim));
    idisp.push_back(SpectralField(g, g.dim));

    std::vector<double> x_pos = grid_positions(g);   // X(t_k, y), point-major
    std::vector<double> base = grid_positions(g);

    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double dt = u.times[k + 1] - u.times[k];
        SpectralField u_mid = axpy(0.5, u.fields[k], scaled(u.fields[k + 1], 0.5));
        // forward characteristics for X
        x_pos = rk4_displacement(g, x_pos, u.fields[k], u_mid, u.fields[k + 1], dt);
        disp.push_back(displacement_from(g, x_pos));

        // inverse map by backward-characteristic composition:
        // Y_{k+1}(x) = Y_k(foot(x)) with foot one backward step from t_{k+1}
        std::vector<double> foot =
            rk4_displacement(g, base, u.fields[k + 1], u_mid, u.fields[k], -dt);
        std::vector<double> q_at_foot(n * g.dim);
        interp::sample_field(idisp.back(), foot, q_at_foot);
        SpectralField qnew(g, g.dim);
        for (int a = 0; a < g.dim; ++a) {
            double* p = qnew.component_data(a);
            const double* qa = q_at_foot.data() + static_cast<std::size_t>(a) * n;
            kern::parallel_for(n, [&](std::size_t i) {
                auto ix = g.unflatten(i);
                p[i] = foot[i * g.dim + a] + qa[i] - g.coord(ix[a]);
            });
        }
        idisp.push_back(std::move(qnew));
    }

    // Lagrangian velocity v(t,y) = u(t, X(t,y)) and the Lipschitz budget
    fm.lipschitz_budget.assign(K, 0.0);
    std::vector<double> dv_sup(K);
    for (std::size_t k = 0; k < K; ++k) {
        std::vector<double> pos(n * g.dim);
        const SpectralField& dk = disp[k];
        for (int a = 0; a < g.dim; ++a) {
            const double* da = dk.component_ptr(a);
            kern::parallel_for(n, [&](std::size_t i) {
                auto ix = g.unflatten(i);
                pos[i * g.dim + a] = g.coord(ix[a]) + da[i];
            });
        }
        vlag.push_back(interp::pullback(u.fields[k], pos));
        SpectralField gv = gradient(vlag.back());
        dv_sup[k] = mat_sup_norm(gv);
    }
    for (std::size_t k = 1; k < K; ++k)
        fm.lipschitz_budget[k] = fm.lipschitz_budget[k - 1] +
                                 0.5 * (u.times[k] - u.times[k - 1]) *
                                     (dv_sup[k - 1] + dv_sup[k]);

    for (std::size_t k = 0; k < K; ++k) jac.push_back(jacobian_of(disp[k]));

    fm.displacement = TimeSeriesField(u.times, std::move(disp));
    fm.inverse_disp = TimeSeriesField(u.times, std::move(idisp));
    fm.velocity_lag = TimeSeriesField(u.times, std::move(vlag));
    fm.jacobian = TimeSeriesField(u.times, std::move(jac));

    fm.neumann_used = fm.lipschitz_budget.back() < 1.0;
    if (fm.neumann_used) {
        try {
            auto [As, certs] = neumann_A(fm.jacobian);
            fm.jac_inverse = std::move(As);
            fm.certificates = std::move(certs);
        } catch (const std::invalid_argument&) {
            fm.neumann_used = false; // proxy too large after all
        }
    }
    if (!fm.neumann_used) {
        std::vector<SpectralField> As;
        for (const auto& J : fm.jacobian.fields) As.push_back(direct_inverse(J));
        fm.jac_inverse = TimeSeriesField(u.times, std::move(As));
        fm.certificates.assign(K, NeumannCertificate{});
    }
    return fm;
}

// ---------------------------------------------------------------------------
// Eulerian -> Lagrangian transform
// ---------------------------------------------------------------------------

namespace {

/// chain-rule gradient pullback: (A^T grad_y F)_{c,j} = sum_i A_ij dF_c/dy_i
SpectralField chain_gradient(const SpectralField& A, const SpectralField& F) {
    const Grid& g = F.grid();
    const int d = g.dim;
    SpectralField gF = gradient(F);
    SpectralField out(g, F.components() * d);
    for (int c = 0; c < F.components(); ++c)
        for (int j = 0; j < d; ++j) {
            double* p = out.component_data(c * d + j);
            kern::parallel_for(g.size(), [&](std::size_t q) {
                double acc = 0.0;
                for (int i = 0; i < d; ++i)
                    acc += A.at(i * d + j, q) * gF.at(c * d + i, q);
                p[q] = acc;
            });
        }
    return out;
}

SpectralField pressure_potential(const SpectralField& grad_pi) {
    const Grid& g = grad_pi.grid();
    const std::size_t n = g.size();
    grad_pi.ensure_fourier();
    std::vector<cplx> spec(n);
    kern::parallel_for(n, [&](std::size_t i) {
        auto ix = g.unflatten(i);
        double k2 = 0.0;
        cplx kg = 0.0;
        for (int a = 0; a < g.dim; ++a) {
            double kap = g.wavenumber(ix[a]);
            k2 += kap * kap;
            kg += kap * grad_pi.fourier(a)[i];
        }
        spec[i] = k2 == 0.0 ? cplx(0.0) : kg / cplx(0.0, k2);
    });
    return SpectralField::from_fourier(g, 1, std::move(spec));
}

} // namespace

LagrangianState to_lagrangian(const Trajectory& state, const FlowMap& fm) {
    const std::size_t K = state.steps();
    if (fm.times.size() != K)
        throw std::invalid_argument("to_lagrangian: time-grid mismatch");
    for (std::size_t k = 0; k < K; ++k)
        if (std::abs(fm.times[k] - state.snapshots[k].time) > 1e-12)
            throw std::invalid_argument("to_lagrangian: time-grid mismatch");

    LagrangianState lag;
    lag.times = fm.times;
    std::vector<SpectralField> b, v, om, pr, hp, hc;
    for (std::size_t k = 0; k < K; ++k) {
        const auto& s = state.snapshots[k];
        auto pos = fm.positions(k);
        b.push_back(interp::pullback(s.a, pos));
        v.push_back(interp::pullback(s.u, pos));
        om.push_back(interp::pullback(s.d, pos));
        pr.push_back(interp::pullback(pressure_potential(s.grad_pi), pos));
        hp.push_back(interp::pullback(gradient(s.d), pos));
        hc.push_back(chain_gradient(fm.jac_inverse.fields[k], om.back()));
        lag.h_discrepancy = std::max(lag.h_discrepancy, max_abs_diff(hp.back(), hc.back()));
        SpectralField gu_pull = interp::pullback(gradient(s.u), pos);
        SpectralField gu_chain = chain_gradient(fm.jac_inverse.fields[k], v.back());
        lag.grad_u_discrepancy =
            std::max(lag.grad_u_discrepancy, max_abs_diff(gu_pull, gu_chain));
    }
    lag.b = TimeSeriesField(lag.times, std::move(b));
    lag.v = TimeSeriesField(lag.times, std::move(v));
    lag.omega = TimeSeriesField(lag.times, std::move(om));
    lag.pressure = TimeSeriesField(lag.times, std::move(pr));
    lag.h_pullback = TimeSeriesField(lag.times, std::move(hp));
    lag.h_chain = TimeSeriesField(lag.times, std::move(hc));
    return lag;
}

// ---------------------------------------------------------------------------
// residuals of the transformed system
// ---------------------------------------------------------------------------

namespace {

/// div_y of the matrix-vector product (A w)_i = sum_m A_im w_m.
SpectralField div_A_vec(const SpectralField& A, const SpectralField& w) {
    const Grid& g = w.grid();
    const int d = g.dim;
    SpectralField Aw(g, d);
    for (int i = 0; i < d; ++i) {
        double* p = Aw.component_data(i);
        kern::parallel_for(g.size(), [&](std::size_t q) {
            double acc = 0.0;
            for (int m = 0; m < d; ++m) acc += A.at(i * d + m, q) * w.at(m, q);
            p[q] = acc;
        });
    }
    return divergence(Aw);
}

} // namespace

LagResiduals lagrangian_residuals(const LagrangianState& lag, const FlowMap& fm,
                                  const PhysicalConstants& pc) {
    const Grid& g = lag.v.grid();
    const int d = g.dim;
    const std::size_t K = lag.times.size();
    LagResiduals res;
    if (K < 3) return res;

    for (std::size_t k = 1; k + 1 < K; ++k) {
        const double dt2 = lag.times[k + 1] - lag.times[k - 1];
        const SpectralField& A = fm.jac_inverse.fields[k];
        const SpectralField& h = lag.h_chain.fields[k];
        const SpectralField& om = lag.omega.fields[k];
        const SpectralField& vk = lag.v.fields[k];

        // density: d_t b = 0
        res.density = std::max(
            res.density, l2_norm(scaled(lag.b.fields[k + 1] - lag.b.fields[k - 1], 1.0 / dt2)));

        // divergence: div_y(A v) = 0
        res.divergence = std::max(res.divergence, l2_norm(div_A_vec(A, vk)));

        // momentum: d_t v + (1+b)(A^T grad P - nu div(A A^T grad v_c))
        //           + lambda div(A (h (.) h)) = 0
        SpectralField dv = scaled(lag.v.fields[k + 1] - lag.v.fields[k - 1], 1.0 / dt2);
        SpectralField gradP = chain_gradient(A, lag.pressure.fields[k]); // 1*d comps
        SpectralField mom(g, d);
        {
            // viscous part: for each c, div_y(A (A^T grad_y v_c))
            SpectralField atg = chain_gradient(A, vk); // (c, j) = (A^T grad v_c)_j
            for (int c = 0; c < d; ++c) {
                SpectralField w(g, d);
                for (int j = 0; j < d; ++j)
                    std::copy(atg.component_ptr(c * d + j),
                              atg.component_ptr(c * d + j) + g.size(),
                              w.component_data(j));
                SpectralField visc = div_A_vec(A, w);
                // elastic part: div_y(A (h(.)h) e_c)
                SpectralField hh_col(g, d);
                for (int i = 0; i < d; ++i) {
                    double* p = hh_col.component_data(i);
                    kern::parallel_for(g.size(), [&](std::size_t q) {
                        double acc = 0.0;
                        for (int cc = 0; cc < d; ++cc)
                            acc += h.at(cc * d + i, q) * h.at(cc * d + c, q);
                        p[q] = acc;
                    });
                }
                SpectralField ela = div_A_vec(A, hh_col);
                double* p = mom.component_data(c);
                const double* bb = lag.b.fields[k].component_ptr(0);
                kern::parallel_for(g.size(), [&](std::size_t q) {
                    p[q] = dv.at(c, q) +
                           (1.0 + bb[q]) * (gradP.at(c, q) - pc.nu * visc.at(0, q)) +
                           pc.lambda * ela.at(0, q);
                });
            }
        }
        res.momentum = std::max(res.momentum, l2_norm(mom));

        // director: d_t omega_c - gamma div(A h_c) - gamma |h|^2 omega_c = 0
        SpectralField dom = scaled(lag.omega.fields[k + 1] - lag.omega.fields[k - 1], 1.0 / dt2);
        SpectralField dir(g, d);
        for (int c = 0; c < d; ++c) {
            SpectralField hc(g, d);
            for (int j = 0; j < d; ++j)
                std::copy(h.component_ptr(c * d + j), h.component_ptr(c * d + j) + g.size(),
                          hc.component_data(j));
            SpectralField diff = div_A_vec(A, hc);
            double* p = dir.component_data(c);
            kern::parallel_for(g.size(), [&](std::size_t q) {
                double h2 = 0.0;
                for (int cc = 0; cc < d * d; ++cc) h2 += h.at(cc, q) * h.at(cc, q);
                p[q] = dom.at(c, q) - pc.gamma * diff.at(0, q) -
                       pc.gamma * h2 * om.at(c, q);
            });
        }
        res.director = std::max(res.director, l2_norm(dir));

        // h-equation: d_t h_cj + sum_i G_ji h_ci - gamma div(A A^T grad h_cj)
        //             - 2 gamma (sum_{c',i} h_c'i (A^T grad h_c'i)_j) omega_c
        //             - gamma |h|^2 h_cj = 0,  G = A^T grad_y v (pullback of grad u)
        SpectralField dh = scaled(lag.h_chain.fields[k + 1] - lag.h_chain.fields[k - 1], 1.0 / dt2);
        SpectralField G = chain_gradient(A, vk);        // G_{i,j} = (du_i/dx_j)(X)
        SpectralField gh = chain_gradient(A, h);        // ((c,i), j)
        SpectralField heq(g, d * d);
        for (int c = 0; c < d; ++c)
            for (int j = 0; j < d; ++j) {
                SpectralField hgrad(g, d);
                for (int i = 0; i < d; ++i)
                    std::copy(gh.component_ptr((c * d + j) * d + i),
                              gh.component_ptr((c * d + j) * d + i) + g.size(),
                              hgrad.component_data(i));
                SpectralField diff = div_A_vec(A, hgrad);
                double* p = heq.component_data(c * d + j);
                kern::parallel_for(g.size(), [&](std::size_t q) {
                    double adv = 0.0;
                    for (int i = 0; i < d; ++i)
                        adv += G.at(i * d + j, q) * h.at(c * d + i, q);
                    double sq = 0.0;
                    for (int cc = 0; cc < d; ++cc)
                        for (int i = 0; i < d; ++i)
                            sq += h.at(cc * d + i, q) * gh.at((cc * d + i) * d + j, q);
                    double h2 = 0.0;
                    for (int cc = 0; cc < d * d; ++cc) h2 += h.at(cc, q) * h.at(cc, q);
                    p[q] = dh.at(c * d + j, q) + adv - pc.gamma * diff.at(0, q) -
                           2.0 * pc.gamma * sq * om.at(c, q) -
                           pc.gamma * h2 * h.at(c * d + j, q);
                });
            }
        res.h_equation = std::max(res.h_equation, l2_norm(heq));
    }
    return res;
}

// ---------------------------------------------------------------------------
// difference-of-inverse identity
// ---------------------------------------------------------------------------

DeltaAReport delta_A_identity(const TimeSeriesField& v1, const TimeSeriesField& v2) {
    v1.validate();
    v2.validate();
    if (v1.times != v2.times)
        throw std::invalid_argument("delta_A_identity: time grids differ");
    const Grid& g = v1.grid();
    const std::size_t K = v1.steps();

    // cumulative trapezoid of the velocity Jacobians
    auto cumulative = [&](const TimeSeriesField& v) {
        std::vector<SpectralField> C;
        C.push_back(SpectralField(g, g.dim * g.dim));
        for (std::size_t k = 1; k < K; ++k) {
            double dt = v.times[k] - v.times[k - 1];
            SpectralField mid =
                axpy(0.5 * dt, gradient(v.fields[k - 1]), scaled(gradient(v.fields[k]), 0.5 * dt));
            C.push_back(C.back() + mid);
        }
        return C;
    };
    auto C1 = cumulative(v1);
    auto C2 = cumulative(v2);

    DeltaAReport rep;
    for (std::size_t k = 0; k < K; ++k)
        rep.rho = std::max({rep.rho, mat_sup_norm(C1[k]), mat_sup_norm(C2[k])});
    if (rep.rho >= 1.0) {
        std::ostringstream os;
        os << "delta_A_identity: contraction proxy rho = " << rep.rho << " >= 1";
        throw std::invalid_argument(os.str());
    }
    int kmax = 2;
    while (kmax < 48 && std::pow(rep.rho, kmax + 1) / (1.0 - rep.rho) > 1e-14) ++kmax;
    rep.truncation_order = kmax;

    SpectralField I = mat_identity(g);
    for (std::size_t k = 0; k < K; ++k) {
        SpectralField D = C1[k] - C2[k]; // = int_0^t grad(delta v)

        // powers up to kmax
        std::vector<SpectralField> P1{I}, P2{I};
        for (int j = 1; j < kmax; ++j) {
            P1.push_back(mat_mul(P1.back(), C1[k]));
            P2.push_back(mat_mul(P2.back(), C2[k]));
        }

        // delta A = sum_{m>=1} (-1)^m sum_{0<=j<m} C1^j D C2^{m-1-j}
        SpectralField lhs(g, g.dim * g.dim);
        for (int m = 1; m <= kmax; ++m) {
            SpectralField inner(g, g.dim * g.dim);
            for (int j = 0; j < m; ++j)
                inner = inner + mat_mul(P1[j], mat_mul(D, P2[m - 1 - j]));
            lhs = m % 2 == 1 ? lhs - inner : lhs + inner;
        }

        // truncated series difference at the same order
        SpectralField a1(g, g.dim * g.dim), a2(g, g.dim * g.dim);
        SpectralField t1 = I, t2 = I;
        a1 = a1 + t1;
        a2 = a2 + t2;
        for (int m = 1; m <= kmax; ++m) {
            t1 = scaled(mat_mul(C1[k], t1), -1.0);
            t2 = scaled(mat_mul(C2[k], t2), -1.0);
            a1 = a1 + t1;
            a2 = a2 + t2;
        }
        rep.max_discrepancy =
            std::max(rep.max_discrepancy, max_abs_diff(lhs, a1 - a2));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// difference-system source terms
// ---------------------------------------------------------------------------

namespace {

/// (M w)_i = sum_m M_im w_m pointwise.
SpectralField matvec(const SpectralField& M, const SpectralField& w) {
    const Grid& g = w.grid();
    const int d = g.dim;
    SpectralField out(g, d);
    for (int i = 0; i < d; ++i) {
        double* p = out.component_data(i);
        kern::parallel_for(g.size(), [&](std::size_t q) {
            double acc = 0.0;
            for (int m = 0; m < d; ++m) acc += M.at(i * d + m, q) * w.at(m, q);
            p[q] = acc;
        });
    }
    return out;
}

/// sum_{k,i} M_ki d_k w_i  (equals div(M w) for Piola-free M).
SpectralField contract_grad(const SpectralField& M, const SpectralField& w) {
    const Grid& g = w.grid();
    const int d = g.dim;
    SpectralField gw = gradient(w); // (i, k) = d_k w_i
    SpectralField out(g, 1);
    double* p = out.component_data(0);
    kern::parallel_for(g.size(), [&](std::size_t q) {
        double acc = 0.0;
        for (int k = 0; k < d; ++k)
            for (int i = 0; i < d; ++i)
                acc += M.at(k * d + i, q) * gw.at(i * d + k, q);
        p[q] = acc;
    });
    return out;
}

/// (x (.) y)_{ij} = sum_c x_{c,i} y_{c,j} for director-gradient fields.
SpectralField outer_contract(const SpectralField& x, const SpectralField& y) {
    const Grid& g = x.grid();
    const int d = g.dim;
    SpectralField out(g, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double* p = out.component_data(i * d + j);
            kern::parallel_for(g.size(), [&](std::size_t q) {
                double acc = 0.0;
                for (int c = 0; c < d; ++c)
                    acc += x.at(c * d + i, q) * y.at(c * d + j, q);
                p[q] = acc;
            });
        }
    return out;
}

/// div over the first index of A (matrix) applied to columns of H:
/// out_j = div_y (A H e_j).
SpectralField div_A_mat(const SpectralField& A, const SpectralField& H) {
    const Grid& g = A.grid();
    const int d = g.dim;
    SpectralField out(g, d);
    for (int j = 0; j < d; ++j) {
        SpectralField col(g, d);
        for (int i = 0; i < d; ++i)
            std::copy(H.component_ptr(i * d + j), H.component_ptr(i * d + j) + g.size(),
                      col.component_data(i));
        SpectralField dj = div_A_vec(A, col);
        std::copy(dj.component_ptr(0), dj.component_ptr(0) + g.size(),
                  out.component_data(j));
    }
    return out;
}

} // namespace

DeltaSourceTerms delta_system_terms(const LagrangianState& s1, const FlowMap& fm1,
                                    const LagrangianState& s2, const FlowMap& fm2,
                                    const PhysicalConstants& pc, std::size_t k) {
    const Grid& g = s1.v.grid();
    const int d = g.dim;
    const std::size_t n = g.size();

    const SpectralField& A1 = fm1.jac_inverse.fields.at(k);
    const SpectralField& A2 = fm2.jac_inverse.fields.at(k);
    SpectralField dA = A1 - A2;
    const SpectralField& v1 = s1.v.fields[k];
    const SpectralField& v2 = s2.v.fields[k];
    SpectralField dv = v1 - v2;
    const SpectralField& h1 = s1.h_chain.fields[k];
    const SpectralField& h2 = s2.h_chain.fields[k];
    SpectralField dh = h1 - h2;
    const SpectralField& om2 = s2.omega.fields[k];
    SpectralField dom = s1.omega.fields[k] - om2;
    SpectralField dP = s1.pressure.fields[k] - s2.pressure.fields[k];
    const SpectralField& b0 = s1.b.fields[k];

    DeltaSourceTerms out;

    // f1 = (1+b0)[(Id - tA2) grad dP - tdA grad P1]
    {
        SpectralField gdP = chain_gradient(mat_identity(g) - A2, dP); // not the chain:
        // chain_gradient computes (tM grad F); with M = Id - A2 this is
        // grad dP - tA2 grad dP, exactly the first bracket
        SpectralField gP1 = chain_gradient(dA, s1.pressure.fields[k]);
        out.f1 = SpectralField(g, d);
        for (int c = 0; c < d; ++c) {
            double* p = out.f1.component_data(c);
            const double* bb = b0.component_ptr(0);
            kern::parallel_for(n, [&](std::size_t q) {
                p[q] = (1.0 + bb[q]) * (gdP.at(c, q) - gP1.at(c, q));
            });
        }
    }

    // f2 = nu (1+b0) div{(A2 tA2 - Id) grad dv_c + (A1 tA1 - A2 tA2) grad v1_c}
    {
        SpectralField AAt1 = mat_mul(A1, [&] {
            SpectralField t(g, d * d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    std::copy(A1.component_ptr(j * d + i), A1.component_ptr(j * d + i) + n,
                              t.component_data(i * d + j));
            return t;
        }());
        SpectralField AAt2 = mat_mul(A2, [&] {
            SpectralField t(g, d * d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    std::copy(A2.component_ptr(j * d + i), A2.component_ptr(j * d + i) + n,
                              t.component_data(i * d + j));
            return t;
        }());
        SpectralField I = mat_identity(g);
        SpectralField M1 = AAt2 - I;
        SpectralField M2 = AAt1 - AAt2;
        out.f2 = SpectralField(g, d);
        SpectralField gdv = gradient(dv);
        SpectralField gv1 = gradient(v1);
        for (int c = 0; c < d; ++c) {
            SpectralField w(g, d);
            for (int i = 0; i < d; ++i) {
                double* p = w.component_data(i);
                kern::parallel_for(n, [&](std::size_t q) {
                    double acc = 0.0;
                    for (int m = 0; m < d; ++m)
                        acc += M1.at(i * d + m, q) * gdv.at(c * d + m, q) +
                               M2.at(i * d + m, q) * gv1.at(c * d + m, q);
                    p[q] = acc;
                });
            }
            SpectralField dw = divergence(w);
            double* p = out.f2.component_data(c);
            const double* bb = b0.component_ptr(0);
            const double* src = dw.component_ptr(0);
            kern::parallel_for(n, [&](std::size_t q) {
                p[q] = pc.nu * (1.0 + bb[q]) * src[q];
            });
        }
    }

    // f3 = -lambda div{dA (h2 (.) h2) + A1 (dh (.) h2) + A1 (h1 (.) dh)}
    {
        SpectralField t1 = div_A_mat(dA, outer_contract(h2, h2));
        SpectralField t2 = div_A_mat(A1, outer_contract(dh, h2) + outer_contract(h1, dh));
        out.f3 = scaled(t1 + t2, -pc.lambda);
    }

    // f4 = gamma [ (dh : h2 + h1 : dh) om2 + |h1|^2 dom ]
    {
        out.f4 = SpectralField(g, d);
        for (int c = 0; c < d; ++c) {
            double* p = out.f4.component_data(c);
            kern::parallel_for(n, [&](std::size_t q) {
                double cross = 0.0, h1sq = 0.0;
                for (int cc = 0; cc < d * d; ++cc) {
                    cross += dh.at(cc, q) * (h2.at(cc, q) + h1.at(cc, q));
                    h1sq += h1.at(cc, q) * h1.at(cc, q);
                }
                p[q] = pc.gamma * (cross * om2.at(c, q) + h1sq * dom.at(c, q));
            });
        }
    }

    // f5 = gamma [ div(dA h2_c) + div(A1 dh_c) ]
    {
        out.f5 = SpectralField(g, d);
        for (int c = 0; c < d; ++c) {
            SpectralField h2c(g, d), dhc(g, d);
            for (int j = 0; j < d; ++j) {
                std::copy(h2.component_ptr(c * d + j), h2.component_ptr(c * d + j) + n,
                          h2c.component_data(j));
                std::copy(dh.component_ptr(c * d + j), dh.component_ptr(c * d + j) + n,
                          dhc.component_data(j));
            }
            SpectralField t = div_A_vec(dA, h2c) + div_A_vec(A1, dhc);
            double* p = out.f5.component_data(c);
            const double* src = t.component_ptr(0);
            kern::parallel_for(n, [&](std::size_t q) { p[q] = pc.gamma * src[q]; });
        }
    }

    // f6_{c,j} = -[ (tdA grad v2_i)_j h2_{c,i} + (tA1 grad dv_i)_j h2_{c,i}
    //              + (tA1 grad v1_i)_j dh_{c,i} ]  summed over i
    {
        SpectralField G_dA_v2 = chain_gradient(dA, v2);  // (i, j)
        SpectralField G_A1_dv = chain_gradient(A1, dv);
        SpectralField G_A1_v1 = chain_gradient(A1, v1);
        out.f6 = SpectralField(g, d * d);
        for (int c = 0; c < d; ++c)
            for (int j = 0; j < d; ++j) {
                double* p = out.f6.component_data(c * d + j);
                kern::parallel_for(n, [&](std::size_t q) {
                    double acc = 0.0;
                    for (int i = 0; i < d; ++i)
                        acc += (G_dA_v2.at(i * d + j, q) + G_A1_dv.at(i * d + j, q)) *
                                   h2.at(c * d + i, q) +
                               G_A1_v1.at(i * d + j, q) * dh.at(c * d + i, q);
                    p[q] = -acc;
                });
            }
    }

    // f7_{c,j} = gamma div{(A1 tA1 - Id) grad dh_{c,j}
    //                     + (dA tA2 + A1 tdA) grad h2_{c,j}}
    {
        auto transpose = [&](const SpectralField& M) {
            SpectralField t(g, d * d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    std::copy(M.component_ptr(j * d + i), M.component_ptr(j * d + i) + n,
                              t.component_data(i * d + j));
            return t;
        };
        SpectralField M1 = mat_mul(A1, transpose(A1)) - mat_identity(g);
        SpectralField M2 = mat_mul(dA, transpose(A2)) + mat_mul(A1, transpose(dA));
        SpectralField gdh = gradient(dh); // ((c,j), i)
        SpectralField gh2 = gradient(h2);
        out.f7 = SpectralField(g, d * d);
        for (int c = 0; c < d; ++c)
            for (int j = 0; j < d; ++j) {
                SpectralField w(g, d);
                for (int i = 0; i < d; ++i) {
                    double* p = w.component_data(i);
                    kern::parallel_for(n, [&](std::size_t q) {
                        double acc = 0.0;
                        for (int m = 0; m < d; ++m)
                            acc += M1.at(i * d + m, q) * gdh.at((c * d + j) * d + m, q) +
                                   M2.at(i * d + m, q) * gh2.at((c * d + j) * d + m, q);
                        p[q] = acc;
                    });
                }
                SpectralField dw = divergence(w);
                double* p = out.f7.component_data(c * d + j);
                const double* src = dw.component_ptr(0);
                kern::parallel_for(n, [&](std::size_t q) { p[q] = pc.gamma * src[q]; });
            }
    }

    // f8: differences of the cubic blocks of the h-equation
    {
        SpectralField gh1c = chain_gradient(A1, h1);  // ((c,i), j)
        SpectralField gh1c_dA = chain_gradient(dA, h1);
        SpectralField gdhc = chain_gradient(A2, dh);
        const SpectralField& om1 = s1.omega.fields[k];
        out.f8 = SpectralField(g, d * d);
        for (int c = 0; c < d; ++c)
            for (int j = 0; j < d; ++j) {
                double* p = out.f8.component_data(c * d + j);
                kern::parallel_for(n, [&](std::size_t q) {
                    double dS = 0.0, S1 = 0.0;
                    for (int cc = 0; cc < d; ++cc)
                        for (int i = 0; i < d; ++i) {
                            std::size_t ci = static_cast<std::size_t>(cc) * d + i;
                            dS += dh.at(ci, q) * gh1c.at(ci * d + j, q) +
                                  h2.at(ci, q) * gh1c_dA.at(ci * d + j, q) +
                                  h2.at(ci, q) * gdhc.at(ci * d + j, q);
                            S1 += h1.at(ci, q) * gh1c.at(ci * d + j, q);
                        }
                    double cross = 0.0, h2sq = 0.0;
                    for (int cc = 0; cc < d * d; ++cc) {
                        cross += dh.at(cc, q) * (h1.at(cc, q) + h2.at(cc, q));
                        h2sq += h2.at(cc, q) * h2.at(cc, q);
                    }
                    p[q] = 2.0 * pc.gamma * (dS * om2.at(c, q) + S1 * dom.at(c, q)) +
                           pc.gamma * (cross * h1.at(c * d + j, q) +
                                       h2sq * dh.at(c * d + j, q));
                });
            }
        (void)om1;
    }

    // g = (Id - tA2) : grad dv - tdA : grad v1   (contraction div-style)
    {
        SpectralField c1 = contract_grad(mat_identity(g) - A2, dv);
        SpectralField c2 = contract_grad(dA, v1);
        out.g = c1 - c2;
    }

    // R = (Id - A2) dv - dA v1; the block whose time derivative carries d_t g
    {
        out.R = matvec(mat_identity(g) - A2, dv) - matvec(dA, v1);
    }

    return out;
}

DeltaSystemReport delta_system_check(const Trajectory& t1, const Trajectory& t2) {
    if (t1.steps() != t2.steps())
        throw std::invalid_argument("delta_system_check: trajectories differ in length");
    const PhysicalConstants& pc = t1.constants();
    auto fm1 = flow_map(t1.series_u());
    auto fm2 = flow_map(t2.series_u());
    auto s1 = to_lagrangian(t1, fm1);
    auto s2 = to_lagrangian(t2, fm2);
    const std::size_t K = t1.steps();
    const Grid& g = t1.grid();

    std::vector<DeltaSourceTerms> terms(K);
    for (std::size_t k = 0; k < K; ++k)
        terms[k] = delta_system_terms(s1, fm1, s2, fm2, pc, k);

    auto dfield = [&](const TimeSeriesField& a, const TimeSeriesField& b, std::size_t k) {
        return a.fields[k] - b.fields[k];
    };

    DeltaSystemReport rep;
    double mom_scale = 0.0, dir_scale = 0.0, grad_scale = 0.0, div_scale = 0.0,
           cmp_scale = 0.0;
    for (std::size_t k = 1; k + 1 < K; ++k) {
        const double dt2 = s1.times[k + 1] - s1.times[k - 1];

        // momentum block
        SpectralField dv_t = scaled(dfield(s1.v, s2.v, k + 1) - dfield(s1.v, s2.v, k - 1),
                                    1.0 / dt2);
        SpectralField dv = dfield(s1.v, s2.v, k);
        SpectralField dP = s1.pressure.fields[k] - s2.pressure.fields[k];
        SpectralField lap_dv = laplacian(dv);
        SpectralField gdP = gradient(dP);
        SpectralField res_m(g, g.dim);
        {
            const double* bb = s1.b.fields[k].component_ptr(0);
            for (int c = 0; c < g.dim; ++c) {
                double* p = res_m.component_data(c);
                kern::parallel_for(g.size(), [&](std::size_t q) {
                    p[q] = dv_t.at(c, q) - pc.nu * lap_dv.at(c, q) + gdP.at(c, q) -
                           bb[q] * (pc.nu * lap_dv.at(c, q) - gdP.at(c, q)) -
                           terms[k].f1.at(c, q) - terms[k].f2.at(c, q) -
                           terms[k].f3.at(c, q);
                });
            }
        }
        rep.momentum = std::max(rep.momentum, l2_norm(res_m));
        mom_scale = std::max({mom_scale, l2_norm(terms[k].f1), l2_norm(terms[k].f2),
                              l2_norm(terms[k].f3), l2_norm(dv_t)});

        // director block
        SpectralField dom_t =
            scaled(dfield(s1.omega, s2.omega, k + 1) - dfield(s1.omega, s2.omega, k - 1),
                   1.0 / dt2);
        SpectralField res_d = dom_t - terms[k].f4 - terms[k].f5;
        rep.director = std::max(rep.director, l2_norm(res_d));
        dir_scale = std::max({dir_scale, l2_norm(terms[k].f4), l2_norm(terms[k].f5),
                              l2_norm(dom_t)});

        // gradient block
        SpectralField dh_t = scaled(
            dfield(s1.h_chain, s2.h_chain, k + 1) - dfield(s1.h_chain, s2.h_chain, k - 1),
            1.0 / dt2);
        SpectralField dh = dfield(s1.h_chain, s2.h_chain, k);
        SpectralField res_h = dh_t - scaled(laplacian(dh), pc.gamma) - terms[k].f6 -
                              terms[k].f7 - terms[k].f8;
        rep.gradient = std::max(rep.gradient, l2_norm(res_h));
        grad_scale = std::max({grad_scale, l2_norm(terms[k].f6), l2_norm(terms[k].f7),
                               l2_norm(terms[k].f8), l2_norm(dh_t)});

        // divergence and compatibility blocks
        SpectralField div_dv = divergence(dv);
        rep.divergence = std::max(rep.divergence, l2_norm(div_dv - terms[k].g));
        div_scale = std::max({div_scale, l2_norm(terms[k].g), l2_norm(div_dv)});

        SpectralField g_t = scaled(terms[k + 1].g - terms[k - 1].g, 1.0 / dt2);
        SpectralField R_t = scaled(terms[k + 1].R - terms[k - 1].R, 1.0 / dt2);
        rep.compatibility = std::max(rep.compatibility, l2_norm(g_t - divergence(R_t)));
        cmp_scale = std::max({cmp_scale, l2_norm(g_t)});
    }

    // normalize each block by its dominant term so the report reads as a
    // relative defect
    auto rel = [](double v, double s) { return s == 0.0 ? v : v / s; };
    rep.momentum = rel(rep.momentum, mom_scale);
    rep.director = rel(rep.director, dir_scale);
    rep.gradient = rel(rep.gradient, grad_scale);
    rep.divergence = rel(rep.divergence, div_scale);
    rep.compatibility = rel(rep.compatibility, cmp_scale);
    return rep;
}

// ---------------------------------------------------------------------------
// constrained Stokes block
// ---------------------------------------------------------------------------

std::pair<TimeSeriesField, TimeSeriesField>
stokes_div_block_solve(const TimeSeriesField& f, const TimeSeriesField& g,
                       const TimeSeriesField& R) {
    f.validate();
    g.validate();
    R.validate();
    if (f.times != g.times || f.times != R.times)
        throw std::invalid_argument("stokes_div_block_solve: time grids differ");
    if (linf_norm(g.fields[0]) > 1e-12)
        throw std::invalid_argument("stokes_div_block_solve: incompatible g(0) != 0");

    const std::size_t K = f.steps();
    std::vector<SpectralField> rhs, gp;
    for (std::size_t k = 0; k < K; ++k) {
        SpectralField grad_g = gradient(g.fields[k]);
        SpectralField src = f.fields[k] + grad_g - R.fields[k];
        gp.push_back(riesz_riesz(src));
        rhs.push_back(f.fields[k] - gp.back());
    }
    TimeSeriesField v = duhamel::op_C(TimeSeriesField(f.times, std::move(rhs)));
    return {std::move(v), TimeSeriesField(f.times, std::move(gp))};
}

} // namespace nematic::lagrangian
