#include "nematic/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace nematic::diagnostics {

std::vector<DiagnosticsRow> energy_report(const Trajectory& traj) {
    const Grid& g = traj.grid();
    const PhysicalConstants& pc = traj.constants();
    const std::size_t K = traj.steps();
    const double cell = std::pow(g.spacing(), g.dim);

    std::vector<DiagnosticsRow> rows(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& s = traj.snapshots[k];
        DiagnosticsRow& row = rows[k];
        row.time = s.time;

        const double* av = s.a.component_ptr(0);
        double amin = -kern::max(g.size(), [&](std::size_t i) { return -av[i]; });
        if (amin <= -0.9)
            throw std::invalid_argument(
                "energy_report: a <= -0.9 somewhere, density reconstruction invalid");

        // energy: 1/2 int (rho |u|^2 + lambda |grad d|^2), rho = 1/(1+a)
        SpectralField gd = gradient(s.d);
        row.energy = 0.5 * cell * kern::sum(g.size(), [&](std::size_t i) {
            double u2 = 0.0;
            for (int c = 0; c < g.dim; ++c) u2 += s.u.at(c, i) * s.u.at(c, i);
            double gd2 = 0.0;
            for (int c = 0; c < gd.components(); ++c) gd2 += gd.at(c, i) * gd.at(c, i);
            return u2 / (1.0 + av[i]) + pc.lambda * gd2;
        });

        // dissipation: int nu |grad u|^2 + lambda gamma |Lap d + |grad d|^2 d|^2
        SpectralField gu = gradient(s.u);
        SpectralField lap_d = laplacian(s.d);
        SpectralField gm = grad_magnitude_squared(gd);
        const double* gmp = gm.component_ptr(0);
        row.dissipation = cell * kern::sum(g.size(), [&](std::size_t i) {
            double gu2 = 0.0;
            for (int c = 0; c < gu.components(); ++c) gu2 += gu.at(c, i) * gu.at(c, i);
            double tension = 0.0;
            for (int c = 0; c < g.dim; ++c) {
                double v = lap_d.at(c, i) + gmp[i] * s.d.at(c, i);
                tension += v * v;
            }
            return pc.nu * gu2 + pc.lambda * pc.gamma * tension;
        });

        row.div_norm = spectral_divergence_norm(s.u);
        SpectralField mag = magnitude(s.d);
        const double* mp = mag.component_ptr(0);
        row.sphere_drift = kern::max(g.size(), [&](std::size_t i) { return std::abs(mp[i] - 1.0); });
        row.a_max = linf_norm(s.a);
    }

    for (std::size_t k = 1; k + 1 < K; ++k) {
        double dt2 = rows[k + 1].time - rows[k - 1].time;
        rows[k].dedt = (rows[k + 1].energy - rows[k - 1].energy) / dt2;
        rows[k].balance_residual = std::abs(rows[k].dedt + rows[k].dissipation);
    }
    return rows;
}

Trajectory rescale_trajectory(const Trajectory& traj, int lam_power) {
    if (lam_power < 0)
        throw std::invalid_argument("rescale_trajectory: lam_power must be >= 0");
    const double lam = std::exp2(lam_power);
    Trajectory out;
    out.iterations = traj.iterations;
    for (const auto& s : traj.snapshots) {
        StateSnapshot r;
        r.time = s.time / (lam * lam);
        r.a = besov::dyadic_rescale(s.a, lam_power, 0);
        r.u = besov::dyadic_rescale(s.u, lam_power, 1);
        r.d = besov::dyadic_rescale(s.d, lam_power, 0);
        r.grad_pi = besov::dyadic_rescale(s.grad_pi, lam_power, 2);
        r.constants = s.constants;
        out.snapshots.push_back(std::move(r));
    }
    return out;
}

ScalingReport scaling_check(const Trajectory& traj, int lam_power, int n_tests,
                            unsigned seed) {
    ScalingReport rep;
    auto tests = solver::make_test_functions(traj.grid(), traj.horizon(), n_tests, seed);
    for (auto& [name, v] : solver::weak_form_residual(traj, tests))
        rep.original_worst = std::max(rep.original_worst, v);

    Trajectory scaled_traj = rescale_trajectory(traj, lam_power);
    auto tests2 = solver::make_test_functions(scaled_traj.grid(), scaled_traj.horizon(),
                                              n_tests, seed);
    for (auto& [name, v] : solver::weak_form_residual(scaled_traj, tests2))
        rep.rescaled_worst = std::max(rep.rescaled_worst, v);

    rep.ratio = rep.original_worst == 0.0 ? 0.0 : rep.rescaled_worst / rep.original_worst;
    return rep;
}

} // namespace nematic::diagnostics
