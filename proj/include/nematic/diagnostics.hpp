// Cross-cutting verification of a converged trajectory: the energy balance
// with its dissipation functional, constraint monitors, and the dyadic
// scaling covariance check.
#pragma once

#include "nematic/solver.hpp"

namespace nematic::diagnostics {

using solver::StateSnapshot;
using solver::Trajectory;

struct DiagnosticsRow {
    double time = 0.0;
    double energy = 0.0;      // 1/2 int rho |u|^2 + lambda |grad d|^2
    double dissipation = 0.0; // int nu |grad u|^2 + lambda gamma |Lap d + |grad d|^2 d|^2
    double dedt = 0.0;        // centered difference (0 at the endpoints)
    double balance_residual = 0.0; // |dE/dt + dissipation| at interior times
    double div_norm = 0.0;    // spectral divergence of u
    double sphere_drift = 0.0; // || |d| - 1 ||_inf
    double a_max = 0.0;       // ||a||_inf
};

/// Per-snapshot energy/constraint report. Requires a > -0.9 everywhere
/// (the density reconstruction 1/(1+a) must stay away from vacuum).
std::vector<DiagnosticsRow> energy_report(const Trajectory& traj);

/// Exact dyadic rescaling of a whole trajectory (lambda = 2^lam_power):
/// box length and times shrink, amplitudes scale per field; snapshots are
/// reused without interpolation.
Trajectory rescale_trajectory(const Trajectory& traj, int lam_power);

struct ScalingReport {
    double original_worst = 0.0;  // worst weak-form residual, original
    double rescaled_worst = 0.0;  // worst weak-form residual, rescaled
    double ratio = 0.0;
};

/// Evaluates weak-form residuals on the trajectory and on its dyadic
/// rescaling with matched test families.
ScalingReport scaling_check(const Trajectory& traj, int lam_power,
                            int n_tests = 2, unsigned seed = 2026);

} // namespace nematic::diagnostics
