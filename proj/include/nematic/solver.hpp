// The constructive small-data scheme for the coupled flow/director system:
// reciprocal-density transport by backward characteristics, director and
// velocity updates in mild form with per-step implicit sweeps, pressure
// recovery through the gradient projector, the Picard outer loop with its
// increment monitor, itemized trajectory norms, and weak-form residuals.
#pragma once

#include <functional>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "nematic/besov.hpp"
#include "nematic/duhamel.hpp"
#include "nematic/interp.hpp"

namespace nematic::solver {

using duhamel::TimeSeriesField;
using duhamel::WeightedExponentTable;

struct StateSnapshot {
    double time = 0.0;
    SpectralField a;       // reciprocal-density perturbation, scalar
    SpectralField u;       // velocity, N components
    SpectralField d;       // director, N components
    SpectralField grad_pi; // pressure gradient, N components
    PhysicalConstants constants;
};

struct Trajectory {
    std::vector<StateSnapshot> snapshots;
    int iterations = 0; // Picard iterations used to produce it

    const Grid& grid() const { return snapshots.at(0).u.grid(); }
    const PhysicalConstants& constants() const { return snapshots.at(0).constants; }
    double dt() const { return snapshots.at(1).time - snapshots.at(0).time; }
    double horizon() const { return snapshots.back().time; }
    std::size_t steps() const { return snapshots.size(); }

    TimeSeriesField series_a() const;
    TimeSeriesField series_u() const;
    TimeSeriesField series_d() const;
    TimeSeriesField series_grad_pi() const;
};

/// One itemized trajectory norm: named components summing to the total.
struct NormLedger {
    std::vector<std::pair<std::string, double>> components;
    double total = 0.0;
};

struct IterationReport {
    int n = 0;
    double delta_U = 0.0;
    double d_sup = 0.0;        // ||delta d||_{L^inf_t L^inf_x}
    double ledger_total = 0.0; // norm of (delta u, grad delta d, grad delta Pi)
    double tail_term = 0.0;    // L^2_t L^inf_x piece (r<2) or weighted sup (r>=2)
    bool converged = false;
};

struct SolveConfig {
    PhysicalConstants constants{};
    double r = 1.5; // contraction-norm time exponent; r in (1,2) itemizes the
                    // unweighted ledger, r >= 2 switches to the weighted one
    double p = 1.2; // smallness index
    double T = 1.0;
    double dt = 1.0 / 256.0;
    double tol = 1e-8;
    int n_max = 30;
    double c0 = 0.05;
    bool enforce_smallness = true; // false: warn only
    bool normalize_director = false;
    double inner_tol = 1e-10;
    int inner_max_sweeps = 20;
    double p1 = 0.0, p3 = 0.0; // weighted-ledger exponents; 0 = pick defaults
    int regularize_level = -1; // >= 0 applies the data regularization first
};

struct SolveResult {
    Trajectory trajectory;
    std::vector<IterationReport> reports;
    double eta = 0.0;
    bool smallness_ok = true;
    bool converged = false;
};

/// Default valid (p1, p3) for the weighted exponent table.
std::pair<double, double> default_weighted_exponents(int dim, double r, double p);

// ---------------------------------------------------------------------------
// data preparation
// ---------------------------------------------------------------------------

/// Mollify a0 with a periodic Gaussian of width 1/n and cut u0, d0 to the
/// dyadic blocks |q| <= n. The director's mean mode is kept (unit-sphere
/// data would otherwise be destroyed); the velocity's mean is dropped.
std::tuple<SpectralField, SpectralField, SpectralField>
regularize_data(const SpectralField& a0, const SpectralField& u0,
                const SpectralField& d0, int n);

// ---------------------------------------------------------------------------
// scheme steps
// ---------------------------------------------------------------------------

/// Semi-Lagrangian advance of a scalar over one step of the velocity
/// (values at both endpoints of the interval). Two-stage midpoint backward
/// characteristics, cubic interpolation, max-principle clamp.
SpectralField transport_step(const SpectralField& a_prev, const SpectralField& u_begin,
                             const SpectralField& u_end, double dt);

/// Full transport trajectory of a0 along a velocity time series.
TimeSeriesField transport_trajectory(const SpectralField& a0, const TimeSeriesField& u);

/// Director update: solves the mild equation with the advection and the
/// gradient-square coefficient taken from the previous iterate and the
/// cubic term implicit in the new director, resolved by per-step sweeps.
TimeSeriesField director_step(const TimeSeriesField& d_prev_iter,
                              const TimeSeriesField& u_prev_iter,
                              const SpectralField& d0, const PhysicalConstants& pc,
                              const SolveConfig& cfg);

/// Velocity update: mild equation with advection by the previous iterate
/// (implicit in the new velocity) and forcing assembled from the current
/// density/director and the previous pressure; pressure gradient recovered
/// by the gradient projector. Returns (u_n, grad_pi_n).
std::pair<TimeSeriesField, TimeSeriesField>
velocity_step(const TimeSeriesField& u_prev_iter, const TimeSeriesField& d_n,
              const TimeSeriesField& a_n, const TimeSeriesField& grad_pi_prev_iter,
              const SpectralField& u0, const PhysicalConstants& pc,
              const SolveConfig& cfg);

/// The outer Picard loop from zero initial iterates.
SolveResult picard_solve(const SpectralField& a0, const SpectralField& u0,
                         const SpectralField& d0, const SolveConfig& cfg);

// ---------------------------------------------------------------------------
// trajectory norms
// ---------------------------------------------------------------------------

/// Itemized unweighted trajectory norm of (u, grad d, grad Pi); valid for
/// 1 < r < 2 (the integrability exponents degenerate otherwise).
NormLedger x_norm_ledger(const TimeSeriesField& u, const TimeSeriesField& grad_d,
                         const TimeSeriesField& grad_pi, double r);
NormLedger x_norm_ledger(const Trajectory& traj, double r);

/// Itemized weighted trajectory norm of (u, grad d, grad Pi).
NormLedger y_norm_ledger(const TimeSeriesField& u, const TimeSeriesField& grad_d,
                         const TimeSeriesField& grad_pi, const WeightedExponentTable& table);
NormLedger y_norm_ledger(const Trajectory& traj, const WeightedExponentTable& table);

// ---------------------------------------------------------------------------
// weak-form residuals
// ---------------------------------------------------------------------------

/// phi(t,x) = psi(t) shape(x) with psi smooth and compactly supported in
/// (0, T); shape is band-limited.
struct SpaceTimeTestFunction {
    SpectralField shape; // 1 component for scalar identities, N for vector
    std::function<double(double)> psi;
    std::function<double(double)> dpsi;
    std::string label;
};

/// Deterministic band-limited test family (n scalar + n vector functions).
std::vector<SpaceTimeTestFunction> make_test_functions(const Grid& g, double T,
                                                       int n, unsigned seed);

/// Space-time residuals of the transport, divergence, momentum and director
/// identities for every applicable test function; names carry the identity
/// and the test label.
std::vector<std::pair<std::string, double>>
weak_form_residual(const Trajectory& traj,
                   const std::vector<SpaceTimeTestFunction>& tests);

} // namespace nematic::solver
