// Flow maps of a velocity trajectory, the Neumann-series Jacobian inverse
// with its convergence certificate, the Eulerian-to-Lagrangian transform,
// residual evaluators for the transformed system, the Jacobian-inverse
// difference identity, and the constrained Stokes block solve.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nematic/solver.hpp"

namespace nematic::lagrangian {

using duhamel::TimeSeriesField;
using solver::Trajectory;

/// Matrix fields are SpectralFields with dim*dim components, row-major
/// (i, j) = entry i j; entry (i,j) = d X_i / d y_j for Jacobians.

struct NeumannCertificate {
    int terms = 0;          // highest power summed
    double rho = 0.0;       // contraction proxy: sup over points of ||C||
    double tail_bound = 0.0; // rho^{k+1} / (1 - rho)
    bool converged = false;
};

struct FlowMap {
    std::vector<double> times;
    TimeSeriesField displacement;  // X(t,y) - y, N components per time
    TimeSeriesField inverse_disp;  // Y(t,x) - x
    TimeSeriesField jacobian;      // D_y X per time (N*N components)
    TimeSeriesField jac_inverse;   // A = (D_y X)^{-1} per time
    TimeSeriesField velocity_lag;  // v(t,y) = u(t, X(t,y))
    std::vector<double> lipschitz_budget; // running int_0^t ||D_y v||_inf
    std::vector<NeumannCertificate> certificates; // one per time
    bool neumann_used = false; // false: direct pointwise inversion

    /// Absolute positions X(t_k, y) on the grid, (npts x dim) row-major.
    std::vector<double> positions(std::size_t k) const;
    std::vector<double> inverse_positions(std::size_t k) const;
};

/// Integrate the characteristics of a velocity time series with a classical
/// 4-stage one-step method and cubic interpolation; the inverse map is
/// advanced by backward-characteristic composition. A comes from the
/// Neumann series when the Lipschitz budget stays below 1, otherwise from
/// direct pointwise inversion (recorded in neumann_used).
FlowMap flow_map(const TimeSeriesField& u);

/// Neumann series A = sum_k (-C)^k for C = D_yX - Id given as a matrix
/// field; stops when the increment drops below 1e-12 or k = 64.
std::pair<SpectralField, NeumannCertificate> neumann_inverse(const SpectralField& C);

/// Series-based A along a whole trajectory of Jacobians (input: D_yX).
std::pair<TimeSeriesField, std::vector<NeumannCertificate>>
neumann_A(const TimeSeriesField& jacobian);

/// Pointwise closed-form inverse of a matrix field (2x2 or 3x3).
SpectralField direct_inverse(const SpectralField& M);

/// State pulled back along the flow, with the director gradient computed
/// both ways: interpolated from the Eulerian side and via A^T grad_y omega.
struct LagrangianState {
    std::vector<double> times;
    TimeSeriesField b;        // a(t, X)
    TimeSeriesField v;        // u(t, X)
    TimeSeriesField omega;    // d(t, X)
    TimeSeriesField pressure; // Pi(t, X) (potential of grad Pi, mean zero)
    TimeSeriesField h_pullback; // (grad d)(t, X): interpolated
    TimeSeriesField h_chain;    // A^T grad_y omega
    double h_discrepancy = 0.0; // sup over times of max |pullback - chain|
    double grad_u_discrepancy = 0.0; // same check for (grad u)(X) vs A^T grad_y v
};

LagrangianState to_lagrangian(const Trajectory& state, const FlowMap& fm);

/// L2 residuals per equation of the transformed system (time derivatives by
/// centered differences, spatial derivatives spectral in y).
struct LagResiduals {
    double density = 0.0;    // d_t b
    double momentum = 0.0;
    double director = 0.0;
    double divergence = 0.0; // div_y(A v)
    double h_equation = 0.0;
};

LagResiduals lagrangian_residuals(const LagrangianState& lag, const FlowMap& fm,
                                  const PhysicalConstants& pc);

/// Difference-of-inverse identity: evaluates
///   delta A = sum_{k>=1} (-1)^k sum_{0<=j<k} C1^j (C1 - C2) C2^{k-1-j}
/// by truncated double sum and compares with neumann_A(v1) - neumann_A(v2)
/// at matched truncation order. Returns the max discrepancy over times.
struct DeltaAReport {
    double max_discrepancy = 0.0;
    int truncation_order = 0;
    double rho = 0.0;
};

DeltaAReport delta_A_identity(const TimeSeriesField& v1, const TimeSeriesField& v2);

/// Solve d_t v - Lap v + grad P = f, div v = g, d_t g = div R, v(0) = 0:
/// grad P by the gradient projector from (f, grad g, R), v by the heat
/// convolution of f - grad P. Requires g(0) = 0.
std::pair<TimeSeriesField, TimeSeriesField>
stokes_div_block_solve(const TimeSeriesField& f, const TimeSeriesField& g,
                       const TimeSeriesField& R);

/// Source terms of the difference system between two Lagrangian solutions
/// sharing the initial density, evaluated at one time level. The indices
/// follow the difference-of-products decomposition delta(XY) =
/// deltaX Y2 + X1 deltaY; signs are fixed so the assembled blocks
///   d_t dv - nu Lap dv + grad dP = b0 (nu Lap dv - grad dP) + f1 + f2 + f3
///   d_t dw                       = f4 + f5
///   d_t dh - gamma Lap dh        = f6 + f7 + f8
///   div dv = g,   d_t g = div R
/// vanish identically on pairs of exact solutions.
struct DeltaSourceTerms {
    SpectralField f1, f2, f3; // momentum block, N components each
    SpectralField f4, f5;     // director block, N components
    SpectralField f6, f7, f8; // director-gradient block, N*N components
    SpectralField g;          // divergence defect, scalar
    SpectralField R;          // flux whose divergence is d_t g, N components
};

DeltaSourceTerms delta_system_terms(const LagrangianState& s1, const FlowMap& fm1,
                                    const LagrangianState& s2, const FlowMap& fm2,
                                    const PhysicalConstants& pc, std::size_t k);

/// Assembled residuals of every block of the difference system over the
/// interior times, each normalized by the size of its largest source term.
struct DeltaSystemReport {
    double momentum = 0.0;
    double director = 0.0;
    double gradient = 0.0;      // the dh block
    double divergence = 0.0;    // div dv - g
    double compatibility = 0.0; // d_t g - div R
};

DeltaSystemReport delta_system_check(const Trajectory& t1, const Trajectory& t2);

} // namespace nematic::lagrangian
