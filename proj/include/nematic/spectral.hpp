// Fourier-multiplier primitives on periodic fields: derivatives, heat
// semigroup, Leray projector, Riesz-Riesz (gradient-part) projector,
// 2/3-rule dealiasing, and grid quadrature norms.
#pragma once

#include "nematic/field.hpp"

namespace nematic {

/// Partial derivative along one axis via the ik multiplier (Nyquist zeroed).
SpectralField derivative(const SpectralField& f, int axis);

/// All first derivatives: result has c*N components ordered (c, axis).
SpectralField gradient(const SpectralField& f);

/// Divergence of an N-component vector field (scalar result).
SpectralField divergence(const SpectralField& v);

SpectralField laplacian(const SpectralField& f);

/// Heat semigroup: every mode scaled by exp(-|kappa|^2 t); t = 0 is exact
/// identity (values returned untouched).
SpectralField heat_semigroup(const SpectralField& f, double t);

/// Leray projection onto discretely divergence-free fields; the zero mode
/// passes through unchanged (mean momentum preserved).
SpectralField leray_project(const SpectralField& v);

/// Gradient-part Helmholtz projector k (k . f_hat)/|k|^2; identity on
/// gradient fields, zero on divergence-free fields, zero mode dropped.
SpectralField riesz_riesz(const SpectralField& f);

/// 2/3-rule truncation: zero all modes with |k_axis| > M/3 on any axis.
SpectralField dealias(const SpectralField& f);

/// Mean of one component over the grid.
double component_mean(const SpectralField& f, int c);

/// Subtract the mean of every component.
SpectralField remove_mean(const SpectralField& f);

bool is_mean_zero(const SpectralField& f, double tol = 1e-10);

// ---------------------------------------------------------------------------
// grid quadrature norms (rectangle rule; components combined as Euclidean
// magnitude). p may be infinity.
// ---------------------------------------------------------------------------

double lp_norm(const SpectralField& f, double p);
double l2_norm(const SpectralField& f);
double linf_norm(const SpectralField& f);

/// Fourier-side L2 norm  sqrt(L^N sum_k |f_hat|^2)  (Parseval partner).
double spectral_l2_norm(const SpectralField& f);

/// Max over modes of |kappa . v_hat(kappa)| — divergence in spectral norm.
double spectral_divergence_norm(const SpectralField& v);

double max_abs_diff(const SpectralField& a, const SpectralField& b);

// ---------------------------------------------------------------------------
// nonlinear-term helpers (pointwise products followed by dealiasing)
// ---------------------------------------------------------------------------

/// (v . grad) f for N-component v; result has f's component count.
SpectralField advect(const SpectralField& v, const SpectralField& f);

/// |grad d|^2 as a scalar field (sum over all components and axes).
SpectralField grad_magnitude_squared(const SpectralField& grad_d);

/// div(grad d (.) grad d): the elastic forcing divergence, N components.
/// Entry (i,j) of the matrix is  d_i d . d_j d  summed over director
/// components; the divergence is taken over the first index.
SpectralField elastic_stress_divergence(const SpectralField& d);

} // namespace nematic
