// Littlewood-Paley dyadic decomposition and homogeneous Besov norms on the
// periodic grid, together with the heat-kernel characterization of negative
// regularity, the embedding ratio diagnostic, and the smallness functional
// of the initial data.
//
// All Besov operations require mean-zero input per component: the zero mode
// carries no homogeneous-norm meaning on the torus.
#pragma once

#include <utility>
#include <vector>

#include "nematic/spectral.hpp"

namespace nematic::besov {

/// Regularity s, integrability p in (1, inf], summation r in [1, inf].
struct BesovIndex {
    double s = 0.0;
    double p = 2.0;
    double r = 2.0;

    BesovIndex() = default;
    BesovIndex(double s_, double p_, double r_) : s(s_), p(p_), r(r_) { validate(); }
    void validate() const;
};

/// Radial cutoff: 1 on [0,3/4], quintic smoothstep down to 0 at 1.
double cutoff_chi(double rho);

/// Exact dyadic rescaling of a field: box length divided by 2^lam_power,
/// values multiplied by 2^(lam_power * amplitude_power), samples reused.
/// Realizes f -> lambda^a f(lambda x) without interpolation; frequency
/// content shifts up lam_power octaves.
SpectralField dyadic_rescale(const SpectralField& f, int lam_power, int amplitude_power);

/// Annulus bump phi_q(|kappa|) = chi(|kappa| 2^{-q-1}) - chi(|kappa| 2^{-q}).
double annulus_phi(double kappa_abs, int q);

/// Block indices [q_min, q_max] covering every nonzero grid frequency with
/// an exact partition of unity.
std::pair<int, int> dyadic_q_range(const Grid& g);

struct DyadicDecomposition {
    int q_min = 0;
    int q_max = 0;
    std::vector<std::pair<int, SpectralField>> blocks;
};

/// Frequency-annulus filter bank; input must be mean-zero per component.
DyadicDecomposition dyadic_blocks(const SpectralField& f);

/// Single block Delta_q f (zero field if q is outside the grid range).
SpectralField dyadic_block(const SpectralField& f, int q);

/// || 2^{sq} ||Delta_q f||_{L^p} ||_{l^r over q}.
double besov_norm(const SpectralField& f, const BesovIndex& idx);

/// Geometric time grid with ratio 2 spanning the decay scales of the grid's
/// frequency range: [2^{-2 q_max}, 2^{-2 q_min}].
std::vector<double> default_heat_time_grid(const Grid& g);

/// L^r((0,inf); dt/t) quadrature of t^{-s/2} ||e^{t Lap} f||_{L^p}
/// (trapezoid in log t); requires s < 0.
double heat_characterization_norm(const SpectralField& f, const BesovIndex& idx,
                                  const std::vector<double>& t_grid);

/// || e^{t Lap} f ||_{L^r_t L^p_x} quadrature; equivalent to the heat
/// characterization at s = -2/r. Requires r < inf.
double lr_in_time_norm(const SpectralField& f, double p, double r,
                       const std::vector<double>& t_grid);

/// besov_norm(f, idx2) / besov_norm(f, idx1) under the embedding hypotheses
/// p1 <= p2, r1 <= r2, s2 = s1 - N(1/p1 - 1/p2); 0/0 reported as 0.
double embedding_ratio(const SpectralField& f, const BesovIndex& idx1,
                       const BesovIndex& idx2);

/// ||a0||_inf + ||u0||_{B^{N/p-1}_{p,r}} + ||grad d0||_{B^{N/p-1}_{p,r}}.
/// d0 must take values on the unit sphere (within 1e-8) and u0 must be
/// mean-zero.
double smallness_eta(const SpectralField& a0, const SpectralField& u0,
                     const SpectralField& d0, double p, double r);

} // namespace nematic::besov
