// Periodic local Lagrange interpolation on the grid, tensor-product in
// 2D/3D. Sixth-order accurate on smooth fields; used by the
// semi-Lagrangian transport and the flow-map machinery.
#pragma once

#include <span>
#include <vector>

#include "nematic/field.hpp"

namespace nematic::interp {

/// Evaluate component c of f at one physical position (periodic wrap).
double sample(const SpectralField& f, int c, const double* pos);

/// Evaluate every component of f at positions (npts x dim, row-major).
/// Output layout: out[c * npts + i].
void sample_field(const SpectralField& f, std::span<const double> positions,
                  std::span<double> out);

/// Pull back f along the map x -> pos(x): result(i) = f(pos_i) for the
/// grid's own points; positions given as (npts x dim).
SpectralField pullback(const SpectralField& f, std::span<const double> positions);

} // namespace nematic::interp
