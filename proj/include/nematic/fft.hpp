// FFTW-backed forward/inverse transforms for one component of a periodic
// field. Forward includes the 1/M^N factor so f_hat[k] are Fourier
// coefficients of f(x) = sum_k f_hat[k] exp(i kappa.x).
#pragma once

#include <complex>
#include <cstddef>

#include "nematic/grid.hpp"

namespace nematic::fft {

/// real grid values -> Fourier coefficients (size grid.size()).
void forward(const Grid& g, const double* in, std::complex<double>* out);

/// Fourier coefficients -> real grid values (imaginary parts dropped).
void inverse(const Grid& g, const std::complex<double>* in, double* out);

/// complex -> complex, unnormalized plain DFT sum (internal uses only).
void forward_c2c(const Grid& g, const std::complex<double>* in, std::complex<double>* out);

} // namespace nematic::fft
