#pragma once

#include "tdhf/grid.hpp"

namespace tdhf {

/// In-place 2D transforms on row-major nx*ny complex data.
/// The forward transform is unnormalized (sign -1); the inverse carries 1/(nx ny),
/// so inverse(forward(f)) == f.
///
/// Plans are created once per shape with FFTW_ESTIMATE and shared between
/// threads. Rows go through a batched plan; columns are gathered eight at a
/// time into a contiguous scratch block, which is much faster than a strided
/// 2D estimate plan and keeps results independent of planner timing.
void fft_forward(cplx* data, int nx, int ny);
void fft_inverse(cplx* data, int nx, int ny);

void fft_forward(ComplexField& f);
void fft_inverse(ComplexField& f);

/// 1D helpers used for time series.
void fft_forward_1d(cplx* data, int n);
void fft_inverse_1d(cplx* data, int n);

}  // namespace tdhf
