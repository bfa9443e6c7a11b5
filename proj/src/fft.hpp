#pragma once

#include <complex>
#include <span>

namespace d2nn::detail {

/// Thread-local FFTW-aligned scratch of at least m*m samples. Contents are
/// unspecified on return.
std::span<std::complex<double>> fft_workspace(int m);

/// In-place unnormalized 2-D forward DFT of an m x m row-major buffer whose
/// rows [active_rows, m) are known to be zero.
void fft2_forward(std::span<std::complex<double>> data, int m, int active_rows);

/// In-place unnormalized 2-D inverse DFT. Only rows [0, active_rows) of the
/// result are valid.
void fft2_inverse(std::span<std::complex<double>> data, int m, int active_rows);

}  // namespace d2nn::detail
