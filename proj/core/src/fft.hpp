#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace iafs::detail {

/// In-place unnormalized 2D DFT of one H x W row-major plane
/// (e^{-2 pi i (ky y / H + kx x / W)} kernel for forward). Backed by FFTW.
void dft2d_plane(std::span<std::complex<double>> plane, std::size_t height, std::size_t width,
                 bool inverse);

}  // namespace iafs::detail
