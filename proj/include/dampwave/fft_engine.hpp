#pragma once

#include <complex>
#include <span>

#include "dampwave/spectral.hpp"

namespace dampwave::detail {

/// Unnormalized in-place DFT over the grid shape; sign = -1 forward, +1 back.
/// Safe to call concurrently (plans are created under a lock).
void fft_inplace(const Grid& grid, std::span<Complex> data, int sign);

/// Scales raw DFT output to the continuum convention (forward) or undoes it
/// (inverse), including the (-1)^{k} phase from the box offset -L/2.
void to_continuum(const Grid& grid, std::span<Complex> data);
void from_continuum(const Grid& grid, std::span<Complex> data);

/// Copies a spectrum onto a finer grid with zero padding, splitting Nyquist
/// modes symmetrically so that Hermitian symmetry is kept.
void pad_spectrum(const Grid& coarse, std::span<const Complex> in, const Grid& fine, std::span<Complex> out);

/// Inverse of pad_spectrum: projection onto the coarse lattice.
void truncate_spectrum(const Grid& fine, std::span<const Complex> in, const Grid& coarse, std::span<Complex> out);

}  // namespace dampwave::detail
