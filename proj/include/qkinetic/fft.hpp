#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace qk::fft {

using cplx = std::complex<double>;

/// Unnormalized in-place DFT of a row-major array of the given shape, over the
/// listed axes only. sign = -1 is the forward transform exp(-2 pi i jk/n),
/// sign = +1 the backward one. Backed by FFTW with estimate-mode plans.
void transform_axes(std::vector<cplx>& data, const std::vector<std::size_t>& shape,
                    const std::vector<std::size_t>& axes, int sign);

}  // namespace qk::fft
