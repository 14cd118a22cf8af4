#pragma once

#include "mpfw/grid.hpp"

namespace mpfw::detail {

// In-place radix-2 transform of length n (power of two) over strided data.
// sign = -1: forward kernel sum F(x) e^{-2pi i x xi / n}, no scaling.
// sign = +1: inverse kernel, no scaling.
void fft_pow2(cplx* data, std::size_t n, std::size_t stride, int sign);

// 2-D transform over a row-major n x n buffer, both axes, no scaling.
void fft2d(std::vector<cplx>& a, std::uint32_t n, int sign);

} // namespace mpfw::detail
