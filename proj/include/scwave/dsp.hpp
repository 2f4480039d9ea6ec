#pragma once

#include "scwave/common.hpp"

namespace scwave {

// Full linear convolution, length len(x) + len(h) - 1.
ComplexBuffer convolve(const ComplexBuffer& x, const RealBuffer& h);
RealBuffer convolve(const RealBuffer& x, const RealBuffer& h);

// Zero-insertion by factor m: output index k*m holds x[k], rest zero.
ComplexBuffer upsample(const ComplexBuffer& x, int m);

// output[k] = x[offset + k*m]
ComplexBuffer downsample(const ComplexBuffer& x, int m, size_t offset);

// Unitary DFT pair: idft(dft(x)) == x. Radix-2 FFT for power-of-two sizes,
// direct O(N^2) transform otherwise.
ComplexBuffer dft(const ComplexBuffer& x);
ComplexBuffer idft(const ComplexBuffer& x);

bool is_pow2(size_t n);
size_t next_pow2(size_t n);

}  // namespace scwave
