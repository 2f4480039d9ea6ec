#include "scwave/dsp.hpp"

namespace scwave {

ComplexBuffer convolve(const ComplexBuffer& x, const RealBuffer& h) {
    require(!x.empty() && !h.empty(), "convolve: empty input");
    ComplexBuffer y(x.size() + h.size() - 1, Complex{0.0, 0.0});
    for (size_t i = 0; i < x.size(); ++i) {
        const Complex xi = x[i];
        for (size_t j = 0; j < h.size(); ++j) y[i + j] += xi * h[j];
    }
    check_finite(y, "convolve");
    return y;
}

RealBuffer convolve(const RealBuffer& x, const RealBuffer& h) {
    require(!x.empty() && !h.empty(), "convolve: empty input");
    RealBuffer y(x.size() + h.size() - 1, 0.0);
    for (size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        for (size_t j = 0; j < h.size(); ++j) y[i + j] += xi * h[j];
    }
    check_finite(y, "convolve");
    return y;
}

ComplexBuffer upsample(const ComplexBuffer& x, int m) {
    require(m >= 1, "upsample: factor must be >= 1");
    ComplexBuffer y(x.size() * static_cast<size_t>(m), Complex{0.0, 0.0});
    for (size_t k = 0; k < x.size(); ++k) y[k * m] = x[k];
    return y;
}

ComplexBuffer downsample(const ComplexBuffer& x, int m, size_t offset) {
    require(m >= 1, "downsample: factor must be >= 1");
    require(offset < x.size(), "downsample: offset out of range");
    ComplexBuffer y;
    y.reserve((x.size() - offset + m - 1) / m);
    for (size_t i = offset; i < x.size(); i += static_cast<size_t>(m)) y.push_back(x[i]);
    return y;
}

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

namespace {

// Iterative radix-2, in place, no scaling.
void fft_radix2(ComplexBuffer& a, bool inverse) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const Complex wlen{std::cos(ang), std::sin(ang)};
        for (size_t i = 0; i < n; i += len) {
            Complex w{1.0, 0.0};
            for (size_t k = 0; k < len / 2; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

ComplexBuffer dft_direct(const ComplexBuffer& x, bool inverse) {
    const size_t n = x.size();
    ComplexBuffer y(n);
    const double sgn = inverse ? 1.0 : -1.0;
    for (size_t k = 0; k < n; ++k) {
        Complex acc{0.0, 0.0};
        for (size_t t = 0; t < n; ++t) {
            const double ang = sgn * 2.0 * M_PI * static_cast<double>(k) * static_cast<double>(t) /
                               static_cast<double>(n);
            acc += x[t] * Complex{std::cos(ang), std::sin(ang)};
        }
        y[k] = acc;
    }
    return y;
}

ComplexBuffer transform(const ComplexBuffer& x, bool inverse) {
    require(!x.empty(), "dft: empty input");
    ComplexBuffer y;
    if (is_pow2(x.size())) {
        y = x;
        fft_radix2(y, inverse);
    } else {
        y = dft_direct(x, inverse);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
    for (Complex& z : y) z *= scale;
    check_finite(y, "dft");
    return y;
}

}  // namespace

ComplexBuffer dft(const ComplexBuffer& x) { return transform(x, false); }
ComplexBuffer idft(const ComplexBuffer& x) { return transform(x, true); }

}  // namespace scwave
