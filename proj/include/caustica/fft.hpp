#ifndef CAUSTICA_FFT_HPP
#define CAUSTICA_FFT_HPP

#include <cassert>
#include <cmath>
#include <complex>
#include <vector>

namespace caustica {

using cdouble = std::complex<double>;

/// Iterative radix-2 FFT. Wave grids here are powers of two by construction,
/// so this covers every transform the oracle needs.
/// sign = -1: X_k = sum_j x_j e^{-2 pi i jk/N} (forward, matches the
/// convention f^(xi) = int f e^{-i x xi} dx); sign = +1: unnormalized inverse.
inline void fft_radix2(std::vector<cdouble>& a, int sign) {
    const std::size_t n = a.size();
    assert(n > 0 && (n & (n - 1)) == 0);
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * 2.0 * M_PI / double(len);
        const cdouble wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cdouble w(1.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cdouble u = a[i + k];
                const cdouble v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

inline void fft(std::vector<cdouble>& a) { fft_radix2(a, -1); }

inline void ifft(std::vector<cdouble>& a) {
    fft_radix2(a, +1);
    const double s = 1.0 / double(a.size());
    for (cdouble& v : a) v *= s;
}

/// FFT frequency of bin k on an n-point grid with spacing dx
/// (same layout as the usual fftfreq: 0..n/2-1, -n/2..-1, times 2pi/(n dx)).
inline double fft_freq(std::size_t k, std::size_t n, double dx) {
    const long long kk = (k < n / 2) ? (long long)k : (long long)k - (long long)n;
    return 2.0 * M_PI * double(kk) / (double(n) * dx);
}

}  // namespace caustica

#endif
