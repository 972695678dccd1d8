// Compiled with -mavx2 -mfma; only reached through runtime dispatch.
#include <immintrin.h>

#include <cmath>

#include "qkinetic/simd.hpp"

namespace qk::simd::avx2 {

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) x[i] *= a;
}

namespace {
double hsum(__m256d v) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, v);
    return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}
}  // namespace

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return hsum(acc) + tail;
}

double dot(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc);
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return hsum(acc) + tail;
}

void cmul(std::complex<double>* z, const std::complex<double>* w, std::size_t n) {
    auto* zp = reinterpret_cast<double*>(z);
    const auto* wp = reinterpret_cast<const double*>(w);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d a = _mm256_loadu_pd(zp + 2 * i);
        const __m256d b = _mm256_loadu_pd(wp + 2 * i);
        const __m256d b_re = _mm256_movedup_pd(b);
        const __m256d b_im = _mm256_permute_pd(b, 0xF);
        const __m256d a_sw = _mm256_permute_pd(a, 0x5);
        _mm256_storeu_pd(zp + 2 * i, _mm256_fmaddsub_pd(a, b_re, _mm256_mul_pd(a_sw, b_im)));
    }
    for (; i < n; ++i) {
        const double a = z[i].real(), b = z[i].imag();
        const double c = w[i].real(), d = w[i].imag();
        z[i] = {a * c - b * d, a * d + b * c};
    }
}

void cphase(std::complex<double>* z, const double* theta, std::size_t n) {
    // Trigonometry stays scalar; the complex product is vectorized in pairs.
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        alignas(32) double w[4] = {std::cos(theta[i]), std::sin(theta[i]),
                                   std::cos(theta[i + 1]), std::sin(theta[i + 1])};
        cmul(z + i, reinterpret_cast<const std::complex<double>*>(w), 2);
    }
    for (; i < n; ++i) {
        const double c = std::cos(theta[i]), s = std::sin(theta[i]);
        const double a = z[i].real(), b = z[i].imag();
        z[i] = {a * c - b * s, a * s + b * c};
    }
}

}  // namespace qk::simd::avx2
