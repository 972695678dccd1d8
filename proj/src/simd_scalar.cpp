#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include "qkinetic/simd.hpp"

namespace qk::simd {

namespace scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

// Four interleaved accumulators, matching the lane structure of the AVX2
// kernel so both backends round in a similar pattern.
double sum(const double* x, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (int l = 0; l < 4; ++l) acc[l] += x[i + l];
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

double dot(const double* x, const double* y, std::size_t n) {
    double acc[4] = {0.0, 0.0, 0.0, 0.0};
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        for (int l = 0; l < 4; ++l) acc[l] += x[i + l] * y[i + l];
    double tail = 0.0;
    for (; i < n; ++i) tail += x[i] * y[i];
    return ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
}

void cmul(std::complex<double>* z, const std::complex<double>* w, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double a = z[i].real(), b = z[i].imag();
        const double c = w[i].real(), d = w[i].imag();
        z[i] = {a * c - b * d, a * d + b * c};
    }
}

void cphase(std::complex<double>* z, const double* theta, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double c = std::cos(theta[i]), s = std::sin(theta[i]);
        const double a = z[i].real(), b = z[i].imag();
        z[i] = {a * c - b * s, a * s + b * c};
    }
}

}  // namespace scalar

namespace {

Backend detect() {
    const char* env = std::getenv("QKINETIC_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<int> g_backend{-1};

Backend current() {
    int b = g_backend.load(std::memory_order_relaxed);
    if (b < 0) {
        b = static_cast<int>(detect());
        g_backend.store(b);
    }
    return static_cast<Backend>(b);
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return current(); }

void force_backend(Backend b) {
    if (b == Backend::Avx2 && !avx2_available()) b = Backend::Scalar;
    g_backend.store(static_cast<int>(b));
}

const char* backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

#define QK_DISPATCH(fn, ...) \
    (current() == Backend::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))

void axpy(double a, const double* x, double* y, std::size_t n) { QK_DISPATCH(axpy, a, x, y, n); }
void scale(double a, double* x, std::size_t n) { QK_DISPATCH(scale, a, x, n); }
double sum(const double* x, std::size_t n) { return QK_DISPATCH(sum, x, n); }
double dot(const double* x, const double* y, std::size_t n) { return QK_DISPATCH(dot, x, y, n); }
void cmul(std::complex<double>* z, const std::complex<double>* w, std::size_t n) {
    QK_DISPATCH(cmul, z, w, n);
}
void cphase(std::complex<double>* z, const double* theta, std::size_t n) {
    QK_DISPATCH(cphase, z, theta, n);
}

#undef QK_DISPATCH

}  // namespace qk::simd
