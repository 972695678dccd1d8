#pragma once

// Data-parallel inner loops with a portable scalar reference and an AVX2
// variant. The public entry points dispatch at runtime; the per-backend
// namespaces stay visible so tests can compare them directly.

#include <complex>
#include <cstddef>

namespace qk::simd {

enum class Backend { Scalar, Avx2 };

/// True when the CPU reports AVX2 and FMA.
bool avx2_available();

/// Backend used by the dispatching functions. Defaults to AVX2 when available
/// unless QKINETIC_SIMD=scalar is set in the environment.
Backend active_backend();

/// Overrides the dispatch choice (tests only). Requesting AVX2 on a CPU
/// without it falls back to scalar.
void force_backend(Backend b);

const char* backend_name(Backend b);

void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
/// z[i] *= w[i]
void cmul(std::complex<double>* z, const std::complex<double>* w, std::size_t n);
/// z[i] *= exp(i * theta[i])
void cphase(std::complex<double>* z, const double* theta, std::size_t n);

namespace scalar {
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void cmul(std::complex<double>* z, const std::complex<double>* w, std::size_t n);
void cphase(std::complex<double>* z, const double* theta, std::size_t n);
}  // namespace scalar

namespace avx2 {
void axpy(double a, const double* x, double* y, std::size_t n);
void scale(double a, double* x, std::size_t n);
double sum(const double* x, std::size_t n);
double dot(const double* x, const double* y, std::size_t n);
void cmul(std::complex<double>* z, const std::complex<double>* w, std::size_t n);
void cphase(std::complex<double>* z, const double* theta, std::size_t n);
}  // namespace avx2

}  // namespace qk::simd
