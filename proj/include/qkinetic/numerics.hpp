#pragma once

// Small numerical building blocks shared by the modules: 3-vectors,
// Gauss-Legendre rules, the product sphere rule, and log-log slope fits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qk {

using Vec3 = std::array<double, 3>;

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }

constexpr double kPi = 3.14159265358979323846;

/// Error for malformed arguments (non-unit vectors, bad sizes, ...).
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Error for requests the implementation deliberately refuses.
struct UnsupportedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Error raised when a numerical guard trips (blow-up, under-resolution).
struct NumericalGuardError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Rule1D {
    std::vector<double> x;
    std::vector<double> w;
};

/// n-point Gauss-Legendre rule on [a, b].
Rule1D gauss_legendre(std::size_t n, double a = -1.0, double b = 1.0);

/// Composite Gauss-Legendre: `panels` equal panels of `n` points on [a, b].
Rule1D composite_gauss_legendre(std::size_t n, std::size_t panels, double a, double b);

/// Product rule on S^2: Gauss-Legendre in cos(theta) times uniform azimuth.
/// With an even azimuth count the node set is closed under omega -> -omega.
struct SphereRule {
    std::vector<Vec3> nodes;
    std::vector<double> weights;  // sums to 4*pi
    std::size_t n_theta = 0;
    std::size_t n_phi = 0;

    static SphereRule product(std::size_t n_theta, std::size_t n_phi);
    /// Factorizes n_omega = n_theta * n_phi with n_phi even and n_phi ~ 2 n_theta.
    static SphereRule with_count(std::size_t n_omega);
    std::size_t size() const { return nodes.size(); }
    /// Index of the antipode of node i.
    std::size_t antipode(std::size_t i) const;
};

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS of log-space residuals
};

/// Least-squares fit of log(y) = intercept + slope * log(x).
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

/// (eps, norm) ladder with its fitted log-log slope.
struct ScalingReport {
    std::vector<double> eps;
    std::vector<double> norms;
    double slope = 0.0;
    double residual = 0.0;

    static ScalingReport fit(std::vector<double> eps, std::vector<double> norms);
    /// Rows "eps,norm" followed by footer rows "slope,<v>" and "residual,<v>".
    std::string csv() const;
};

/// Shortest round-trip decimal form of a double, for CSV output.
std::string format_double(double x);

/// Unit vector from spherical angles.
inline Vec3 unit_from_angles(double cos_theta, double phi) {
    const double st = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    return {st * std::cos(phi), st * std::sin(phi), cos_theta};
}

}  // namespace qk
