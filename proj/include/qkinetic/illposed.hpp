#pragma once

// Norm-deflation experiment for spatial regularity 0 < s < 1.
//
// Data, with N = 1/M:
//   f(x, v) = M^{3-s} chi(M x) chi_hat(M v)
//   g(x, v) = M^{1-s} N2^{-2-s1} sum_j chi(M P_j^perp x) chi(P_j x / N2)
//                                     chi_hat(M P_j^perp v) chi_hat(P_j v / N2)
// where P_j projects onto a direction e_j, P_j^perp onto its orthogonal
// plane, and the J = M^2 N2^2 directions form a quasi-uniform grid on the
// half sphere (e and -e give the same summand). Profiles:
//   chi(y)     = exp(-|y|^2 / 2)
//   chi_hat(y) = (8 pi)^{-1/2} |y|^2 exp(-|y|^2 / 2)
// chi(0) = 1 and the chi_hat normalization make the loss factor of g at the
// origin equal M^{1-s} N2^{-s1} in the limit N2 -> infinity.
//
// Norms are || <grad_x>^s <v>^s1 h ||_{L^2(R^3 x R^3)}.

#include <cstdint>
#include <string>
#include <vector>

#include "qkinetic/kernel.hpp"
#include "qkinetic/numerics.hpp"

namespace qk::illposed {

struct DeflationConfig {
    double M = 8.0;
    double N2 = 4.0;
    double s = 0.5;
    double s1 = 0.5;
    double delta = 0.25;
    std::size_t J_sample = 256;
    std::uint64_t seed = 1;

    /// Throws ArgumentError unless M and N2 are powers of two >= 2,
    /// 0 < s < 1, s1 > 0, delta > 0 and 1 <= J_sample <= min(512, J).
    void validate() const;

    /// s0 = s - ln ln M / ln M
    double s0() const;
    /// Loss rate M^{1-s} N2^{-s1}.
    double rate() const;
    /// T* = -delta ln M / rate
    double t_star() const;
    /// Full direction count M^2 N2^2.
    std::size_t J() const;
};

double chi(const Vec3& y);
double chi_hat(const Vec3& y);

/// The data of one experiment. The direction sum is represented by J_sample
/// directions: a quasi-uniform half-sphere grid of that size, turned about
/// the z axis by a seeded angle. Sums over all J directions are estimated as
/// J / J_sample times the sampled sum.
class BadData {
public:
    explicit BadData(const DeflationConfig& cfg);

    const DeflationConfig& config() const { return cfg_; }
    const std::vector<Vec3>& directions() const { return dirs_; }

    double f(const Vec3& x, const Vec3& v) const;
    /// Summand j (index into directions()) of g, prefactor included.
    double g_term(std::size_t j, const Vec3& x, const Vec3& v) const;
    /// Sum of the sampled summands.
    double g_sampled(const Vec3& x, const Vec3& v) const;

    /// Closed-form norms: f exactly, g as sqrt(J) times one summand norm
    /// (the summands are rotations of each other and almost disjoint).
    double f_norm() const;
    double g_term_norm() const;
    double g_norm() const;

private:
    DeflationConfig cfg_;
    std::vector<Vec3> dirs_;
};

/// Quasi-uniform grid of n unit vectors with positive z component.
std::vector<Vec3> half_sphere_grid(std::size_t n);

/// Gram matrix audit of the sampled summands: || sum_j g_j ||^2 against
/// sum_j ||g_j||^2, with every inner product computed by Gauss-Hermite
/// quadrature (the summands are Gaussians times polynomials).
struct OverlapAudit {
    double square_of_sum = 0.0;
    double sum_of_squares = 0.0;
    /// Largest |<g_i, g_j>| / ||g_i|| ||g_j|| over i != j.
    double max_pair_cosine = 0.0;
    /// Mean diagonal entry, for comparison with g_term_norm()^2.
    double mean_term_norm_sq = 0.0;
    double ratio() const { return square_of_sum / sum_of_squares; }
};
OverlapAudit overlap_audit(const BadData& data, std::size_t max_directions = 512);

enum class KernelMode {
    /// Angular integral of the cross-section replaced by 1 / <u>.
    Surrogate,
    /// Monte Carlo over omega with kernel::cross_section.
    CrossSection
};
const char* kernel_mode_name(KernelMode m);

struct SamplePoint {
    Vec3 x;
    Vec3 v;
};

struct LossProbeConfig {
    KernelMode mode = KernelMode::Surrogate;
    /// Used in CrossSection mode; its angular integral behaves like C / |u|
    /// for |u| beyond the support, and C scales the prediction.
    kernel::Potential pot = kernel::Potential::bump(0.25, 0.5);
    std::size_t mc_nodes = 100000;
    /// Random points with |M x| <= 1 and |M v| <= 1 when `points` is empty.
    std::size_t n_points = 8;
    std::vector<SamplePoint> points;
    /// Pass band on the mean relative error; negative selects the default
    /// (0.3 for Surrogate, 0.5 for CrossSection).
    double band = -1.0;
    /// Multiplies f; both sides of the comparison are linear in f.
    double f_scale = 1.0;
    std::uint64_t seed = 1;

    double effective_band() const;
    void validate() const;
};

struct LossPointResult {
    SamplePoint point;
    double quadrature = 0.0;  // Q^-(f, g)(x, v)
    double predicted = 0.0;   // f M^{1-s} N2^{-s1} chi(M x), times C in CrossSection mode
    double std_error = 0.0;
    double relative_error() const;
};

struct LossProbeResult {
    std::vector<LossPointResult> points;
    double relative_error = 0.0;
    double std_error = 0.0;  // of relative_error
    double band = 0.0;
    /// Set when twice the standard error exceeds |band - relative_error|.
    bool inconclusive = false;
    bool passed() const { return !inconclusive && relative_error <= band; }
    std::string csv() const;
};

/// Angular-integral constant C = 4 pi * prefactor * int_0^inf r |phi_hat(r)|^2 dr.
double angular_constant(const kernel::Potential& pot);

LossProbeResult loss_probe(const BadData& data, const LossProbeConfig& cfg);

struct DeflationCurve {
    std::vector<double> t;
    std::vector<double> norm;
    double M = 0.0, s = 0.0, s1 = 0.0, delta = 0.0;
    /// norm(T*) / norm(0)
    double ratio() const { return norm.front() / norm.back(); }
    /// Rows "t,norm", then summary rows "ratio,M,s,s1,delta" with values.
    std::string csv() const;
};

/// M^{s0-s} exp(-rate t) <rate t>^{s0} + M^{s0-s}, with <y> = sqrt(1 + y^2).
double deflation_norm(const DeflationConfig& cfg, double t);
/// The closed form on n_times equally spaced times from T* to 0.
DeflationCurve deflation_curve(const DeflationConfig& cfg, std::size_t n_times = 65);

}  // namespace qk::illposed
