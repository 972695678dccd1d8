#pragma once

// The finite-N operators of the weak-coupling hierarchy (N = eps^-3) acting
// on one- and two-particle densities, and eps-ladder experiments on them.
//
//   A   multiplies a two-particle density in (x, xi) form by
//       -i eps^{-1/2} sum_sigma sigma phi((x1 - x2)/eps + sigma (xi1 - xi2)/2).
//   B   couples particle 1 to particle 2 on the (eta, xi) side:
//       -i eps^{-1/2} sum_sigma sigma int phi_hat(eps eta2) e^{i sigma eps xi1.eta2/2}
//          f(eta1 - eta2, eta2, xi1, 0) d eta2 / (2 pi)^d.
//   Q^eps is the rescaled composition B A. On spatially homogeneous data it
//       is the xi-side collision operator with the s-integral cut at t / eps.
//
// Position-space potentials are rebuilt from the radial profile phi_hat by a
// sine transform and cached per potential.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qkinetic/collision.hpp"
#include "qkinetic/kernel.hpp"
#include "qkinetic/phase.hpp"

namespace qk::bbgky {

/// phi(y) for the radial profile of a potential: the 3D inverse transform
/// (2 pi)^-3 int phi_hat(|k|) e^{i k.y} dk, and the 1D one used when all axes
/// are one-dimensional, (2 pi)^-1 int phi_hat(|k|) e^{i k t} dk.
class PositionPotential {
public:
    explicit PositionPotential(const kernel::Potential& pot);
    /// Shared instance, computed once per distinct potential.
    static const PositionPotential& cached(const kernel::Potential& pot);

    double radial3(double r) const;
    double radial1(double t) const;

private:
    double dr_ = 0.0;
    std::vector<double> v3_, v1_;
};

/// Smallest admissible n_x for an eps-dependent grid experiment; grid
/// operators refuse coarser spatial grids.
std::size_t min_spatial_points(double eps);

/// A on a k = 2 density in rep XXi. Linear in f2.
phase::Distribution apply_A(const phase::Distribution& f2, const kernel::Potential& pot, double eps);

/// B on a k = 2 density in rep EtaXi; returns the k = 1 density in rep EtaXi.
/// Only the xi2 = 0 nodes of f2 are read.
phase::Distribution apply_B(const phase::Distribution& f2, const kernel::Potential& pot, double eps);

/// Q^eps on a spatially homogeneous k = 2 density g~ (x) h~ in rep XXi
/// (equivalently EtaXi), with the s-integral cut at min(t / eps, s_max).
/// The normalization is that of collision::collide_xi, so Q^eps -> Q^0 =
/// collide_xi as eps -> 0. Throws UnsupportedError for inhomogeneous or
/// non-separable input and NumericalGuardError when s_max is the active cut
/// and doubling it moves the result by more than 1%.
phase::Distribution apply_Qeps(const phase::Distribution& f2, const collision::CollisionConfig& ccfg, double eps,
                               double s_max = 1e4, double t = 1.0, double xi_cut = 1e300);
/// Same operator on separable spectral inputs.
phase::Distribution apply_Qeps(const collision::SpectralFn& g_tilde, const collision::SpectralFn& h_tilde,
                               const phase::Grid& grid, const collision::CollisionConfig& ccfg, double eps,
                               double s_max = 1e4, double t = 1.0, double xi_cut = 1e300);

// ---------------------------------------------------------------------------
// eps ladders

enum class LadderOp { A, B, Qeps, QepsMinusQ0 };
const char* ladder_op_name(LadderOp op);

struct EpsLadder {
    std::vector<double> eps{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    LadderOp op = LadderOp::B;

    /// Throws ArgumentError unless eps is strictly decreasing, positive and
    /// has at least four entries.
    void validate() const;
    /// {2^-m_lo, ..., 2^-m_hi}.
    static EpsLadder geometric(int m_lo, int m_hi, LadderOp op);
};

/// Translation-covariant two-particle data used by the A and B ladders:
///   f~(x1, x2, xi1, xi2) = C((x1 + x2)/2) F((x1 - x2)/lambda - offset) P(xi1) P(xi2)
/// with C, F, P centred Gaussians of widths center_width, 1, velocity_width.
/// lambda = eps ("concentrated" pairs at separation ~ eps, where the
/// operator bounds are attained) or lambda = 1 (smooth data).
struct PairFamily {
    double center_width = 1.0;
    double velocity_width = 1.0;
    Vec3 offset{0.0, 0.0, 1.0};
    bool concentrated = true;
    /// Sample count for the Monte Carlo outer integral of the B ladder.
    std::size_t samples = 1024;
    std::uint64_t seed = 1;
};

/// Norm ratio of one operator at one eps, with s the derivative budget:
///   A: ||A f||_{L^2} / || |grad_x1|^{s/2} |grad_x2|^{s/2} f ||_{L^2}
///   B: ||<eta1>^{-a} B f||_{L^2} / ||<eta1>^a <eta2>^a f(., ., ., 0)||_{L^2},
///      a = s/2 + 3/4.
/// The bounds predict ratio <~ eps^{s - 1/2}.
double operator_ratio(LadderOp op, const PairFamily& data, const kernel::Potential& pot, double eps, double s);

/// Ratios along the ladder and their fitted log-log slope (A or B).
ScalingReport scaling_ladder(const PairFamily& data, const kernel::Potential& pot, const EpsLadder& ladder,
                             double s);

/// Fit of an arbitrary eps -> norm map along the ladder.
ScalingReport scaling_ladder(const std::function<double(double)>& norm_at, const EpsLadder& ladder);

/// ||Q^eps f||_{L^2} (op Qeps) or ||Q^eps f - Q^0 f||_{L^2} (op QepsMinusQ0)
/// along the ladder for f = g~ (x) h~, both from Gaussian mixtures.
ScalingReport scaling_ladder(const collision::GaussianMixture& g, const collision::GaussianMixture& h,
                             const phase::Grid& grid, const collision::CollisionConfig& ccfg,
                             const EpsLadder& ladder, double xi_cut = 1e300);

}  // namespace qk::bbgky
