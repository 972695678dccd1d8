#pragma once

// The collision operator Q(f, g) = Q+(f, g) - Q-(f, g) on velocity grids,
// its oscillatory-integral form on the xi side, and conservation diagnostics.
//
// Q+(f, g)(v) = int int B(v - u, omega) f(v*) g(u*) d omega du
// Q-(f, g)(v) = f(v) int int B(v - u, omega) g(u) d omega du
// with B = kernel::cross_section and (v*, u*) = post_collision(v, u, omega).
//
// Four evaluation rules are available:
//  - GridSum sums over the velocity grid (u) and a product sphere rule
//    (omega). Off-grid post-collision values come from trilinear
//    interpolation with zero extension, or from analytic callables.
//  - MonteCarlo samples (u, omega) uniformly with a mandatory seed.
//  - Radon handles Gaussian mixtures. The u-integral splits into a line
//    integral along omega and a plane integral (a Radon transform) across it.
//  - Deposit is a discrete-velocity scheme. Each collision (v, u) -> (v*, u*)
//    is replaced by grid pairs with the same momentum, mixed so that the
//    energy also matches, and the post-collision product is their weighted
//    geometric mean. Mass is conserved exactly for any inputs; momentum and
//    energy are conserved exactly for Q(f, f), sampled Maxwellians are exact
//    equilibria and sum Q(f, f) log f >= 0. The price is that Q is only
//    positively homogeneous in each argument, not bilinear.

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qkinetic/kernel.hpp"
#include "qkinetic/numerics.hpp"
#include "qkinetic/phase.hpp"

namespace qk::collision {

using phase::cplx;
using VelocityFn = std::function<double(const Vec3&)>;
using SpectralFn = std::function<cplx(const Vec3&)>;

enum class VStarRule { GridSum, MonteCarlo, Radon, Deposit };
enum class Interpolation { Trilinear, AnalyticCallable };

const char* rule_name(VStarRule r);
const char* interpolation_name(Interpolation i);

struct CollisionConfig {
    kernel::Potential pot;
    std::size_t n_omega = 32;
    VStarRule vstar_rule = VStarRule::GridSum;
    Interpolation interpolation = Interpolation::Trilinear;
    std::size_t mc_trials = 0;
    std::optional<std::uint64_t> seed;

    /// Gauss-Legendre nodes per smooth piece of the Radon line integrals.
    std::size_t line_nodes = 24;

    /// xi-side options: s-integral cutoff, and the composite rule in
    /// z = s |y| on [0, z_max].
    double s_max = std::numeric_limits<double>::infinity();
    double z_max = 12.0;
    std::size_t z_panels = 12;
    std::size_t z_nodes = 8;

    /// Throws ArgumentError for odd or small n_omega, too few Monte Carlo
    /// trials, or a missing seed in Monte Carlo mode.
    void validate() const;
};

/// v* = v + [omega.(u - v)] omega, u* = u - [omega.(u - v)] omega.
std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& u, const Vec3& omega);

/// amplitude * exp(-sum_d (v_d - center_d)^2 / (2 sigma_d^2))
struct GaussianComponent {
    double amplitude = 1.0;
    Vec3 center{0.0, 0.0, 0.0};
    Vec3 sigma{1.0, 1.0, 1.0};
};

struct GaussianMixture {
    std::vector<GaussianComponent> components;

    /// Maxwellian with the given mass, mean velocity and temperature.
    static GaussianMixture maxwellian(double mass = 1.0, const Vec3& mean = {0, 0, 0}, double temperature = 1.0);

    double operator()(const Vec3& v) const;
    double mass() const;
    /// Integral of the mixture over the plane {w : omega . w = p}.
    double radon(const Vec3& omega, double p) const;
    /// int e^{-i xi . v} f(v) dv
    cplx fourier(const Vec3& xi) const;
    /// Samples on the velocity grid of a homogeneous grid.
    phase::Distribution sample(const phase::Grid& grid) const;
};

struct CollisionParts {
    phase::Distribution gain;
    phase::Distribution loss;
    phase::Distribution total() const { return gain - loss; }
};

/// Q(f, g) for grid inputs (rep XV, k = 1, three velocity axes). With
/// dim_x > 0 the velocity operator is applied at every spatial node.
/// Uses GridSum, MonteCarlo or Deposit; Radon and AnalyticCallable need the
/// overloads below.
phase::Distribution collide(const phase::Distribution& f, const phase::Distribution& g, const CollisionConfig& cfg);
/// Gain and loss parts. For Deposit the loss is f times the GridSum loss
/// frequency and the gain is the remainder, since the scheme has no separate
/// gain term.
CollisionParts collide_parts(const phase::Distribution& f, const phase::Distribution& g, const CollisionConfig& cfg);

/// Q(f, g) sampled on a homogeneous grid from analytic densities
/// (GridSum or MonteCarlo with AnalyticCallable interpolation).
CollisionParts collide_parts(const VelocityFn& f, const VelocityFn& g, const phase::Grid& grid,
                             const CollisionConfig& cfg);
phase::Distribution collide(const VelocityFn& f, const VelocityFn& g, const phase::Grid& grid,
                            const CollisionConfig& cfg);

/// Q(f, g) for Gaussian mixtures with the Radon rule, on a homogeneous grid.
CollisionParts collide_parts(const GaussianMixture& f, const GaussianMixture& g, const phase::Grid& grid,
                             const CollisionConfig& cfg);
phase::Distribution collide(const GaussianMixture& f, const GaussianMixture& g, const phase::Grid& grid,
                            const CollisionConfig& cfg);

/// nu(v) = int int B(v - u, omega) g(u) d omega du on the grid, so that
/// Q-(f, g) = f nu.
phase::Distribution loss_frequency(const phase::Distribution& g, const CollisionConfig& cfg);

/// The xi-side operator for a separable two-particle marginal g~ (x) h~:
///   -sum_{alpha, sigma} alpha sigma int_y int_0^{s_max} |phi_hat(y)|^2
///       e^{i (sigma - alpha) xi.y / 2} e^{-i sigma s |y|^2} g~(xi - s y) h~(s y) ds dy,
/// scaled by prefactor / pi so that it equals the transform of collide().
/// Nodes with |xi| > xi_cut are left at zero.
phase::Distribution collide_xi(const SpectralFn& g_tilde, const SpectralFn& h_tilde, const phase::Grid& grid,
                               const CollisionConfig& cfg,
                               double xi_cut = std::numeric_limits<double>::infinity());
/// Grid inputs in rep XXi (homogeneous); off-grid values by trilinear
/// interpolation, zero outside the box.
phase::Distribution collide_xi(const phase::Distribution& g_tilde, const phase::Distribution& h_tilde,
                               const CollisionConfig& cfg,
                               double xi_cut = std::numeric_limits<double>::infinity());
/// k = 2 input in rep XXi. Throws UnsupportedError unless it factorizes as
/// g~ (x) h~ to 1e-10 relative.
phase::Distribution collide_xi(const phase::Distribution& f2, const CollisionConfig& cfg,
                               double xi_cut = std::numeric_limits<double>::infinity());

/// Moments of a collision output together with the matching absolute
/// moments used as scales.
struct ConservationDefect {
    double mass = 0.0;
    Vec3 momentum{0.0, 0.0, 0.0};
    double energy = 0.0;
    double mass_scale = 0.0;
    double momentum_scale = 0.0;
    double energy_scale = 0.0;

    double relative_mass() const;
    double relative_momentum() const;
    double relative_energy() const;
    double max_relative() const;
    std::string csv() const;
};

/// Moments int q, int v q, int |v|^2 q over the whole grid (rep XV).
ConservationDefect moments(const phase::Distribution& q);
/// Moments of Q(f, f).
ConservationDefect conservation_defect(const phase::Distribution& f, const CollisionConfig& cfg);

}  // namespace qk::collision
