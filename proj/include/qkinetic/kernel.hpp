#pragma once

// Interaction potential on the Fourier side and the collision cross-section
// it induces.

#include <cstddef>
#include <string>
#include <variant>

#include "qkinetic/numerics.hpp"

namespace qk::kernel {

/// Normalization of the gain/loss representation.
inline constexpr double kPrefactorGainLoss = 0.5;
/// Normalization written next to the kinetic equation itself: 1/(8 pi^2).
inline constexpr double kPrefactorKinetic = 1.0 / (8.0 * kPi * kPi);

/// |phi_hat|^2 = 1 on [c1, c2], 0 outside [c1/2, 2 c2], smooth ramps between.
struct BumpWindow {
    double c1 = 1.0;
    double c2 = 2.0;
};

/// |phi_hat(r)| = r^s (1 + (r/cutoff)^2)^(-(s + 1 + outer_decay)/2):
/// ~ r^s near zero and ~ r^(-1-outer_decay) at infinity.
struct PowerLaw {
    double s = 0.5;
    double outer_decay = 0.5;
    double cutoff = 1.0;
};

class Potential {
public:
    using Kind = std::variant<BumpWindow, PowerLaw>;

    Potential() : Potential(PowerLaw{}, kPrefactorGainLoss) {}
    /// A zero prefactor is the zero potential: every cross-section vanishes.
    Potential(Kind kind, double prefactor);
    bool is_zero() const { return prefactor_ == 0.0; }

    static Potential bump(double c1, double c2, double prefactor = kPrefactorGainLoss);
    static Potential power_law(double s, double outer_decay = 0.5, double cutoff = 1.0,
                               double prefactor = kPrefactorGainLoss);

    const Kind& kind() const { return kind_; }
    double prefactor() const { return prefactor_; }
    bool is_bump() const { return std::holds_alternative<BumpWindow>(kind_); }

    /// |phi_hat| at radius r >= 0.
    double profile(double r) const;
    double profile(const Vec3& zeta) const { return profile(norm(zeta)); }
    /// |phi_hat(r)|^2
    double profile_sq(double r) const;
    /// Radial cross-section K(r) = prefactor |r| |phi_hat(r)|^2 (even in r).
    double radial_kernel(double r) const { return prefactor_ * std::abs(r) * profile_sq(std::abs(r)); }
    /// Order of vanishing at the origin: s for PowerLaw, 1 for the bump window.
    double vanishing_order() const;
    /// Radius beyond which |phi_hat|^2 is below `tol` of its peak (infinite support
    /// families use the algebraic tail).
    double support_radius(double tol = 1e-14) const;

    std::string describe() const;

private:
    Kind kind_;
    double prefactor_;
};

/// C-infinity step: 0 for t <= 0, 1 for t >= 1.
double smooth_step(double t);

/// prefactor * |omega . v_rel| * |phi_hat((omega . v_rel) omega)|^2.
/// Throws ArgumentError unless |omega| = 1 within 1e-12.
double cross_section(const Potential& pot, const Vec3& v_rel, const Vec3& omega);

/// Integral of cross_section over the unit sphere with the product rule of
/// n_omega nodes, polar axis aligned with v_rel (the integrand only depends on
/// omega . v_rel, so this orientation is exact in azimuth).
double angular_loss_integral(const Potential& pot, const Vec3& v_rel, std::size_t n_omega);

}  // namespace qk::kernel
