#include "qkinetic/kernel.hpp"

#include <cmath>
#include <sstream>

namespace qk::kernel {

Potential::Potential(Kind kind, double prefactor) : kind_(std::move(kind)), prefactor_(prefactor) {
    if (!(prefactor >= 0.0) || !std::isfinite(prefactor))
        throw ArgumentError("Potential: prefactor must be finite and nonnegative");
    if (const auto* b = std::get_if<BumpWindow>(&kind_)) {
        if (!(b->c1 > 0.0) || !(b->c2 > b->c1)) throw ArgumentError("BumpWindow: need 0 < c1 < c2");
    } else {
        const auto& p = std::get<PowerLaw>(kind_);
        if (!(p.s > 0.0)) throw ArgumentError("PowerLaw: exponent s must be positive");
        if (!(p.outer_decay > 0.0)) throw ArgumentError("PowerLaw: outer decay must be positive");
        if (!(p.cutoff > 0.0)) throw ArgumentError("PowerLaw: cutoff must be positive");
    }
}

Potential Potential::bump(double c1, double c2, double prefactor) {
    return Potential(BumpWindow{c1, c2}, prefactor);
}

Potential Potential::power_law(double s, double outer_decay, double cutoff, double prefactor) {
    return Potential(PowerLaw{s, outer_decay, cutoff}, prefactor);
}

double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / t);
    const double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double Potential::profile_sq(double r) const {
    r = std::abs(r);
    if (const auto* b = std::get_if<BumpWindow>(&kind_)) {
        if (r <= 0.5 * b->c1 || r >= 2.0 * b->c2) return 0.0;
        if (r < b->c1) return smooth_step((r - 0.5 * b->c1) / (0.5 * b->c1));
        if (r <= b->c2) return 1.0;
        return 1.0 - smooth_step((r - b->c2) / b->c2);
    }
    const auto& p = std::get<PowerLaw>(kind_);
    if (r == 0.0) return 0.0;
    const double q = r / p.cutoff;
    return std::pow(r, 2.0 * p.s) * std::pow(1.0 + q * q, -(p.s + 1.0 + p.outer_decay));
}

double Potential::profile(double r) const { return std::sqrt(profile_sq(r)); }

double Potential::vanishing_order() const {
    if (is_bump()) return 1.0;
    return std::get<PowerLaw>(kind_).s;
}

double Potential::support_radius(double tol) const {
    if (const auto* b = std::get_if<BumpWindow>(&kind_)) return 2.0 * b->c2;
    const auto& p = std::get<PowerLaw>(kind_);
    // Tail ~ cutoff^(2s+2+2d) r^(-2-2d); solve against tol.
    const double e = 2.0 + 2.0 * p.outer_decay;
    const double scale = std::pow(p.cutoff, 2.0 * p.s + e);
    return std::max(p.cutoff, std::pow(scale / tol, 1.0 / e));
}

std::string Potential::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (const auto* b = std::get_if<BumpWindow>(&kind_)) {
        os << "BumpWindow(c1=" << b->c1 << ", c2=" << b->c2 << ")";
    } else {
        const auto& p = std::get<PowerLaw>(kind_);
        os << "PowerLaw(s=" << p.s << ", outer_decay=" << p.outer_decay << ", cutoff=" << p.cutoff << ")";
    }
    os << " prefactor=" << prefactor_;
    return os.str();
}

double cross_section(const Potential& pot, const Vec3& v_rel, const Vec3& omega) {
    const double n = norm(omega);
    if (!(std::abs(n - 1.0) <= 1e-12)) throw ArgumentError("cross_section: omega must be a unit vector");
    return pot.radial_kernel(dot(omega, v_rel));
}

double angular_loss_integral(const Potential& pot, const Vec3& v_rel, std::size_t n_omega) {
    if (n_omega < 8) throw ArgumentError("angular_loss_integral: n_omega must be at least 8");
    const SphereRule rule = SphereRule::with_count(n_omega);
    const Vec3 aligned{0.0, 0.0, norm(v_rel)};
    double total = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i)
        total += rule.weights[i] * cross_section(pot, aligned, rule.nodes[i]);
    return total;
}

}  // namespace qk::kernel
