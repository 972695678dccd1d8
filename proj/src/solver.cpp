#include "qkinetic/solver.hpp"

#include <cmath>
#include <sstream>

namespace qk::solver {

using phase::Distribution;

const char* splitting_name(Splitting s) { return s == Splitting::Lie ? "Lie" : "Strang"; }
const char* substep_name(Substep s) { return s == Substep::Euler ? "Euler" : "RK4"; }

void SolverConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ArgumentError("solver: dt must be positive");
    if (!(T >= dt * (1.0 - 1e-12)) || !std::isfinite(T)) throw ArgumentError("solver: need T >= dt");
    if (diagnostics_every == 0) throw ArgumentError("solver: diagnostics_every must be at least 1");
    if (!(blowup_factor > 1.0)) throw ArgumentError("solver: blowup_factor must exceed 1");
}

std::size_t SolverConfig::steps() const {
    return static_cast<std::size_t>(std::ceil(T / dt - 1e-9));
}

std::string Trajectory::csv() const {
    std::ostringstream os;
    os << "t,mass,px,py,pz,energy,entropy,min_f,h_norm\n";
    for (const auto& d : diagnostics) {
        os << format_double(d.t) << "," << format_double(d.mass) << "," << format_double(d.momentum[0]) << ","
           << format_double(d.momentum[1]) << "," << format_double(d.momentum[2]) << "," << format_double(d.energy)
           << "," << format_double(d.entropy) << "," << format_double(d.min_f) << "," << format_double(d.h_norm)
           << "\n";
    }
    return os.str();
}

double entropy(const Distribution& f) {
    if (f.rep() != phase::Rep::XV) throw ArgumentError("entropy: needs rep XV");
    double peak = 0.0;
    for (const auto& z : f.values()) peak = std::max(peak, z.real());
    if (peak <= 0.0) return 0.0;
    const double floor = 1e-30 * peak;
    double acc = 0.0;
    for (const auto& z : f.values()) {
        const double x = std::max(z.real(), floor);
        acc -= x * std::log(x);
    }
    return acc * f.cell_measure();
}

Diagnostics diagnose(const Distribution& f, double t, const phase::NormSpec& norm) {
    Diagnostics d;
    d.t = t;
    const auto m = collision::moments(f);
    d.mass = m.mass;
    d.momentum = m.momentum;
    d.energy = m.energy;
    d.entropy = entropy(f);
    d.min_f = f.min_real();
    d.h_norm = phase::sobolev_norm(f, norm);
    return d;
}

namespace {

void keep_real(Distribution& f) {
    for (auto& z : f.values()) z = z.real();
}

Distribution axpy(const Distribution& f, double a, const Distribution& k) {
    Distribution out = f;
    auto& o = out.values();
    const auto& kv = k.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += a * kv[i];
    return out;
}

Distribution transport(const Distribution& f, double t) {
    if (f.grid().dim_x == 0) return f;
    Distribution out = phase::free_transport(f, t);
    keep_real(out);
    return out;
}

void guard(const Distribution& f, double limit, double t) {
    for (const auto& z : f.values()) {
        if (!std::isfinite(z.real())) {
            std::ostringstream os;
            os << "solver: non-finite value at t = " << t;
            throw NumericalGuardError(os.str());
        }
    }
    const double mx = f.max_abs();
    if (mx > limit) {
        std::ostringstream os;
        os << "solver: max |f| = " << mx << " exceeded the blow-up limit " << limit << " at t = " << t
           << " (reduce dt)";
        throw NumericalGuardError(os.str());
    }
}

}  // namespace

Distribution collision_step(const Distribution& f, double dt, Substep method, const collision::CollisionConfig& ccfg) {
    if (ccfg.pot.is_zero()) return f;
    auto Q = [&](const Distribution& g) { return collision::collide(g, g, ccfg); };
    if (method == Substep::Euler) return axpy(f, dt, Q(f));
    const Distribution k1 = Q(f);
    const Distribution k2 = Q(axpy(f, 0.5 * dt, k1));
    const Distribution k3 = Q(axpy(f, 0.5 * dt, k2));
    const Distribution k4 = Q(axpy(f, dt, k3));
    Distribution out = f;
    auto& o = out.values();
    for (std::size_t i = 0; i < o.size(); ++i)
        o[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

Trajectory solve(const Distribution& f0, const SolverConfig& cfg, const collision::CollisionConfig& ccfg) {
    cfg.validate();
    if (!ccfg.pot.is_zero()) ccfg.validate();
    if (f0.rep() != phase::Rep::XV || f0.k() != 1 || f0.grid().dim_v != 3)
        throw ArgumentError("solve: needs rep XV, k = 1 and three velocity axes");

    Trajectory traj;
    Distribution f = f0;
    for (const auto& z : f.values())
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw ArgumentError("solve: non-finite initial data");
    double imag = 0.0;
    for (const auto& z : f.values()) imag = std::max(imag, std::abs(z.imag()));
    const double peak = f.max_abs();
    if (imag > 1e-12 * peak) traj.warnings.push_back("initial data has an imaginary part; it is discarded");
    keep_real(f);
    if (f.min_real() < -1e-12 * peak) traj.warnings.push_back("initial data is slightly negative");
    if (!(peak > 0.0)) traj.warnings.push_back("initial data is identically zero");
    if (f.grid().dim_x == 0) traj.warnings.push_back("homogeneous grid: transport is the identity");

    const std::size_t n = cfg.steps();
    const double dt = cfg.T / static_cast<double>(n);
    const double limit = cfg.blowup_factor * std::max(peak, 1e-300);

    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.diagnostics.push_back(diagnose(f, t, cfg.norm));
        if (cfg.keep_snapshots || traj.snapshots.empty()) traj.snapshots.push_back(f);
        else traj.snapshots.back() = f;
    };
    record(0.0);
    for (std::size_t step = 1; step <= n; ++step) {
        if (cfg.splitting == Splitting::Strang) {
            f = transport(f, 0.5 * dt);
            f = collision_step(f, dt, cfg.collision_substep, ccfg);
            f = transport(f, 0.5 * dt);
        } else {
            f = transport(f, dt);
            f = collision_step(f, dt, cfg.collision_substep, ccfg);
        }
        const double t = step == n ? cfg.T : dt * static_cast<double>(step);
        guard(f, limit, t);
        if (step % cfg.diagnostics_every == 0 || step == n) record(t);
    }
    if (!cfg.keep_snapshots) {
        // Only the final state is retained; keep times aligned with it.
        traj.snapshots.assign(1, f);
    }
    return traj;
}

double continuity_probe(const Distribution& f0, const Distribution& g0, const SolverConfig& cfg,
                        const collision::CollisionConfig& ccfg) {
    phase::require_compatible(f0, g0, "continuity_probe");
    const double d0 = phase::sobolev_norm(f0 - g0, cfg.norm);
    if (d0 == 0.0) return 0.0;
    SolverConfig c = cfg;
    c.keep_snapshots = false;
    c.diagnostics_every = c.steps();
    const auto f = solve(f0, c, ccfg).final_state();
    const auto g = solve(g0, c, ccfg).final_state();
    return phase::sobolev_norm(f - g, cfg.norm) / d0;
}

}  // namespace qk::solver
