#pragma once

// Transport-collision splitting for (d/dt + v . grad_x) f = Q(f, f), with
// mass, momentum, energy, entropy and Sobolev-norm diagnostics.
//
// Transport is exact (a phase on the (eta, v) side), so all time error comes
// from the collision substep and from the splitting itself. On a homogeneous
// grid there is no transport and the splitting is exact.

#include <string>
#include <vector>

#include "qkinetic/collision.hpp"
#include "qkinetic/phase.hpp"

namespace qk::solver {

enum class Splitting { Lie, Strang };
enum class Substep { Euler, RK4 };

const char* splitting_name(Splitting s);
const char* substep_name(Substep s);

struct SolverConfig {
    double dt = 0.01;
    double T = 0.1;
    Splitting splitting = Splitting::Strang;
    Substep collision_substep = Substep::RK4;
    /// Diagnostics (and snapshots) every this many steps; the initial and
    /// final states are always recorded.
    std::size_t diagnostics_every = 1;
    bool keep_snapshots = true;
    /// Norm reported in the h_norm column.
    phase::NormSpec norm{1.1, 0.1};
    /// Abort once max |f| exceeds this multiple of its initial value.
    double blowup_factor = 1e3;

    void validate() const;
    /// Number of steps; dt is shrunk slightly when T / dt is not an integer.
    std::size_t steps() const;
};

struct Diagnostics {
    double t = 0.0;
    double mass = 0.0;
    Vec3 momentum{0.0, 0.0, 0.0};
    double energy = 0.0;
    double entropy = 0.0;
    double min_f = 0.0;
    double h_norm = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<phase::Distribution> snapshots;
    std::vector<Diagnostics> diagnostics;
    std::vector<std::string> warnings;

    const phase::Distribution& final_state() const { return snapshots.back(); }
    /// Columns t,mass,px,py,pz,energy,entropy,min_f,h_norm.
    std::string csv() const;
};

/// S = -int f ln f dx dv with f clamped below at 1e-30 of its peak.
double entropy(const phase::Distribution& f);

Diagnostics diagnose(const phase::Distribution& f, double t, const phase::NormSpec& norm);

/// One collision substep of length dt for df/dt = Q(f, f).
phase::Distribution collision_step(const phase::Distribution& f, double dt, Substep method,
                                   const collision::CollisionConfig& ccfg);

/// Integrates from f0 (rep XV, k = 1, real values). A slightly negative f0
/// is accepted with a warning. Throws NumericalGuardError on blow-up or
/// non-finite values.
Trajectory solve(const phase::Distribution& f0, const SolverConfig& cfg, const collision::CollisionConfig& ccfg);

/// ||f(T) - g(T)|| / ||f0 - g0|| in the H^{1.1}_x L^{2,0.1}_v norm
/// (cfg.norm). Returns 0 when f0 = g0.
double continuity_probe(const phase::Distribution& f0, const phase::Distribution& g0, const SolverConfig& cfg,
                        const collision::CollisionConfig& ccfg);

}  // namespace qk::solver
