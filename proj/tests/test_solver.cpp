#include <cmath>
#include <vector>

#include "doctest.h"
#include "qkinetic/solver.hpp"

using namespace qk;
using namespace qk::collision;
using namespace qk::solver;
using phase::Distribution;
using phase::Grid;

namespace {

CollisionConfig deposit_config() {
    CollisionConfig cfg;
    cfg.pot = kernel::Potential::power_law(0.5, 2.0, 2.0);
    cfg.n_omega = 8;
    cfg.vstar_rule = VStarRule::Deposit;
    return cfg;
}

GaussianMixture bimodal() {
    return GaussianMixture{{{0.5, {1.0, 0.0, 0.0}, {0.8, 0.9, 1.0}}, {0.4, {-1.0, 0.5, 0.0}, {0.9, 0.8, 1.0}}}};
}

// (1 + 0.3 cos(pi x)) times the bimodal density, on a slab.
Distribution slab_data(const Grid& g, double t = 0.0) {
    const auto mix = bimodal();
    return Distribution::from_function(g, 1, [&](const double* x, const double* v) {
        return cplx((1.0 + 0.3 * std::cos(kPi * (x[0] - v[0] * t))) * mix({v[0], v[1], v[2]}), 0.0);
    });
}

double rel_l2(const Distribution& a, const Distribution& b) { return (a - b).l2_norm() / b.l2_norm(); }

}  // namespace

TEST_CASE("solver config validation") {
    SolverConfig c;
    c.dt = 0.0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c.dt = 0.1;
    c.T = 0.05;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
    c.T = 1.0;
    CHECK_NOTHROW(c.validate());
    CHECK(c.steps() == 10);
    c.T = 1.05;
    CHECK(c.steps() == 11);
    c.diagnostics_every = 0;
    CHECK_THROWS_AS(c.validate(), ArgumentError);
}

TEST_CASE("zero potential reduces to free transport") {
    const Grid g = phase::maxwellian_grid(4, 1e-8, 1, 8, 1.0);
    CollisionConfig cc;
    cc.pot = kernel::Potential::power_law(0.5, 2.0, 2.0, 0.0);
    SolverConfig sc;
    sc.dt = 0.1;
    sc.T = 0.7;
    const auto tr = solve(slab_data(g), sc, cc);
    CHECK(rel_l2(tr.final_state(), slab_data(g, 0.7)) <= 1e-12);
    CHECK(rel_l2(tr.final_state(), phase::free_transport(slab_data(g), 0.7)) <= 1e-12);
    // Pure transport conserves mass exactly.
    CHECK(std::abs(tr.diagnostics.back().mass - tr.diagnostics.front().mass) <=
          1e-12 * tr.diagnostics.front().mass);
}

TEST_CASE("trajectory bookkeeping") {
    const Grid g = phase::maxwellian_grid(4);
    SolverConfig sc;
    sc.dt = 0.1;
    sc.T = 0.5;
    sc.diagnostics_every = 2;
    const auto tr = solve(bimodal().sample(g), sc, deposit_config());
    REQUIRE(tr.times.size() == 4);  // 0, 0.2, 0.4 and the final 0.5
    CHECK(tr.times.back() == doctest::Approx(0.5));
    for (std::size_t i = 1; i < tr.times.size(); ++i) CHECK(tr.times[i] > tr.times[i - 1]);
    CHECK(tr.snapshots.size() == tr.times.size());
    CHECK(tr.diagnostics.size() == tr.times.size());
    const auto csv = tr.csv();
    CHECK(csv.rfind("t,mass,px,py,pz,energy,entropy,min_f,h_norm\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    bool homogeneous_warning = false;
    for (const auto& w : tr.warnings) homogeneous_warning |= w.find("homogeneous") != std::string::npos;
    CHECK(homogeneous_warning);

    sc.keep_snapshots = false;
    CHECK(solve(bimodal().sample(g), sc, deposit_config()).snapshots.size() == 1);
}

TEST_CASE("homogeneous relaxation: conservation, entropy, positivity") {
    const Grid g = phase::maxwellian_grid(8);
    const auto f0 = bimodal().sample(g);
    SolverConfig sc;
    sc.dt = 0.05;
    sc.T = 1.5;
    const auto tr = solve(f0, sc, deposit_config());
    const auto& d0 = tr.diagnostics.front();
    for (std::size_t i = 1; i < tr.diagnostics.size(); ++i) {
        const auto& d = tr.diagnostics[i];
        CHECK(std::abs(d.mass - d0.mass) <= 1e-6 * d0.mass);
        CHECK(std::abs(d.energy - d0.energy) <= 1e-6 * d0.energy);
        CHECK(d.entropy >= tr.diagnostics[i - 1].entropy - 1e-8);
        CHECK(d.min_f >= -1e-12 * f0.max_abs());
    }
    CHECK(tr.diagnostics.back().entropy > d0.entropy + 0.1);
    CHECK(std::abs(tr.final_state().l1_norm() - f0.l1_norm()) <= 1e-4 * f0.l1_norm());
}

TEST_CASE("sampled Maxwellian is stationary") {
    const Grid g = phase::maxwellian_grid(8);
    const auto M = GaussianMixture::maxwellian(1.0, {0.3, 0.0, -0.2}, 1.1).sample(g);
    SolverConfig sc;
    sc.dt = 0.05;
    sc.T = 0.5;
    CHECK(rel_l2(solve(M, sc, deposit_config()).final_state(), M) <= 1e-4);
}

TEST_CASE("entropy: worked examples") {
    const Grid g = phase::maxwellian_grid(4);
    const double c = 0.3;
    const Distribution uniform = Distribution::from_function(g, 1, [&](const double*, const double*) { return cplx(c); });
    const double volume = std::pow(2.0 * g.L_v, 3);
    CHECK(entropy(uniform) == doctest::Approx(-c * std::log(c) * volume).epsilon(1e-13));

    // Maxwellian against a perturbation with the same mass and energy.
    const Grid g16 = phase::maxwellian_grid(16);
    const auto M = GaussianMixture::maxwellian().sample(g16);
    const Distribution P = Distribution::from_function(g16, 1, [](const double*, const double* v) {
        const double m = std::exp(-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])) / std::pow(2.0 * kPi, 1.5);
        return cplx(m * (1.0 + 0.02 * (v[0] * v[0] - v[1] * v[1])));
    });
    const auto mM = moments(M), mP = moments(P);
    CHECK(mP.mass == doctest::Approx(mM.mass).epsilon(1e-12));
    CHECK(mP.energy == doctest::Approx(mM.energy).epsilon(1e-12));
    CHECK(entropy(M) > entropy(P));

    // Unit-temperature Maxwellian of mass rho: S = rho (3/2 (1 + ln 2 pi) - ln rho).
    // Doubling adds -2 rho ln 2 to twice the entropy, so S is not homogeneous.
    auto analytic = [](double rho) { return rho * (1.5 * (1.0 + std::log(2.0 * kPi)) - std::log(rho)); };
    const auto M2 = GaussianMixture::maxwellian(2.0).sample(g16);
    CHECK(entropy(M) == doctest::Approx(analytic(1.0)).epsilon(1e-6));
    CHECK(entropy(M2) == doctest::Approx(analytic(2.0)).epsilon(1e-6));
    CHECK(entropy(M2) == doctest::Approx(2.0 * entropy(M) - 2.0 * std::log(2.0) * M.integral().real()).epsilon(1e-12));
    CHECK(std::abs(entropy(M2) - 2.0 * entropy(M)) > 1.0);

    CHECK_THROWS_AS(entropy(phase::to_rep(M, phase::Rep::XXi)), ArgumentError);
}

TEST_CASE("continuity probe") {
    const Grid g = phase::maxwellian_grid(4, 1e-8, 1, 8, 1.0);
    const auto f0 = slab_data(g);
    SolverConfig sc;
    sc.dt = 0.05;
    sc.T = 0.2;
    const auto cc = deposit_config();
    CHECK(continuity_probe(f0, f0, sc, cc) == 0.0);

    const auto mix = bimodal();
    const Distribution bump = Distribution::from_function(g, 1, [&](const double* x, const double* v) {
        return cplx(1e-4 * std::sin(kPi * x[0]) * mix({v[0], v[1], v[2]}), 0.0);
    });
    const double r_bump = continuity_probe(f0, f0 + bump, sc, cc);
    CHECK(r_bump > 0.0);
    CHECK(r_bump <= 4.0);

    const double r3 = continuity_probe(f0, cplx(1.001) * f0, sc, cc);
    const double r4 = continuity_probe(f0, cplx(1.0001) * f0, sc, cc);
    CHECK(std::abs(r3 - r4) <= 0.1 * r4);
}

TEST_CASE("splitting order on a slab benchmark") {
    // Transport is exact and RK4 collision error is negligible at these
    // steps, so the error is the splitting error.
    const Grid g = phase::maxwellian_grid(4, 1e-8, 1, 8, 1.0);
    const auto f0 = slab_data(g);
    const auto cc = deposit_config();
    const double T = 0.4;
    auto run = [&](std::size_t steps, Splitting s) {
        SolverConfig sc;
        sc.dt = T / static_cast<double>(steps);
        sc.T = T;
        sc.splitting = s;
        sc.keep_snapshots = false;
        sc.diagnostics_every = steps;
        return solve(f0, sc, cc).final_state();
    };
    const auto ref = run(64, Splitting::Strang);
    for (auto s : {Splitting::Strang, Splitting::Lie}) {
        std::vector<double> err;
        for (std::size_t k : {4, 8, 16}) err.push_back(rel_l2(run(k, s), ref));
        const double slope = std::log2(err[0] / err[2]) / 2.0;
        CHECK(slope == doctest::Approx(s == Splitting::Strang ? 2.0 : 1.0).epsilon(0.15));
    }
}

TEST_CASE("blow-up guard") {
    const Grid g = phase::maxwellian_grid(4);
    auto cc = deposit_config();
    cc.pot = kernel::Potential::power_law(0.5, 2.0, 2.0, 400.0);
    SolverConfig sc;
    sc.dt = 1.0;
    sc.T = 20.0;
    sc.collision_substep = Substep::Euler;
    CHECK_THROWS_AS(solve(bimodal().sample(g), sc, cc), NumericalGuardError);

    CHECK_THROWS_AS(solve(phase::to_rep(bimodal().sample(g), phase::Rep::XXi), sc, cc), ArgumentError);
}
