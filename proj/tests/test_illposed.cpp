#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "qkinetic/illposed.hpp"

using namespace qk;
using namespace qk::illposed;

TEST_CASE("deflation config validation and derived quantities") {
    DeflationConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.J() == 1024);
    CHECK(c.rate() == doctest::Approx(std::sqrt(8.0) / 2.0));
    CHECK(c.t_star() == doctest::Approx(-0.25 * std::log(8.0) / c.rate()));
    CHECK(c.s0() < c.s);

    auto bad = c;
    bad.s = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad.s = 1.5;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = c;
    bad.M = 6.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = c;
    bad.N2 = 1.0;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = c;
    bad.J_sample = 513;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    bad = c;
    bad.M = 2.0;
    bad.N2 = 2.0;
    bad.J_sample = 32;
    CHECK_THROWS_AS(bad.validate(), ArgumentError);
    CHECK_THROWS_AS(BadData{bad}, ArgumentError);
}

TEST_CASE("half-sphere direction grid") {
    const auto d = half_sphere_grid(200);
    REQUIRE(d.size() == 200);
    Vec3 mean{0.0, 0.0, 0.0};
    for (const auto& e : d) {
        CHECK(norm(e) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(e[2] > 0.0);
        mean = mean + (1.0 / 200.0) * e;
    }
    // Uniform on the half sphere: E[z] = 1/2, E[x] = E[y] = 0.
    CHECK(mean[2] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(std::abs(mean[0]) < 0.02);
    CHECK(std::abs(mean[1]) < 0.02);
}

TEST_CASE("bad data norms are order one") {
    const BadData d{DeflationConfig{}};
    CHECK(d.f_norm() >= 0.25);
    CHECK(d.f_norm() <= 4.0);
    CHECK(d.g_norm() >= 0.25);
    CHECK(d.g_norm() <= 4.0);

    // Large-M limit of ||f||: M^{-s} factors cancel against the s-th
    // derivative, leaving pi^{3/2} Gamma(3/2 + s)/Gamma(3/2) for the x part
    // and (1/(8 pi)) pi^{3/2} 15/4 for the v part.
    DeflationConfig big;
    big.M = 1 << 20;
    big.J_sample = 16;
    const double lim = std::sqrt(std::pow(kPi, 1.5) * std::tgamma(2.0) / std::tgamma(1.5) *
                                 std::pow(kPi, 1.5) * 3.75 / (8.0 * kPi));
    CHECK(BadData(big).f_norm() == doctest::Approx(lim).epsilon(1e-3));

    // Direct midpoint quadrature of the f norm at M = 2 in spherical shells.
    DeflationConfig small;
    small.M = 2.0;
    small.N2 = 2.0;
    small.J_sample = 4;
    double X = 0.0, V = 0.0;
    const double h = 1e-3;
    for (double r = 0.5 * h; r < 12.0; r += h) {
        const double r2 = r * r;
        X += h * 4.0 * kPi * r2 * std::sqrt(1.0 + 4.0 * r2) * std::exp(-r2);
        V += h * 4.0 * kPi * r2 * std::sqrt(1.0 + r2 / 4.0) * r2 * r2 * std::exp(-r2) / (8.0 * kPi);
    }
    CHECK(BadData(small).f_norm() == doctest::Approx(std::sqrt(X * V / 2.0)).epsilon(1e-6));
}

TEST_CASE("bad data pointwise") {
    const DeflationConfig c;
    const BadData d(c);
    CHECK(d.directions().size() == c.J_sample);
    const double M = c.M;
    const Vec3 vpk{std::sqrt(2.0) / M, 0.0, 0.0};  // |M v|^2 = 2 maximizes chi_hat
    const double peak = d.f({0.0, 0.0, 0.0}, vpk);
    CHECK(peak == doctest::Approx(std::pow(M, 2.5) * 2.0 * std::exp(-1.0) / std::sqrt(8.0 * kPi)));
    CHECK(d.f({8.0 / M, 0.0, 0.0}, vpk) <= 1e-8 * peak);
    CHECK(d.f({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}) == 0.0);

    // A summand is the rotation of a needle along e_j.
    const Vec3 e = d.directions()[3];
    const double along = d.g_term(3, {0.0, 0.0, 0.0}, (std::sqrt(2.0) * c.N2) * e);
    CHECK(along == doctest::Approx(0.0));  // chi_hat(M P^perp v) vanishes on the axis
    double total = 0.0;
    for (std::size_t j = 0; j < d.directions().size(); ++j) total += d.g_term(j, {0.1, 0.0, 0.0}, {0.2, 0.3, 0.1});
    CHECK(d.g_sampled({0.1, 0.0, 0.0}, {0.2, 0.3, 0.1}) == doctest::Approx(total));
}

TEST_CASE("overlap audit: square of the sum close to the sum of squares") {
    DeflationConfig c;
    c.J_sample = 64;
    const BadData d(c);
    const auto a = overlap_audit(d);
    CHECK(a.ratio() >= 1.0);
    CHECK(std::abs(a.ratio() - 1.0) <= 0.1);
    CHECK(a.max_pair_cosine < 0.05);
    // Gauss-Hermite diagonal against the closed-form summand norm.
    CHECK(a.mean_term_norm_sq == doctest::Approx(std::pow(d.g_term_norm(), 2)).epsilon(0.02));

    // A single summand has nothing to overlap with.
    DeflationConfig one = c;
    one.J_sample = 1;
    const auto single = overlap_audit(BadData(one));
    CHECK(single.ratio() == doctest::Approx(1.0));
}

TEST_CASE("loss probe: surrogate kernel") {
    const BadData d{DeflationConfig{}};
    LossProbeConfig lc;
    const auto r = loss_probe(d, lc);
    CHECK(r.points.size() == lc.n_points);
    CHECK(r.band == 0.3);
    CHECK(r.relative_error <= 0.3);
    CHECK(!r.inconclusive);
    CHECK(r.passed());
    for (const auto& p : r.points) CHECK(p.std_error < 0.01 * p.quadrature);

    // Linear in f: identical samples, both sides scaled.
    auto scaled = lc;
    scaled.f_scale = 3.5;
    const auto r2 = loss_probe(d, scaled);
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        CHECK(r2.points[i].quadrature == doctest::Approx(3.5 * r.points[i].quadrature).epsilon(1e-13));
        CHECK(r2.points[i].predicted == doctest::Approx(3.5 * r.points[i].predicted).epsilon(1e-13));
    }
    CHECK(r2.relative_error == doctest::Approx(r.relative_error).epsilon(1e-12));

    // Outside the spatial support both sides are negligible.
    auto far = lc;
    far.points = {{{8.0 / 8.0, 0.0, 0.0}, {0.1, 0.05, 0.0}}, {{0.0, 0.0, 0.0}, {0.1, 0.05, 0.0}}};
    const auto rf = loss_probe(d, far);
    const double peak = std::max(std::abs(rf.points[1].quadrature), std::abs(rf.points[1].predicted));
    CHECK(std::abs(rf.points[0].quadrature) <= 1e-8 * peak);
    CHECK(std::abs(rf.points[0].predicted) <= 1e-8 * peak);

    const std::string csv = r.csv();
    CHECK(csv.rfind("x0,x1,x2,v0,v1,v2,quadrature,predicted,std_error,relative_error\n", 0) == 0);
}

TEST_CASE("loss probe: true cross-section, looser band") {
    const BadData d{DeflationConfig{}};
    LossProbeConfig lc;
    lc.mode = KernelMode::CrossSection;
    lc.n_points = 4;
    const auto r = loss_probe(d, lc);
    CHECK(r.band == 0.5);
    CHECK(r.band > LossProbeConfig{}.effective_band());
    CHECK(r.relative_error <= 0.5);
    CHECK(r.passed());

    // C for the bump window: 4 pi p int r |phi_hat|^2 dr, by midpoint rule.
    const auto pot = lc.pot;
    double I = 0.0;
    for (double x = 5e-6; x < 2.0; x += 1e-5) I += 1e-5 * x * pot.profile_sq(x);
    CHECK(angular_constant(pot) == doctest::Approx(4.0 * kPi * pot.prefactor() * I).epsilon(1e-6));
}

TEST_CASE("loss probe flags an unresolved comparison") {
    const BadData d{DeflationConfig{}};
    LossProbeConfig lc;
    lc.n_points = 2;
    const auto r = loss_probe(d, lc);
    auto tight = lc;
    tight.band = r.relative_error;  // zero gap: any MC error decides it
    const auto rt = loss_probe(d, tight);
    CHECK(rt.inconclusive);
    CHECK(!rt.passed());

    auto few = lc;
    few.mc_nodes = 1000;
    CHECK_THROWS_AS(loss_probe(d, few), ArgumentError);
}

TEST_CASE("loss probe is stable under direction doubling") {
    DeflationConfig c;
    c.J_sample = 128;
    LossProbeConfig lc;
    lc.n_points = 4;
    const double a = loss_probe(BadData(c), lc).relative_error;
    c.J_sample = 256;
    const double b = loss_probe(BadData(c), lc).relative_error;
    CHECK(std::abs(a - b) <= 0.05);
}

TEST_CASE("deflation curve: closed form") {
    DeflationConfig c;
    c.M = 1024.0;
    const auto cv = deflation_curve(c);
    REQUIRE(cv.t.size() == 65);
    CHECK(cv.t.front() == doctest::Approx(c.t_star()));
    CHECK(cv.t.back() == 0.0);
    const double lnM = std::log(1024.0);
    // Both terms equal 1/ln M at t = 0.
    CHECK(cv.norm.back() == doctest::Approx(2.0 / lnM).epsilon(1e-14));
    CHECK(cv.norm.back() <= 2.0 / lnM * (1.0 + 1e-12));
    // At T*: rate |T*| = delta ln M, so norm = (M^delta <delta ln M>^{s0} + 1) / ln M.
    const double s0 = 0.5 - std::log(lnM) / lnM;
    const double at_star = (std::pow(1024.0, 0.25) * std::pow(std::hypot(1.0, 0.25 * lnM), s0) + 1.0) / lnM;
    CHECK(cv.norm.front() == doctest::Approx(at_star).epsilon(1e-12));
    CHECK(cv.ratio() == doctest::Approx(at_star * lnM / 2.0).epsilon(1e-12));
    for (std::size_t i = 1; i < cv.norm.size(); ++i) CHECK(cv.norm[i] < cv.norm[i - 1]);

    const std::string csv = cv.csv();
    CHECK(csv.rfind("t,norm\n", 0) == 0);
    CHECK(csv.find("\nratio,") != std::string::npos);
    CHECK(csv.find("\ndelta,0.25\n") != std::string::npos);
}

TEST_CASE("deflation ratio grows along the M ladder") {
    DeflationConfig c;
    double prev = 0.0;
    for (double M : {64.0, 256.0, 1024.0, 4096.0}) {
        c.M = M;
        const double r = deflation_curve(c).ratio();
        CHECK(r > prev);
        prev = r;
    }
}

TEST_CASE("deflation dependence on s") {
    DeflationConfig c;
    c.M = 1024.0;
    // At a fixed time the inflation rate M^{1-s} falls with s.
    const double t = -1.0;
    double prev = std::numeric_limits<double>::infinity();
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        c.s = s;
        const double r = deflation_norm(c, t) / deflation_norm(c, 0.0);
        CHECK(r < prev);
        prev = r;
    }
    // At its own T*(s) the exponential factor is always M^delta, and the
    // remaining <delta ln M>^{s0} factor grows with s.
    prev = 0.0;
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        c.s = s;
        const double r = deflation_curve(c).ratio();
        CHECK(r > prev);
        prev = r;
    }
    // s -> 1: the rate loses its M dependence.
    c.s = 0.999;
    CHECK(c.rate() == doctest::Approx(std::pow(1024.0, 0.001) / 2.0));
    CHECK(c.t_star() == doctest::Approx(-0.25 * std::log(1024.0) * 2.0).epsilon(0.01));
    CHECK_THROWS_AS(deflation_curve(c, 1), ArgumentError);
}
