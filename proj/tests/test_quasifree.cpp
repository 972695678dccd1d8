#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "qkinetic/parallel.hpp"
#include "qkinetic/quasifree.hpp"

using namespace qk;
using namespace qk::quasifree;

namespace {

std::vector<Vec3> random_points(std::size_t k, std::mt19937_64& gen, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    std::vector<Vec3> out(k);
    for (auto& v : out) v = {nd(gen), nd(gen), nd(gen)};
    return out;
}

double max_diff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, norm(a[i] - b[i]));
    return m;
}

}  // namespace

TEST_CASE("identity frame leaves coordinates unchanged") {
    std::mt19937_64 gen(1);
    const auto x = random_points(3, gen), xi = random_points(3, gen);
    const auto pq = cycle_coords(x, xi, {{0, 1, 2}, 0.37});
    CHECK(pq.p == x);
    CHECK(pq.q == xi);
}

TEST_CASE("cycle coordinates round trip for random frames") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> ue(0.01, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t k = 1 + rep % 5;
        std::vector<int> pi(k);
        std::iota(pi.begin(), pi.end(), 0);
        std::shuffle(pi.begin(), pi.end(), gen);
        const CycleFrame frame{pi, ue(gen)};
        const auto x = random_points(k, gen, 2.0), xi = random_points(k, gen, 2.0);
        const auto [x2, xi2] = cycle_coords_inverse(cycle_coords(x, xi, frame), frame);
        CHECK(max_diff(x, x2) < 1e-12);
        CHECK(max_diff(xi, xi2) * frame.eps < 1e-12);
    }
    CHECK_THROWS_AS(cycle_coords({{0, 0, 0}}, {{0, 0, 0}}, {{1}, 1.0}), ArgumentError);
}

TEST_CASE("two-cycle coordinates") {
    std::mt19937_64 gen(3);
    const auto x = random_points(2, gen), xi = random_points(2, gen);
    const double eps = 0.125;
    const auto pq = cycle_coords(x, xi, {{1, 0}, eps});
    const Vec3 ps = pq.p[0] + pq.p[1], xs = x[0] + x[1];
    CHECK(norm(ps - xs) < 1e-12);
    const Vec3 qd = pq.q[0] - pq.q[1], xd = (1.0 / eps) * (x[0] - x[1]);
    CHECK(norm(qd - xd) < 1e-12);
}

TEST_CASE("closed-form cycle term") {
    // Center evaluation: one factor per particle of (1+4t^2)^{-3/2} hatG(0) G_Y(0).
    const std::vector<Vec3> zero(2, Vec3{0, 0, 0});
    const std::vector<double> t{0.3, 0.7};
    double expect = 1.0;
    for (double tj : t) expect *= std::pow(1 + 4 * tj * tj, -1.5) * std::pow(2 * kPi, -1.5);
    const cplx v = cycle_term_closed_form({{0, 1}, 0.5}, t, zero, zero);
    CHECK(std::abs(v - expect) < 1e-15);

    // Identity, t = 0: separable Gaussian in (x, xi).
    const Vec3 x{0.3, -0.2, 0.5}, xi{0.1, 0.4, -0.3};
    const cplx g = cycle_term_closed_form({{0}, 1.0}, {0.0}, {x}, {xi});
    CHECK(std::abs(g - std::pow(2 * kPi, -1.5) * std::exp(-0.5 * dot(x, x) - 2 * dot(xi, xi))) < 1e-15);

    // The identity term does not depend on eps.
    std::mt19937_64 gen(4);
    for (int rep = 0; rep < 20; ++rep) {
        const auto xs = random_points(2, gen), xis = random_points(2, gen);
        CHECK(cycle_term_closed_form({{0, 1}, 0.5}, t, xs, xis) == cycle_term_closed_form({{0, 1}, 0.01}, t, xs, xis));
    }
}

TEST_CASE("identity term transforms to the local Maxwellian") {
    const Vec3 x{0.3, -0.5, 1.0}, v{0.7, 0.2, -1.1};
    CHECK(std::abs(identity_term_transform(0.0, x, v) - local_maxwellian(0.0, x, v)) < 1e-8);
    for (double t : {0.5, 1.2}) {
        const double num = identity_term_transform(t, x, v), ref = local_maxwellian(t, x, v);
        CHECK(std::abs(num - ref) < 1e-8 * std::max(1.0, ref));
        CHECK(std::abs(num - ref) <= 1e-10 * ref);
    }
}

TEST_CASE("packet overlap matches direct quadrature") {
    // Independent check of the Gaussian pair integral in one coordinate at a
    // time; the 3D overlap is the product of the axis factors.
    const Vec3 Ya{0.2, -0.1, 0.3}, Yb{-0.1, 0.2, 0.0}, Wa{0.5, 0.1, -0.2}, Wb{0.3, -0.2, 0.1};
    const double eps = 0.2;
    cplx direct = 1.0;
    for (int d = 0; d < 3; ++d) {
        cplx acc = 0.0;
        const double h = 1e-3, se = std::sqrt(eps);
        for (double x = -4; x <= 4; x += h) {
            const double ga = std::pow(kPi, -0.25) * std::exp(-0.5 * std::pow((x - Ya[d]) / se, 2));
            const double gb = std::pow(kPi, -0.25) * std::exp(-0.5 * std::pow((x - Yb[d]) / se, 2));
            acc += ga * gb * std::polar(1.0, x * (Wa[d] - Wb[d]) / eps) * h;
        }
        direct *= acc / se;
    }
    CHECK(std::abs(packet_overlap(Ya, Wa, Yb, Wb, eps) - direct) < 1e-9);
}

TEST_CASE("normalization of the symmetrized state") {
    const auto one = normalization_check(1, 0.1, 200, 5);
    CHECK(one.estimate == 1.0);

    const auto a = normalization_check(2, 0.1, 20000, 5);
    const auto b = normalization_check(2, 0.05, 20000, 5);
    CHECK(a.estimate >= 0.95);
    CHECK(a.estimate <= 1.05);
    CHECK(std::abs(b.estimate - 1) < std::abs(a.estimate - 1));
    // E|G_12|^2 = (1 + 2/eps)^{-3} for standard normal centers. The summand is
    // heavy-tailed, so compare at a larger trial count with a relative band.
    const double oracle = std::pow(1 + 2 / 0.1, -3.0);
    const auto big = normalization_check(2, 0.1, 200000, 5);
    CHECK(std::abs(big.estimate - 1 - oracle) < 0.3 * oracle);
    CHECK(a.class_means[0] == 1.0);
    CHECK(a.class_means[1] == 0.0);

    const auto c = normalization_check(3, 0.1, 2000, 5);
    CHECK(c.estimate >= 0.95);
    CHECK(c.estimate <= 1.05);
    CHECK(c.estimate - 1 <= 0.1 / (1 - std::pow(0.1, 1.5)) * 3);

    CHECK_THROWS_AS(normalization_check(5, 0.1, 200, 1), UnsupportedError);
    CHECK_THROWS_AS(normalization_check(2, 0.1, 100, 1), ArgumentError);
}

TEST_CASE("normalization is reproducible across thread counts") {
    par::set_thread_count(1);
    const auto a = normalization_check(3, 0.2, 500, 9);
    par::set_thread_count(3);
    const auto b = normalization_check(3, 0.2, 500, 9);
    par::set_thread_count(0);
    CHECK(a.estimate == b.estimate);
    CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("cycle scaling slopes") {
    const std::vector<double> ladder{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    struct Case {
        double s, slope, tol;
    };
    for (const auto& c : {Case{0.0, 1.5, 0.2}, Case{0.75, 0.0, 0.15}, Case{1.0, -0.5, 0.2}}) {
        CycleScalingOptions opt;
        opt.s = c.s;
        const auto r = cycle_scaling_fit(ladder, opt);
        CAPTURE(c.s);
        CHECK(std::abs(r.slope - c.slope) <= c.tol);
        CHECK(r.residual < 0.1);
    }
    CycleScalingOptions coarse;
    coarse.n_x = 64;
    CHECK_NOTHROW(cycle_norm(0.125, coarse));
    CHECK_THROWS_AS(cycle_norm(0.0625, coarse), NumericalGuardError);
}

TEST_CASE("random walk statistics") {
    const auto big = random_walk_crossings(10000, 2000, 11);
    const double target = 2 * std::sqrt(1e4) / kPi;
    CHECK(std::abs(big.mean_crossings - target) <= 0.05 * target);
    CHECK(std::abs(big.mean_sq_displacement - 1e4) <= 4 * big.displacement_stderr);

    const auto one = random_walk_crossings(1, 4000, 11);
    CHECK(one.mean_crossings == 0.0);
    CHECK(std::abs(one.mean_sq_displacement - 1.0) <= 4 * one.displacement_stderr);

    const double c100 = random_walk_crossings(100, 2000, 3).mean_crossings;
    const double c400 = random_walk_crossings(400, 2000, 3).mean_crossings;
    const double c1600 = random_walk_crossings(1600, 2000, 3).mean_crossings;
    CHECK(c100 < c400);
    CHECK(c400 < c1600);
    CHECK(c400 / c100 == doctest::Approx(2.0).epsilon(0.15));
    CHECK(c1600 / c400 == doctest::Approx(2.0).epsilon(0.15));

    const auto again = random_walk_crossings(100, 1000, 42);
    const auto same = random_walk_crossings(100, 1000, 42);
    CHECK(again.mean_crossings == same.mean_crossings);
}

TEST_CASE("derangement counts") {
    CHECK(derangements(0) == 1);
    CHECK(derangements(1) == 0);
    for (int k = 2; k <= 8; ++k) {
        std::vector<int> p(static_cast<std::size_t>(k));
        std::iota(p.begin(), p.end(), 0);
        std::uint64_t brute = 0;
        do {
            bool fixed = false;
            for (int i = 0; i < k; ++i) fixed |= p[static_cast<std::size_t>(i)] == i;
            brute += !fixed;
        } while (std::next_permutation(p.begin(), p.end()));
        CHECK(derangements(k) == brute);
    }
    CHECK(derangements(3) == 2);
    CHECK(derangements(4) == 9);
    double fact = 1;
    for (int k = 1; k <= 20; ++k) {
        fact *= k;
        CHECK(static_cast<double>(derangements(k)) == doctest::Approx(std::round(fact / std::exp(1.0))).epsilon(1e-15));
    }
    CHECK_THROWS_AS(derangements(21), ArgumentError);
}

TEST_CASE("displacement classes are counted exactly") {
    for (int N = 1; N <= 6; ++N) {
        std::vector<int> p(static_cast<std::size_t>(N));
        std::iota(p.begin(), p.end(), 0);
        std::vector<std::uint64_t> counts(static_cast<std::size_t>(N + 1), 0);
        do {
            int moved = 0;
            for (int i = 0; i < N; ++i) moved += p[static_cast<std::size_t>(i)] != i;
            ++counts[static_cast<std::size_t>(moved)];
        } while (std::next_permutation(p.begin(), p.end()));
        std::uint64_t falling = 1;
        for (int k = 0; k <= N; ++k) {
            if (k > 0) falling *= static_cast<std::uint64_t>(N - k + 1);
            CHECK(class_size(N, k) == counts[static_cast<std::size_t>(k)]);
            CHECK(class_size(N, k) <= falling);
        }
    }
}

TEST_CASE("ensembles are reproducible") {
    const auto a = WavePacketEnsemble::sample(5, 0.1, 99);
    const auto b = WavePacketEnsemble::sample(5, 0.1, 99);
    CHECK(a.Y == b.Y);
    CHECK(a.W == b.W);
    const auto c = WavePacketEnsemble::sample(5, 0.1, 100);
    CHECK(a.Y != c.Y);
    CHECK(std::abs(a.packet(0, a.Y[0])) == doctest::Approx(std::pow(kPi, -0.75)));
}
