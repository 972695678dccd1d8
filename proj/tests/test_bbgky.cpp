#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "qkinetic/bbgky.hpp"

using namespace qk;
using namespace qk::bbgky;
using phase::Distribution;
using phase::Grid;
using phase::Rep;
using phase::cplx;

namespace {

// 1D slab with one velocity axis.
Grid slab(std::size_t n_x, double L_x, std::size_t n_v = 16, double L_v = 6.0) {
    Grid g;
    g.dim_x = 1;
    g.n_x = n_x;
    g.L_x = L_x;
    g.dim_v = 1;
    g.n_v = n_v;
    g.L_v = L_v;
    return g;
}

// Fills a k = 2 density in its current representation from node coordinates
// (x1, x2, v1, v2) of a 1D slab.
template <class Fn>
Distribution fill2(const Grid& g, Rep rep, const Fn& fn) {
    Distribution f(g, 2, rep);
    std::vector<std::size_t> idx(4);
    std::vector<std::vector<double>> nodes;
    for (std::size_t a = 0; a < 4; ++a) nodes.push_back(f.axis_nodes(a));
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.unravel(i, idx);
        f[i] = fn(nodes[0][idx[0]], nodes[1][idx[1]], nodes[2][idx[2]], nodes[3][idx[3]]);
    }
    return f;
}

double max_abs_diff(const Distribution& a, const Distribution& b) { return (a - b).max_abs(); }

kernel::Potential ladder_power_law() { return kernel::Potential::power_law(0.6, 3.0, 1.0); }

}  // namespace

TEST_CASE("position potential table against direct quadrature") {
    for (const auto& pot : {kernel::Potential::bump(1.0, 2.0), ladder_power_law()}) {
        const PositionPotential& phi = PositionPotential::cached(pot);
        CHECK(&phi == &PositionPotential::cached(pot));
        const Rule1D rule = composite_gauss_legendre(16, 4096, 0.0, 2048.0);
        for (double r : {0.0, 0.3, 1.0, 2.5, 7.0}) {
            double d3 = 0.0, d1 = 0.0;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double k = rule.x[i], p = pot.profile(k);
                d3 += rule.w[i] * (r == 0.0 ? k * k * p : k * p * std::sin(k * r) / r);
                d1 += rule.w[i] * p * std::cos(k * r);
            }
            d3 /= 2.0 * kPi * kPi;
            d1 /= kPi;
            CHECK(phi.radial3(r) == doctest::Approx(d3).epsilon(2e-3).scale(1.0));
            CHECK(phi.radial1(r) == doctest::Approx(d1).epsilon(2e-3).scale(1.0));
        }
        CHECK(phi.radial3(1e3) == 0.0);
    }
}

TEST_CASE("grid operators refuse unresolved spatial grids") {
    CHECK(min_spatial_points(0.25) == 32);
    CHECK(min_spatial_points(0.1) == 80);
    CHECK_THROWS_AS(min_spatial_points(0.0), ArgumentError);
    const Grid g = slab(16, 4.0, 4);
    const auto pot = ladder_power_law();
    CHECK_THROWS_AS(apply_A(Distribution(g, 2, Rep::XXi), pot, 0.25), NumericalGuardError);
    CHECK_THROWS_AS(apply_B(Distribution(g, 2, Rep::EtaXi), pot, 0.25), NumericalGuardError);
    CHECK_NOTHROW(apply_A(Distribution(g, 2, Rep::XXi), pot, 0.5));
    CHECK_THROWS_AS(apply_A(Distribution(g, 2, Rep::EtaXi), pot, 0.5), ArgumentError);
    CHECK_THROWS_AS(apply_B(Distribution(g, 1, Rep::EtaXi), pot, 0.5), ArgumentError);
}

TEST_CASE("A: zero, linearity and the equal-xi cancellation") {
    const Grid g = slab(32, 4.0, 8);
    const auto pot = ladder_power_law();
    const double eps = 0.25;
    const auto f = fill2(g, Rep::XXi, [](double x1, double x2, double k1, double k2) {
        return cplx(std::exp(-x1 * x1 - 0.5 * x2 * x2 - 0.1 * k1 * k1), 0.2 * k2);
    });
    const auto h = fill2(g, Rep::XXi, [](double x1, double x2, double k1, double k2) {
        return cplx(std::cos(x1 - x2) * std::exp(-0.2 * (k1 * k1 + k2 * k2)), 0.0);
    });
    CHECK(apply_A(Distribution(g, 2, Rep::XXi), pot, eps).max_abs() == 0.0);
    const cplx a(0.7, -0.3), b(-1.2, 0.4);
    const auto lhs = apply_A(a * f + b * h, pot, eps);
    const auto rhs = a * apply_A(f, pot, eps) + b * apply_A(h, pot, eps);
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12 * lhs.max_abs());

    const auto Af = apply_A(f, pot, eps);
    const PositionPotential& phi = PositionPotential::cached(pot);
    std::vector<std::size_t> idx(4);
    const auto xn = g.x_nodes(), kn = g.xi_nodes();
    bool checked = false;
    for (std::size_t i = 0; i < Af.size(); ++i) {
        Af.unravel(i, idx);
        if (idx[2] == idx[3]) CHECK(std::abs(Af[i]) == 0.0);
        if (!checked && idx[0] == 17 && idx[1] == 16 && idx[2] == 5 && idx[3] == 2) {
            const double y = (xn[17] - xn[16]) / eps, w = 0.5 * (kn[5] - kn[2]);
            const cplx want = f[i] * cplx(0.0, -(phi.radial1(y + w) - phi.radial1(y - w)) / std::sqrt(eps));
            CHECK(std::abs(Af[i] - want) <= 1e-14 * std::abs(want));
            CHECK(std::abs(want) > 0.0);
            checked = true;
        }
    }
    CHECK(checked);
}

TEST_CASE("B: linearity and dependence on xi2 = 0 only") {
    const Grid g = slab(32, 4.0, 8);
    const auto pot = kernel::Potential::bump(1.0, 2.0);
    const double eps = 0.25;
    const auto f = fill2(g, Rep::EtaXi, [](double e1, double e2, double k1, double k2) {
        return cplx(std::exp(-0.5 * (e1 * e1 + e2 * e2) + 0.3 * e2 - 0.1 * k1 * k1 - k2 * k2), 0.0);
    });
    const auto junk = fill2(g, Rep::EtaXi, [](double e1, double e2, double k1, double k2) {
        return k2 == 0.0 ? cplx(0.0) : cplx(std::sin(e1 + e2 + k1), 3.0);
    });
    const auto Bf = apply_B(f, pot, eps);
    CHECK(Bf.k() == 1);
    CHECK(Bf.rep() == Rep::EtaXi);
    CHECK(Bf.max_abs() > 0.0);
    CHECK(max_abs_diff(apply_B(f + junk, pot, eps), Bf) <= 1e-14 * Bf.max_abs());
    CHECK(apply_B(junk, pot, eps).max_abs() == 0.0);
    const cplx a(0.5, 2.0);
    CHECK(max_abs_diff(apply_B(a * f, pot, eps), a * Bf) <= 1e-13 * std::abs(a) * Bf.max_abs());
}

TEST_CASE("B on Gaussian slab data against direct quadrature") {
    // eta nodes at spacing 1/8 up to 16 resolve the window edges in eta2.
    const Grid g = slab(128, 8.0 * kPi, 8);
    const double eps = 0.5;
    const auto pot = kernel::Potential::bump(1.0, 2.0);
    auto P = [](double k) { return std::exp(-0.25 * k * k); };
    const auto f = fill2(g, Rep::EtaXi, [&](double e1, double e2, double k1, double k2) {
        return cplx(std::exp(-0.5 * (e1 * e1 + e2 * e2)) * P(k1) * P(k2), 0.0);
    });
    const auto Bf = apply_B(f, pot, eps);
    const Rule1D rule = composite_gauss_legendre(16, 64, -14.0, 14.0);
    const auto en = g.eta_nodes(), kn = g.xi_nodes();
    double worst = 0.0;
    for (std::size_t m1 = 48; m1 <= 80; m1 += 8) {
        for (std::size_t a = 1; a < 8; a += 2) {
            const double e1 = en[m1], k1 = kn[a];
            double ref = 0.0;
            for (std::size_t i = 0; i < rule.x.size(); ++i) {
                const double e2 = rule.x[i];
                ref += rule.w[i] * pot.profile(eps * std::abs(e2)) * std::sin(0.5 * eps * k1 * e2) *
                       std::exp(-0.5 * ((e1 - e2) * (e1 - e2) + e2 * e2));
            }
            ref *= 2.0 / std::sqrt(eps) / (2.0 * kPi) * P(k1) * P(0.0);
            worst = std::max(worst, std::abs(Bf[m1 * 8 + a] - ref));
        }
    }
    // The grid sum is a trapezoid rule in eta2; the window's smooth steps
    // limit it to about 1e-4 relative at this spacing.
    CHECK(worst <= 1e-3 * Bf.max_abs());
}

TEST_CASE("eps ladder validation") {
    EpsLadder l;
    CHECK_NOTHROW(l.validate());
    l.eps = {0.5, 0.25, 0.125};
    CHECK_THROWS_AS(l.validate(), ArgumentError);
    l.eps = {0.5, 0.25, 0.25, 0.1};
    CHECK_THROWS_AS(l.validate(), ArgumentError);
    l.eps = {0.5, 0.25, -0.1, -0.2};
    CHECK_THROWS_AS(l.validate(), ArgumentError);
    const auto geo = EpsLadder::geometric(2, 6, LadderOp::A);
    REQUIRE(geo.eps.size() == 5);
    CHECK(geo.eps.front() == 0.25);
    CHECK(geo.eps.back() == 1.0 / 64.0);
    CHECK(std::string(ladder_op_name(LadderOp::QepsMinusQ0)) == "QepsMinusQ0");
}

TEST_CASE("synthetic ladders recover their exponent") {
    const EpsLadder l;
    const auto flat = scaling_ladder([](double) { return 3.0; }, l);
    CHECK(std::abs(flat.slope) <= 1e-12);
    CHECK(flat.residual <= 1e-12);
    const auto half = scaling_ladder([](double e) { return 2.0 * std::sqrt(e); }, l);
    CHECK(half.slope == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(half.residual <= 1e-12);
    CHECK_THROWS_AS(scaling_ladder([](double e) { return e > 0.1 ? 1.0 : 0.0; }, l), NumericalGuardError);
}

TEST_CASE("concentrated pair ladders scale as eps^(s - 1/2)") {
    struct Case {
        kernel::Potential pot;
        double s;
    };
    const PairFamily fam;
    for (const auto& c : {Case{ladder_power_law(), 0.6}, Case{kernel::Potential::bump(1.0, 2.0), 1.0}}) {
        CHECK(c.pot.vanishing_order() == c.s);
        for (auto op : {LadderOp::A, LadderOp::B}) {
            EpsLadder l;
            l.op = op;
            const auto rep = scaling_ladder(fam, c.pot, l, c.s);
            CAPTURE(ladder_op_name(op));
            CHECK(std::abs(rep.slope - (c.s - 0.5)) <= 0.2);
            CHECK(rep.residual <= 0.1);
        }
    }
}

TEST_CASE("smooth pair data: A gains a full power of eps") {
    PairFamily fam;
    fam.concentrated = false;
    EpsLadder l;
    l.op = LadderOp::A;
    const auto rep = scaling_ladder(fam, ladder_power_law(), l, 0.6);
    CHECK(std::abs(rep.slope - 1.0) <= 0.1);
    CHECK(rep.residual <= 0.05);
}

TEST_CASE("operator_ratio rejects bad arguments") {
    const PairFamily fam;
    const auto pot = ladder_power_law();
    CHECK_THROWS_AS(operator_ratio(LadderOp::A, fam, pot, 0.0, 0.6), ArgumentError);
    CHECK_THROWS_AS(operator_ratio(LadderOp::A, fam, pot, 0.1, -1.0), ArgumentError);
    CHECK_THROWS_AS(operator_ratio(LadderOp::Qeps, fam, pot, 0.1, 0.6), ArgumentError);
    PairFamily bad = fam;
    bad.center_width = 0.0;
    CHECK_THROWS_AS(operator_ratio(LadderOp::B, bad, pot, 0.1, 0.6), ArgumentError);
}

TEST_CASE("Q^eps on homogeneous data") {
    const Grid g = phase::maxwellian_grid(4);
    collision::CollisionConfig cc;
    cc.pot = kernel::Potential::power_law(0.5, 2.0, 2.0);
    const auto M = collision::GaussianMixture::maxwellian();
    const collision::GaussianMixture A{{{0.6, {0.0, 0.0, 0.0}, {0.8, 1.0, 1.2}}}};
    const auto f2 = phase::to_rep(Distribution::from_function(g, 2, [&](const double*, const double* v) {
                                      return cplx(A({v[0], v[1], v[2]}) * M({v[3], v[4], v[5]}));
                                  }),
                                  Rep::XXi);
    const auto q = apply_Qeps(f2, cc, 0.1);
    CHECK(q.k() == 1);
    CHECK(q.max_abs() > 0.0);

    // Real, even data: the transform of Q is real and even.
    auto At = [&](const Vec3& x) { return A.fourier(x); };
    auto Mt = [&](const Vec3& x) { return M.fourier(x); };
    const auto qs = apply_Qeps(At, Mt, g, cc, 0.1);
    double imag = 0.0, odd = 0.0;
    const std::size_t n = 4;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) {
                const cplx z = qs[(i * n + j) * n + k];
                imag = std::max(imag, std::abs(z.imag()));
                if (i == 0 || j == 0 || k == 0) continue;  // no mirror node on the grid
                odd = std::max(odd, std::abs(z - qs[((n - i) * n + (n - j)) * n + (n - k)]));
            }
    CHECK(qs.max_abs() > 0.0);
    CHECK(imag <= 1e-10 * qs.max_abs());
    CHECK(odd <= 1e-10 * qs.max_abs());

    // Matches the xi-side operator with the s-integral cut at t / eps.
    auto cut = cc;
    cut.s_max = 10.0;
    const auto ref = collision::collide_xi(f2, cut);
    CHECK(max_abs_diff(q, ref) <= 1e-14 * ref.max_abs());

    // A binding s_max cut that doubling still moves is refused.
    CHECK_THROWS_AS(apply_Qeps(f2, cc, 0.01, 0.05), NumericalGuardError);
    CHECK_NOTHROW(apply_Qeps(f2, cc, 0.01, 60.0));

    const Grid slab_grid = phase::maxwellian_grid(4, 1e-8, 1, 8, 1.0);
    CHECK_THROWS_AS(apply_Qeps(Distribution(slab_grid, 2, Rep::XXi), cc, 0.1), UnsupportedError);
    CHECK_THROWS_AS(apply_Qeps(f2, cc, 0.0), ArgumentError);
}

TEST_CASE("Q^eps ladder: bounded norm, converging to Q^0") {
    const Grid g = phase::maxwellian_grid(4);
    collision::CollisionConfig cc;
    cc.pot = kernel::Potential::power_law(0.5, 2.0, 2.0);
    const collision::GaussianMixture a{{{0.5, {1.0, 0.0, 0.0}, {0.8, 0.9, 1.0}}, {0.4, {-1.0, 0.5, 0.0}, {0.9, 0.8, 1.0}}}};
    const auto M = collision::GaussianMixture::maxwellian();
    EpsLadder l = EpsLadder::geometric(1, 4, LadderOp::Qeps);
    const auto norms = scaling_ladder(a, M, g, cc, l);
    const auto [lo, hi] = std::minmax_element(norms.norms.begin(), norms.norms.end());
    CHECK(*hi < 2.0 * *lo);
    l.op = LadderOp::QepsMinusQ0;
    const auto diff = scaling_ladder(a, M, g, cc, l);
    for (std::size_t i = 1; i < diff.norms.size(); ++i) CHECK(diff.norms[i] < diff.norms[i - 1]);
    CHECK(diff.slope > 1.0);
    CHECK_THROWS_AS(scaling_ladder(a, M, g, cc, EpsLadder{}), ArgumentError);
}
