#include "qkinetic/collision.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <tuple>

#include "qkinetic/parallel.hpp"
#include "qkinetic/rng.hpp"

namespace qk::collision {

using phase::Distribution;
using phase::Grid;
using phase::Rep;

const char* rule_name(VStarRule r) {
    switch (r) {
        case VStarRule::GridSum: return "GridSum";
        case VStarRule::MonteCarlo: return "MonteCarlo";
        case VStarRule::Radon: return "Radon";
        case VStarRule::Deposit: return "Deposit";
    }
    return "?";
}

const char* interpolation_name(Interpolation i) {
    return i == Interpolation::Trilinear ? "Trilinear" : "AnalyticCallable";
}

void CollisionConfig::validate() const {
    if (n_omega < 8 || n_omega % 2 != 0)
        throw ArgumentError("collision: n_omega must be even and at least 8");
    if (vstar_rule == VStarRule::MonteCarlo) {
        if (mc_trials < 1000) throw ArgumentError("collision: MonteCarlo needs at least 1000 trials");
        if (!seed) throw ArgumentError("collision: MonteCarlo requires a seed");
    }
    if (line_nodes < 4) throw ArgumentError("collision: line_nodes must be at least 4");
    if (!(s_max > 0.0)) throw ArgumentError("collision: s_max must be positive");
    if (!(z_max > 0.0) || !std::isfinite(z_max)) throw ArgumentError("collision: z_max must be positive and finite");
    if (z_panels == 0 || z_nodes == 0) throw ArgumentError("collision: empty z rule");
}

std::pair<Vec3, Vec3> post_collision(const Vec3& v, const Vec3& u, const Vec3& omega) {
    const double p = dot(omega, u - v);
    return {v + p * omega, u - p * omega};
}

// ---------------------------------------------------------------------------
// Gaussian mixtures

GaussianMixture GaussianMixture::maxwellian(double mass, const Vec3& mean, double temperature) {
    if (!(temperature > 0.0)) throw ArgumentError("maxwellian: temperature must be positive");
    const double s = std::sqrt(temperature);
    const double amp = mass / std::pow(2.0 * kPi * temperature, 1.5);
    return GaussianMixture{{GaussianComponent{amp, mean, {s, s, s}}}};
}

double GaussianMixture::operator()(const Vec3& v) const {
    double out = 0.0;
    for (const auto& c : components) {
        double e = 0.0;
        for (int d = 0; d < 3; ++d) {
            const double t = (v[d] - c.center[d]) / c.sigma[d];
            e += t * t;
        }
        out += c.amplitude * std::exp(-0.5 * e);
    }
    return out;
}

double GaussianMixture::mass() const {
    double out = 0.0;
    for (const auto& c : components)
        out += c.amplitude * std::pow(2.0 * kPi, 1.5) * c.sigma[0] * c.sigma[1] * c.sigma[2];
    return out;
}

double GaussianMixture::radon(const Vec3& omega, double p) const {
    double out = 0.0;
    for (const auto& c : components) {
        double s2 = 0.0;
        for (int d = 0; d < 3; ++d) s2 += omega[d] * omega[d] * c.sigma[d] * c.sigma[d];
        const double m = c.amplitude * std::pow(2.0 * kPi, 1.5) * c.sigma[0] * c.sigma[1] * c.sigma[2];
        const double q = p - dot(omega, c.center);
        out += m / std::sqrt(2.0 * kPi * s2) * std::exp(-0.5 * q * q / s2);
    }
    return out;
}

cplx GaussianMixture::fourier(const Vec3& xi) const {
    cplx out = 0.0;
    for (const auto& c : components) {
        const double m = c.amplitude * std::pow(2.0 * kPi, 1.5) * c.sigma[0] * c.sigma[1] * c.sigma[2];
        double e = 0.0;
        for (int d = 0; d < 3; ++d) e += c.sigma[d] * c.sigma[d] * xi[d] * xi[d];
        out += m * std::exp(-0.5 * e) * std::polar(1.0, -dot(xi, c.center));
    }
    return out;
}

Distribution GaussianMixture::sample(const Grid& grid) const {
    if (grid.dim_x != 0 || grid.dim_v != 3) throw ArgumentError("GaussianMixture::sample: needs a homogeneous 3D grid");
    return Distribution::from_function(grid, 1, [this](const double*, const double* v) {
        return cplx((*this)({v[0], v[1], v[2]}), 0.0);
    });
}

// ---------------------------------------------------------------------------
// Velocity lattice helpers

namespace {

struct Lattice {
    std::size_t n = 0;
    double v0 = 0.0;
    double h = 0.0;

    explicit Lattice(const Grid& g) : n(g.n_v), v0(-g.L_v), h(g.h_v()) {}
    std::size_t points() const { return n * n * n; }
    std::size_t index(std::size_t i, std::size_t j, std::size_t k) const { return (i * n + j) * n + k; }
    Vec3 node(std::size_t a) const {
        const std::size_t k = a % n, j = (a / n) % n, i = a / (n * n);
        return {v0 + h * i, v0 + h * j, v0 + h * k};
    }
    std::array<long, 3> coords(std::size_t a) const {
        return {static_cast<long>(a / (n * n)), static_cast<long>((a / n) % n), static_cast<long>(a % n)};
    }
};

void require_velocity_input(const Distribution& f, const char* who) {
    if (f.rep() != Rep::XV || f.k() != 1 || f.grid().dim_v != 3)
        throw ArgumentError(std::string(who) + ": needs rep XV, k = 1 and three velocity axes");
}

std::size_t spatial_blocks(const Grid& g) {
    std::size_t out = 1;
    for (int d = 0; d < g.dim_x; ++d) out *= g.n_x;
    return out;
}

std::vector<double> real_block(const Distribution& f, std::size_t block, std::size_t m) {
    std::vector<double> out(m);
    for (std::size_t a = 0; a < m; ++a) out[a] = f[block * m + a].real();
    return out;
}

// Trilinear interpolation with zero extension outside the node range.
double trilinear(const double* F, const Lattice& lat, const Vec3& v) {
    std::size_t i0[3];
    double t1[3];
    const double top = static_cast<double>(lat.n - 1);
    for (int d = 0; d < 3; ++d) {
        const double t = (v[d] - lat.v0) / lat.h;
        if (!(t >= 0.0 && t <= top)) return 0.0;
        const std::size_t i = std::min(static_cast<std::size_t>(t), lat.n - 2);
        i0[d] = i;
        t1[d] = t - static_cast<double>(i);
    }
    double out = 0.0;
    for (int a = 0; a < 2; ++a) {
        const double wa = a ? t1[0] : 1.0 - t1[0];
        for (int b = 0; b < 2; ++b) {
            const double wb = wa * (b ? t1[1] : 1.0 - t1[1]);
            const std::size_t row = lat.index(i0[0] + a, i0[1] + b, i0[2]);
            out += wb * ((1.0 - t1[2]) * F[row] + t1[2] * F[row + 1]);
        }
    }
    return out;
}

// K(h omega . d) for every lattice difference d and sphere node, plus the
// angular sums Lambda(d) = sum_o w_o K.
struct PairTable {
    std::size_t n = 0, m = 0, n_omega = 0;
    double h = 0.0;
    const SphereRule* rule = nullptr;
    const kernel::Potential* pot = nullptr;
    std::vector<double> K;
    std::vector<double> lambda;

    PairTable(const Lattice& lat, const SphereRule& r, const kernel::Potential& p)
        : n(lat.n), m(2 * lat.n - 1), n_omega(r.size()), h(lat.h), rule(&r), pot(&p) {
        const std::size_t nd = m * m * m;
        K.assign(nd * n_omega, 0.0);
        lambda.assign(nd, 0.0);
        par::for_chunks(nd, 256, [&](std::size_t b, std::size_t e) {
            for (std::size_t di = b; di < e; ++di) {
                const Vec3 d = diff(di);
                double acc = 0.0;
                for (std::size_t o = 0; o < n_omega; ++o) {
                    const double k = pot->radial_kernel(dot(rule->nodes[o], d));
                    K[di * n_omega + o] = k;
                    acc += rule->weights[o] * k;
                }
                lambda[di] = acc;
            }
        });
    }
    std::size_t index(const std::array<long, 3>& va, const std::array<long, 3>& ub) const {
        const long off = static_cast<long>(n) - 1;
        return ((ub[0] - va[0] + off) * m + (ub[1] - va[1] + off)) * m + (ub[2] - va[2] + off);
    }
    Vec3 diff(std::size_t di) const {
        const long off = static_cast<long>(n) - 1;
        const long z = static_cast<long>(di % m) - off;
        const long y = static_cast<long>((di / m) % m) - off;
        const long x = static_cast<long>(di / (m * m)) - off;
        return {h * x, h * y, h * z};
    }
};

constexpr std::size_t kChunk = 16;

// GridSum on one velocity block. Nodal values Fn, Gn drive the loss term,
// fstar / gstar evaluate post-collision values.
template <class FStar, class GStar>
void gridsum_block(const Lattice& lat, const PairTable& tab, const std::vector<double>& Fn,
                   const std::vector<double>& Gn, const FStar& fstar, const GStar& gstar, double* gain,
                   double* loss) {
    const std::size_t M = lat.points();
    const SphereRule& rule = *tab.rule;
    const double h3 = lat.h * lat.h * lat.h;
    par::for_chunks(M, kChunk, [&](std::size_t b0, std::size_t e0) {
        for (std::size_t a = b0; a < e0; ++a) {
            const Vec3 va = lat.node(a);
            const auto ca = lat.coords(a);
            double g_acc = 0.0, l_acc = 0.0;
            for (std::size_t b = 0; b < M; ++b) {
                const auto cb = lat.coords(b);
                const std::size_t di = tab.index(ca, cb);
                l_acc += Gn[b] * tab.lambda[di];
                const Vec3 ub = lat.node(b);
                const Vec3 d = ub - va;
                const double* Krow = &tab.K[di * tab.n_omega];
                for (std::size_t o = 0; o < tab.n_omega; ++o) {
                    const double k = Krow[o];
                    if (k == 0.0) continue;
                    const Vec3& w = rule.nodes[o];
                    const double r = dot(w, d);
                    const Vec3 vs = va + r * w;
                    const Vec3 us = ub - r * w;
                    g_acc += rule.weights[o] * k * fstar(vs) * gstar(us);
                }
            }
            gain[a] = h3 * g_acc;
            loss[a] = h3 * Fn[a] * l_acc;
        }
    });
}

template <class FStar, class GStar>
void montecarlo_block(const Lattice& lat, const kernel::Potential& pot, const std::vector<double>& Fn,
                      const FStar& fstar, const GStar& gstar, std::size_t trials, std::uint64_t seed,
                      std::uint64_t stream0, double* gain, double* loss) {
    const std::size_t M = lat.points();
    const double lo = lat.v0, width = lat.h * static_cast<double>(lat.n);
    const double scale = width * width * width * 4.0 * kPi / static_cast<double>(trials);
    par::for_chunks(M, kChunk, [&](std::size_t b0, std::size_t e0) {
        for (std::size_t a = b0; a < e0; ++a) {
            auto eng = rng::engine(seed, stream0 + a);
            std::uniform_real_distribution<double> U(0.0, 1.0);
            const Vec3 va = lat.node(a);
            double g_acc = 0.0, l_acc = 0.0;
            for (std::size_t t = 0; t < trials; ++t) {
                const Vec3 u{lo + width * U(eng), lo + width * U(eng), lo + width * U(eng)};
                const Vec3 w = unit_from_angles(2.0 * U(eng) - 1.0, 2.0 * kPi * U(eng));
                const double r = dot(w, u - va);
                const double k = pot.radial_kernel(r);
                if (k == 0.0) continue;
                g_acc += k * fstar(va + r * w) * gstar(u - r * w);
                l_acc += k * gstar(u);
            }
            gain[a] = scale * g_acc;
            loss[a] = scale * Fn[a] * l_acc;
        }
    });
}

// Discrete-velocity replacement of one collision. The exact post-collision
// pair (v*, u*) keeps the centre c = (v + u) / 2, so every grid node p has a
// grid partner 2c - p with the same momentum. Two such pairs are chosen near
// v*, one on each side of the energy shell |p - c| = |v - u| / 2, and mixed
// with weights lambda, 1 - lambda that restore the energy. Everything is in
// integer lattice coordinates, so the shell test is exact.
struct Reaction {
    std::size_t v[2] = {0, 0}, u[2] = {0, 0};
    double lambda = 1.0;  // weight of pair 0; pair 1 is unused when lambda == 1
};

bool make_reaction(const Lattice& lat, const std::array<long, 3>& ca, const std::array<long, 3>& cb, const Vec3& w,
                   double r, Reaction& out) {
    const long n = static_cast<long>(lat.n);
    long c2[3], lo[3];
    double t[3];
    long D2 = 0;
    for (int d = 0; d < 3; ++d) {
        c2[d] = ca[d] + cb[d];
        const long dd = cb[d] - ca[d];
        D2 += dd * dd;
        t[d] = static_cast<double>(ca[d]) + r * w[d] / lat.h;
        if (!(t[d] >= 0.0 && t[d] <= static_cast<double>(n - 1))) return false;
        lo[d] = static_cast<long>(std::floor(t[d]));
    }
    // Best candidate inside (e2 <= D2) and outside (e2 >= D2) the shell,
    // nearest to v*. The 2x2x2 cell is tried first, then a 4x4x4 block.
    for (int reach : {0, 1}) {
        long in_e = -1, out_e = -1;
        double in_d = 0.0, out_d = 0.0;
        long in_p[3] = {0, 0, 0}, out_p[3] = {0, 0, 0};
        for (long i = lo[0] - reach; i <= lo[0] + 1 + reach; ++i)
            for (long j = lo[1] - reach; j <= lo[1] + 1 + reach; ++j)
                for (long k = lo[2] - reach; k <= lo[2] + 1 + reach; ++k) {
                    const long p[3] = {i, j, k};
                    long e2 = 0;
                    double dist = 0.0;
                    bool ok = true;
                    for (int d = 0; d < 3; ++d) {
                        const long q = c2[d] - p[d];
                        if (p[d] < 0 || p[d] >= n || q < 0 || q >= n) ok = false;
                        const long e = 2 * p[d] - c2[d];
                        e2 += e * e;
                        dist += (static_cast<double>(p[d]) - t[d]) * (static_cast<double>(p[d]) - t[d]);
                    }
                    if (!ok) continue;
                    if (e2 <= D2 && (in_e < 0 || dist < in_d)) {
                        in_e = e2, in_d = dist;
                        std::copy(p, p + 3, in_p);
                    }
                    if (e2 >= D2 && (out_e < 0 || dist < out_d)) {
                        out_e = e2, out_d = dist;
                        std::copy(p, p + 3, out_p);
                    }
                }
        if (in_e < 0 || out_e < 0) continue;
        auto set = [&](int s, const long* p) {
            out.v[s] = lat.index(p[0], p[1], p[2]);
            out.u[s] = lat.index(c2[0] - p[0], c2[1] - p[1], c2[2] - p[2]);
        };
        if (in_e == D2 || out_e == D2) {
            set(0, in_e == D2 ? in_p : out_p);
            out.lambda = 1.0;
        } else {
            set(0, in_p);
            set(1, out_p);
            out.lambda = static_cast<double>(out_e - D2) / static_cast<double>(out_e - in_e);
        }
        return true;
    }
    return false;
}

double safe_log(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

// Q_n = 1/2 h^3 sum_{a,b,o} w_o K (P' - f_a g_b) (delta_na - sum_s lambda_s delta_{n v_s})
// with P' the lambda-weighted geometric mean of the replacement products
// f_{v_s} g_{u_s}. Each term moves mass from a to the v_s, so mass is
// conserved for any inputs. With f = g the pair (b, a) gives the mirrored
// reaction, so the loop runs over a < b and also updates b and the u_s; then
// momentum and energy are conserved, log-quadratic (Maxwellian) data is an
// exact equilibrium, and sum_n Q_n log f_n >= 0 term by term. Antipodal
// sphere nodes give the same reaction and are folded into one.
void deposit_block(const Lattice& lat, const PairTable& tab, const std::vector<double>& F,
                   const std::vector<double>& G, bool symmetric, double* Q) {
    const std::size_t M = lat.points();
    std::fill(Q, Q + M, 0.0);
    std::vector<double> lF(M), lG(M);
    for (std::size_t a = 0; a < M; ++a) {
        lF[a] = safe_log(F[a]);
        lG[a] = safe_log(G[a]);
    }
    const SphereRule& rule = *tab.rule;
    std::vector<std::size_t> half;
    for (std::size_t o = 0; o < rule.size(); ++o)
        if (rule.antipode(o) > o) half.push_back(o);
    const double pref = 0.5 * lat.h * lat.h * lat.h;

    const std::size_t chunk = std::max<std::size_t>(1, M / 64);
    const std::size_t n_chunks = (M + chunk - 1) / chunk;
    std::vector<std::vector<double>> parts(n_chunks);
    par::for_chunks(M, chunk, [&](std::size_t b0, std::size_t e0) {
        std::vector<double> acc(M, 0.0);
        Reaction re;
        for (std::size_t a = b0; a < e0; ++a) {
            const auto ca = lat.coords(a);
            const Vec3 va = lat.node(a);
            for (std::size_t b = symmetric ? a + 1 : 0; b < M; ++b) {
                if (b == a) continue;
                const double pre = F[a] * G[b];
                const auto cb = lat.coords(b);
                const std::size_t di = tab.index(ca, cb);
                const double* Krow = &tab.K[di * tab.n_omega];
                const Vec3 d = lat.node(b) - va;
                for (std::size_t o : half) {
                    const double k = Krow[o];
                    if (k == 0.0) continue;
                    const Vec3& w = rule.nodes[o];
                    if (!make_reaction(lat, ca, cb, w, dot(w, d), re)) continue;
                    const double lam = re.lambda;
                    double post;
                    if (lam == 1.0) {
                        post = F[re.v[0]] * G[re.u[0]];
                    } else {
                        post = std::exp(lam * (lF[re.v[0]] + lG[re.u[0]]) +
                                        (1.0 - lam) * (lF[re.v[1]] + lG[re.u[1]]));
                    }
                    const double c = pref * 2.0 * rule.weights[o] * k * (pre - post);
                    if (c == 0.0) continue;
                    acc[a] -= c;
                    acc[re.v[0]] += lam * c;
                    if (lam != 1.0) acc[re.v[1]] += (1.0 - lam) * c;
                    if (symmetric) {
                        acc[b] -= c;
                        acc[re.u[0]] += lam * c;
                        if (lam != 1.0) acc[re.u[1]] += (1.0 - lam) * c;
                    }
                }
            }
        }
        parts[b0 / chunk] = std::move(acc);
    });
    for (const auto& p : parts)
        for (std::size_t i = 0; i < M; ++i) Q[i] += p[i];
}

const SphereRule& cached_rule(std::size_t n_omega) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<SphereRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n_omega];
    if (!slot) slot = std::make_unique<SphereRule>(SphereRule::with_count(n_omega));
    return *slot;
}

bool same_values(const Distribution& f, const Distribution& g) {
    return &f == &g || f.values() == g.values();
}

Distribution real_distribution(const Grid& grid, const std::vector<double>& v) {
    Distribution out(grid, 1, Rep::XV);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid inputs

CollisionParts collide_parts(const Distribution& f, const Distribution& g, const CollisionConfig& cfg) {
    cfg.validate();
    require_velocity_input(f, "collide");
    phase::require_compatible(f, g, "collide");
    if (cfg.vstar_rule == VStarRule::Radon)
        throw ArgumentError("collide: the Radon rule needs Gaussian mixture inputs");
    if (cfg.interpolation == Interpolation::AnalyticCallable)
        throw ArgumentError("collide: AnalyticCallable interpolation needs callable inputs");

    const Grid& grid = f.grid();
    const Lattice lat(grid);
    const std::size_t M = lat.points();
    const std::size_t blocks = spatial_blocks(grid);
    std::vector<double> gain(M * blocks), loss(M * blocks);

    if (cfg.vstar_rule == VStarRule::MonteCarlo) {
        for (std::size_t s = 0; s < blocks; ++s) {
            const auto F = real_block(f, s, M), G = real_block(g, s, M);
            auto fs = [&](const Vec3& v) { return trilinear(F.data(), lat, v); };
            auto gs = [&](const Vec3& v) { return trilinear(G.data(), lat, v); };
            montecarlo_block(lat, cfg.pot, F, fs, gs, cfg.mc_trials, *cfg.seed, s * M, &gain[s * M], &loss[s * M]);
        }
    } else {
        const SphereRule& rule = cached_rule(cfg.n_omega);
        const PairTable tab(lat, rule, cfg.pot);
        const bool sym = same_values(f, g);
        std::vector<double> q(M);
        for (std::size_t s = 0; s < blocks; ++s) {
            const auto F = real_block(f, s, M), G = real_block(g, s, M);
            if (cfg.vstar_rule == VStarRule::GridSum) {
                auto fs = [&](const Vec3& v) { return trilinear(F.data(), lat, v); };
                auto gs = [&](const Vec3& v) { return trilinear(G.data(), lat, v); };
                gridsum_block(lat, tab, F, G, fs, gs, &gain[s * M], &loss[s * M]);
            } else {
                deposit_block(lat, tab, F, G, sym, q.data());
                const double h3 = lat.h * lat.h * lat.h;
                for (std::size_t a = 0; a < M; ++a) {
                    double acc = 0.0;
                    const auto ca = lat.coords(a);
                    for (std::size_t b = 0; b < M; ++b) acc += G[b] * tab.lambda[tab.index(ca, lat.coords(b))];
                    loss[s * M + a] = h3 * F[a] * acc;
                    gain[s * M + a] = q[a] + loss[s * M + a];
                }
            }
        }
    }
    return {real_distribution(grid, gain), real_distribution(grid, loss)};
}

Distribution collide(const Distribution& f, const Distribution& g, const CollisionConfig& cfg) {
    if (cfg.vstar_rule != VStarRule::Deposit) return collide_parts(f, g, cfg).total();
    cfg.validate();
    require_velocity_input(f, "collide");
    phase::require_compatible(f, g, "collide");
    if (cfg.interpolation == Interpolation::AnalyticCallable)
        throw ArgumentError("collide: AnalyticCallable interpolation needs callable inputs");
    const Grid& grid = f.grid();
    const Lattice lat(grid);
    const std::size_t M = lat.points();
    const std::size_t blocks = spatial_blocks(grid);
    const PairTable tab(lat, cached_rule(cfg.n_omega), cfg.pot);
    const bool sym = same_values(f, g);
    std::vector<double> q(M * blocks);
    for (std::size_t s = 0; s < blocks; ++s)
        deposit_block(lat, tab, real_block(f, s, M), real_block(g, s, M), sym, &q[s * M]);
    return real_distribution(grid, q);
}

Distribution loss_frequency(const Distribution& g, const CollisionConfig& cfg) {
    cfg.validate();
    require_velocity_input(g, "loss_frequency");
    const Grid& grid = g.grid();
    const Lattice lat(grid);
    const std::size_t M = lat.points();
    const std::size_t blocks = spatial_blocks(grid);
    const PairTable tab(lat, cached_rule(cfg.n_omega), cfg.pot);
    const double h3 = lat.h * lat.h * lat.h;
    std::vector<double> nu(M * blocks);
    for (std::size_t s = 0; s < blocks; ++s) {
        const auto G = real_block(g, s, M);
        par::for_chunks(M, kChunk, [&](std::size_t b0, std::size_t e0) {
            for (std::size_t a = b0; a < e0; ++a) {
                const auto ca = lat.coords(a);
                double acc = 0.0;
                for (std::size_t b = 0; b < M; ++b) acc += G[b] * tab.lambda[tab.index(ca, lat.coords(b))];
                nu[s * M + a] = h3 * acc;
            }
        });
    }
    return real_distribution(grid, nu);
}

// ---------------------------------------------------------------------------
// Callable inputs

CollisionParts collide_parts(const VelocityFn& f, const VelocityFn& g, const Grid& grid, const CollisionConfig& cfg) {
    cfg.validate();
    grid.validate();
    if (grid.dim_x != 0 || grid.dim_v != 3) throw ArgumentError("collide: callable inputs need a homogeneous 3D grid");
    if (!f || !g) throw ArgumentError("collide: empty callable");
    const Lattice lat(grid);
    const std::size_t M = lat.points();
    std::vector<double> F(M), G(M);
    for (std::size_t a = 0; a < M; ++a) {
        F[a] = f(lat.node(a));
        G[a] = g(lat.node(a));
    }
    if (cfg.vstar_rule == VStarRule::Radon)
        throw ArgumentError("collide: the Radon rule needs Gaussian mixture inputs");
    if (cfg.vstar_rule == VStarRule::Deposit) {
        CollisionConfig c = cfg;
        c.interpolation = Interpolation::Trilinear;
        return collide_parts(real_distribution(grid, F), real_distribution(grid, G), c);
    }
    std::vector<double> gain(M), loss(M);
    if (cfg.vstar_rule == VStarRule::MonteCarlo) {
        montecarlo_block(lat, cfg.pot, F, f, g, cfg.mc_trials, *cfg.seed, 0, gain.data(), loss.data());
    } else {
        const PairTable tab(lat, cached_rule(cfg.n_omega), cfg.pot);
        gridsum_block(lat, tab, F, G, f, g, gain.data(), loss.data());
    }
    return {real_distribution(grid, gain), real_distribution(grid, loss)};
}

Distribution collide(const VelocityFn& f, const VelocityFn& g, const Grid& grid, const CollisionConfig& cfg) {
    return collide_parts(f, g, grid, cfg).total();
}

// ---------------------------------------------------------------------------
// Radon rule for Gaussian mixtures

namespace {

// int K(r) exp(-(r - r0)^2 / (2 w^2)) dr, split at the kinks of K.
double gaussian_line(const kernel::Potential& pot, const Rule1D& ref, double r0, double w) {
    const double lo = r0 - 9.0 * w, hi = r0 + 9.0 * w;
    std::vector<double> cuts{lo, hi, 0.0};
    if (const auto* b = std::get_if<kernel::BumpWindow>(&pot.kind())) {
        for (double c : {0.5 * b->c1, b->c1, b->c2, 2.0 * b->c2}) {
            cuts.push_back(c);
            cuts.push_back(-c);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    double out = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = std::max(cuts[i], lo), b = std::min(cuts[i + 1], hi);
        if (!(b > a)) continue;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        double acc = 0.0;
        for (std::size_t j = 0; j < ref.x.size(); ++j) {
            const double r = mid + half * ref.x[j];
            const double k = pot.radial_kernel(r);
            if (k == 0.0) continue;
            const double t = (r - r0) / w;
            acc += ref.w[j] * k * std::exp(-0.5 * t * t);
        }
        out += half * acc;
    }
    return out;
}

}  // namespace

CollisionParts collide_parts(const GaussianMixture& f, const GaussianMixture& g, const Grid& grid,
                             const CollisionConfig& cfg) {
    cfg.validate();
    grid.validate();
    if (grid.dim_x != 0 || grid.dim_v != 3) throw ArgumentError("collide: Radon rule needs a homogeneous 3D grid");
    const Lattice lat(grid);
    const std::size_t M = lat.points();
    const SphereRule& rule = cached_rule(cfg.n_omega);
    const Rule1D ref = gauss_legendre(cfg.line_nodes);
    std::vector<double> gain(M), loss(M);
    par::for_chunks(M, kChunk, [&](std::size_t b0, std::size_t e0) {
        for (std::size_t a = b0; a < e0; ++a) {
            const Vec3 v = lat.node(a);
            double g_acc = 0.0, l_acc = 0.0;
            for (std::size_t o = 0; o < rule.size(); ++o) {
                const Vec3& w = rule.nodes[o];
                const double t = dot(w, v);
                // Gain: the plane through v orthogonal to omega carries g at u*,
                // the line v + r omega carries f at v*.
                double line = 0.0;
                for (const auto& c : f.components) {
                    double A = 0.0, B = 0.0, C = 0.0;
                    for (int d = 0; d < 3; ++d) {
                        const double is2 = 1.0 / (c.sigma[d] * c.sigma[d]);
                        const double q = v[d] - c.center[d];
                        A += w[d] * w[d] * is2;
                        B += w[d] * q * is2;
                        C += q * q * is2;
                    }
                    const double amp = c.amplitude * std::exp(-0.5 * (C - B * B / A));
                    line += amp * gaussian_line(cfg.pot, ref, -B / A, 1.0 / std::sqrt(A));
                }
                g_acc += rule.weights[o] * g.radon(w, t) * line;
                // Loss: int K(r) R_g(omega, omega . v + r) dr.
                double lacc = 0.0;
                for (const auto& c : g.components) {
                    double s2 = 0.0;
                    for (int d = 0; d < 3; ++d) s2 += w[d] * w[d] * c.sigma[d] * c.sigma[d];
                    const double m = c.amplitude * std::pow(2.0 * kPi, 1.5) * c.sigma[0] * c.sigma[1] * c.sigma[2];
                    const double s = std::sqrt(s2);
                    lacc += m / (std::sqrt(2.0 * kPi) * s) * gaussian_line(cfg.pot, ref, dot(w, c.center) - t, s);
                }
                l_acc += rule.weights[o] * lacc;
            }
            gain[a] = g_acc;
            loss[a] = f(v) * l_acc;
        }
    });
    return {real_distribution(grid, gain), real_distribution(grid, loss)};
}

Distribution collide(const GaussianMixture& f, const GaussianMixture& g, const Grid& grid,
                     const CollisionConfig& cfg) {
    return collide_parts(f, g, grid, cfg).total();
}

// ---------------------------------------------------------------------------
// xi-side operator

namespace {

// E(kappa) = int_0^R r |phi_hat(r)|^2 e^{i kappa r} dr on kappa in [0, kmax],
// stored with its kappa-derivative for cubic Hermite interpolation.
class SpectralTable {
public:
    SpectralTable(const kernel::Potential& pot, double kmax) : pot_(pot) {
        dk_ = 0.05;
        count_ = static_cast<std::size_t>(std::ceil(kmax / dk_)) + 2;
        const Rule1D r = radial_rule(pot, kmax);
        val_.assign(count_, 0.0);
        der_.assign(count_, 0.0);
        par::for_chunks(count_, 32, [&](std::size_t b, std::size_t e) {
            std::vector<cplx> v(e - b, 0.0), dv(e - b, 0.0);
            for (std::size_t j = 0; j < r.x.size(); ++j) {
                const double x = r.x[j];
                const double wk = r.w[j] * x * pot.profile_sq(x);
                if (wk == 0.0) continue;
                cplx ph = std::polar(1.0, dk_ * static_cast<double>(b) * x);
                const cplx step = std::polar(1.0, dk_ * x);
                for (std::size_t i = 0; i < e - b; ++i) {
                    v[i] += wk * ph;
                    dv[i] += wk * x * ph;
                    ph *= step;
                }
            }
            for (std::size_t i = 0; i < e - b; ++i) {
                val_[b + i] = v[i];
                der_[b + i] = cplx(0.0, 1.0) * dv[i];
            }
        });
    }

    double kmax() const { return dk_ * static_cast<double>(count_ - 2); }

    cplx operator()(double kappa) const {
        const bool neg = kappa < 0.0;
        const double k = std::abs(kappa) / dk_;
        std::size_t i = static_cast<std::size_t>(k);
        if (i + 1 >= count_) throw ArgumentError("collide_xi: kappa outside the tabulated range");
        const double t = k - static_cast<double>(i);
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        const cplx out = h00 * val_[i] + h10 * dk_ * der_[i] + h01 * val_[i + 1] + h11 * dk_ * der_[i + 1];
        return neg ? std::conj(out) : out;
    }

    // int_0^a r |phi_hat|^2 e^{i kappa r} dr
    cplx head(double kappa, double a) const {
        static const Rule1D ref = gauss_legendre(32, 0.0, 1.0);
        cplx out = 0.0;
        for (std::size_t j = 0; j < ref.x.size(); ++j) {
            const double x = a * ref.x[j];
            out += ref.w[j] * x * pot_.profile_sq(x) * std::polar(1.0, kappa * x);
        }
        return a * out;
    }

private:
    static Rule1D radial_rule(const kernel::Potential& pot, double kmax) {
        std::vector<double> cuts;
        double width = std::min(0.25, 1.5 / std::max(kmax, 1.0));
        if (const auto* b = std::get_if<kernel::BumpWindow>(&pot.kind())) {
            cuts = {0.5 * b->c1, b->c1, b->c2, 2.0 * b->c2};
            width = std::min(width, 0.05 * b->c1);
        } else {
            const double R = std::min(pot.support_radius(1e-12), 400.0);
            const double c = std::get<kernel::PowerLaw>(pot.kind()).cutoff;
            // Geometric panels resolve the algebraic behaviour at the origin.
            cuts.push_back(0.0);
            for (double x = std::min(1.0, c) * std::ldexp(1.0, -20); x < std::min(1.0, c); x *= 2.0) cuts.push_back(x);
            cuts.push_back(std::min(1.0, c));
            cuts.push_back(R);
        }
        Rule1D out;
        const Rule1D ref = gauss_legendre(12);
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double a = cuts[i], b = cuts[i + 1];
            const bool fine = (i + 2 == cuts.size()) || pot.is_bump();
            const std::size_t panels =
                fine ? std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / width))) : 1;
            const double pw = (b - a) / static_cast<double>(panels);
            for (std::size_t p = 0; p < panels; ++p) {
                const double lo = a + pw * p;
                for (std::size_t j = 0; j < ref.x.size(); ++j) {
                    out.x.push_back(lo + 0.5 * pw * (ref.x[j] + 1.0));
                    out.w.push_back(0.5 * pw * ref.w[j]);
                }
            }
        }
        return out;
    }

    kernel::Potential pot_;
    double dk_ = 0.05;
    std::size_t count_ = 0;
    std::vector<cplx> val_, der_;
};

std::shared_ptr<const SpectralTable> spectral_table(const kernel::Potential& pot, double kmax) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const SpectralTable>> cache;
    const double rounded = 8.0 * std::ceil(kmax / 8.0);
    const std::string key = pot.describe() + "|" + std::to_string(rounded);
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[key];
    if (!slot) slot = std::make_shared<const SpectralTable>(pot, rounded);
    return slot;
}

void require_spectral(const Distribution& f, int k, const char* who) {
    if (f.rep() != Rep::XXi || f.k() != k || f.grid().dim_x != 0 || f.grid().dim_v != 3)
        throw ArgumentError(std::string(who) + ": needs a homogeneous XXi input with three velocity axes");
}

cplx trilinear_complex(const cplx* F, const Lattice& lat, const Vec3& v) {
    std::size_t i0[3];
    double t1[3];
    const double top = static_cast<double>(lat.n - 1);
    for (int d = 0; d < 3; ++d) {
        const double t = (v[d] - lat.v0) / lat.h;
        if (!(t >= 0.0 && t <= top)) return 0.0;
        const std::size_t i = std::min(static_cast<std::size_t>(t), lat.n - 2);
        i0[d] = i;
        t1[d] = t - static_cast<double>(i);
    }
    cplx out = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            const double wab = (a ? t1[0] : 1.0 - t1[0]) * (b ? t1[1] : 1.0 - t1[1]);
            const std::size_t row = lat.index(i0[0] + a, i0[1] + b, i0[2]);
            out += wab * ((1.0 - t1[2]) * F[row] + t1[2] * F[row + 1]);
        }
    return out;
}

Lattice dual_lattice(const Grid& grid) {
    Lattice lat(grid);
    lat.h = grid.dk_v();
    lat.v0 = -static_cast<double>(grid.n_v / 2) * lat.h;
    return lat;
}

}  // namespace

Distribution collide_xi(const SpectralFn& g_tilde, const SpectralFn& h_tilde, const Grid& grid,
                        const CollisionConfig& cfg, double xi_cut) {
    cfg.validate();
    grid.validate();
    if (grid.dim_x != 0 || grid.dim_v != 3) throw ArgumentError("collide_xi: needs a homogeneous 3D grid");
    if (!g_tilde || !h_tilde) throw ArgumentError("collide_xi: empty callable");
    const Lattice dual = dual_lattice(grid);
    const std::size_t M = dual.points();
    const SphereRule& rule = cached_rule(cfg.n_omega);
    const Rule1D zr = composite_gauss_legendre(cfg.z_nodes, cfg.z_panels, 0.0, cfg.z_max);
    const std::size_t nz = zr.x.size(), no = rule.size();

    double ximax = 0.0;
    for (std::size_t a = 0; a < M; ++a) {
        const double r = norm(dual.node(a));
        if (r <= xi_cut) ximax = std::max(ximax, r);
    }
    const auto table = spectral_table(cfg.pot, ximax + cfg.z_max + 1.0);
    const SpectralTable& E = *table;
    const bool truncated = std::isfinite(cfg.s_max);

    // h~(z omega) and the kappa = -+z kernel values do not depend on xi.
    std::vector<cplx> H(no * nz);
    for (std::size_t o = 0; o < no; ++o)
        for (std::size_t j = 0; j < nz; ++j) H[o * nz + j] = h_tilde(zr.x[j] * rule.nodes[o]);
    auto Es = [&](double kappa, double z) {
        cplx e = E(kappa);
        if (truncated) e -= E.head(kappa, z / cfg.s_max);
        return e;
    };

    Distribution out(grid, 1, Rep::XXi);
    const double scale = cfg.pot.prefactor() / kPi;
    par::for_chunks(M, 4, [&](std::size_t b0, std::size_t e0) {
        for (std::size_t a = b0; a < e0; ++a) {
            const Vec3 xi = dual.node(a);
            if (norm(xi) > xi_cut) continue;
            cplx acc = 0.0;
            for (std::size_t o = 0; o < no; ++o) {
                const Vec3& w = rule.nodes[o];
                const double c = dot(xi, w);
                cplx inner = 0.0;
                for (std::size_t j = 0; j < nz; ++j) {
                    const double z = zr.x[j];
                    const cplx gh = g_tilde(xi - z * w) * H[o * nz + j];
                    if (gh == 0.0) continue;
                    cplx pairs = 0.0;
                    for (int alpha : {1, -1})
                        for (int sigma : {1, -1}) {
                            const double kappa = 0.5 * (sigma - alpha) * c - sigma * z;
                            pairs -= static_cast<double>(alpha * sigma) * Es(kappa, z);
                        }
                    inner += zr.w[j] * gh * pairs;
                }
                acc += rule.weights[o] * inner;
            }
            out[a] = scale * acc;
        }
    });
    return out;
}

Distribution collide_xi(const Distribution& g_tilde, const Distribution& h_tilde, const CollisionConfig& cfg,
                        double xi_cut) {
    require_spectral(g_tilde, 1, "collide_xi");
    phase::require_compatible(g_tilde, h_tilde, "collide_xi");
    const Lattice dual = dual_lattice(g_tilde.grid());
    const cplx* G = g_tilde.values().data();
    const cplx* H = h_tilde.values().data();
    return collide_xi([&](const Vec3& x) { return trilinear_complex(G, dual, x); },
                      [&](const Vec3& x) { return trilinear_complex(H, dual, x); }, g_tilde.grid(), cfg, xi_cut);
}

Distribution collide_xi(const Distribution& f2, const CollisionConfig& cfg, double xi_cut) {
    require_spectral(f2, 2, "collide_xi");
    const Grid& grid = f2.grid();
    const std::size_t M = grid.n_v * grid.n_v * grid.n_v;
    std::size_t i0 = 0, j0 = 0;
    double peak = 0.0;
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j)
            if (std::abs(f2[i * M + j]) > peak) {
                peak = std::abs(f2[i * M + j]);
                i0 = i;
                j0 = j;
            }
    Distribution g(grid, 1, Rep::XXi), h(grid, 1, Rep::XXi);
    if (peak == 0.0) return g;
    const cplx pivot = f2[i0 * M + j0];
    for (std::size_t i = 0; i < M; ++i) g[i] = f2[i * M + j0];
    for (std::size_t j = 0; j < M; ++j) h[j] = f2[i0 * M + j] / pivot;
    double resid = 0.0;
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j) resid = std::max(resid, std::abs(f2[i * M + j] - g[i] * h[j]));
    if (resid > 1e-10 * peak)
        throw UnsupportedError("collide_xi: two-particle input is not a tensor product g (x) h");
    return collide_xi(g, h, cfg, xi_cut);
}

// ---------------------------------------------------------------------------
// Conservation diagnostics

double ConservationDefect::relative_mass() const { return mass_scale > 0 ? std::abs(mass) / mass_scale : 0.0; }
double ConservationDefect::relative_momentum() const {
    return momentum_scale > 0 ? norm(momentum) / momentum_scale : 0.0;
}
double ConservationDefect::relative_energy() const {
    return energy_scale > 0 ? std::abs(energy) / energy_scale : 0.0;
}
double ConservationDefect::max_relative() const {
    return std::max({relative_mass(), relative_momentum(), relative_energy()});
}

std::string ConservationDefect::csv() const {
    std::ostringstream os;
    os << "quantity,value,scale,relative\n";
    os << "mass," << format_double(mass) << "," << format_double(mass_scale) << ","
       << format_double(relative_mass()) << "\n";
    const char* names[3] = {"px", "py", "pz"};
    for (int d = 0; d < 3; ++d)
        os << names[d] << "," << format_double(momentum[d]) << "," << format_double(momentum_scale) << ","
           << format_double(momentum_scale > 0 ? std::abs(momentum[d]) / momentum_scale : 0.0) << "\n";
    os << "energy," << format_double(energy) << "," << format_double(energy_scale) << ","
       << format_double(relative_energy()) << "\n";
    return os.str();
}

ConservationDefect moments(const Distribution& q) {
    require_velocity_input(q, "moments");
    const Lattice lat(q.grid());
    const std::size_t M = lat.points();
    const double dm = q.cell_measure();
    ConservationDefect out;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double x = q[i].real();
        const Vec3 v = lat.node(i % M);
        const double v2 = dot(v, v);
        out.mass += x;
        for (int d = 0; d < 3; ++d) out.momentum[d] += v[d] * x;
        out.energy += v2 * x;
        out.mass_scale += std::abs(x);
        out.momentum_scale += std::sqrt(v2) * std::abs(x);
        out.energy_scale += v2 * std::abs(x);
    }
    out.mass *= dm;
    out.momentum = dm * out.momentum;
    out.energy *= dm;
    out.mass_scale *= dm;
    out.momentum_scale *= dm;
    out.energy_scale *= dm;
    return out;
}

ConservationDefect conservation_defect(const Distribution& f, const CollisionConfig& cfg) {
    return moments(collide(f, f, cfg));
}

}  // namespace qk::collision
