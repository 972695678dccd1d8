#include "qkinetic/bbgky.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>

#include "qkinetic/fft.hpp"
#include "qkinetic/parallel.hpp"
#include "qkinetic/rng.hpp"

namespace qk::bbgky {

using phase::Distribution;
using phase::Grid;
using phase::Rep;
using phase::cplx;

// ---------------------------------------------------------------------------
// Position-space potential

namespace {

constexpr double kTableRadius = 256.0;
constexpr std::size_t kSineLog2 = 19;  // k-samples of the sine/cosine sums
constexpr double kSineDk = 1.0 / 256.0;

double table_lookup(const std::vector<double>& t, double dr, double r) {
    const double x = std::abs(r) / dr;
    const std::size_t i = static_cast<std::size_t>(x);
    if (i + 1 >= t.size()) return 0.0;
    const double f = x - static_cast<double>(i);
    return (1.0 - f) * t[i] + f * t[i + 1];
}

}  // namespace

PositionPotential::PositionPotential(const kernel::Potential& pot) {
    // Trapezoid sums over k_j = j dk (j < N) evaluated at r_m = m pi / (N dk)
    // through one length-2N FFT each:
    //   phi_3(r) = (2 pi^2 r)^-1 int k phi_hat(k) sin(k r) dk
    //   phi_1(t) = pi^-1 int phi_hat(k) cos(k t) dk
    const std::size_t N = std::size_t{1} << kSineLog2;
    const std::size_t M = 2 * N;
    std::vector<fft::cplx> s(M, 0.0), c(M, 0.0);
    double k2sum = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        const double k = kSineDk * static_cast<double>(j);
        const double w = (j == 0 ? 0.5 : 1.0) * kSineDk;
        const double p = pot.profile(k);
        s[j] = w * k * p;
        c[j] = w * p;
        k2sum += w * k * k * p;
    }
    fft::transform_axes(s, {M}, {0}, +1);
    fft::transform_axes(c, {M}, {0}, +1);
    dr_ = kPi / (static_cast<double>(N) * kSineDk);
    const std::size_t count = static_cast<std::size_t>(kTableRadius / dr_) + 2;
    v3_.resize(count);
    v1_.resize(count);
    for (std::size_t m = 0; m < count; ++m) {
        const double r = dr_ * static_cast<double>(m);
        v3_[m] = m == 0 ? k2sum / (2.0 * kPi * kPi) : s[m].imag() / (2.0 * kPi * kPi * r);
        v1_[m] = c[m].real() / kPi;
    }
}

const PositionPotential& PositionPotential::cached(const kernel::Potential& pot) {
    static std::mutex mu;
    static std::map<std::string, std::unique_ptr<PositionPotential>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[pot.describe()];
    if (!slot) slot = std::make_unique<PositionPotential>(pot);
    return *slot;
}

double PositionPotential::radial3(double r) const { return table_lookup(v3_, dr_, r); }
double PositionPotential::radial1(double t) const { return table_lookup(v1_, dr_, t); }

std::size_t min_spatial_points(double eps) {
    if (!(eps > 0.0)) throw ArgumentError("bbgky: eps must be positive");
    return static_cast<std::size_t>(std::ceil(8.0 / eps - 1e-9));
}

// ---------------------------------------------------------------------------
// Grid operators

namespace {

void check_eps_grid(const Grid& g, double eps, const char* who) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError(std::string(who) + ": eps must be positive");
    if (g.dim_x > 0 && g.n_x < min_spatial_points(eps)) {
        throw NumericalGuardError(std::string(who) + ": n_x = " + std::to_string(g.n_x) +
                                  " does not resolve the eps scale (need n_x >= " +
                                  std::to_string(min_spatial_points(eps)) + ")");
    }
}

// Embeds the first `dim` entries of c into R^3.
Vec3 embed(const double* c, int dim) {
    Vec3 out{0.0, 0.0, 0.0};
    for (int d = 0; d < dim; ++d) out[d] = c[d];
    return out;
}

}  // namespace

Distribution apply_A(const Distribution& f2, const kernel::Potential& pot, double eps) {
    if (f2.k() != 2 || f2.rep() != Rep::XXi) throw ArgumentError("apply_A: needs a k = 2 density in rep XXi");
    const Grid& g = f2.grid();
    check_eps_grid(g, eps, "apply_A");
    const int dx = g.dim_x, dv = g.dim_v;
    const bool one_dim = dv == 1 && dx <= 1;
    const PositionPotential& phi = PositionPotential::cached(pot);
    const auto xn = g.x_nodes();
    const auto kn = g.xi_nodes();
    const double pre = 1.0 / std::sqrt(eps);

    Distribution out = f2;
    const std::size_t naxes = f2.shape().size();
    par::for_chunks(f2.size(), 4096, [&](std::size_t b, std::size_t e) {
        std::vector<std::size_t> idx(naxes);
        double x1[3], x2[3], k1[3], k2[3];
        for (std::size_t i = b; i < e; ++i) {
            if (f2[i] == 0.0) continue;
            f2.unravel(i, idx);
            for (int d = 0; d < dx; ++d) {
                x1[d] = xn[idx[d]];
                x2[d] = xn[idx[dx + d]];
            }
            for (int d = 0; d < dv; ++d) {
                k1[d] = kn[idx[2 * dx + d]];
                k2[d] = kn[idx[2 * dx + dv + d]];
            }
            const Vec3 dxv = (1.0 / eps) * (embed(x1, dx) - embed(x2, dx));
            const Vec3 dk = 0.5 * (embed(k1, dv) - embed(k2, dv));
            double diff;
            if (one_dim) {
                diff = phi.radial1(dxv[0] + dk[0]) - phi.radial1(dxv[0] - dk[0]);
            } else {
                diff = phi.radial3(norm(dxv + dk)) - phi.radial3(norm(dxv - dk));
            }
            out[i] = f2[i] * cplx(0.0, -pre * diff);
        }
    });
    return out;
}

Distribution apply_B(const Distribution& f2, const kernel::Potential& pot, double eps) {
    if (f2.k() != 2 || f2.rep() != Rep::EtaXi) throw ArgumentError("apply_B: needs a k = 2 density in rep EtaXi");
    const Grid& g = f2.grid();
    check_eps_grid(g, eps, "apply_B");
    const int dx = g.dim_x, dv = g.dim_v;
    const std::size_t nx = g.n_x, nv = g.n_v;
    const auto en = g.eta_nodes();
    const auto kn = g.xi_nodes();

    std::size_t n_eta = 1, n_xi = 1;
    for (int d = 0; d < dx; ++d) n_eta *= nx;
    for (int d = 0; d < dv; ++d) n_xi *= nv;
    // Row-major offsets: [eta1, eta2, xi1, xi2] blocks.
    const std::size_t s_xi2 = 1, s_xi1 = n_xi, s_eta2 = n_xi * n_xi, s_eta1 = n_eta * n_xi * n_xi;
    std::size_t xi2_zero = 0;
    for (int d = 0; d < dv; ++d) xi2_zero = xi2_zero * nv + nv / 2;

    auto digits = [](std::size_t flat, std::size_t n, int dim, long* out) {
        for (int d = dim; d-- > 0;) {
            out[d] = static_cast<long>(flat % n);
            flat /= n;
        }
    };
    const double w_eta = std::pow(g.dk_x() / (2.0 * kPi), dx);
    const double pre = 2.0 * w_eta / std::sqrt(eps);
    const long half = static_cast<long>(nx / 2);

    // phi_hat(eps eta2) per eta2 node.
    std::vector<double> prof(n_eta);
    std::vector<Vec3> eta2v(n_eta);
    for (std::size_t m = 0; m < n_eta; ++m) {
        long c[3];
        digits(m, nx, dx, c);
        double e[3];
        for (int d = 0; d < dx; ++d) e[d] = en[static_cast<std::size_t>(c[d])];
        eta2v[m] = embed(e, dx);
        prof[m] = pot.profile(eps * norm(eta2v[m]));
    }

    Distribution out(g, 1, Rep::EtaXi, f2.eps());
    par::for_chunks(n_eta * n_xi, 64, [&](std::size_t b, std::size_t e) {
        long c1[3], c2[3];
        for (std::size_t o = b; o < e; ++o) {
            const std::size_t m1 = o / n_xi, a = o % n_xi;
            long ca[3];
            digits(a, nv, dv, ca);
            double k1[3];
            for (int d = 0; d < dv; ++d) k1[d] = kn[static_cast<std::size_t>(ca[d])];
            const Vec3 xi1 = embed(k1, dv);
            digits(m1, nx, dx, c1);
            cplx acc = 0.0;
            for (std::size_t m2 = 0; m2 < n_eta; ++m2) {
                if (prof[m2] == 0.0) continue;
                digits(m2, nx, dx, c2);
                // eta1 - eta2 in index space: (c1 - half) - (c2 - half) + half.
                std::size_t md = 0;
                bool inside = true;
                for (int d = 0; d < dx; ++d) {
                    const long t = c1[d] - c2[d] + half;
                    if (t < 0 || t >= static_cast<long>(nx)) inside = false;
                    md = md * nx + static_cast<std::size_t>(std::max(t, 0L));
                }
                if (!inside) continue;
                const cplx v = f2[md * s_eta1 + m2 * s_eta2 + a * s_xi1 + xi2_zero * s_xi2];
                if (v == 0.0) continue;
                acc += prof[m2] * std::sin(0.5 * eps * dot(xi1, eta2v[m2])) * v;
            }
            out[o] = pre * acc;
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Q^eps

namespace {

collision::CollisionConfig with_cut(const collision::CollisionConfig& c, double s) {
    collision::CollisionConfig out = c;
    out.s_max = s;
    return out;
}

void check_qeps_args(double eps, double s_max, double t) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError("apply_Qeps: eps must be positive");
    if (!(s_max > 0.0)) throw ArgumentError("apply_Qeps: s_max must be positive");
    if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("apply_Qeps: t must be positive");
}

template <class Eval>
Distribution qeps_with_guard(const Eval& eval, const collision::CollisionConfig& ccfg, double eps, double s_max,
                             double t) {
    const double natural = t / eps;
    if (natural <= s_max) return eval(with_cut(ccfg, natural));
    const Distribution q = eval(with_cut(ccfg, s_max));
    const Distribution q2 = eval(with_cut(ccfg, std::min(2.0 * s_max, natural)));
    const double scale = q2.l2_norm();
    if (scale > 0.0 && (q2 - q).l2_norm() > 0.01 * scale) {
        throw NumericalGuardError("apply_Qeps: s_max = " + format_double(s_max) +
                                  " truncates the s-integral; doubling it changes the result by more than 1%");
    }
    return q;
}

}  // namespace

Distribution apply_Qeps(const Distribution& f2, const collision::CollisionConfig& ccfg, double eps, double s_max,
                        double t, double xi_cut) {
    check_qeps_args(eps, s_max, t);
    if (f2.k() != 2) throw ArgumentError("apply_Qeps: needs a k = 2 density");
    if (f2.grid().dim_x != 0)
        throw UnsupportedError("apply_Qeps: only spatially homogeneous densities are supported");
    if (!phase::velocity_is_fourier(f2.rep())) throw ArgumentError("apply_Qeps: needs a velocity-Fourier representation");
    Distribution in = f2;
    in.set_rep(Rep::XXi);
    return qeps_with_guard([&](const collision::CollisionConfig& c) { return collision::collide_xi(in, c, xi_cut); },
                           ccfg, eps, s_max, t);
}

Distribution apply_Qeps(const collision::SpectralFn& g_tilde, const collision::SpectralFn& h_tilde, const Grid& grid,
                        const collision::CollisionConfig& ccfg, double eps, double s_max, double t, double xi_cut) {
    check_qeps_args(eps, s_max, t);
    return qeps_with_guard(
        [&](const collision::CollisionConfig& c) { return collision::collide_xi(g_tilde, h_tilde, grid, c, xi_cut); },
        ccfg, eps, s_max, t);
}

// ---------------------------------------------------------------------------
// Ladders

namespace {

ScalingReport fit_ladder(const EpsLadder& ladder, const std::vector<double>& norms) {
    for (std::size_t i = 0; i < norms.size(); ++i) {
        if (!(norms[i] > 0.0) || !std::isfinite(norms[i])) {
            throw NumericalGuardError("scaling_ladder: norm at eps = " + format_double(ladder.eps[i]) + " is " +
                                      format_double(norms[i]) + "; no power law can be fitted");
        }
    }
    return ScalingReport::fit(ladder.eps, norms);
}

}  // namespace

const char* ladder_op_name(LadderOp op) {
    switch (op) {
        case LadderOp::A: return "A";
        case LadderOp::B: return "B";
        case LadderOp::Qeps: return "Qeps";
        case LadderOp::QepsMinusQ0: return "QepsMinusQ0";
    }
    return "?";
}

void EpsLadder::validate() const {
    if (eps.size() < 4) throw ArgumentError("EpsLadder: need at least four eps values");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] > 0.0) || !std::isfinite(eps[i])) throw ArgumentError("EpsLadder: eps values must be positive");
        if (i > 0 && !(eps[i] < eps[i - 1])) throw ArgumentError("EpsLadder: eps values must be strictly decreasing");
    }
}

EpsLadder EpsLadder::geometric(int m_lo, int m_hi, LadderOp op) {
    EpsLadder l;
    l.op = op;
    l.eps.clear();
    for (int m = m_lo; m <= m_hi; ++m) l.eps.push_back(std::ldexp(1.0, -m));
    l.validate();
    return l;
}

namespace {

struct Radial3 {
    Rule1D p, z, c;
};

// int_{R^3} int_{R^3} e^{-a^2 |p|^2 - |z|^2} W(|p/2 + z/lam|, |p/2 - z/lam|) dp dz
template <class W>
double pair_weight_integral(double a, double lam, const W& weight) {
    static const Rule1D pr = composite_gauss_legendre(8, 4, 0.0, 1.0);
    static const Rule1D zr = composite_gauss_legendre(8, 4, 0.0, 6.5);
    static const Rule1D cr = composite_gauss_legendre(8, 4, -1.0, 1.0);
    const double pmax = 7.0 / a;
    double acc = 0.0;
    for (std::size_t i = 0; i < pr.x.size(); ++i) {
        const double p = pmax * pr.x[i];
        const double wp = pmax * pr.w[i] * p * p * std::exp(-a * a * p * p);
        for (std::size_t j = 0; j < zr.x.size(); ++j) {
            const double z = zr.x[j] / lam;
            const double wz = zr.w[j] * zr.x[j] * zr.x[j] * std::exp(-zr.x[j] * zr.x[j]);
            double inner = 0.0;
            for (std::size_t k = 0; k < cr.x.size(); ++k) {
                const double base = 0.25 * p * p + z * z, cross = p * z * cr.x[k];
                const double up = std::sqrt(std::max(0.0, base + cross));
                const double um = std::sqrt(std::max(0.0, base - cross));
                inner += cr.w[k] * weight(up, um);
            }
            acc += wp * wz * inner;
        }
    }
    return 8.0 * kPi * kPi * acc;
}

double sinhc(double x) { return std::abs(x) < 1e-8 ? 1.0 : std::sinh(x) / x; }

double ratio_A(const PairFamily& fam, const kernel::Potential& pot, double eps, double s) {
    const PositionPotential& phi = PositionPotential::cached(pot);
    const double a = fam.center_width, b = fam.velocity_width;
    const double lam = fam.concentrated ? eps : 1.0;
    const double c = eps / lam;
    const double o = norm(fam.offset);

    // K(rho) = int e^{-|w|^2/(2 b^2)} |phi(rho + w/2) - phi(rho - w/2)|^2 dw.
    static const Rule1D wr = composite_gauss_legendre(8, 6, 0.0, 1.0);
    static const Rule1D cr = composite_gauss_legendre(8, 4, -1.0, 1.0);
    const double wmax = 9.0 * b;
    auto K = [&](double rho) {
        double acc = 0.0;
        for (std::size_t i = 0; i < wr.x.size(); ++i) {
            const double w = wmax * wr.x[i];
            const double ww = wmax * wr.w[i] * w * w * std::exp(-0.5 * w * w / (b * b));
            double inner = 0.0;
            for (std::size_t k = 0; k < cr.x.size(); ++k) {
                const double base = rho * rho + 0.25 * w * w, cross = rho * w * cr.x[k];
                const double d = phi.radial3(std::sqrt(base + cross)) - phi.radial3(std::sqrt(std::max(0.0, base - cross)));
                inner += cr.w[k] * d * d;
            }
            acc += ww * inner;
        }
        return 2.0 * kPi * acc;
    };
    // Radial extent of |F(c rho - offset)|^2, capped where phi is tabulated.
    const double rmax = std::min((o + 7.0) / c, 0.5 * kTableRadius);
    const std::size_t panels = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(rmax / 2.0)));
    const Rule1D rr = composite_gauss_legendre(8, panels, 0.0, rmax);
    double I = 0.0;
    for (std::size_t i = 0; i < rr.x.size(); ++i) {
        const double r = rr.x[i];
        const double avg = std::exp(-(c * c * r * r + o * o - 2.0 * c * r * o)) * sinhc(2.0 * c * r * o) *
                           std::exp(-2.0 * c * r * o);
        if (avg == 0.0) continue;
        I += rr.w[i] * 4.0 * kPi * r * r * avg * K(r);
    }
    const double num2 = (eps * eps) * std::pow(kPi * a * a, 1.5) * std::pow(0.5 * kPi * b * b, 1.5) * I;

    const double D = pair_weight_integral(a, lam, [&](double up, double um) { return std::pow(up * um, s); });
    const double den2 = std::pow(2.0 * kPi, -6) * std::pow(kPi * b * b, 3) * std::pow(2.0 * kPi * a * a, 3) *
                        std::pow(2.0 * kPi, 3) * lam * lam * lam * D;
    return std::sqrt(num2 / den2);
}

const gsl_integration_fixed_workspace* hermite_rule() {
    static std::unique_ptr<gsl_integration_fixed_workspace, void (*)(gsl_integration_fixed_workspace*)> ws(
        gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, 20, 0.0, 0.5, 0.0, 0.0),
        gsl_integration_fixed_free);
    return ws.get();
}

double ratio_B(const PairFamily& fam, const kernel::Potential& pot, double eps, double s) {
    const double a = fam.center_width, b = fam.velocity_width;
    const double lam = fam.concentrated ? eps : 1.0;
    const double c = eps / lam;
    const double aw = 0.5 * s + 0.75;
    if (fam.samples == 0) throw ArgumentError("operator_ratio: samples must be positive");

    // Gauss-Hermite rule for the weight e^{-u^2/2}, per axis.
    const auto* ws = hermite_rule();
    const std::size_t ng = gsl_integration_fixed_n(ws);
    const double* gx = gsl_integration_fixed_nodes(ws);
    const double* gw = gsl_integration_fixed_weights(ws);
    std::vector<Vec3> un;
    std::vector<double> uw;
    for (std::size_t i = 0; i < ng; ++i)
        for (std::size_t j = 0; j < ng; ++j)
            for (std::size_t k = 0; k < ng; ++k) {
                const double w = gw[i] * gw[j] * gw[k];
                if (w < 1e-18) continue;
                un.push_back({gx[i], gx[j], gx[k]});
                uw.push_back(w);
            }
    std::vector<cplx> phase(un.size());
    for (std::size_t q = 0; q < un.size(); ++q) phase[q] = std::polar(uw[q], dot(un[q], fam.offset));

    // Common samples for every eps of a ladder: eta1 ~ |C^|^2, xi1 ~ |P|^2.
    auto eng = rng::engine(fam.seed, 0);
    std::normal_distribution<double> nd(0.0, 1.0);
    const double se = 1.0 / (std::sqrt(2.0) * a), sx = b / std::sqrt(2.0);
    std::vector<Vec3> eta(fam.samples), xi(fam.samples);
    for (std::size_t i = 0; i < fam.samples; ++i) {
        eta[i] = {se * nd(eng), se * nd(eng), se * nd(eng)};
        xi[i] = {sx * nd(eng), sx * nd(eng), sx * nd(eng)};
    }
    std::vector<double> terms(fam.samples);
    par::for_chunks(fam.samples, 8, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const Vec3 q = 0.5 * eps * eta[i];
            cplx J = 0.0;
            for (std::size_t k = 0; k < un.size(); ++k) {
                const Vec3 arg = q + c * un[k];
                const double p = pot.profile(norm(arg));
                if (p == 0.0) continue;
                J += phase[k] * (p * std::sin(0.5 * dot(xi[i], arg)));
            }
            J *= std::pow(2.0 * kPi, 1.5);
            const double e2 = 1.0 + dot(eta[i], eta[i]);
            terms[i] = std::pow(e2, -aw) * std::norm(J);
        }
    });
    double mean = 0.0;
    for (double t : terms) mean += t;
    mean /= static_cast<double>(fam.samples);
    const double mass_eta = std::pow(2.0 * kPi * a * a, 3) * std::pow(kPi / (a * a), 1.5);
    const double mass_xi = std::pow(kPi * b * b, 1.5);
    const double num2 = 4.0 / eps * std::pow(2.0 * kPi, -9) * mass_eta * mass_xi * mean;

    const double D = pair_weight_integral(
        a, lam, [&](double up, double um) { return std::pow((1.0 + up * up) * (1.0 + um * um), aw); });
    const double den2 = std::pow(2.0 * kPi, -6) * mass_xi * std::pow(2.0 * kPi * a * a, 3) * std::pow(2.0 * kPi, 3) *
                        lam * lam * lam * D;
    return std::sqrt(num2 / den2);
}

}  // namespace

double operator_ratio(LadderOp op, const PairFamily& data, const kernel::Potential& pot, double eps, double s) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ArgumentError("operator_ratio: eps must be positive");
    if (!(s >= 0.0) || !std::isfinite(s)) throw ArgumentError("operator_ratio: s must be nonnegative");
    if (!(data.center_width > 0.0) || !(data.velocity_width > 0.0))
        throw ArgumentError("operator_ratio: widths must be positive");
    switch (op) {
        case LadderOp::A: return ratio_A(data, pot, eps, s);
        case LadderOp::B: return ratio_B(data, pot, eps, s);
        default: throw ArgumentError("operator_ratio: only A and B have norm ratios");
    }
}

ScalingReport scaling_ladder(const PairFamily& data, const kernel::Potential& pot, const EpsLadder& ladder,
                             double s) {
    ladder.validate();
    std::vector<double> norms;
    for (double e : ladder.eps) norms.push_back(operator_ratio(ladder.op, data, pot, e, s));
    return fit_ladder(ladder, norms);
}

ScalingReport scaling_ladder(const std::function<double(double)>& norm_at, const EpsLadder& ladder) {
    ladder.validate();
    if (!norm_at) throw ArgumentError("scaling_ladder: empty norm callback");
    std::vector<double> norms;
    for (double e : ladder.eps) norms.push_back(norm_at(e));
    return fit_ladder(ladder, norms);
}

ScalingReport scaling_ladder(const collision::GaussianMixture& g, const collision::GaussianMixture& h,
                             const Grid& grid, const collision::CollisionConfig& ccfg, const EpsLadder& ladder,
                             double xi_cut) {
    ladder.validate();
    if (ladder.op != LadderOp::Qeps && ladder.op != LadderOp::QepsMinusQ0)
        throw ArgumentError("scaling_ladder: Gaussian-mixture ladders need op Qeps or QepsMinusQ0");
    auto gt = [&g](const Vec3& x) { return g.fourier(x); };
    auto ht = [&h](const Vec3& x) { return h.fourier(x); };
    Distribution q0;
    if (ladder.op == LadderOp::QepsMinusQ0) q0 = collision::collide_xi(gt, ht, grid, ccfg, xi_cut);
    std::vector<double> norms;
    for (double e : ladder.eps) {
        const Distribution q = apply_Qeps(gt, ht, grid, ccfg, e, 1e300, 1.0, xi_cut);
        norms.push_back(ladder.op == LadderOp::Qeps ? q.l2_norm() : (q - q0).l2_norm());
    }
    return fit_ladder(ladder, norms);
}

}  // namespace qk::bbgky
