#include "qkinetic/illposed.hpp"

#include <gsl/gsl_eigen.h>
#include <gsl/gsl_integration.h>

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "qkinetic/parallel.hpp"
#include "qkinetic/rng.hpp"

namespace qk::illposed {

namespace {

constexpr double kChiHatNorm = 0.19947114020071635;  // (8 pi)^{-1/2}

bool is_dyadic(double x) {
    if (!(x >= 2.0) || !std::isfinite(x)) return false;
    int e = 0;
    return std::frexp(x, &e) == 0.5;
}

double bracket(double y) { return std::sqrt(1.0 + y * y); }

// Orthonormal e1, e2 completing the unit vector e.
void complete_basis(const Vec3& e, Vec3& e1, Vec3& e2) {
    const Vec3 a = std::abs(e[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
    const Vec3 t = a - dot(a, e) * e;
    e1 = (1.0 / norm(t)) * t;
    e2 = {e[1] * e1[2] - e[2] * e1[1], e[2] * e1[0] - e[0] * e1[2], e[0] * e1[1] - e[1] * e1[0]};
}

}  // namespace

void DeflationConfig::validate() const {
    if (!is_dyadic(M)) throw ArgumentError("illposed: M must be a power of two >= 2");
    if (!is_dyadic(N2)) throw ArgumentError("illposed: N2 must be a power of two >= 2");
    if (!(s > 0.0)) throw ArgumentError("illposed: s must be positive");
    if (!(s < 1.0)) throw ArgumentError("illposed: s >= 1 is outside the ill-posed regime (need 0 < s < 1)");
    if (!(s1 > 0.0) || !std::isfinite(s1)) throw ArgumentError("illposed: s1 must be positive");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw ArgumentError("illposed: delta must be positive");
    if (J_sample < 1 || J_sample > 512) throw ArgumentError("illposed: J_sample must be in [1, 512]");
    if (J_sample > J()) throw ArgumentError("illposed: J_sample exceeds the direction count M^2 N2^2");
}

double DeflationConfig::s0() const { return s - std::log(std::log(M)) / std::log(M); }
double DeflationConfig::rate() const { return std::pow(M, 1.0 - s) * std::pow(N2, -s1); }
double DeflationConfig::t_star() const { return -delta * std::log(M) / rate(); }
std::size_t DeflationConfig::J() const { return static_cast<std::size_t>(std::llround(M * M * N2 * N2)); }

double chi(const Vec3& y) { return std::exp(-0.5 * dot(y, y)); }
double chi_hat(const Vec3& y) {
    const double r2 = dot(y, y);
    return kChiHatNorm * r2 * std::exp(-0.5 * r2);
}

std::vector<Vec3> half_sphere_grid(std::size_t n) {
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    std::vector<Vec3> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(n);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double ph = golden * static_cast<double>(i);
        out[i] = {r * std::cos(ph), r * std::sin(ph), z};
    }
    return out;
}

BadData::BadData(const DeflationConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    auto eng = rng::engine(cfg_.seed, 0);
    const double turn = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(eng);
    const double c = std::cos(turn), sn = std::sin(turn);
    for (const Vec3& d : half_sphere_grid(cfg_.J_sample)) dirs_.push_back({c * d[0] - sn * d[1], sn * d[0] + c * d[1], d[2]});
}

double BadData::f(const Vec3& x, const Vec3& v) const {
    const double M = cfg_.M;
    return std::pow(M, 3.0 - cfg_.s) * chi(M * x) * chi_hat(M * v);
}

double BadData::g_term(std::size_t j, const Vec3& x, const Vec3& v) const {
    const double M = cfg_.M, N2 = cfg_.N2;
    const Vec3& e = dirs_.at(j);
    const double xp = dot(x, e), vp = dot(v, e);
    const Vec3 xq = x - xp * e, vq = v - vp * e;
    const double pre = std::pow(M, 1.0 - cfg_.s) * std::pow(N2, -2.0 - cfg_.s1);
    return pre * chi(M * xq) * chi({xp / N2, 0.0, 0.0}) * chi_hat(M * vq) * chi_hat({vp / N2, 0.0, 0.0});
}

double BadData::g_sampled(const Vec3& x, const Vec3& v) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < dirs_.size(); ++j) acc += g_term(j, x, v);
    return acc;
}

namespace {

const Rule1D& half_line() {
    static const Rule1D r = composite_gauss_legendre(16, 8, 0.0, 12.0);
    return r;
}
const Rule1D& full_line() {
    static const Rule1D r = composite_gauss_legendre(16, 16, -12.0, 12.0);
    return r;
}

}  // namespace

double BadData::f_norm() const {
    // ||f||^2 = M^{-2s} [4 pi int r^2 (1 + M^2 r^2)^s e^{-r^2}]
    //                   [4 pi int r^2 (1 + r^2/M^2)^s1 chi_hat(r)^2 ...]
    const double M = cfg_.M, s = cfg_.s, s1 = cfg_.s1;
    const Rule1D& R = half_line();
    double X = 0.0, V = 0.0;
    for (std::size_t i = 0; i < R.x.size(); ++i) {
        const double r = R.x[i], r2 = r * r;
        X += R.w[i] * r2 * std::pow(1.0 + M * M * r2, s) * std::exp(-r2);
        V += R.w[i] * r2 * std::pow(1.0 + r2 / (M * M), s1) * r2 * r2 * std::exp(-r2) / (8.0 * kPi);
    }
    return std::sqrt(std::pow(M, -2.0 * s) * 4.0 * kPi * X * 4.0 * kPi * V);
}

double BadData::g_term_norm() const {
    // Coordinates stretched along and across the direction:
    //   X = N2/M^2 int (1 + M^2 p^2 + q^2/N2^2)^s e^{-p^2 - q^2} d^2p dq
    //   V = N2/M^2 /(64 pi^2) int (1 + w^2/M^2 + N2^2 u^2)^s1 |w|^4 e^{-w^2} u^4 e^{-u^2} d^2w du
    const double M = cfg_.M, N2 = cfg_.N2, s = cfg_.s, s1 = cfg_.s1;
    const Rule1D& R = half_line();
    const Rule1D& L = full_line();
    double X = 0.0, V = 0.0;
    for (std::size_t i = 0; i < R.x.size(); ++i) {
        const double p = R.x[i], p2 = p * p, ep = std::exp(-p2);
        for (std::size_t k = 0; k < L.x.size(); ++k) {
            const double q = L.x[k], q2 = q * q, w = R.w[i] * L.w[k] * ep * std::exp(-q2);
            X += w * p * std::pow(1.0 + M * M * p2 + q2 / (N2 * N2), s);
            V += w * p2 * p2 * p * q2 * q2 * std::pow(1.0 + p2 / (M * M) + N2 * N2 * q2, s1);
        }
    }
    X *= 2.0 * kPi * N2 / (M * M);
    V *= 2.0 * kPi * N2 / (M * M) / (64.0 * kPi * kPi);
    const double pre = std::pow(M, 1.0 - s) * std::pow(N2, -2.0 - s1);
    return pre * std::sqrt(X * V);
}

double BadData::g_norm() const { return std::sqrt(static_cast<double>(cfg_.J())) * g_term_norm(); }

// ---------------------------------------------------------------------------
// Overlap audit

namespace {

using Mat3 = std::array<double, 9>;

Mat3 stretch(const Vec3& e, double across, double along) {
    Mat3 m{};
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            m[3 * a + b] = across * ((a == b ? 1.0 : 0.0) - e[a] * e[b]) + along * e[a] * e[b];
    return m;
}

struct GaussHermite3 {
    std::vector<Vec3> z;
    std::vector<double> w;
};

const GaussHermite3& hermite3() {
    static const GaussHermite3 rule = [] {
        constexpr std::size_t n = 10;
        std::unique_ptr<gsl_integration_fixed_workspace, void (*)(gsl_integration_fixed_workspace*)> ws(
            gsl_integration_fixed_alloc(gsl_integration_fixed_hermite, n, 0.0, 0.5, 0.0, 0.0),
            gsl_integration_fixed_free);
        const double* x = gsl_integration_fixed_nodes(ws.get());
        const double* w = gsl_integration_fixed_weights(ws.get());
        GaussHermite3 r;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t k = 0; k < n; ++k) {
                    r.z.push_back({x[i], x[j], x[k]});
                    r.w.push_back(w[i] * w[j] * w[k]);
                }
        return r;
    }();
    return rule;
}

// int h(y) exp(-y^T P y / 2) dy for symmetric positive definite P.
template <class H>
double gaussian_integral(const Mat3& P, const H& h) {
    double a[9];
    std::copy(P.begin(), P.end(), a);
    gsl_matrix_view mv = gsl_matrix_view_array(a, 3, 3);
    gsl_vector* eval = gsl_vector_alloc(3);
    gsl_matrix* evec = gsl_matrix_alloc(3, 3);
    gsl_eigen_symmv_workspace* ws = gsl_eigen_symmv_alloc(3);
    gsl_eigen_symmv(&mv.matrix, eval, evec, ws);
    double scale[3], Q[9];
    double det = 1.0;
    for (int k = 0; k < 3; ++k) {
        const double lam = gsl_vector_get(eval, k);
        det *= lam;
        scale[k] = 1.0 / std::sqrt(lam);
        for (int r = 0; r < 3; ++r) Q[3 * r + k] = gsl_matrix_get(evec, r, k);
    }
    gsl_eigen_symmv_free(ws);
    gsl_matrix_free(evec);
    gsl_vector_free(eval);
    if (!(det > 0.0)) throw NumericalGuardError("overlap_audit: singular Gaussian");
    const GaussHermite3& rule = hermite3();
    double acc = 0.0;
    for (std::size_t q = 0; q < rule.z.size(); ++q) {
        const Vec3& z = rule.z[q];
        const double u0 = scale[0] * z[0], u1 = scale[1] * z[1], u2 = scale[2] * z[2];
        const Vec3 y{Q[0] * u0 + Q[1] * u1 + Q[2] * u2, Q[3] * u0 + Q[4] * u1 + Q[5] * u2,
                     Q[6] * u0 + Q[7] * u1 + Q[8] * u2};
        acc += rule.w[q] * h(y);
    }
    return acc / std::sqrt(det);
}

Mat3 add(const Mat3& a, const Mat3& b) {
    Mat3 c;
    for (int i = 0; i < 9; ++i) c[i] = a[i] + b[i];
    return c;
}

}  // namespace

OverlapAudit overlap_audit(const BadData& data, std::size_t max_directions) {
    const auto& cfg = data.config();
    const double M = cfg.M, N2 = cfg.N2, s = cfg.s, s1 = cfg.s1;
    const std::size_t n = std::min(max_directions, data.directions().size());
    if (n == 0) throw ArgumentError("overlap_audit: no directions");
    const auto& dirs = data.directions();
    // Fourier side of the x factor: (2 pi)^{3/2} N2/M^2 exp(-eta^T S eta / 2).
    // Velocity factor: chi_hat products, Gaussian part exp(-v^T T v / 2).
    std::vector<Mat3> S(n), T(n);
    for (std::size_t i = 0; i < n; ++i) {
        S[i] = stretch(dirs[i], 1.0 / (M * M), N2 * N2);
        T[i] = stretch(dirs[i], M * M, 1.0 / (N2 * N2));
    }
    const double pre = std::pow(M, 1.0 - s) * std::pow(N2, -2.0 - s1);
    const double xconst = (N2 / (M * M)) * (N2 / (M * M));
    const double vconst = kChiHatNorm * kChiHatNorm * kChiHatNorm * kChiHatNorm;
    auto inner = [&](std::size_t i, std::size_t j) {
        const double X = xconst * gaussian_integral(add(S[i], S[j]), [&](const Vec3& eta) {
                             return std::pow(1.0 + dot(eta, eta), s);
                         });
        const Vec3 &ei = dirs[i], &ej = dirs[j];
        const double V = vconst * gaussian_integral(add(T[i], T[j]), [&](const Vec3& v) {
                             const double pi = dot(v, ei), pj = dot(v, ej), v2 = dot(v, v);
                             const double ci = M * M * (v2 - pi * pi) * pi * pi / (N2 * N2);
                             const double cj = M * M * (v2 - pj * pj) * pj * pj / (N2 * N2);
                             return std::pow(1.0 + v2, s1) * ci * cj;
                         });
        return pre * pre * X * V;
    };
    std::vector<double> diag(n);
    par::for_chunks(n, 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) diag[i] = inner(i, i);
    });
    std::vector<double> row_sum(n, 0.0), row_max(n, 0.0);
    par::for_chunks(n, 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double gij = inner(i, j);
                row_sum[i] += 2.0 * gij;
                row_max[i] = std::max(row_max[i], std::abs(gij) / std::sqrt(diag[i] * diag[j]));
            }
    });
    OverlapAudit out;
    for (std::size_t i = 0; i < n; ++i) {
        out.sum_of_squares += diag[i];
        out.square_of_sum += diag[i] + row_sum[i];
        out.max_pair_cosine = std::max(out.max_pair_cosine, row_max[i]);
    }
    out.mean_term_norm_sq = out.sum_of_squares / static_cast<double>(n);
    return out;
}

// ---------------------------------------------------------------------------
// Loss probe

const char* kernel_mode_name(KernelMode m) {
    return m == KernelMode::Surrogate ? "surrogate" : "cross_section";
}

double LossProbeConfig::effective_band() const {
    if (band >= 0.0) return band;
    return mode == KernelMode::Surrogate ? 0.3 : 0.5;
}

void LossProbeConfig::validate() const {
    if (mc_nodes < 100000) throw ArgumentError("loss_probe: mc_nodes must be at least 1e5");
    if (points.empty() && n_points == 0) throw ArgumentError("loss_probe: no sample points");
    if (!std::isfinite(band)) throw ArgumentError("loss_probe: band must be finite");
    if (!(f_scale > 0.0) || !std::isfinite(f_scale)) throw ArgumentError("loss_probe: f_scale must be positive");
    if (mode == KernelMode::CrossSection && pot.is_zero())
        throw ArgumentError("loss_probe: the cross-section mode needs a nonzero potential");
}

double LossPointResult::relative_error() const {
    if (predicted == 0.0) return quadrature == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(quadrature - predicted) / std::abs(predicted);
}

double angular_constant(const kernel::Potential& pot) {
    const double R = pot.support_radius();
    const Rule1D r = composite_gauss_legendre(16, 256, 0.0, R);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.x.size(); ++i) acc += r.w[i] * r.x[i] * pot.profile_sq(r.x[i]);
    return 4.0 * kPi * pot.prefactor() * acc;
}

LossProbeResult loss_probe(const BadData& data, const LossProbeConfig& cfg) {
    cfg.validate();
    const auto& dc = data.config();
    const double M = dc.M, N2 = dc.N2;
    const auto& dirs = data.directions();
    const std::size_t nd = dirs.size();

    std::vector<SamplePoint> pts = cfg.points;
    if (pts.empty()) {
        auto eng = rng::engine(cfg.seed, 0);
        std::normal_distribution<double> nd01(0.0, 1.0);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        auto in_ball = [&](double radius) {
            Vec3 d{nd01(eng), nd01(eng), nd01(eng)};
            return (radius * std::cbrt(u01(eng)) / norm(d)) * d;
        };
        for (std::size_t i = 0; i < cfg.n_points; ++i) {
            const Vec3 x = in_ball(1.0 / M);
            pts.push_back({x, in_ball(1.0 / M)});
        }
    }

    std::vector<Vec3> e1(nd), e2(nd);
    for (std::size_t j = 0; j < nd; ++j) complete_basis(dirs[j], e1[j], e2[j]);
    // Mass of one velocity needle chi_hat(M P^perp v) chi_hat(P v / N2).
    const double needle_mass = std::sqrt(2.0 * kPi) * N2 / (2.0 * M * M);
    const double pre = std::pow(M, 1.0 - dc.s) * std::pow(N2, -2.0 - dc.s1);
    const double dir_scale = static_cast<double>(dc.J()) / static_cast<double>(nd);
    const double C = cfg.mode == KernelMode::Surrogate ? 1.0 : angular_constant(cfg.pot);

    LossProbeResult out;
    out.band = cfg.effective_band();
    out.points.resize(pts.size());
    par::for_chunks(pts.size(), 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            const Vec3 x = pts[p].x, v = pts[p].v;
            // Directions drawn in proportion to their spatial factor.
            std::vector<double> w(nd);
            double W = 0.0;
            for (std::size_t j = 0; j < nd; ++j) {
                const double xp = dot(x, dirs[j]);
                const Vec3 xq = x - xp * dirs[j];
                w[j] = chi(M * xq) * std::exp(-0.5 * xp * xp / (N2 * N2));
                W += w[j];
            }
            auto eng = rng::engine(cfg.seed, p + 1);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            std::normal_distribution<double> nd01(0.0, 1.0);
            std::uniform_real_distribution<double> u01(0.0, 1.0);
            double sum = 0.0, sum2 = 0.0;
            for (std::size_t k = 0; k < cfg.mc_nodes; ++k) {
                const std::size_t j = pick(eng);
                // Across: density |w|^2 e^{-|w|^2/2} in the plane, |w| ~ chi_4.
                double r2 = 0.0;
                for (int a = 0; a < 4; ++a) {
                    const double z = nd01(eng);
                    r2 += z * z;
                }
                const double ang = 2.0 * kPi * u01(eng);
                const double r = std::sqrt(r2) / M;
                // Along: density u^2 e^{-u^2/2}, |u| ~ chi_3 with a random sign.
                double a2 = 0.0;
                for (int a = 0; a < 3; ++a) {
                    const double z = nd01(eng);
                    a2 += z * z;
                }
                const double along = (u01(eng) < 0.5 ? -1.0 : 1.0) * N2 * std::sqrt(a2);
                const Vec3 v2 = (r * std::cos(ang)) * e1[j] + (r * std::sin(ang)) * e2[j] + along * dirs[j];
                const Vec3 u = v - v2;
                double K;
                if (cfg.mode == KernelMode::Surrogate) {
                    K = 1.0 / std::sqrt(1.0 + dot(u, u));
                } else {
                    const double ct = 2.0 * u01(eng) - 1.0, ph = 2.0 * kPi * u01(eng);
                    const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
                    K = 4.0 * kPi * kernel::cross_section(cfg.pot, u, {st * std::cos(ph), st * std::sin(ph), ct});
                }
                sum += K;
                sum2 += K * K;
            }
            const double n = static_cast<double>(cfg.mc_nodes);
            const double mean = sum / n;
            const double var = std::max(0.0, sum2 / n - mean * mean) / (n - 1.0);
            const double factor = cfg.f_scale * data.f(x, v) * pre * dir_scale * W * needle_mass;
            LossPointResult& res = out.points[p];
            res.point = pts[p];
            res.quadrature = factor * mean;
            res.std_error = std::abs(factor) * std::sqrt(var);
            res.predicted = cfg.f_scale * data.f(x, v) * dc.rate() * chi(M * x) * C;
        }
    });

    double var = 0.0;
    for (const auto& r : out.points) {
        out.relative_error += r.relative_error();
        if (r.predicted != 0.0) var += (r.std_error / r.predicted) * (r.std_error / r.predicted);
    }
    const double np = static_cast<double>(out.points.size());
    out.relative_error /= np;
    out.std_error = std::sqrt(var) / np;
    out.inconclusive = 2.0 * out.std_error > std::abs(out.band - out.relative_error);
    return out;
}

std::string LossProbeResult::csv() const {
    std::ostringstream os;
    os << "x0,x1,x2,v0,v1,v2,quadrature,predicted,std_error,relative_error\n";
    for (const auto& r : points) {
        for (double c : r.point.x) os << format_double(c) << ',';
        for (double c : r.point.v) os << format_double(c) << ',';
        os << format_double(r.quadrature) << ',' << format_double(r.predicted) << ',' << format_double(r.std_error)
           << ',' << format_double(r.relative_error()) << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Deflation curve

double deflation_norm(const DeflationConfig& cfg, double t) {
    const double lnM = std::log(cfg.M);
    const double base = std::exp((cfg.s0() - cfg.s) * lnM);
    const double a = cfg.rate() * t;
    return base * std::exp(-a) * std::pow(bracket(a), cfg.s0()) + base;
}

DeflationCurve deflation_curve(const DeflationConfig& cfg, std::size_t n_times) {
    if (!is_dyadic(cfg.M)) throw ArgumentError("deflation_curve: M must be a power of two >= 2");
    if (!(cfg.s > 0.0 && cfg.s < 1.0)) throw ArgumentError("deflation_curve: need 0 < s < 1");
    if (!(cfg.N2 > 0.0) || !(cfg.s1 > 0.0) || !(cfg.delta > 0.0))
        throw ArgumentError("deflation_curve: N2, s1 and delta must be positive");
    if (n_times < 2) throw ArgumentError("deflation_curve: need at least two times");
    DeflationCurve c;
    c.M = cfg.M;
    c.s = cfg.s;
    c.s1 = cfg.s1;
    c.delta = cfg.delta;
    const double ts = cfg.t_star();
    for (std::size_t k = 0; k < n_times; ++k) {
        const double t = k + 1 == n_times ? 0.0 : ts * (1.0 - static_cast<double>(k) / static_cast<double>(n_times - 1));
        c.t.push_back(t);
        c.norm.push_back(deflation_norm(cfg, t));
    }
    return c;
}

std::string DeflationCurve::csv() const {
    std::ostringstream os;
    os << "t,norm\n";
    for (std::size_t i = 0; i < t.size(); ++i) os << format_double(t[i]) << ',' << format_double(norm[i]) << '\n';
    os << "ratio," << format_double(ratio()) << '\n';
    os << "M," << format_double(M) << '\n';
    os << "s," << format_double(s) << '\n';
    os << "s1," << format_double(s1) << '\n';
    os << "delta," << format_double(delta) << '\n';
    return os.str();
}

}  // namespace qk::illposed
