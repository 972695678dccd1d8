#include "qkinetic/quasifree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "qkinetic/parallel.hpp"
#include "qkinetic/rng.hpp"

namespace qk::quasifree {

namespace {

constexpr std::size_t kTrialChunk = 64;

double gaussian_pdf3(const Vec3& y) { return std::pow(2.0 * kPi, -1.5) * std::exp(-0.5 * dot(y, y)); }

}  // namespace

double chi(const Vec3& y) { return std::pow(kPi, -0.75) * std::exp(-0.5 * dot(y, y)); }

WavePacketEnsemble WavePacketEnsemble::sample(std::size_t N, double eps, std::uint64_t seed, std::uint64_t stream) {
    if (eps <= 0) throw ArgumentError("ensemble: eps must be positive");
    WavePacketEnsemble e;
    e.N = N;
    e.eps = eps;
    e.seed = seed;
    auto gen = rng::engine(seed, stream);
    std::normal_distribution<double> nd;
    e.Y.resize(N);
    e.W.resize(N);
    for (std::size_t j = 0; j < N; ++j) {
        e.Y[j] = {nd(gen), nd(gen), nd(gen)};
        e.W[j] = {nd(gen), nd(gen), nd(gen)};
    }
    e.t_off.assign(N, 0.0);
    return e;
}

cplx WavePacketEnsemble::packet(std::size_t j, const Vec3& y) const {
    const Vec3 c = Y[j] + (2.0 * t_off[j]) * W[j];
    const double amp = chi((1.0 / std::sqrt(eps)) * (y - c));
    return std::polar(amp, dot(y, W[j]) / eps);
}

void CycleFrame::validate() const {
    if (eps <= 0) throw ArgumentError("cycle frame: eps must be positive");
    std::vector<int> sorted = pi;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (sorted[i] != static_cast<int>(i)) throw ArgumentError("cycle frame: pi is not a permutation");
}

CycleCoords cycle_coords(const std::vector<Vec3>& x, const std::vector<Vec3>& xi, const CycleFrame& frame) {
    frame.validate();
    const std::size_t k = frame.pi.size();
    if (x.size() != k || xi.size() != k) throw ArgumentError("cycle_coords: size mismatch");
    CycleCoords out;
    out.p.resize(k);
    out.q.resize(k);
    const double e = frame.eps;
    for (std::size_t j = 0; j < k; ++j) {
        const auto pj = static_cast<std::size_t>(frame.pi[j]);
        out.p[j] = 0.5 * (x[j] + x[pj]) + (0.5 * e) * (xi[j] - xi[pj]);
        out.q[j] = 0.5 * (xi[j] + xi[pj]) + (0.5 / e) * (x[j] - x[pj]);
    }
    return out;
}

std::pair<std::vector<Vec3>, std::vector<Vec3>> cycle_coords_inverse(const CycleCoords& pq, const CycleFrame& frame) {
    frame.validate();
    const std::size_t k = frame.pi.size();
    // With a_j = x_j + eps xi_j and b_j = x_j - eps xi_j one has
    // p_j + eps q_j = a_j and p_j - eps q_j = b_pi(j).
    std::vector<Vec3> a(k), b(k), x(k), xi(k);
    const double e = frame.eps;
    for (std::size_t j = 0; j < k; ++j) {
        a[j] = pq.p[j] + e * pq.q[j];
        b[static_cast<std::size_t>(frame.pi[j])] = pq.p[j] - e * pq.q[j];
    }
    for (std::size_t j = 0; j < k; ++j) {
        x[j] = 0.5 * (a[j] + b[j]);
        xi[j] = (0.5 / e) * (a[j] - b[j]);
    }
    return {x, xi};
}

cplx cycle_term_closed_form(const CycleFrame& frame, const std::vector<double>& t_off, const std::vector<Vec3>& x,
                            const std::vector<Vec3>& xi) {
    const CycleCoords pq = cycle_coords(x, xi, frame);
    if (t_off.size() != frame.pi.size()) throw ArgumentError("cycle_term_closed_form: offsets size mismatch");
    cplx prod = 1.0;
    for (std::size_t j = 0; j < t_off.size(); ++j) {
        const double t = t_off[j];
        const double a = 1.0 + 4.0 * t * t;
        const double ra = std::sqrt(a);
        const Vec3 qs = (2.0 / ra) * pq.q[j];
        const double ghat = std::exp(-0.5 * dot(qs, qs));
        const double gy = gaussian_pdf3((1.0 / ra) * pq.p[j]);
        prod *= std::polar(std::pow(a, -1.5) * ghat * gy, -4.0 * t * dot(pq.q[j], pq.p[j]) / a);
    }
    return prod;
}

double local_maxwellian(double t, const Vec3& x, const Vec3& v) {
    const Vec3 d = x - t * v;
    return std::pow(4.0 * kPi, -3.0) * std::exp(-0.5 * dot(d, d) - dot(v, v) / 8.0);
}

double identity_term_transform(double t, const Vec3& x, const Vec3& v, std::size_t n, double L) {
    // The identity term factorizes over coordinates, so the 3D transform is a
    // product of three 1D trapezoidal sums.
    const double a = 1.0 + 4.0 * t * t;
    const double h = 2.0 * L / static_cast<double>(n);
    double result = 1.0;
    for (int d = 0; d < 3; ++d) {
        cplx acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xi = -L + h * static_cast<double>(i);
            const double mag = std::pow(a, -0.5) * std::exp(-2.0 * xi * xi / a) *
                               std::exp(-0.5 * x[d] * x[d] / a) / std::sqrt(2.0 * kPi);
            acc += std::polar(mag, xi * v[d] - 4.0 * t * xi * x[d] / a);
        }
        result *= acc.real() * h / (2.0 * kPi);
    }
    return result;
}

cplx packet_overlap(const Vec3& Ya, const Vec3& Wa, const Vec3& Yb, const Vec3& Wb, double eps) {
    const Vec3 dy = Ya - Yb, dw = Wa - Wb;
    const Vec3 mid = 0.5 * (Ya + Yb);
    return std::polar(std::exp(-(dot(dy, dy) + dot(dw, dw)) / (4.0 * eps)), dot(mid, dw) / eps);
}

namespace {

// All permutations of {0..N-1} grouped by number of displaced indices.
std::vector<std::vector<std::vector<int>>> permutations_by_class(std::size_t N) {
    std::vector<std::vector<std::vector<int>>> classes(N + 1);
    std::vector<int> p(N);
    std::iota(p.begin(), p.end(), 0);
    do {
        std::size_t moved = 0;
        for (std::size_t i = 0; i < N; ++i) moved += p[i] != static_cast<int>(i);
        classes[moved].push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
    return classes;
}

}  // namespace

NormalizationEstimate normalization_check(std::size_t N, double eps, std::size_t trials, std::uint64_t seed) {
    if (N < 1) throw ArgumentError("normalization_check: N must be at least 1");
    if (N > 4) throw UnsupportedError("normalization_check: N > 4 is refused");
    if (trials < 200) throw ArgumentError("normalization_check: trials must be at least 200");
    if (eps <= 0) throw ArgumentError("normalization_check: eps must be positive");
    const auto classes = permutations_by_class(N);
    // per trial: class contributions (N+1 values)
    std::vector<double> contrib(trials * (N + 1), 0.0);
    par::for_chunks(trials, kTrialChunk, [&](std::size_t b, std::size_t e) {
        for (std::size_t trial = b; trial < e; ++trial) {
            const auto ens = WavePacketEnsemble::sample(N, eps, seed, trial);
            std::vector<cplx> G(N * N);
            for (std::size_t a = 0; a < N; ++a)
                for (std::size_t c = 0; c < N; ++c)
                    G[a * N + c] = a == c ? 1.0 : packet_overlap(ens.Y[a], ens.W[a], ens.Y[c], ens.W[c], eps);
            for (std::size_t k = 0; k <= N; ++k) {
                cplx sum = 0.0;
                for (const auto& nu : classes[k]) {
                    cplx term = 1.0;
                    for (std::size_t i = 0; i < N; ++i) term *= G[i * N + static_cast<std::size_t>(nu[i])];
                    sum += term;
                }
                contrib[trial * (N + 1) + k] = sum.real();
            }
        }
    });
    NormalizationEstimate out;
    out.class_means.assign(N + 1, 0.0);
    std::vector<double> totals(trials, 0.0);
    for (std::size_t t = 0; t < trials; ++t)
        for (std::size_t k = 0; k <= N; ++k) totals[t] += contrib[t * (N + 1) + k];
    auto sum_of = [&](const std::function<double(std::size_t)>& f) {
        return par::reduce_sum(trials, kTrialChunk, [&](std::size_t b, std::size_t e) {
            double s = 0;
            for (std::size_t i = b; i < e; ++i) s += f(i);
            return s;
        });
    };
    const double n = static_cast<double>(trials);
    out.estimate = sum_of([&](std::size_t i) { return totals[i]; }) / n;
    const double var =
        sum_of([&](std::size_t i) { return (totals[i] - out.estimate) * (totals[i] - out.estimate); }) / (n - 1);
    out.stderr_ = std::sqrt(var / n);
    for (std::size_t k = 0; k <= N; ++k)
        out.class_means[k] = sum_of([&](std::size_t i) { return contrib[i * (N + 1) + k]; }) / n;
    return out;
}

double cycle_norm(double eps, const CycleScalingOptions& opt) {
    if (eps <= 0) throw ArgumentError("cycle_norm: eps must be positive");
    if (opt.s < 0) throw ArgumentError("cycle_norm: s must be nonnegative");
    if (opt.n_x != 0 && static_cast<double>(opt.n_x) < 8.0 / eps)
        throw NumericalGuardError("cycle_norm: grid under-resolved, need n_x >= " +
                                  std::to_string(static_cast<long>(std::ceil(8.0 / eps))));
    // The pi = (12) term at zero offsets is
    //   (2 pi)^{-3} exp(-|X|^2 - |dx|^2/eps^2) exp(-|S|^2 - eps^2 |dxi|^2 / 4)
    // with X = (x1+x2)/2, dx = x1-x2, S = xi1+xi2, dxi = xi1-xi2, so the norm
    // splits into an x factor and a xi factor. Each factor is an integral over
    // a sum/difference pair of 3-vectors, reduced to (|P|, |D|, cos angle).
    const std::size_t nr = opt.radial_nodes;
    const Rule1D rp = composite_gauss_legendre(16, nr / 16, 0.0, 10.0);
    const Rule1D rc = composite_gauss_legendre(16, 4, -1.0, 1.0);
    const double angular = 8.0 * kPi * kPi;  // 4 pi for P, 2 pi azimuth of D around P

    // x factor: hat A(eta1, eta2) = pi^3 eps^3 exp(-|P|^2/4 - eps^2 |D|^2 / 16),
    // P = eta1 + eta2, D = eta1 - eta2, d eta1 d eta2 = dP dD / 8, and
    // |eta1|^2 |eta2|^2 = ((|P|^2 + |D|^2)^2 - 4 (P.D)^2) / 16.
    // Substituting D = d / eps moves the eps dependence into the weight.
    const Rule1D rd = composite_gauss_legendre(16, nr / 16, 0.0, 24.0);
    double ix = 0.0;
    for (std::size_t i = 0; i < rp.x.size(); ++i) {
        const double P = rp.x[i];
        const double wp = rp.w[i] * P * P * std::exp(-0.5 * P * P);
        for (std::size_t j = 0; j < rd.x.size(); ++j) {
            const double D = rd.x[j] / eps;
            const double wd = rd.w[j] / eps * D * D * std::exp(-eps * eps * D * D / 8.0);
            for (std::size_t c = 0; c < rc.x.size(); ++c) {
                const double pd = P * D * rc.x[c];
                const double prod = std::max(0.0, ((P * P + D * D) * (P * P + D * D) - 4.0 * pd * pd) / 16.0);
                ix += wp * wd * rc.w[c] * std::pow(prod, opt.s);
            }
        }
    }
    const double pi3e3 = std::pow(kPi, 3) * std::pow(eps, 3);
    ix *= angular / 8.0 * pi3e3 * pi3e3 / std::pow(2.0 * kPi, 6);

    // xi factor: weights <xi_j>^{-2(3/2+delta)} against exp(-2|S|^2 - eps^2|D|^2/2).
    const double wexp = -(1.5 + opt.delta);
    const Rule1D rs = composite_gauss_legendre(16, nr / 16, 0.0, 6.0);
    // Difference variable: log-spaced panels resolve both the O(1) core and
    // the O(1/eps) Gaussian cutoff.
    Rule1D rdx;
    {
        const double top = 8.0 / eps;
        double lo = 0.0, hi = 0.5;
        while (lo < top) {
            const Rule1D panel = gauss_legendre(16, lo, std::min(hi, top));
            rdx.x.insert(rdx.x.end(), panel.x.begin(), panel.x.end());
            rdx.w.insert(rdx.w.end(), panel.w.begin(), panel.w.end());
            lo = hi;
            hi *= 2.0;
        }
    }
    double ixi = 0.0;
    for (std::size_t i = 0; i < rs.x.size(); ++i) {
        const double S = rs.x[i];
        const double ws = rs.w[i] * S * S * std::exp(-2.0 * S * S);
        for (std::size_t j = 0; j < rdx.x.size(); ++j) {
            const double D = rdx.x[j];
            const double wd = rdx.w[j] * D * D * std::exp(-0.5 * eps * eps * D * D);
            for (std::size_t c = 0; c < rc.x.size(); ++c) {
                const double sd = S * D * rc.x[c];
                const double n1 = 1.0 + (S * S + D * D + 2.0 * sd) / 4.0;
                const double n2 = 1.0 + (S * S + D * D - 2.0 * sd) / 4.0;
                ixi += ws * wd * rc.w[c] * std::pow(n1, wexp) * std::pow(n2, wexp);
            }
        }
    }
    ixi *= angular / 8.0;
    return std::pow(2.0 * kPi, -3.0) * std::sqrt(ix * ixi);
}

ScalingReport cycle_scaling_fit(const std::vector<double>& eps_ladder, const CycleScalingOptions& opt) {
    if (eps_ladder.size() < 2) throw ArgumentError("cycle_scaling_fit: need at least two eps values");
    std::vector<double> norms(eps_ladder.size());
    par::for_chunks(eps_ladder.size(), 1, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) norms[i] = cycle_norm(eps_ladder[i], opt);
    });
    return ScalingReport::fit(eps_ladder, norms);
}

RandomWalkStats random_walk_crossings(std::size_t n, std::size_t trials, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("random_walk_crossings: n must be at least 1");
    if (trials < 1000) throw ArgumentError("random_walk_crossings: trials must be at least 1000");
    std::vector<double> cross(trials), disp(trials);
    par::for_chunks(trials, kTrialChunk, [&](std::size_t b, std::size_t e) {
        for (std::size_t t = b; t < e; ++t) {
            auto gen = rng::engine(seed, t);
            std::normal_distribution<double> nd;
            double s = nd(gen);
            std::size_t c = 0;
            for (std::size_t k = 1; k < n; ++k) {
                const double next = s + nd(gen);
                if ((next > 0) != (s > 0)) ++c;
                s = next;
            }
            cross[t] = static_cast<double>(c);
            disp[t] = s * s;
        }
    });
    auto mean_and_err = [&](const std::vector<double>& v, double& mean, double& err) {
        auto total = [&](const std::function<double(double)>& f) {
            return par::reduce_sum(v.size(), kTrialChunk, [&](std::size_t b, std::size_t e) {
                double acc = 0;
                for (std::size_t i = b; i < e; ++i) acc += f(v[i]);
                return acc;
            });
        };
        const double m = static_cast<double>(v.size());
        mean = total([](double x) { return x; }) / m;
        const double mu = mean;
        err = std::sqrt(total([mu](double x) { return (x - mu) * (x - mu); }) / (m - 1) / m);
    };
    RandomWalkStats out;
    mean_and_err(cross, out.mean_crossings, out.crossings_stderr);
    mean_and_err(disp, out.mean_sq_displacement, out.displacement_stderr);
    return out;
}

std::uint64_t derangements(int k) {
    if (k < 0) throw ArgumentError("derangements: k must be nonnegative");
    if (k > 20) throw ArgumentError("derangements: k > 20 overflows 64-bit counts");
    std::uint64_t d0 = 1, d1 = 0;
    if (k == 0) return d0;
    for (int i = 2; i <= k; ++i) {
        const std::uint64_t d2 = static_cast<std::uint64_t>(i - 1) * (d1 + d0);
        d0 = d1;
        d1 = d2;
    }
    return d1;
}

std::uint64_t class_size(int N, int k) {
    if (k < 0 || k > N || N > 20) throw ArgumentError("class_size: need 0 <= k <= N <= 20");
    std::uint64_t binom = 1;
    for (int i = 1; i <= k; ++i) binom = binom * static_cast<std::uint64_t>(N - k + i) / static_cast<std::uint64_t>(i);
    return binom * derangements(k);
}

}  // namespace qk::quasifree
