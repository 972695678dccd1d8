#pragma once

// Quasi-free N-body construction from Gaussian wave packets: ensembles,
// cycle coordinates, the normalization of the symmetrized state, the
// closed-form marginal terms, and the random-walk collision statistics.
//
// The packet profile chi is the unit-L^2 Gaussian pi^{-3/4} exp(-|y|^2/2).

#include <complex>
#include <cstdint>
#include <vector>

#include "qkinetic/numerics.hpp"

namespace qk::quasifree {

using cplx = std::complex<double>;

struct WavePacketEnsemble {
    std::size_t N = 0;
    double eps = 0.0;
    std::vector<Vec3> Y;
    std::vector<Vec3> W;
    std::vector<double> t_off;
    std::uint64_t seed = 0;

    /// Draws Y and W i.i.d. standard normal from (seed, stream); offsets zero.
    static WavePacketEnsemble sample(std::size_t N, double eps, std::uint64_t seed, std::uint64_t stream = 0);

    /// Single packet j evaluated at position y:
    /// chi((y - Y_j - 2 t_j W_j) / sqrt(eps)) * exp(i y . W_j / eps).
    cplx packet(std::size_t j, const Vec3& y) const;
};

/// Unit-L^2 Gaussian profile in three dimensions.
double chi(const Vec3& y);

/// Permutation of {0..k-1} together with the scale eps.
struct CycleFrame {
    std::vector<int> pi;
    double eps = 1.0;

    void validate() const;
};

struct CycleCoords {
    std::vector<Vec3> p;
    std::vector<Vec3> q;
};

/// p_j = (x_j + x_pi(j))/2 + eps (xi_j - xi_pi(j))/2,
/// q_j = (xi_j + xi_pi(j))/2 + (x_j - x_pi(j)) / (2 eps).
CycleCoords cycle_coords(const std::vector<Vec3>& x, const std::vector<Vec3>& xi, const CycleFrame& frame);

/// Inverse of cycle_coords; returns (x, xi).
std::pair<std::vector<Vec3>, std::vector<Vec3>> cycle_coords_inverse(const CycleCoords& pq, const CycleFrame& frame);

/// Closed-form pi-term of the marginal on the (x, xi) side:
/// prod_j (1+4t_j^2)^{-3/2} hat G_W(2 q_j / sqrt(1+4t_j^2)) G_Y(p_j / sqrt(1+4t_j^2))
///        exp(-4 i t_j q_j . p_j / (1+4t_j^2)),
/// with standard normal G_Y, G_W and hat G(k) = exp(-|k|^2/2).
cplx cycle_term_closed_form(const CycleFrame& frame, const std::vector<double>& t_off, const std::vector<Vec3>& x,
                            const std::vector<Vec3>& xi);

/// Velocity-side local Maxwellian (4 pi)^{-3} exp(-|x - v t|^2/2 - |v|^2/8)
/// reached by the identity term after the xi -> v transform.
double local_maxwellian(double t, const Vec3& x, const Vec3& v);

/// xi -> v transform of the identity term for one particle, evaluated by
/// trapezoidal quadrature with `n` nodes per axis on [-L, L]^3.
double identity_term_transform(double t, const Vec3& x, const Vec3& v, std::size_t n = 256, double L = 12.0);

struct NormalizationEstimate {
    double estimate = 0.0;
    double stderr_ = 0.0;
    /// Mean contribution of permutations with exactly k displaced indices.
    std::vector<double> class_means;
};

/// Monte-Carlo estimate of E ||Psi_N||^2 with kappa^2 = 1/(N! eps^{3N/2}).
/// Each trial evaluates the norm exactly as the permanent of the normalized
/// packet Gram matrix, grouped by derangement class.
NormalizationEstimate normalization_check(std::size_t N, double eps, std::size_t trials, std::uint64_t seed);

/// Normalized Gram entry <packet b, packet a> / eps^{3/2}.
cplx packet_overlap(const Vec3& Ya, const Vec3& Wa, const Vec3& Yb, const Vec3& Wb, double eps);

struct CycleScalingOptions {
    double s = 0.75;
    double delta = 0.1;  // velocity weight <xi>^{-3/2-delta}
    /// Declared spatial resolution; 0 skips the check. Must satisfy n_x >= 8/eps.
    std::size_t n_x = 0;
    std::size_t radial_nodes = 96;
};

/// Norm of <xi_1>^{-3/2-d}<xi_2>^{-3/2-d} |grad_x1|^s |grad_x2|^s applied to
/// the pi = (12) closed-form term, for one eps.
double cycle_norm(double eps, const CycleScalingOptions& opt);

/// Ladder of cycle_norm values with fitted slope (expected 3/2 - 2s).
ScalingReport cycle_scaling_fit(const std::vector<double>& eps_ladder, const CycleScalingOptions& opt);

struct RandomWalkStats {
    double mean_crossings = 0.0;
    double mean_sq_displacement = 0.0;
    double crossings_stderr = 0.0;
    double displacement_stderr = 0.0;
};

/// Walks S_k = sum of k standard normal increments, k = 1..n. A crossing is
/// a sign change between consecutive S_k.
RandomWalkStats random_walk_crossings(std::size_t n, std::size_t trials, std::uint64_t seed);

/// Number of fixed-point-free permutations of k elements, 0 <= k <= 20.
std::uint64_t derangements(int k);

/// |E_k| = C(N, k) D(k): permutations agreeing with a fixed one off exactly k indices.
std::uint64_t class_size(int N, int k);

}  // namespace qk::quasifree
