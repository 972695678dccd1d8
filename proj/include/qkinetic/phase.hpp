#pragma once

// Phase-space grids and k-particle distributions in the four Fourier
// representations, the Wigner transform, exact free transport and weighted
// Sobolev norms.
//
// Conventions. A physical axis of n points on [-L, L) has nodes -L + j h with
// h = 2L/n. Its dual axis has nodes m pi / L for m = -n/2 .. n/2 - 1, stored
// at index m + n/2. Forward transforms are int e^{-i xi v} f dv, and inverse
// transforms carry (2 pi)^{-1} per axis, so L^2 norms on a Fourier axis use the
// measure dk / (2 pi) and Plancherel holds exactly on the grid.
//
// Axis layout of the values array (row-major): the spatial axes of particles
// 1..k, then the velocity axes of particles 1..k.

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qkinetic/numerics.hpp"

namespace qk::phase {

using cplx = std::complex<double>;

enum class Rep { XV, XXi, EtaXi, EtaV };

const char* rep_name(Rep r);
bool spatial_is_fourier(Rep r);
bool velocity_is_fourier(Rep r);
Rep make_rep(bool spatial_fourier, bool velocity_fourier);

struct Grid {
    int dim_x = 0;  // 0 (homogeneous), 1 (slab) or 3
    std::size_t n_x = 1;
    double L_x = 1.0;
    std::size_t n_v = 16;
    double L_v = 6.0;
    int dim_v = 3;  // 3, or 1 for reduced one-dimensional tests

    void validate() const;
    double h_x() const { return 2.0 * L_x / static_cast<double>(n_x); }
    double h_v() const { return 2.0 * L_v / static_cast<double>(n_v); }
    double dk_x() const { return kPi / L_x; }
    double dk_v() const { return kPi / L_v; }
    std::vector<double> x_nodes() const;
    std::vector<double> v_nodes() const;
    std::vector<double> eta_nodes() const;
    std::vector<double> xi_nodes() const;

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.dim_x == b.dim_x && a.n_x == b.n_x && a.L_x == b.L_x && a.n_v == b.n_v && a.L_v == b.L_v &&
               a.dim_v == b.dim_v;
    }
    friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }
};

/// Grid whose velocity box holds all but `tail` of the Maxwellian exp(-|v|^2/2)
/// mass (per axis), with n_v points. Homogeneous unless dim_x is given.
Grid maxwellian_grid(std::size_t n_v, double tail = 1e-8, int dim_x = 0, std::size_t n_x = 1, double L_x = 1.0);

struct NormSpec {
    double r = 1.1;
    double s = 0.6;
};

class Distribution {
public:
    Distribution() = default;
    Distribution(const Grid& grid, int k = 1, Rep rep = Rep::XV, double eps = 0.0);

    /// Samples `fn(x, v)` at every grid node of the XV representation. `x`
    /// holds k * dim_x coordinates, `v` holds k * dim_v.
    static Distribution from_function(const Grid& grid, int k,
                                      const std::function<cplx(const double* x, const double* v)>& fn,
                                      double eps = 0.0);

    const Grid& grid() const { return grid_; }
    Rep rep() const { return rep_; }
    int k() const { return k_; }
    double eps() const { return eps_; }
    void set_eps(double eps) { eps_ = eps; }
    void set_rep(Rep r) { rep_ = r; }

    std::size_t n_spatial_axes() const { return static_cast<std::size_t>(k_ * grid_.dim_x); }
    std::size_t n_velocity_axes() const { return static_cast<std::size_t>(k_ * grid_.dim_v); }
    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return values_.size(); }
    bool is_spatial_axis(std::size_t axis) const { return axis < n_spatial_axes(); }
    /// Node coordinates along `axis` in the current representation.
    std::vector<double> axis_nodes(std::size_t axis) const;
    /// Integration weight of one grid cell in the current representation.
    double cell_measure() const;

    std::vector<cplx>& values() { return values_; }
    const std::vector<cplx>& values() const { return values_; }
    cplx& operator[](std::size_t i) { return values_[i]; }
    const cplx& operator[](std::size_t i) const { return values_[i]; }

    /// Multi-index of flat position i.
    void unravel(std::size_t i, std::vector<std::size_t>& idx) const;

    double l2_norm() const;
    double l1_norm() const;
    /// Sum of values times the cell measure.
    cplx integral() const;
    double max_abs() const;
    double min_real() const;

    Distribution& operator+=(const Distribution& o);
    Distribution& operator-=(const Distribution& o);
    Distribution& operator*=(cplx a);

private:
    Grid grid_;
    int k_ = 1;
    Rep rep_ = Rep::XV;
    double eps_ = 0.0;
    std::vector<std::size_t> shape_;
    std::vector<cplx> values_;
};

Distribution operator+(Distribution a, const Distribution& b);
Distribution operator-(Distribution a, const Distribution& b);
Distribution operator*(cplx s, Distribution a);

/// Throws ArgumentError unless a and b share grid, k and representation.
void require_compatible(const Distribution& a, const Distribution& b, const char* who);

Distribution to_rep(const Distribution& f, Rep target);

/// || <grad_x>^r <v>^s f ||_{L^2}, with tensor weights over particles.
double sobolev_norm(const Distribution& f, const NormSpec& spec);

/// f(x - v t, v), applied as a phase on the (eta, v) side. In slab mode the
/// spatial axis pairs with the first velocity axis. With dim_x = 0 the input
/// is returned unchanged and `noop_warning` (if given) is set.
Distribution free_transport(const Distribution& f, double t, bool* noop_warning = nullptr);

/// Kernel gamma(y; y') of a k = 1 density matrix on a d-dimensional grid of
/// n points per axis on [-L, L). Values are indexed [y][y'] row-major.
struct DensityMatrix {
    int dim = 1;  // 1 or 3
    std::size_t n = 0;
    double L = 1.0;
    std::vector<cplx> values;

    static DensityMatrix zero(int dim, std::size_t n, double L);
    /// gamma(y; y') = psi(y) conj(psi(y')).
    static DensityMatrix pure(int dim, std::size_t n, double L, const std::function<cplx(const double* y)>& psi);

    double h() const { return 2.0 * L / static_cast<double>(n); }
    std::size_t points() const;
    /// max |gamma(y;y') - conj(gamma(y';y))| relative to max |gamma|.
    double hermitian_defect() const;
    cplx trace() const;
};

/// f(x, v) = (2 pi)^{-d} int e^{i xi v} gamma(x + eps xi/2; x - eps xi/2) d xi.
/// Offsets of m grid cells give xi = 2 m h / eps, so the returned grid has
/// L_v = pi eps / (2 h). Throws ArgumentError for non-Hermitian input.
Distribution wigner(const DensityMatrix& dm, double eps);

/// Velocity marginal along one velocity axis, integrating all other axes
/// (XV representation). Returns (v, value) columns.
std::vector<std::pair<double, double>> velocity_marginal(const Distribution& f, std::size_t velocity_axis = 0);
/// Spatial marginal along one spatial axis.
std::vector<std::pair<double, double>> spatial_marginal(const Distribution& f, std::size_t spatial_axis = 0);
std::string marginal_csv(const std::vector<std::pair<double, double>>& m, const std::string& coordinate);

/// Mean of the coordinate along `axis` weighted by Re f (XV representation).
double centroid(const Distribution& f, std::size_t axis);

/// Binary container: magic, header (grid, k, tag, eps, count), then
/// little-endian 64-bit float (re, im) pairs.
void write_binary(const Distribution& f, const std::string& path);
Distribution read_binary(const std::string& path);

}  // namespace qk::phase
