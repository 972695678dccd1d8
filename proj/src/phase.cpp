#include "qkinetic/phase.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "qkinetic/fft.hpp"
#include "qkinetic/parallel.hpp"
#include "qkinetic/simd.hpp"

namespace qk::phase {

static_assert(std::endian::native == std::endian::little, "binary container assumes a little-endian host");

namespace {

constexpr std::size_t kChunk = 4096;

bool is_pow2(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

std::vector<double> physical_nodes(std::size_t n, double L) {
    std::vector<double> out(n);
    const double h = 2.0 * L / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = -L + h * static_cast<double>(j);
    return out;
}

std::vector<double> dual_nodes(std::size_t n, double L) {
    std::vector<double> out(n);
    const double dk = kPi / L;
    for (std::size_t i = 0; i < n; ++i) out[i] = (static_cast<double>(i) - static_cast<double>(n / 2)) * dk;
    return out;
}

// Reorders one axis between FFT order and centered order, applying the
// (-1)^m phase that moves the origin of the physical grid to -L.
void shift_axis(std::vector<cplx>& data, const std::vector<std::size_t>& shape, std::size_t axis, bool to_centered) {
    const std::size_t n = shape[axis];
    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
    const auto half = static_cast<long>(n / 2);
    par::for_chunks(outer, std::max<std::size_t>(1, kChunk / (n * inner) + 1), [&](std::size_t b, std::size_t e) {
        std::vector<cplx> line(n);
        for (std::size_t o = b; o < e; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
                cplx* base = data.data() + o * n * inner + in;
                for (std::size_t i = 0; i < n; ++i) line[i] = base[i * inner];
                for (std::size_t i = 0; i < n; ++i) {
                    const long m = static_cast<long>(i) - half;
                    const std::size_t fft_idx = static_cast<std::size_t>((m + static_cast<long>(n)) % static_cast<long>(n));
                    const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
                    if (to_centered)
                        base[i * inner] = sgn * line[fft_idx];
                    else
                        base[fft_idx * inner] = sgn * line[i];
                }
            }
        }
    });
}

void scale_all(std::vector<cplx>& data, double s) {
    simd::scale(s, reinterpret_cast<double*>(data.data()), 2 * data.size());
}

void forward_axes(std::vector<cplx>& data, const std::vector<std::size_t>& shape, const std::vector<std::size_t>& axes,
                  const std::vector<double>& h) {
    if (axes.empty()) return;
    fft::transform_axes(data, shape, axes, -1);
    double s = 1.0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        shift_axis(data, shape, axes[i], true);
        s *= h[i];
    }
    scale_all(data, s);
}

void inverse_axes(std::vector<cplx>& data, const std::vector<std::size_t>& shape, const std::vector<std::size_t>& axes,
                  const std::vector<double>& h) {
    if (axes.empty()) return;
    double s = 1.0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        shift_axis(data, shape, axes[i], false);
        s /= static_cast<double>(shape[axes[i]]) * h[i];
    }
    fft::transform_axes(data, shape, axes, +1);
    scale_all(data, s);
}

}  // namespace

const char* rep_name(Rep r) {
    switch (r) {
        case Rep::XV: return "XV";
        case Rep::XXi: return "XXi";
        case Rep::EtaXi: return "EtaXi";
        case Rep::EtaV: return "EtaV";
    }
    return "?";
}

bool spatial_is_fourier(Rep r) { return r == Rep::EtaXi || r == Rep::EtaV; }
bool velocity_is_fourier(Rep r) { return r == Rep::XXi || r == Rep::EtaXi; }
Rep make_rep(bool sf, bool vf) { return sf ? (vf ? Rep::EtaXi : Rep::EtaV) : (vf ? Rep::XXi : Rep::XV); }

void Grid::validate() const {
    if (dim_x != 0 && dim_x != 1 && dim_x != 3) throw ArgumentError("grid: dim_x must be 0, 1 or 3");
    if (dim_v != 1 && dim_v != 3) throw ArgumentError("grid: dim_v must be 1 or 3");
    if (dim_x == 3 && dim_v != 3) throw ArgumentError("grid: dim_x = 3 requires dim_v = 3");
    if (!is_pow2(n_v) || n_v < 2) throw ArgumentError("grid: n_v must be a power of two >= 2");
    if (!(L_v > 0) || !std::isfinite(L_v)) throw ArgumentError("grid: L_v must be positive");
    if (dim_x > 0) {
        if (!is_pow2(n_x) || n_x < 2) throw ArgumentError("grid: n_x must be a power of two >= 2");
        if (!(L_x > 0) || !std::isfinite(L_x)) throw ArgumentError("grid: L_x must be positive");
    }
    if (dim_x == 3 && (n_x > 16 || n_v > 16)) throw ArgumentError("grid: full 3+3D grids are limited to n <= 16");
}

std::vector<double> Grid::x_nodes() const { return physical_nodes(n_x, L_x); }
std::vector<double> Grid::v_nodes() const { return physical_nodes(n_v, L_v); }
std::vector<double> Grid::eta_nodes() const { return dual_nodes(n_x, L_x); }
std::vector<double> Grid::xi_nodes() const { return dual_nodes(n_v, L_v); }

Grid maxwellian_grid(std::size_t n_v, double tail, int dim_x, std::size_t n_x, double L_x) {
    Grid g;
    g.dim_x = dim_x;
    g.n_x = dim_x == 0 ? 1 : n_x;
    g.L_x = L_x;
    g.n_v = n_v;
    g.L_v = gsl_cdf_ugaussian_Qinv(0.5 * tail);
    g.validate();
    return g;
}

Distribution::Distribution(const Grid& grid, int k, Rep rep, double eps) : grid_(grid), k_(k), rep_(rep), eps_(eps) {
    grid_.validate();
    if (k != 1 && k != 2) throw ArgumentError("distribution: k must be 1 or 2");
    if (grid_.dim_x == 0) grid_.n_x = 1;
    for (std::size_t a = 0; a < n_spatial_axes(); ++a) shape_.push_back(grid_.n_x);
    for (std::size_t a = 0; a < n_velocity_axes(); ++a) shape_.push_back(grid_.n_v);
    std::size_t total = 1;
    for (auto s : shape_) total *= s;
    if (total > (std::size_t{1} << 26)) throw ArgumentError("distribution: grid too large");
    values_.assign(total, cplx(0.0));
}

Distribution Distribution::from_function(const Grid& grid, int k,
                                         const std::function<cplx(const double*, const double*)>& fn, double eps) {
    Distribution f(grid, k, Rep::XV, eps);
    const auto xs = f.grid_.x_nodes();
    const auto vs = f.grid_.v_nodes();
    const std::size_t nx = f.n_spatial_axes(), nv = f.n_velocity_axes();
    par::for_chunks(f.size(), kChunk, [&](std::size_t b, std::size_t e) {
        std::vector<std::size_t> idx;
        std::vector<double> x(nx + 1), v(nv + 1);
        for (std::size_t i = b; i < e; ++i) {
            f.unravel(i, idx);
            for (std::size_t a = 0; a < nx; ++a) x[a] = xs[idx[a]];
            for (std::size_t a = 0; a < nv; ++a) v[a] = vs[idx[nx + a]];
            f.values_[i] = fn(x.data(), v.data());
        }
    });
    return f;
}

std::vector<double> Distribution::axis_nodes(std::size_t axis) const {
    if (is_spatial_axis(axis))
        return spatial_is_fourier(rep_) ? grid_.eta_nodes() : grid_.x_nodes();
    return velocity_is_fourier(rep_) ? grid_.xi_nodes() : grid_.v_nodes();
}

double Distribution::cell_measure() const {
    const double mx = spatial_is_fourier(rep_) ? grid_.dk_x() / (2.0 * kPi) : grid_.h_x();
    const double mv = velocity_is_fourier(rep_) ? grid_.dk_v() / (2.0 * kPi) : grid_.h_v();
    return std::pow(mx, static_cast<double>(n_spatial_axes())) * std::pow(mv, static_cast<double>(n_velocity_axes()));
}

void Distribution::unravel(std::size_t i, std::vector<std::size_t>& idx) const {
    idx.resize(shape_.size());
    for (std::size_t a = shape_.size(); a-- > 0;) {
        idx[a] = i % shape_[a];
        i /= shape_[a];
    }
}

double Distribution::l2_norm() const {
    const double s = par::reduce_sum(values_.size(), kChunk, [&](std::size_t b, std::size_t e) {
        double acc = 0;
        for (std::size_t i = b; i < e; ++i) acc += std::norm(values_[i]);
        return acc;
    });
    return std::sqrt(s * cell_measure());
}

double Distribution::l1_norm() const {
    return cell_measure() * par::reduce_sum(values_.size(), kChunk, [&](std::size_t b, std::size_t e) {
               double acc = 0;
               for (std::size_t i = b; i < e; ++i) acc += std::abs(values_[i]);
               return acc;
           });
}

cplx Distribution::integral() const {
    const double re = par::reduce_sum(values_.size(), kChunk, [&](std::size_t b, std::size_t e) {
        double acc = 0;
        for (std::size_t i = b; i < e; ++i) acc += values_[i].real();
        return acc;
    });
    const double im = par::reduce_sum(values_.size(), kChunk, [&](std::size_t b, std::size_t e) {
        double acc = 0;
        for (std::size_t i = b; i < e; ++i) acc += values_[i].imag();
        return acc;
    });
    return cell_measure() * cplx(re, im);
}

double Distribution::max_abs() const {
    double m = 0;
    for (const auto& v : values_) m = std::max(m, std::abs(v));
    return m;
}

double Distribution::min_real() const {
    double m = values_.empty() ? 0.0 : values_[0].real();
    for (const auto& v : values_) m = std::min(m, v.real());
    return m;
}

void require_compatible(const Distribution& a, const Distribution& b, const char* who) {
    if (a.grid() != b.grid() || a.k() != b.k()) throw ArgumentError(std::string(who) + ": grid mismatch");
    if (a.rep() != b.rep()) throw ArgumentError(std::string(who) + ": representation mismatch");
}

Distribution& Distribution::operator+=(const Distribution& o) {
    require_compatible(*this, o, "operator+=");
    simd::axpy(1.0, reinterpret_cast<const double*>(o.values_.data()), reinterpret_cast<double*>(values_.data()),
               2 * values_.size());
    return *this;
}

Distribution& Distribution::operator-=(const Distribution& o) {
    require_compatible(*this, o, "operator-=");
    simd::axpy(-1.0, reinterpret_cast<const double*>(o.values_.data()), reinterpret_cast<double*>(values_.data()),
               2 * values_.size());
    return *this;
}

Distribution& Distribution::operator*=(cplx a) {
    if (a.imag() == 0.0) {
        scale_all(values_, a.real());
    } else {
        for (auto& v : values_) v *= a;
    }
    return *this;
}

Distribution operator+(Distribution a, const Distribution& b) { return a += b; }
Distribution operator-(Distribution a, const Distribution& b) { return a -= b; }
Distribution operator*(cplx s, Distribution a) { return a *= s; }

Distribution to_rep(const Distribution& f, Rep target) {
    Distribution out = f;
    const bool sf = spatial_is_fourier(f.rep()), vf = velocity_is_fourier(f.rep());
    const bool tsf = spatial_is_fourier(target), tvf = velocity_is_fourier(target);
    std::vector<std::size_t> fwd, inv;
    std::vector<double> hf, hi;
    const Grid& g = f.grid();
    for (std::size_t a = 0; a < f.n_spatial_axes(); ++a) {
        if (sf == tsf) continue;
        (tsf ? fwd : inv).push_back(a);
        (tsf ? hf : hi).push_back(g.h_x());
    }
    for (std::size_t a = 0; a < f.n_velocity_axes(); ++a) {
        if (vf == tvf) continue;
        (tvf ? fwd : inv).push_back(f.n_spatial_axes() + a);
        (tvf ? hf : hi).push_back(g.h_v());
    }
    forward_axes(out.values(), out.shape(), fwd, hf);
    inverse_axes(out.values(), out.shape(), inv, hi);
    out.set_rep(target);
    return out;
}

double sobolev_norm(const Distribution& f, const NormSpec& spec) {
    if (spec.r < 0 || spec.s < 0) throw ArgumentError("sobolev_norm: orders must be nonnegative");
    const Distribution g = to_rep(f, Rep::EtaV);
    const Grid& grid = g.grid();
    const auto eta = grid.eta_nodes();
    const auto v = grid.v_nodes();
    const std::size_t nsx = g.n_spatial_axes();
    const int k = g.k();
    const double sum = par::reduce_sum(g.size(), kChunk, [&](std::size_t b, std::size_t e) {
        std::vector<std::size_t> idx;
        double acc = 0;
        for (std::size_t i = b; i < e; ++i) {
            g.unravel(i, idx);
            double w = 1.0;
            for (int p = 0; p < k; ++p) {
                double e2 = 0, v2 = 0;
                for (int d = 0; d < grid.dim_x; ++d) e2 += eta[idx[p * grid.dim_x + d]] * eta[idx[p * grid.dim_x + d]];
                for (int d = 0; d < grid.dim_v; ++d) {
                    const double vv = v[idx[nsx + p * grid.dim_v + d]];
                    v2 += vv * vv;
                }
                w *= std::pow(1.0 + e2, spec.r) * std::pow(1.0 + v2, spec.s);
            }
            acc += w * std::norm(g[i]);
        }
        return acc;
    });
    return std::sqrt(sum * g.cell_measure());
}

Distribution free_transport(const Distribution& f, double t, bool* noop_warning) {
    if (noop_warning) *noop_warning = false;
    if (f.grid().dim_x == 0) {
        if (noop_warning) *noop_warning = true;
        return f;
    }
    if (t == 0.0) return f;
    const Rep original = f.rep();
    Distribution g = to_rep(f, Rep::EtaV);
    const Grid& grid = g.grid();
    const auto eta = grid.eta_nodes();
    const auto v = grid.v_nodes();
    const std::size_t nsx = g.n_spatial_axes();
    const int k = g.k();
    std::vector<double> theta(g.size());
    par::for_chunks(g.size(), kChunk, [&](std::size_t b, std::size_t e) {
        std::vector<std::size_t> idx;
        for (std::size_t i = b; i < e; ++i) {
            g.unravel(i, idx);
            double ph = 0;
            for (int p = 0; p < k; ++p)
                for (int d = 0; d < grid.dim_x; ++d)
                    ph += eta[idx[p * grid.dim_x + d]] * v[idx[nsx + p * grid.dim_v + d]];
            theta[i] = -t * ph;
        }
    });
    simd::cphase(g.values().data(), theta.data(), g.size());
    return to_rep(g, original);
}

DensityMatrix DensityMatrix::zero(int dim, std::size_t n, double L) {
    if (dim != 1 && dim != 3) throw ArgumentError("density matrix: dim must be 1 or 3");
    if (!is_pow2(n) || n < 2) throw ArgumentError("density matrix: n must be a power of two");
    DensityMatrix dm;
    dm.dim = dim;
    dm.n = n;
    dm.L = L;
    const std::size_t p = dm.points();
    dm.values.assign(p * p, cplx(0.0));
    return dm;
}

std::size_t DensityMatrix::points() const {
    std::size_t p = 1;
    for (int d = 0; d < dim; ++d) p *= n;
    return p;
}

DensityMatrix DensityMatrix::pure(int dim, std::size_t n, double L, const std::function<cplx(const double*)>& psi) {
    DensityMatrix dm = zero(dim, n, L);
    const std::size_t p = dm.points();
    const auto nodes = physical_nodes(n, L);
    std::vector<cplx> amp(p);
    double y[3] = {0, 0, 0};
    for (std::size_t i = 0; i < p; ++i) {
        std::size_t r = i;
        for (int d = dim; d-- > 0;) {
            y[d] = nodes[r % n];
            r /= n;
        }
        amp[i] = psi(y);
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) dm.values[i * p + j] = amp[i] * std::conj(amp[j]);
    return dm;
}

double DensityMatrix::hermitian_defect() const {
    const std::size_t p = points();
    double defect = 0, peak = 0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            defect = std::max(defect, std::abs(values[i * p + j] - std::conj(values[j * p + i])));
            peak = std::max(peak, std::abs(values[i * p + j]));
        }
    return peak == 0 ? 0.0 : defect / peak;
}

cplx DensityMatrix::trace() const {
    const std::size_t p = points();
    cplx t = 0;
    for (std::size_t i = 0; i < p; ++i) t += values[i * p + i];
    return t * std::pow(h(), dim);
}

Distribution wigner(const DensityMatrix& dm, double eps) {
    if (!(eps > 0)) throw ArgumentError("wigner: eps must be positive");
    if (dm.values.size() != dm.points() * dm.points()) throw ArgumentError("wigner: kernel size mismatch");
    if (dm.hermitian_defect() > 1e-12) throw ArgumentError("wigner: density matrix is not Hermitian");
    Grid g;
    g.dim_x = dm.dim;
    g.dim_v = dm.dim;
    g.n_x = dm.n;
    g.L_x = dm.L;
    g.n_v = dm.n;
    g.L_v = kPi * eps / (2.0 * dm.h());
    Distribution f(g, 1, Rep::XXi, eps);
    const std::size_t n = dm.n, p = dm.points();
    const auto half = static_cast<long>(n / 2);
    const int d = dm.dim;
    par::for_chunks(f.size(), kChunk, [&](std::size_t b, std::size_t e) {
        std::vector<std::size_t> idx;
        for (std::size_t i = b; i < e; ++i) {
            f.unravel(i, idx);
            std::size_t y = 0, yp = 0;
            bool inside = true;
            for (int a = 0; a < d && inside; ++a) {
                const long x = static_cast<long>(idx[a]);
                const long m = static_cast<long>(idx[d + a]) - half;
                const long i1 = x + m, i2 = x - m;
                inside = i1 >= 0 && i2 >= 0 && i1 < static_cast<long>(n) && i2 < static_cast<long>(n);
                y = y * n + static_cast<std::size_t>(std::max(0L, i1));
                yp = yp * n + static_cast<std::size_t>(std::max(0L, i2));
            }
            f[i] = inside ? dm.values[y * p + yp] : cplx(0.0);
        }
    });
    return to_rep(f, Rep::XV);
}

namespace {

std::vector<std::pair<double, double>> marginal(const Distribution& f0, std::size_t axis) {
    const Distribution f = f0.rep() == Rep::XV ? f0 : to_rep(f0, Rep::XV);
    const auto nodes = f.axis_nodes(axis);
    const double cell = f.cell_measure();
    const double own = f.is_spatial_axis(axis) ? f.grid().h_x() : f.grid().h_v();
    std::vector<double> acc(nodes.size(), 0.0);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.unravel(i, idx);
        acc[idx[axis]] += f[i].real();
    }
    std::vector<std::pair<double, double>> out;
    for (std::size_t j = 0; j < nodes.size(); ++j) out.emplace_back(nodes[j], acc[j] * cell / own);
    return out;
}

}  // namespace

std::vector<std::pair<double, double>> velocity_marginal(const Distribution& f, std::size_t velocity_axis) {
    if (velocity_axis >= f.n_velocity_axes()) throw ArgumentError("velocity_marginal: axis out of range");
    return marginal(f, f.n_spatial_axes() + velocity_axis);
}

std::vector<std::pair<double, double>> spatial_marginal(const Distribution& f, std::size_t spatial_axis) {
    if (spatial_axis >= f.n_spatial_axes()) throw ArgumentError("spatial_marginal: axis out of range");
    return marginal(f, spatial_axis);
}

std::string marginal_csv(const std::vector<std::pair<double, double>>& m, const std::string& coordinate) {
    std::string out = coordinate + ",value\n";
    for (const auto& [c, v] : m) out += format_double(c) + "," + format_double(v) + "\n";
    return out;
}

double centroid(const Distribution& f0, std::size_t axis) {
    const Distribution f = f0.rep() == Rep::XV ? f0 : to_rep(f0, Rep::XV);
    const auto nodes = f.axis_nodes(axis);
    double num = 0, den = 0;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < f.size(); ++i) {
        f.unravel(i, idx);
        num += nodes[idx[axis]] * f[i].real();
        den += f[i].real();
    }
    return num / den;
}

namespace {
constexpr char kMagic[8] = {'Q', 'K', 'D', 'I', 'S', 'T', '1', '\0'};

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw ArgumentError("read_binary: truncated header");
    return v;
}
}  // namespace

void write_binary(const Distribution& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ArgumentError("write_binary: cannot open " + path);
    os.write(kMagic, sizeof kMagic);
    const Grid& g = f.grid();
    put<std::int32_t>(os, g.dim_x);
    put<std::int32_t>(os, g.dim_v);
    put<std::uint64_t>(os, g.n_x);
    put<double>(os, g.L_x);
    put<std::uint64_t>(os, g.n_v);
    put<double>(os, g.L_v);
    put<std::int32_t>(os, f.k());
    put<std::int32_t>(os, static_cast<std::int32_t>(f.rep()));
    put<double>(os, f.eps());
    put<std::uint64_t>(os, f.size());
    os.write(reinterpret_cast<const char*>(f.values().data()),
             static_cast<std::streamsize>(f.size() * sizeof(cplx)));
    if (!os) throw ArgumentError("write_binary: write failed for " + path);
}

Distribution read_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ArgumentError("read_binary: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ArgumentError("read_binary: bad magic");
    Grid g;
    g.dim_x = get<std::int32_t>(is);
    g.dim_v = get<std::int32_t>(is);
    g.n_x = get<std::uint64_t>(is);
    g.L_x = get<double>(is);
    g.n_v = get<std::uint64_t>(is);
    g.L_v = get<double>(is);
    const int k = get<std::int32_t>(is);
    const auto tag = get<std::int32_t>(is);
    const double eps = get<double>(is);
    const auto count = get<std::uint64_t>(is);
    if (tag < 0 || tag > 3) throw ArgumentError("read_binary: bad representation tag");
    Distribution f(g, k, static_cast<Rep>(tag), eps);
    if (count != f.size()) throw ArgumentError("read_binary: value count does not match header");
    is.read(reinterpret_cast<char*>(f.values().data()), static_cast<std::streamsize>(count * sizeof(cplx)));
    if (!is) throw ArgumentError("read_binary: truncated payload");
    return f;
}

}  // namespace qk::phase
