#include "qkinetic/numerics.hpp"

#include <gsl/gsl_integration.h>

#include <cstdio>
#include <map>
#include <memory>
#include <mutex>

namespace qk {
namespace {

// GSL rules on [-1, 1], cached per order.
const Rule1D& reference_rule(std::size_t n) {
    static std::mutex m;
    static std::map<std::size_t, std::unique_ptr<Rule1D>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(n);
    if (it != cache.end()) return *it->second;
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(n);
    if (t == nullptr) throw ArgumentError("gauss_legendre: allocation failed");
    auto rule = std::make_unique<Rule1D>();
    rule->x.resize(n);
    rule->w.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        gsl_integration_glfixed_point(-1.0, 1.0, i, &rule->x[i], &rule->w[i], t);
    gsl_integration_glfixed_table_free(t);
    auto& ref = *rule;
    cache.emplace(n, std::move(rule));
    return ref;
}

}  // namespace

Rule1D gauss_legendre(std::size_t n, double a, double b) {
    if (n == 0) throw ArgumentError("gauss_legendre: n must be positive");
    const Rule1D& ref = reference_rule(n);
    Rule1D out;
    out.x.resize(n);
    out.w.resize(n);
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t i = 0; i < n; ++i) {
        out.x[i] = mid + half * ref.x[i];
        out.w[i] = half * ref.w[i];
    }
    return out;
}

Rule1D composite_gauss_legendre(std::size_t n, std::size_t panels, double a, double b) {
    if (panels == 0) throw ArgumentError("composite_gauss_legendre: panels must be positive");
    Rule1D out;
    const double width = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const Rule1D r = gauss_legendre(n, a + width * p, a + width * (p + 1));
        out.x.insert(out.x.end(), r.x.begin(), r.x.end());
        out.w.insert(out.w.end(), r.w.begin(), r.w.end());
    }
    return out;
}

SphereRule SphereRule::product(std::size_t n_theta, std::size_t n_phi) {
    if (n_theta == 0 || n_phi == 0) throw ArgumentError("SphereRule: empty rule");
    SphereRule s;
    s.n_theta = n_theta;
    s.n_phi = n_phi;
    const Rule1D mu = gauss_legendre(n_theta);
    const double dphi = 2.0 * kPi / static_cast<double>(n_phi);
    for (std::size_t i = 0; i < n_theta; ++i) {
        for (std::size_t j = 0; j < n_phi; ++j) {
            s.nodes.push_back(unit_from_angles(mu.x[i], dphi * (static_cast<double>(j) + 0.5)));
            s.weights.push_back(mu.w[i] * dphi);
        }
    }
    return s;
}

SphereRule SphereRule::with_count(std::size_t n_omega) {
    if (n_omega < 2 || n_omega % 2 != 0)
        throw ArgumentError("SphereRule: node count must be even and at least 2");
    std::size_t best = 1;
    for (std::size_t t = 1; t * t <= n_omega; ++t) {
        if (n_omega % t != 0) continue;
        const std::size_t p = n_omega / t;
        if (p % 2 != 0 || p < 2 * t) continue;
        best = t;
    }
    return product(best, n_omega / best);
}

std::size_t SphereRule::antipode(std::size_t i) const {
    // (mu_a, phi_b) -> (-mu_a, phi_b + pi): Gauss-Legendre nodes are mirrored.
    const std::size_t a = i / n_phi, b = i % n_phi;
    return (n_theta - 1 - a) * n_phi + (b + n_phi / 2) % n_phi;
}

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("fit_loglog: need >= 2 paired points");
    const std::size_t n = x.size();
    double sx = 0, sy = 0;
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
        sx += lx[i];
        sy += ly[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    SlopeFit f;
    f.slope = sxx > 0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (f.intercept + f.slope * lx[i]);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

}  // namespace qk

namespace qk {

ScalingReport ScalingReport::fit(std::vector<double> eps, std::vector<double> norms) {
    ScalingReport r;
    const SlopeFit f = fit_loglog(eps, norms);
    r.eps = std::move(eps);
    r.norms = std::move(norms);
    r.slope = f.slope;
    r.residual = f.residual;
    return r;
}

std::string ScalingReport::csv() const {
    std::string out = "eps,norm\n";
    for (std::size_t i = 0; i < eps.size(); ++i) out += format_double(eps[i]) + "," + format_double(norms[i]) + "\n";
    out += "slope," + format_double(slope) + "\n";
    out += "residual," + format_double(residual) + "\n";
    return out;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace qk
