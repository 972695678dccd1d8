#include "qkinetic/boardgame.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "qkinetic/numerics.hpp"
#include "qkinetic/rng.hpp"

namespace qk::boardgame {

namespace {
constexpr int kMaxClassK = 8;
constexpr int kMaxCatalanK = 35;
}  // namespace

CollapsingMap::CollapsingMap(std::vector<int> values) : values_(std::move(values)) {
    if (values_.empty()) throw ArgumentError("collapsing map needs k >= 1");
    if (values_[0] != 1) throw ArgumentError("collapsing map must send 2 to 1");
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const int j = static_cast<int>(i) + 2;
        if (values_[i] < 1 || values_[i] >= j)
            throw ArgumentError("collapsing map violates 1 <= mu(j) < j at j = " + std::to_string(j));
    }
}

int CollapsingMap::operator()(int j) const {
    if (j < 2 || j > k() + 1) throw ArgumentError("collapsing map evaluated outside 2..k+1");
    return values_[static_cast<std::size_t>(j - 2)];
}

bool CollapsingMap::upper_echelon() const { return std::is_sorted(values_.begin(), values_.end()); }

std::string CollapsingMap::to_string() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < values_.size(); ++i) os << (i ? " " : "") << values_[i];
    os << ')';
    return os.str();
}

EchelonTree EchelonTree::with_nodes(int n_nodes) {
    EchelonTree t;
    t.left.assign(static_cast<std::size_t>(n_nodes + 1), 0);
    t.right.assign(static_cast<std::size_t>(n_nodes + 1), 0);
    return t;
}

int EchelonTree::parent(int label) const {
    for (std::size_t p = 1; p < left.size(); ++p)
        if (left[p] == label || right[p] == label) return static_cast<int>(p);
    return 0;
}

bool EchelonTree::admissible() const {
    const int n = static_cast<int>(left.size()) - 1;
    if (n < 2 || right.size() != left.size()) return false;
    if (left[1] != 0 || right[1] != 2) return false;
    std::vector<int> parents(static_cast<std::size_t>(n + 1), 0);
    for (int p = 1; p <= n; ++p) {
        for (int c : {left[p], right[p]}) {
            if (c == 0) continue;
            if (c < 1 || c > n || c <= p || parents[c] != 0) return false;
            parents[c] = p;
        }
    }
    for (int c = 2; c <= n; ++c)
        if (parents[c] == 0) return false;
    return true;
}

std::vector<int> EchelonTree::preorder() const {
    std::vector<int> out;
    std::function<void(int)> walk = [&](int node) {
        if (node == 0) return;
        out.push_back(node);
        walk(left[node]);
        walk(right[node]);
    };
    if (left.size() > 2) walk(2);
    return out;
}

Skeleton Skeleton::of(const EchelonTree& t) {
    Skeleton s;
    for (int node : t.preorder()) {
        s.code_.push_back(t.left[node] ? 'L' : '-');
        s.code_.push_back(t.right[node] ? 'R' : '-');
    }
    return s;
}

Skeleton Skeleton::parse(const std::string& code) {
    if (code.empty() || code.size() % 2 != 0) throw ArgumentError("skeleton code has odd or zero length");
    std::size_t pos = 0;
    std::function<void()> node = [&] {
        if (pos + 2 > code.size()) throw ArgumentError("skeleton code truncated");
        const char l = code[pos], r = code[pos + 1];
        if ((l != 'L' && l != '-') || (r != 'R' && r != '-')) throw ArgumentError("bad skeleton symbol");
        pos += 2;
        if (l == 'L') node();
        if (r == 'R') node();
    };
    node();
    if (pos != code.size()) throw ArgumentError("skeleton code has trailing nodes");
    Skeleton s;
    s.code_ = code;
    return s;
}

bool TimeDomain::contains(const std::vector<double>& t) const {
    for (const auto& [a, b] : relations)
        if (t.at(static_cast<std::size_t>(a)) < t.at(static_cast<std::size_t>(b))) return false;
    return true;
}

Permutation identity_permutation(int k) {
    Permutation p(static_cast<std::size_t>(k + 2));
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<int>(i);
    return p;
}

EchelonTree mu_to_tree(const CollapsingMap& m) {
    const int n = m.k() + 1;
    EchelonTree t = EchelonTree::with_nodes(n);
    for (int j = 1; j <= n; ++j) {
        for (int a = j + 1; a <= n && j >= 2; ++a) {
            if (m(a) == m(j)) {
                t.left[j] = a;
                break;
            }
        }
        for (int b = j + 1; b <= n; ++b) {
            if (m(b) == j) {
                t.right[j] = b;
                break;
            }
        }
    }
    return t;
}

CollapsingMap tree_to_mu(const EchelonTree& t) {
    if (!t.admissible()) throw ArgumentError("tree_to_mu: tree is not admissible");
    const int n = static_cast<int>(t.left.size()) - 1;
    std::vector<int> mu(static_cast<std::size_t>(n + 1), 0);
    for (int p = 1; p <= n; ++p)
        if (t.right[p]) mu[t.right[p]] = p;
    // Parents carry smaller labels, so increasing order sees mu(parent) first.
    for (int p = 2; p <= n; ++p)
        if (t.left[p]) mu[t.left[p]] = mu[p];
    return CollapsingMap(std::vector<int>(mu.begin() + 2, mu.end()));
}

namespace {

// Child slots of the skeleton indexed by preorder position.
struct Shape {
    std::vector<int> left, right;  // preorder index of child or -1
};

Shape shape_of(const Skeleton& skel) {
    const std::string& c = skel.code();
    Shape s;
    s.left.assign(static_cast<std::size_t>(skel.size()), -1);
    s.right.assign(static_cast<std::size_t>(skel.size()), -1);
    int next = 0;
    std::function<int()> node = [&]() -> int {
        const int me = next++;
        const char l = c[2 * me], r = c[2 * me + 1];
        if (l == 'L') s.left[me] = node();
        if (r == 'R') s.right[me] = node();
        return me;
    };
    node();
    return s;
}

EchelonTree tree_from_labels(const Shape& s, const std::vector<int>& labels) {
    const int k = static_cast<int>(labels.size());
    EchelonTree t = EchelonTree::with_nodes(k + 1);
    t.right[1] = labels[0];
    for (int i = 0; i < k; ++i) {
        if (s.left[i] >= 0) t.left[labels[i]] = labels[s.left[i]];
        if (s.right[i] >= 0) t.right[labels[i]] = labels[s.right[i]];
    }
    return t;
}

}  // namespace

EchelonTree canonicalize(const Skeleton& skel) {
    const Shape s = shape_of(skel);
    const int k = skel.size();
    std::vector<int> labels(static_cast<std::size_t>(k), 0);
    std::vector<int> node_of_label(static_cast<std::size_t>(k + 2), -1);
    labels[0] = 2;
    node_of_label[2] = 0;
    int j = 2;
    while (j < k + 1) {
        const int cur = node_of_label[j];
        if (s.left[cur] >= 0) {
            labels[s.left[cur]] = j + 1;
            node_of_label[j + 1] = s.left[cur];
            ++j;
            continue;
        }
        int found = -1;
        for (int l = 2; l <= j && found < 0; ++l) {
            const int node = node_of_label[l];
            if (s.right[node] >= 0 && labels[s.right[node]] == 0) found = s.right[node];
        }
        if (found < 0) break;
        labels[found] = j + 1;
        node_of_label[j + 1] = found;
        ++j;
    }
    return tree_from_labels(s, labels);
}

std::vector<CollapsingMap> enumerate_class(const Skeleton& skel) {
    const int k = skel.size();
    if (k > kMaxClassK) throw UnsupportedError("enumerate_class: k > 8 is refused");
    const Shape s = shape_of(skel);
    std::vector<int> labels(static_cast<std::size_t>(k), 0);
    std::vector<CollapsingMap> out;
    // Assign labels 2, 3, ... in order; the next label may go to any node
    // whose parent is already labeled, which is exactly admissibility.
    std::vector<int> frontier{0};
    std::function<void(int)> extend = [&](int next_label) {
        if (next_label == k + 2) {
            out.push_back(tree_to_mu(tree_from_labels(s, labels)));
            return;
        }
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            const int node = frontier[i];
            labels[node] = next_label;
            std::vector<int> saved = frontier;
            frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(i));
            if (s.left[node] >= 0) frontier.push_back(s.left[node]);
            if (s.right[node] >= 0) frontier.push_back(s.right[node]);
            extend(next_label + 1);
            frontier = std::move(saved);
            labels[node] = 0;
        }
    };
    extend(2);
    std::sort(out.begin(), out.end());
    return out;
}

std::uint64_t count_skeletons(int k) {
    if (k < 0) throw ArgumentError("count_skeletons: negative k");
    if (k > kMaxCatalanK) throw ArgumentError("count_skeletons: k too large for 64-bit counts");
    // C(n+1) = C(n) * 2(2n+1) / (n+2). Dividing out the common factor first
    // keeps every intermediate within 64 bits.
    std::uint64_t c = 1;
    for (int n = 0; n < k; ++n) {
        const std::uint64_t den = static_cast<std::uint64_t>(n + 2);
        const std::uint64_t g = std::gcd(c, den);
        c = (c / g) * (static_cast<std::uint64_t>(2 * (2 * n + 1)) / (den / g));
    }
    return c;
}

std::vector<Skeleton> all_skeletons(int k) {
    if (k < 1) throw ArgumentError("all_skeletons: k must be at least 1");
    if (k > 12) throw UnsupportedError("all_skeletons: k > 12 is refused");
    // codes[n] = all preorder codes with n nodes
    std::vector<std::vector<std::string>> codes(static_cast<std::size_t>(k + 1));
    codes[0] = {""};
    for (int n = 1; n <= k; ++n) {
        for (int nl = 0; nl < n; ++nl) {
            const int nr = n - 1 - nl;
            for (const auto& l : codes[nl])
                for (const auto& r : codes[nr])
                    codes[n].push_back(std::string(1, nl ? 'L' : '-') + (nr ? 'R' : '-') + l + r);
        }
    }
    std::vector<Skeleton> out;
    for (const auto& c : codes[k]) out.push_back(Skeleton::parse(c));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<CollapsingMap> all_maps(int k) {
    if (k < 1 || k > 10) throw ArgumentError("all_maps: k must lie in 1..10");
    std::vector<CollapsingMap> out;
    std::vector<int> v(static_cast<std::size_t>(k), 1);
    while (true) {
        out.emplace_back(v);
        int i = k - 1;
        while (i >= 1 && v[i] == i + 1) v[i--] = 1;  // mu(j) < j with j = i + 2
        if (i < 1) break;
        ++v[i];
    }
    return out;
}

TimeDomain time_domain(const EchelonTree& t) {
    if (!t.admissible()) throw ArgumentError("time_domain: tree is not admissible");
    TimeDomain d;
    d.relations.emplace_back(1, t.right[1]);
    for (int node : t.preorder()) {
        if (t.left[node]) d.relations.emplace_back(node, t.left[node]);
        if (t.right[node]) d.relations.emplace_back(node, t.right[node]);
    }
    return d;
}

bool km_move_allowed(const CollapsingMap& m, int j) {
    if (j < 2 || j + 1 > m.k() + 1) return false;
    return m(j) != m(j + 1) && m(j + 1) < j;
}

std::pair<CollapsingMap, Permutation> km_move(const CollapsingMap& m, const Permutation& sigma, int j) {
    if (sigma.size() != static_cast<std::size_t>(m.k() + 2)) throw ArgumentError("km_move: permutation size mismatch");
    if (!km_move_allowed(m, j)) throw ArgumentError("km_move: move (" + std::to_string(j) + "," +
                                                    std::to_string(j + 1) + ") is not acceptable for " +
                                                    m.to_string());
    auto tau = [j](int i) { return i == j ? j + 1 : (i == j + 1 ? j : i); };
    std::vector<int> mu(m.values().size());
    for (int i = 2; i <= m.k() + 1; ++i) mu[static_cast<std::size_t>(i - 2)] = tau(m(tau(i)));
    Permutation s(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) s[i] = tau(sigma[i]);
    return {CollapsingMap(std::move(mu)), std::move(s)};
}

std::size_t region_mismatches(const Skeleton& skel, std::size_t n_points, std::uint64_t seed) {
    const int k = skel.size();
    const EchelonTree canon = canonicalize(skel);
    const TimeDomain domain = time_domain(canon);
    const std::vector<int> canon_order = canon.preorder();
    // For each member, relabel[member label] = canonical label of the same node.
    std::vector<std::vector<int>> relabel;
    for (const auto& m : enumerate_class(skel)) {
        const std::vector<int> order = mu_to_tree(m).preorder();
        std::vector<int> r(static_cast<std::size_t>(k + 2), 0);
        r[1] = 1;
        for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = canon_order[i];
        relabel.push_back(std::move(r));
    }
    auto gen = rng::engine(seed, 0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> t(static_cast<std::size_t>(k + 2), 0.0);
    std::size_t mismatches = 0;
    for (std::size_t p = 0; p < n_points; ++p) {
        t[1] = 1.0;
        for (int i = 2; i <= k + 1; ++i) t[i] = unif(gen);
        bool in_union = false;
        for (const auto& r : relabel) {
            bool ordered = true;
            for (int i = 1; i <= k && ordered; ++i) ordered = t[r[i]] >= t[r[i + 1]];
            if (ordered) {
                in_union = true;
                break;
            }
        }
        if (in_union != domain.contains(t)) ++mismatches;
    }
    return mismatches;
}

std::vector<ClassRow> tabulate(int k) {
    std::vector<ClassRow> rows;
    for (const auto& skel : all_skeletons(k)) {
        const EchelonTree canon = canonicalize(skel);
        rows.push_back({skel, enumerate_class(skel).size(), tree_to_mu(canon), time_domain(canon)});
    }
    return rows;
}

std::string format_domain(const TimeDomain& d) {
    std::ostringstream os;
    for (std::size_t i = 0; i < d.relations.size(); ++i)
        os << (i ? ";" : "") << 't' << d.relations[i].first << ">=t" << d.relations[i].second;
    return os.str();
}

}  // namespace qk::boardgame
