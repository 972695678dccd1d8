#pragma once

// Board-game combinatorics for the Duhamel expansion: collapsing maps,
// their binary-tree encoding, skeletons (unlabeled shapes), equivalence
// classes under acceptable label swaps, and time-integration domains.
//
// Labels follow the usual convention: node 1 is the root and has only a
// right child (node 2); a collapsing map of size k assigns mu(j) < j to
// every j = 2..k+1 with mu(2) = 1.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace qk::boardgame {

class CollapsingMap {
public:
    /// `values` lists mu(2), mu(3), ..., mu(k+1). Throws ArgumentError when
    /// the map is not collapsing.
    explicit CollapsingMap(std::vector<int> values);

    int k() const { return static_cast<int>(values_.size()); }
    /// mu(j) for 2 <= j <= k+1.
    int operator()(int j) const;
    const std::vector<int>& values() const { return values_; }
    /// mu(j) <= mu(j+1) for all 2 <= j <= k.
    bool upper_echelon() const;
    std::string to_string() const;

    friend bool operator==(const CollapsingMap& a, const CollapsingMap& b) { return a.values_ == b.values_; }
    friend bool operator<(const CollapsingMap& a, const CollapsingMap& b) { return a.values_ < b.values_; }

private:
    std::vector<int> values_;
};

/// Labeled binary tree on {1, ..., k+1}. Children are stored per label with
/// 0 meaning "absent"; index 0 is unused.
struct EchelonTree {
    std::vector<int> left;
    std::vector<int> right;

    static EchelonTree with_nodes(int n_nodes);
    int k() const { return static_cast<int>(left.size()) - 2; }
    /// Parent label, or 0 for the root.
    int parent(int label) const;
    /// Node 1 is a root with only the right child 2, every other node has a
    /// unique parent, and each child label exceeds its parent's label.
    bool admissible() const;
    /// Labels of the subtree under node 2 in preorder (left before right).
    std::vector<int> preorder() const;

    friend bool operator==(const EchelonTree& a, const EchelonTree& b) {
        return a.left == b.left && a.right == b.right;
    }
};

/// Unlabeled shape of the subtree rooted at node 2, stored as a preorder
/// string with two presence bits ("L", "R") per node.
class Skeleton {
public:
    static Skeleton of(const EchelonTree& t);
    /// Parses and validates a serialized code.
    static Skeleton parse(const std::string& code);

    int size() const { return static_cast<int>(code_.size() / 2); }
    const std::string& code() const { return code_; }

    friend bool operator==(const Skeleton& a, const Skeleton& b) { return a.code_ == b.code_; }
    friend bool operator<(const Skeleton& a, const Skeleton& b) { return a.code_ < b.code_; }

private:
    std::string code_;
};

/// Inequality t_first >= t_second.
using Inequality = std::pair<int, int>;

struct TimeDomain {
    std::vector<Inequality> relations;
    /// `t` is indexed by label (entries 0 is ignored), size k+2.
    bool contains(const std::vector<double>& t) const;
};

/// Permutation of {2, ..., k+1} stored by label; entries 0 and 1 are fixed.
using Permutation = std::vector<int>;

Permutation identity_permutation(int k);

EchelonTree mu_to_tree(const CollapsingMap& m);
CollapsingMap tree_to_mu(const EchelonTree& t);
EchelonTree canonicalize(const Skeleton& skel);
std::vector<CollapsingMap> enumerate_class(const Skeleton& skel);
std::uint64_t count_skeletons(int k);
std::vector<Skeleton> all_skeletons(int k);
std::vector<CollapsingMap> all_maps(int k);
TimeDomain time_domain(const EchelonTree& t);

bool km_move_allowed(const CollapsingMap& m, int j);
/// Swaps labels j and j+1. Throws ArgumentError if the move is not acceptable.
std::pair<CollapsingMap, Permutation> km_move(const CollapsingMap& m, const Permutation& sigma, int j);

/// Monte-Carlo comparison of the union of simplices {t_1 >= t_{pi(2)} >= ...}
/// over the members of a class against the canonical tree's time domain.
/// Returns the number of sampled points on which the two predicates differ.
std::size_t region_mismatches(const Skeleton& skel, std::size_t n_points, std::uint64_t seed);

struct ClassRow {
    Skeleton skeleton;
    std::size_t class_size = 0;
    CollapsingMap canonical;
    TimeDomain domain;
};

/// One row per skeleton with k nodes, in skeleton-code order.
std::vector<ClassRow> tabulate(int k);

std::string format_domain(const TimeDomain& d);

}  // namespace qk::boardgame
