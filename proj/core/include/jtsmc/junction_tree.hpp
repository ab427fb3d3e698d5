#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "jtsmc/graph.hpp"
#include "jtsmc/rng.hpp"
#include "jtsmc/vertex_set.hpp"

namespace jtsmc {

using BigInt = boost::multiprecision::cpp_int;

/// Natural log of a positive big integer.
double log_of(const BigInt& x);

class InvalidTreeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Undirected link between two node indices, stored with a < b.
struct Link {
  std::uint32_t a = 0;
  std::uint32_t b = 0;

  Link() = default;
  Link(std::uint32_t x, std::uint32_t y) : a(x < y ? x : y), b(x < y ? y : x) {}

  friend auto operator<=>(const Link&, const Link&) = default;
};

/// Structural fingerprint of a junction tree: node sets in canonical order
/// and links as pairs of node sets. Two trees are the same tree iff their
/// keys are equal.
struct TreeKey {
  std::vector<VertexSet> nodes;
  std::vector<std::pair<VertexSet, VertexSet>> links;

  friend auto operator<=>(const TreeKey&, const TreeKey&) = default;
};

/// A tree whose nodes are vertex sets; each link carries the intersection of
/// its endpoints as separator. Construction does not validate; call
/// validate() on untrusted input.
class JunctionTree {
 public:
  JunctionTree() = default;
  JunctionTree(int universe, std::vector<VertexSet> nodes, std::vector<Link> links);

  /// Single node {v}.
  static JunctionTree trivial(int universe, VertexId v);

  int universe() const { return universe_; }
  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }

  VertexSet node(std::size_t i) const { return nodes_[i]; }
  std::span<const VertexSet> nodes() const { return nodes_; }
  std::span<const Link> links() const { return links_; }
  std::span<const std::uint32_t> neighbors(std::size_t i) const { return adjacency_[i]; }
  bool adjacent(std::size_t i, std::size_t j) const;

  VertexSet separator(const Link& l) const { return nodes_[l.a] & nodes_[l.b]; }
  VertexSet separator(std::size_t i, std::size_t j) const { return nodes_[i] & nodes_[j]; }

  /// Union of all nodes.
  VertexSet vertices() const;
  std::optional<std::size_t> find(VertexSet node) const;

  TreeKey key() const;
  friend bool operator==(const JunctionTree& x, const JunctionTree& y) { return x.key() == y.key(); }

 private:
  int universe_ = 0;
  std::vector<VertexSet> nodes_;
  std::vector<Link> links_;
  std::vector<std::vector<std::uint32_t>> adjacency_;
};

/// Outcome of validate(): the verdict plus a human-readable witness when the
/// tree is rejected.
struct Validation {
  bool ok = false;
  std::string diagnostic;

  explicit operator bool() const { return ok; }
};

/// Structural tree check, pairwise non-nested nonempty nodes, and the
/// junction property (every vertex's nodes induce a connected subtree).
/// On failure of the junction property the diagnostic names the vertex and
/// a node path that loses it.
Validation validate(const JunctionTree& t);

/// Union of complete graphs on the nodes. Throws InvalidTreeError on an
/// invalid tree.
Graph underlying_graph(const JunctionTree& t);

/// Underlying graph as per-vertex adjacency masks, skipping validation.
std::vector<VertexSet> adjacency_of(const JunctionTree& t);

/// Some junction tree of a decomposable graph (maximum-weight spanning tree
/// of the clique intersection graph). Throws NotDecomposableError.
JunctionTree junction_tree_of(const Graph& g);

/// Distinct separators, canonically sorted.
std::vector<VertexSet> separators(const JunctionTree& t);

/// Component sizes of F_S(T): the subtree on nodes containing S with every
/// link whose separator equals S removed.
struct SeparatorForest {
  VertexSet separator;
  std::vector<std::uint32_t> component_sizes;
  std::uint32_t total = 0;

  std::size_t components() const { return component_sizes.size(); }
};

/// Throws std::invalid_argument if `s` is neither the empty set nor a
/// separator of `t`.
SeparatorForest separator_forest(const JunctionTree& t, VertexSet s);

/// Number of trees joining the forest's components:
/// total^(q-2) * prod r_i for q >= 2, and 1 for q = 1.
BigInt nu(const SeparatorForest& f);

/// Number of junction trees of g(t): product of nu over distinct separators.
BigInt mu(const JunctionTree& t);
double log_mu(const JunctionTree& t);

/// mu(t) kept as one nu factor per distinct separator.
struct MuFactorization {
  std::map<VertexSet, BigInt> factors;
  BigInt product = 1;
  double log_product = 0.0;
};

MuFactorization mu_factorization(const JunctionTree& t);

/// Factorization for `t_new` given the one for `t_old`, where `t_new` adds a
/// single vertex v. Only the empty separator and separators contained in a
/// node holding v are recomputed; every other factor is copied from `prev`.
/// Throws std::invalid_argument when the inputs do not describe such a step.
MuFactorization mu_update(const MuFactorization& prev, const JunctionTree& t_old, const JunctionTree& t_new);

/// Cut every link of T_S whose separator is S and rejoin the pieces
/// uniformly at random among the nu(F_S) valid reconnections (random list
/// construction over the forest components).
JunctionTree randomize_at_separator(const JunctionTree& t, VertexSet s, CounterRng& rng);

/// Every junction tree of g (all trees on cliques(g) passing validate), in
/// canonical key order.
std::vector<JunctionTree> enumerate_junction_trees(const Graph& g);

/// Every junction tree whose underlying graph is decomposable on vertices
/// 1..p (p <= kMaxEnumerationOrder).
std::vector<JunctionTree> enumerate_junction_trees(int p);

/// Brute-force mu: count trees on cliques(g) that pass validate.
std::uint64_t count_junction_trees_brute_force(const Graph& g);

}  // namespace jtsmc
