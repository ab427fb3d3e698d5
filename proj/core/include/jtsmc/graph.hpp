#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "jtsmc/vertex_set.hpp"

namespace jtsmc {

class NotDecomposableError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Labeled undirected simple graph on a vertex subset of 1..universe.
///
/// The universe fixes the label range; the vertex set may be any subset of
/// it (induced subgraphs keep their original labels).
class Graph {
 public:
  Graph() = default;
  /// Empty graph on vertices 1..p.
  explicit Graph(int p);
  /// Empty graph on `vertices`, labels drawn from 1..universe.
  Graph(int universe, VertexSet vertices);

  static Graph complete(int universe, VertexSet vertices);

  int universe() const { return static_cast<int>(adjacency_.size()); }
  VertexSet vertices() const { return vertices_; }
  int order() const { return vertices_.size(); }

  void add_edge(VertexId a, VertexId b);
  void remove_edge(VertexId a, VertexId b);
  bool has_edge(VertexId a, VertexId b) const;
  VertexSet neighbors(VertexId v) const;
  /// Connect every pair of vertices in `s`.
  void make_complete(VertexSet s);

  bool is_complete_set(VertexSet s) const;
  int edge_count() const;
  /// Edges as label pairs (i, j) with i < j, lexicographically sorted.
  std::vector<std::pair<int, int>> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;
  friend auto operator<=>(const Graph& a, const Graph& b) {
    if (auto c = a.vertices_ <=> b.vertices_; c != 0) return c;
    return a.adjacency_ <=> b.adjacency_;
  }

 private:
  void check_vertex(VertexId v) const;

  VertexSet vertices_;
  std::vector<VertexSet> adjacency_;
};

/// Maximum cardinality search order (ties broken by smallest label).
std::vector<VertexId> maximum_cardinality_order(const Graph& g);

/// True iff `g` is chordal, via maximum cardinality search plus a
/// perfect-elimination check of the resulting order.
bool is_decomposable(const Graph& g);

/// Maximal complete subsets of a decomposable graph, sorted canonically.
/// Throws NotDecomposableError when `g` is not chordal.
std::vector<VertexSet> cliques(const Graph& g);

/// Maximal complete subsets of an arbitrary graph (Bron-Kerbosch with
/// pivoting), sorted canonically.
std::vector<VertexSet> maximal_cliques(const Graph& g);

/// Subgraph on `s` with every edge of `g` between members of `s`.
Graph induced_subgraph(const Graph& g, VertexSet s);

/// Largest order accepted by the exhaustive enumerators.
inline constexpr int kMaxEnumerationOrder = 7;

/// Every decomposable graph on vertices 1..p exactly once, in edge-mask order.
std::vector<Graph> enumerate_decomposable(int p);

/// |{decomposable graphs on 1..p}| without materializing them.
std::uint64_t count_decomposable(int p);

/// Graph on 1..p whose edges are the set bits of `edge_mask`, using the
/// colex pair order (1,2), (1,3), (2,3), (1,4), ...
Graph graph_from_edge_mask(int p, std::uint64_t edge_mask);

}  // namespace jtsmc
