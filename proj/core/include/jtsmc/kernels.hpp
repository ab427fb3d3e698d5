#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "jtsmc/junction_tree.hpp"
#include "jtsmc/rng.hpp"

namespace jtsmc {

/// Tuning of the subtree sampler: beta gates a nonempty subtree, alpha is
/// the per-link continuation probability of the breadth-first traversal.
/// Both strictly inside (0, 1).
struct ExpanderParams {
  double alpha = 0.5;
  double beta = 0.5;

  ExpanderParams() = default;
  ExpanderParams(double a, double b);
};

/// Connected set of node indices of a host tree; empty is allowed.
struct SubtreeSelection {
  std::vector<std::uint32_t> nodes;  // ascending

  bool empty() const { return nodes.empty(); }
  friend bool operator==(const SubtreeSelection&, const SubtreeSelection&) = default;
};

/// Choices made for one subtree node during an expansion.
struct NodeExpansion {
  std::uint32_t origin = 0;  // node index in the input tree
  VertexSet separator_union;  // union of separators to subtree neighbours
  VertexSet extra;            // randomly added members
  VertexSet retained;         // separator_union | extra
  VertexSet new_node;         // retained | {new vertex}
  bool extra_must_be_nonempty = false;
  bool engulfed = false;              // retained == origin, origin replaced
  std::vector<std::uint32_t> moved;   // input-tree neighbours relocated to new_node
  std::vector<std::uint32_t> movable; // candidates the relocation drew from
};

struct ExpansionTrace {
  VertexId new_vertex;
  SubtreeSelection subtree;
  std::vector<NodeExpansion> nodes;  // one per subtree node, subtree order
  /// Empty-subtree route: links of the output carrying the empty separator,
  /// as (node, node) pairs of the output tree.
  std::vector<Link> empty_route_links;
};

/// Stochastic breadth-first traversal: empty with probability 1 - beta,
/// otherwise grown from a uniform root, keeping each newly met neighbour
/// with probability alpha.
SubtreeSelection sample_subtree(const JunctionTree& t, const ExpanderParams& params, CounterRng& rng);

/// Exact probability that sample_subtree returns `s`:
/// beta * (n'/n) * alpha^(n'-1) * (1-alpha)^b for a subtree of n' nodes with
/// b boundary links, and 1 - beta for the empty selection.
/// Throws std::invalid_argument for a disconnected or out-of-range selection.
double subtree_probability(const JunctionTree& t, const SubtreeSelection& s, const ExpanderParams& params);

/// Add `new_vertex` to the tree. The result is a valid junction tree whose
/// underlying graph restricted to the old vertices equals g(t).
std::pair<JunctionTree, ExpansionTrace> expand(const JunctionTree& t, VertexId new_vertex,
                                               const ExpanderParams& params, CounterRng& rng);

/// Deterministic part of the subtree route: rebuild the expansion from the
/// per-node `extra` and `moved` choices in `nodes` (the other fields are
/// recomputed). Throws std::invalid_argument when the choices violate the
/// expander's constraints.
JunctionTree apply_subtree_expansion(const JunctionTree& t, VertexId new_vertex, const SubtreeSelection& subtree,
                                     std::vector<NodeExpansion>& nodes);

/// Nonempty subtrees of `t` from which the expander can produce `t_plus`.
/// Throws std::invalid_argument unless t_plus has exactly one extra vertex.
std::vector<SubtreeSelection> generating_subtrees(const JunctionTree& t, const JunctionTree& t_plus);

/// P(expand(t, v) == t_plus), summing the empty-subtree route and every
/// generating subtree. Zero when t_plus is unreachable.
double expander_density(const JunctionTree& t, const JunctionTree& t_plus, const ExpanderParams& params);

/// Remove `victim`: drop a singleton node and re-randomize the empty-separator
/// links, or move every node holding the victim back onto a uniformly chosen
/// origin. Throws std::invalid_argument if the victim is absent.
JunctionTree collapse(const JunctionTree& t_plus, VertexId victim, CounterRng& rng);

/// P(collapse(t_plus, v) == t) with v the vertex of t_plus missing from t.
double collapser_density(const JunctionTree& t_plus, const JunctionTree& t);

}  // namespace jtsmc
