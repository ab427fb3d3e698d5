#include "jtsmc/graph.hpp"

#include <algorithm>
#include <string>

namespace jtsmc {

Graph::Graph(int p) : Graph(p, VertexSet::range(p)) {}

Graph::Graph(int universe, VertexSet vertices) : vertices_(vertices) {
  if (universe < 0 || universe > kMaxOrder) throw std::invalid_argument("graph order out of range");
  if (!vertices.subset_of(VertexSet::range(universe))) {
    throw std::invalid_argument("vertex set exceeds the label universe");
  }
  adjacency_.assign(static_cast<std::size_t>(universe), VertexSet{});
}

Graph Graph::complete(int universe, VertexSet vertices) {
  Graph g(universe, vertices);
  g.make_complete(vertices);
  return g;
}

void Graph::check_vertex(VertexId v) const {
  if (!vertices_.contains(v)) {
    throw std::out_of_range("unknown vertex " + std::to_string(v.value));
  }
}

void Graph::add_edge(VertexId a, VertexId b) {
  check_vertex(a);
  check_vertex(b);
  if (a == b) throw std::invalid_argument("self-loop on vertex " + std::to_string(a.value));
  adjacency_[a.value - 1].insert(b);
  adjacency_[b.value - 1].insert(a);
}

void Graph::remove_edge(VertexId a, VertexId b) {
  check_vertex(a);
  check_vertex(b);
  adjacency_[a.value - 1].erase(b);
  adjacency_[b.value - 1].erase(a);
}

bool Graph::has_edge(VertexId a, VertexId b) const {
  if (!vertices_.contains(a) || !vertices_.contains(b)) return false;
  return adjacency_[a.value - 1].contains(b);
}

VertexSet Graph::neighbors(VertexId v) const {
  check_vertex(v);
  return adjacency_[v.value - 1];
}

void Graph::make_complete(VertexSet s) {
  if (!s.subset_of(vertices_)) throw std::out_of_range("clique outside the vertex set");
  for (VertexId v : s) adjacency_[v.value - 1] |= s - VertexSet::singleton(v);
}

bool Graph::is_complete_set(VertexSet s) const {
  for (VertexId v : s) {
    if (!(s - VertexSet::singleton(v)).subset_of(adjacency_[v.value - 1])) return false;
  }
  return true;
}

int Graph::edge_count() const {
  int twice = 0;
  for (VertexSet n : adjacency_) twice += n.size();
  return twice / 2;
}

std::vector<std::pair<int, int>> Graph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (VertexId v : vertices_) {
    for (VertexId u : adjacency_[v.value - 1]) {
      if (v < u) out.emplace_back(v.value, u.value);
    }
  }
  return out;
}

std::vector<VertexId> maximum_cardinality_order(const Graph& g) {
  std::vector<VertexId> order;
  order.reserve(static_cast<std::size_t>(g.order()));
  VertexSet numbered;
  VertexSet remaining = g.vertices();
  while (!remaining.empty()) {
    VertexId best = remaining.front();
    int best_weight = -1;
    for (VertexId v : remaining) {
      int w = (g.neighbors(v) & numbered).size();
      if (w > best_weight) {
        best = v;
        best_weight = w;
      }
    }
    order.push_back(best);
    numbered.insert(best);
    remaining.erase(best);
  }
  return order;
}

namespace {

// Candidate clique per vertex: the vertex plus its already-numbered
// neighbours. Returns false when the order is not a perfect elimination
// order (some candidate is not complete).
bool mcs_candidates(const Graph& g, std::vector<VertexSet>& candidates) {
  candidates.clear();
  VertexSet numbered;
  for (VertexId v : maximum_cardinality_order(g)) {
    VertexSet earlier = g.neighbors(v) & numbered;
    if (!g.is_complete_set(earlier)) return false;
    candidates.push_back(earlier | VertexSet::singleton(v));
    numbered.insert(v);
  }
  return true;
}

std::vector<VertexSet> keep_maximal(std::vector<VertexSet> sets) {
  std::sort(sets.begin(), sets.end());
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  std::vector<VertexSet> out;
  for (VertexSet s : sets) {
    bool dominated = std::any_of(sets.begin(), sets.end(),
                                 [s](VertexSet o) { return o != s && s.subset_of(o); });
    if (!dominated) out.push_back(s);
  }
  return out;
}

void bron_kerbosch(const Graph& g, VertexSet r, VertexSet p, VertexSet x, std::vector<VertexSet>& out) {
  if (p.empty() && x.empty()) {
    out.push_back(r);
    return;
  }
  VertexId pivot = (p | x).front();
  int best = -1;
  for (VertexId u : p | x) {
    int c = (p & g.neighbors(u)).size();
    if (c > best) {
      best = c;
      pivot = u;
    }
  }
  for (VertexId v : p - g.neighbors(pivot)) {
    VertexSet nv = g.neighbors(v);
    bron_kerbosch(g, r | VertexSet::singleton(v), p & nv, x & nv, out);
    p.erase(v);
    x.insert(v);
  }
}

}  // namespace

bool is_decomposable(const Graph& g) {
  std::vector<VertexSet> candidates;
  return mcs_candidates(g, candidates);
}

std::vector<VertexSet> cliques(const Graph& g) {
  std::vector<VertexSet> candidates;
  if (!mcs_candidates(g, candidates)) throw NotDecomposableError("graph is not decomposable");
  return keep_maximal(std::move(candidates));
}

std::vector<VertexSet> maximal_cliques(const Graph& g) {
  std::vector<VertexSet> out;
  if (g.vertices().empty()) return out;
  bron_kerbosch(g, VertexSet{}, g.vertices(), VertexSet{}, out);
  std::sort(out.begin(), out.end());
  return out;
}

Graph induced_subgraph(const Graph& g, VertexSet s) {
  if (!s.subset_of(g.vertices())) throw std::out_of_range("induced subgraph on unknown vertices");
  Graph sub(g.universe(), s);
  for (VertexId v : s) {
    for (VertexId u : g.neighbors(v) & s) {
      if (v < u) sub.add_edge(v, u);
    }
  }
  return sub;
}

Graph graph_from_edge_mask(int p, std::uint64_t edge_mask) {
  Graph g(p);
  int bit = 0;
  for (int j = 2; j <= p; ++j) {
    for (int i = 1; i < j; ++i, ++bit) {
      if ((edge_mask >> bit) & 1U) g.add_edge(VertexId(i), VertexId(j));
    }
  }
  return g;
}

namespace {

void check_enumeration_order(int p) {
  if (p < 0 || p > kMaxEnumerationOrder) {
    throw std::invalid_argument("exhaustive enumeration is limited to p <= " +
                                std::to_string(kMaxEnumerationOrder));
  }
}

}  // namespace

std::vector<Graph> enumerate_decomposable(int p) {
  check_enumeration_order(p);
  const std::uint64_t pairs = static_cast<std::uint64_t>(p) * (p - 1) / 2;
  std::vector<Graph> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << pairs); ++m) {
    Graph g = graph_from_edge_mask(p, m);
    if (is_decomposable(g)) out.push_back(std::move(g));
  }
  return out;
}

std::uint64_t count_decomposable(int p) {
  check_enumeration_order(p);
  const std::uint64_t pairs = static_cast<std::uint64_t>(p) * (p - 1) / 2;
  std::uint64_t count = 0;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << pairs); ++m) {
    if (is_decomposable(graph_from_edge_mask(p, m))) ++count;
  }
  return count;
}

}  // namespace jtsmc
