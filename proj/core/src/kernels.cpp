#include "jtsmc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace jtsmc {

ExpanderParams::ExpanderParams(double a, double b) : alpha(a), beta(b) {
  if (!(a > 0.0 && a < 1.0) || !(b > 0.0 && b < 1.0)) {
    throw std::invalid_argument("expander parameters must lie strictly inside (0, 1)");
  }
}

namespace {

// Mutable tree used while a kernel rewires links. Node indices are stable
// until finish(), which drops removed nodes and keeps the remaining order.
class TreeBuilder {
 public:
  explicit TreeBuilder(const JunctionTree& t)
      : universe_(t.universe()), nodes_(t.nodes().begin(), t.nodes().end()), alive_(t.size(), true), adj_(t.size()) {
    for (std::size_t i = 0; i < t.size(); ++i) adj_[i].assign(t.neighbors(i).begin(), t.neighbors(i).end());
  }

  std::uint32_t add_node(VertexSet c) {
    nodes_.push_back(c);
    alive_.push_back(true);
    adj_.emplace_back();
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  void remove_node(std::uint32_t i) {
    for (std::uint32_t j : std::vector<std::uint32_t>(adj_[i])) unlink(i, j);
    alive_[i] = false;
  }

  void link(std::uint32_t a, std::uint32_t b) {
    if (linked(a, b)) return;
    adj_[a].push_back(b);
    adj_[b].push_back(a);
  }

  void unlink(std::uint32_t a, std::uint32_t b) {
    std::erase(adj_[a], b);
    std::erase(adj_[b], a);
  }

  bool linked(std::uint32_t a, std::uint32_t b) const {
    return std::find(adj_[a].begin(), adj_[a].end(), b) != adj_[a].end();
  }

  const std::vector<std::uint32_t>& neighbors(std::uint32_t i) const { return adj_[i]; }
  std::size_t capacity() const { return nodes_.size(); }
  bool alive(std::uint32_t i) const { return alive_[i]; }

  JunctionTree finish() const {
    std::vector<std::uint32_t> index(nodes_.size(), 0);
    std::vector<VertexSet> nodes;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      if (!alive_[i]) continue;
      index[i] = static_cast<std::uint32_t>(nodes.size());
      nodes.push_back(nodes_[i]);
    }
    std::vector<Link> links;
    for (std::uint32_t i = 0; i < nodes_.size(); ++i) {
      if (!alive_[i]) continue;
      for (std::uint32_t j : adj_[i]) {
        if (i < j) links.emplace_back(index[i], index[j]);
      }
    }
    return JunctionTree(universe_, std::move(nodes), std::move(links));
  }

 private:
  int universe_;
  std::vector<VertexSet> nodes_;
  std::vector<bool> alive_;
  std::vector<std::vector<std::uint32_t>> adj_;
};

std::vector<bool> membership(const JunctionTree& t, const SubtreeSelection& s) {
  std::vector<bool> in(t.size(), false);
  for (std::uint32_t i : s.nodes) {
    if (i >= t.size()) throw std::invalid_argument("subtree node index out of range");
    if (in[i]) throw std::invalid_argument("subtree lists a node twice");
    in[i] = true;
  }
  return in;
}

// Separator union toward subtree neighbours and whether the extra set must
// be nonempty (the union equals one of those separators).
void fill_separator_union(const JunctionTree& t, const std::vector<bool>& in_sub, NodeExpansion& e) {
  e.separator_union = VertexSet{};
  bool has_subtree_neighbour = false;
  for (std::uint32_t c : t.neighbors(e.origin)) {
    if (in_sub[c]) {
      e.separator_union |= t.separator(e.origin, c);
      has_subtree_neighbour = true;
    }
  }
  e.extra_must_be_nonempty = false;
  if (has_subtree_neighbour) {
    for (std::uint32_t c : t.neighbors(e.origin)) {
      if (in_sub[c] && t.separator(e.origin, c) == e.separator_union) e.extra_must_be_nonempty = true;
    }
  }
}

void fill_movable(const JunctionTree& t, const std::vector<bool>& in_sub, NodeExpansion& e) {
  e.movable.clear();
  if (e.engulfed) return;
  for (std::uint32_t c : t.neighbors(e.origin)) {
    if (!in_sub[c] && t.separator(e.origin, c).subset_of(e.retained)) e.movable.push_back(c);
  }
  std::sort(e.movable.begin(), e.movable.end());
}

double pow2(int k) { return std::ldexp(1.0, k); }

}  // namespace

// ---------------------------------------------------------------------------
// Subtree sampling

SubtreeSelection sample_subtree(const JunctionTree& t, const ExpanderParams& params, CounterRng& rng) {
  SubtreeSelection out;
  if (!bernoulli(rng, params.beta)) return out;
  std::vector<bool> visited(t.size(), false);
  std::queue<std::uint32_t> queue;
  queue.push(static_cast<std::uint32_t>(uniform_index(rng, t.size())));
  while (!queue.empty()) {
    std::uint32_t y = queue.front();
    queue.pop();
    visited[y] = true;
    out.nodes.push_back(y);
    for (std::uint32_t z : t.neighbors(y)) {
      if (!visited[z] && bernoulli(rng, params.alpha)) queue.push(z);
    }
  }
  std::sort(out.nodes.begin(), out.nodes.end());
  return out;
}

double subtree_probability(const JunctionTree& t, const SubtreeSelection& s, const ExpanderParams& params) {
  if (s.empty()) return 1.0 - params.beta;
  std::vector<bool> in = membership(t, s);
  std::size_t inner = 0;
  int boundary = 0;
  for (const Link& l : t.links()) {
    if (in[l.a] && in[l.b]) {
      ++inner;
    } else if (in[l.a] || in[l.b]) {
      ++boundary;
    }
  }
  // A node subset of a tree is connected iff it spans |s| - 1 links.
  const std::size_t k = s.nodes.size();
  if (inner + 1 != k) throw std::invalid_argument("subtree selection is not connected");
  return params.beta * static_cast<double>(k) / static_cast<double>(t.size()) *
         std::pow(params.alpha, static_cast<double>(k - 1)) * std::pow(1.0 - params.alpha, boundary);
}

// ---------------------------------------------------------------------------
// Expander

JunctionTree apply_subtree_expansion(const JunctionTree& t, VertexId new_vertex, const SubtreeSelection& subtree,
                                     std::vector<NodeExpansion>& nodes) {
  if (subtree.empty() || nodes.size() != subtree.nodes.size()) {
    throw std::invalid_argument("subtree expansion needs one choice per subtree node");
  }
  if (t.vertices().contains(new_vertex)) {
    throw std::invalid_argument("vertex " + std::to_string(new_vertex.value) + " already in the tree");
  }
  std::vector<bool> in_sub = membership(t, subtree);
  const VertexSet fresh = VertexSet::singleton(new_vertex);

  for (std::size_t j = 0; j < nodes.size(); ++j) {
    NodeExpansion& e = nodes[j];
    e.origin = subtree.nodes[j];
    fill_separator_union(t, in_sub, e);
    const VertexSet free = t.node(e.origin) - e.separator_union;
    if (!e.extra.subset_of(free)) throw std::invalid_argument("extra members outside the free part of the node");
    if (e.extra_must_be_nonempty && e.extra.empty()) throw std::invalid_argument("extra set must be nonempty");
    e.retained = e.separator_union | e.extra;
    e.new_node = e.retained | fresh;
    e.engulfed = e.retained == t.node(e.origin);
    fill_movable(t, in_sub, e);
    std::sort(e.moved.begin(), e.moved.end());
    if (!std::includes(e.movable.begin(), e.movable.end(), e.moved.begin(), e.moved.end())) {
      throw std::invalid_argument("relocated neighbour is not movable");
    }
  }

  TreeBuilder b(t);
  std::vector<std::uint32_t> created(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) created[j] = b.add_node(nodes[j].new_node);

  // Replicate the subtree on the new nodes.
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    for (std::size_t k = j + 1; k < nodes.size(); ++k) {
      if (t.adjacent(nodes[j].origin, nodes[k].origin)) {
        b.unlink(nodes[j].origin, nodes[k].origin);
        b.link(created[j], created[k]);
      }
    }
  }
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const NodeExpansion& e = nodes[j];
    if (e.engulfed) {
      for (std::uint32_t c : t.neighbors(e.origin)) {
        if (in_sub[c]) continue;
        b.unlink(e.origin, c);
        b.link(created[j], c);
      }
      b.remove_node(e.origin);
    } else {
      b.link(e.origin, created[j]);
      for (std::uint32_t c : e.moved) {
        b.unlink(e.origin, c);
        b.link(created[j], c);
      }
    }
  }
  return b.finish();
}

std::pair<JunctionTree, ExpansionTrace> expand(const JunctionTree& t, VertexId new_vertex,
                                               const ExpanderParams& params, CounterRng& rng) {
  if (t.vertices().contains(new_vertex)) {
    throw std::invalid_argument("vertex " + std::to_string(new_vertex.value) + " already in the tree");
  }
  ExpansionTrace trace;
  trace.new_vertex = new_vertex;
  trace.subtree = sample_subtree(t, params, rng);

  if (trace.subtree.empty()) {
    TreeBuilder b(t);
    std::uint32_t isolated = b.add_node(VertexSet::singleton(new_vertex));
    b.link(0, isolated);
    JunctionTree out = randomize_at_separator(b.finish(), VertexSet{}, rng);
    for (const Link& l : out.links()) {
      if (out.separator(l).empty()) trace.empty_route_links.push_back(l);
    }
    return {std::move(out), std::move(trace)};
  }

  std::vector<bool> in_sub = membership(t, trace.subtree);
  trace.nodes.resize(trace.subtree.nodes.size());
  for (std::size_t j = 0; j < trace.nodes.size(); ++j) {
    NodeExpansion& e = trace.nodes[j];
    e.origin = trace.subtree.nodes[j];
    fill_separator_union(t, in_sub, e);
    const VertexSet free = t.node(e.origin) - e.separator_union;
    do {
      e.extra = VertexSet{};
      for (VertexId x : free) {
        if (bernoulli(rng, 0.5)) e.extra.insert(x);
      }
    } while (e.extra_must_be_nonempty && e.extra.empty());
    e.retained = e.separator_union | e.extra;
    e.engulfed = e.retained == t.node(e.origin);
    fill_movable(t, in_sub, e);
    e.moved.clear();
    for (std::uint32_t c : e.movable) {
      if (bernoulli(rng, 0.5)) e.moved.push_back(c);
    }
  }
  JunctionTree out = apply_subtree_expansion(t, new_vertex, trace.subtree, trace.nodes);
  return {std::move(out), std::move(trace)};
}

// ---------------------------------------------------------------------------
// Expander density

namespace {

struct Step {
  VertexId added;
  bool graph_matches = false;
};

// Identify the added vertex and check that t_plus keeps g(t) on the old
// vertices.
Step classify_step(const JunctionTree& small, const JunctionTree& big) {
  const VertexSet vs = small.vertices();
  const VertexSet vb = big.vertices();
  if (!vs.subset_of(vb) || (vb - vs).size() != 1) {
    throw std::invalid_argument("trees must differ by exactly one vertex");
  }
  Step step;
  step.added = (vb - vs).front();
  const auto as = adjacency_of(small);
  const auto ab = adjacency_of(big);
  const VertexSet fresh = VertexSet::singleton(step.added);
  step.graph_matches = std::all_of(vs.begin(), vs.end(), [&](VertexId u) {
    return (ab[u.value - 1] - fresh) == as[u.value - 1];
  });
  return step;
}

// Node sets (sorted) and links with a nonempty separator (as node-set pairs,
// sorted), ignoring the node `skip`.
struct NonEmptyStructure {
  std::vector<VertexSet> nodes;
  std::vector<std::pair<VertexSet, VertexSet>> links;
  friend bool operator==(const NonEmptyStructure&, const NonEmptyStructure&) = default;
};

NonEmptyStructure non_empty_structure(const JunctionTree& t, VertexSet skip) {
  NonEmptyStructure s;
  for (VertexSet c : t.nodes()) {
    if (c != skip) s.nodes.push_back(c);
  }
  std::sort(s.nodes.begin(), s.nodes.end());
  for (const Link& l : t.links()) {
    VertexSet x = t.node(l.a);
    VertexSet y = t.node(l.b);
    if ((x & y).empty()) continue;
    if (y < x) std::swap(x, y);
    s.links.emplace_back(x, y);
  }
  std::sort(s.links.begin(), s.links.end());
  return s;
}

struct Route {
  SubtreeSelection subtree;
  double choice_probability = 1.0;  // product over the per-node draws
};

std::vector<Route> subtree_routes(const JunctionTree& t, const JunctionTree& t_plus, const Step& step) {
  std::vector<Route> routes;
  if (!step.graph_matches) return routes;
  const VertexId v = step.added;
  const VertexSet fresh = VertexSet::singleton(v);

  std::vector<std::uint32_t> holders;
  for (std::uint32_t i = 0; i < t_plus.size(); ++i) {
    if (t_plus.node(i).contains(v)) holders.push_back(i);
  }
  const std::size_t k = holders.size();

  // Candidate origins in t for each holder.
  std::vector<std::vector<std::uint32_t>> candidates(k);
  for (std::size_t j = 0; j < k; ++j) {
    const VertexSet retained = t_plus.node(holders[j]) - fresh;
    for (std::uint32_t c : t_plus.neighbors(holders[j])) {
      VertexSet cn = t_plus.node(c);
      if (cn.contains(v) || !retained.subset_of(cn)) continue;
      if (auto idx = t.find(cn)) candidates[j].push_back(static_cast<std::uint32_t>(*idx));
    }
    if (candidates[j].empty()) {
      if (retained.empty()) return routes;
      auto idx = t.find(retained);
      if (!idx) return routes;
      candidates[j].push_back(static_cast<std::uint32_t>(*idx));
    }
  }

  const TreeKey target = t_plus.key();
  std::vector<std::uint32_t> origin(k);

  auto try_assignment = [&]() {
    std::vector<std::size_t> order(k);
    for (std::size_t j = 0; j < k; ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return origin[a] < origin[b]; });
    SubtreeSelection sub;
    for (std::size_t j : order) sub.nodes.push_back(origin[j]);
    std::vector<bool> in_sub = membership(t, sub);

    std::vector<NodeExpansion> nodes(k);
    for (std::size_t pos = 0; pos < k; ++pos) {
      const std::size_t j = order[pos];
      NodeExpansion& e = nodes[pos];
      e.origin = origin[j];
      fill_separator_union(t, in_sub, e);
      const VertexSet retained = t_plus.node(holders[j]) - fresh;
      if (!e.separator_union.subset_of(retained) || !retained.subset_of(t.node(e.origin))) return;
      e.extra = retained - e.separator_union;
      e.moved.clear();
      if (retained != t.node(e.origin)) {
        for (std::uint32_t c : t.neighbors(e.origin)) {
          if (in_sub[c]) continue;
          auto cp = t_plus.find(t.node(c));
          if (cp && t_plus.adjacent(*cp, holders[j])) e.moved.push_back(c);
        }
      }
    }
    JunctionTree rebuilt;
    try {
      rebuilt = apply_subtree_expansion(t, v, sub, nodes);
    } catch (const std::invalid_argument&) {
      return;
    }
    if (rebuilt.key() != target) return;
    Route r;
    r.subtree = std::move(sub);
    for (const NodeExpansion& e : nodes) {
      const int free = (t.node(e.origin) - e.separator_union).size();
      r.choice_probability /= e.extra_must_be_nonempty ? pow2(free) - 1.0 : pow2(free);
      r.choice_probability /= pow2(static_cast<int>(e.movable.size()));
    }
    routes.push_back(std::move(r));
  };

  // Backtrack over origin assignments that replicate the holder subtree.
  auto assign = [&](auto&& self, std::size_t j) -> void {
    if (j == k) {
      try_assignment();
      return;
    }
    for (std::uint32_t o : candidates[j]) {
      bool ok = true;
      for (std::size_t i = 0; i < j && ok; ++i) {
        if (origin[i] == o) ok = false;
        else if (t_plus.adjacent(holders[i], holders[j]) != t.adjacent(origin[i], o)) ok = false;
      }
      if (!ok) continue;
      origin[j] = o;
      self(self, j + 1);
    }
  };
  assign(assign, 0);
  return routes;
}

double empty_route_density(const JunctionTree& t, const JunctionTree& t_plus, const Step& step,
                           const ExpanderParams& params) {
  if (!step.graph_matches) return 0.0;
  const VertexSet isolated = VertexSet::singleton(step.added);
  if (!t_plus.find(isolated)) return 0.0;
  if (non_empty_structure(t, VertexSet{}) != non_empty_structure(t_plus, isolated)) return 0.0;
  return (1.0 - params.beta) / nu(separator_forest(t_plus, VertexSet{})).convert_to<double>();
}

}  // namespace

std::vector<SubtreeSelection> generating_subtrees(const JunctionTree& t, const JunctionTree& t_plus) {
  const Step step = classify_step(t, t_plus);
  std::vector<SubtreeSelection> out;
  for (Route& r : subtree_routes(t, t_plus, step)) out.push_back(std::move(r.subtree));
  return out;
}

double expander_density(const JunctionTree& t, const JunctionTree& t_plus, const ExpanderParams& params) {
  const Step step = classify_step(t, t_plus);
  double density = empty_route_density(t, t_plus, step, params);
  for (const Route& r : subtree_routes(t, t_plus, step)) {
    density += subtree_probability(t, r.subtree, params) * r.choice_probability;
  }
  return density;
}

// ---------------------------------------------------------------------------
// Collapser

namespace {

constexpr std::uint64_t kMaxOriginCombinations = std::uint64_t{1} << 20;

// Origin candidates (t_plus node indices) for each node holding the victim;
// an empty list means the origin is the holder minus the victim, recreated.
struct CollapsePlan {
  std::vector<std::uint32_t> holders;
  std::vector<std::vector<std::uint32_t>> candidates;
};

CollapsePlan plan_collapse(const JunctionTree& t_plus, VertexId victim) {
  CollapsePlan plan;
  const VertexSet gone = VertexSet::singleton(victim);
  for (std::uint32_t i = 0; i < t_plus.size(); ++i) {
    if (!t_plus.node(i).contains(victim)) continue;
    plan.holders.push_back(i);
    const VertexSet retained = t_plus.node(i) - gone;
    std::vector<std::uint32_t> cands;
    for (std::uint32_t c : t_plus.neighbors(i)) {
      if (t_plus.separator(i, c) == retained) cands.push_back(c);
    }
    std::sort(cands.begin(), cands.end());
    plan.candidates.push_back(std::move(cands));
  }
  return plan;
}

JunctionTree apply_collapse(const JunctionTree& t_plus, VertexId victim, const CollapsePlan& plan,
                            const std::vector<std::size_t>& choice) {
  TreeBuilder b(t_plus);
  const VertexSet gone = VertexSet::singleton(victim);
  for (std::size_t j = 0; j < plan.holders.size(); ++j) {
    const std::uint32_t h = plan.holders[j];
    std::uint32_t origin = plan.candidates[j].empty() ? b.add_node(t_plus.node(h) - gone)
                                                      : plan.candidates[j][choice[j]];
    for (std::uint32_t c : std::vector<std::uint32_t>(b.neighbors(h))) {
      if (c != origin) b.link(origin, c);
    }
    b.remove_node(h);
  }
  return b.finish();
}

JunctionTree drop_isolated(const JunctionTree& t_plus, std::uint32_t isolated) {
  TreeBuilder b(t_plus);
  b.remove_node(isolated);
  // Chain the pieces left behind; every cross-piece link has an empty separator.
  std::vector<std::int64_t> comp(b.capacity(), -1);
  std::vector<std::uint32_t> reps;
  for (std::uint32_t i = 0; i < b.capacity(); ++i) {
    if (!b.alive(i) || comp[i] >= 0) continue;
    reps.push_back(i);
    std::queue<std::uint32_t> q;
    q.push(i);
    comp[i] = static_cast<std::int64_t>(reps.size());
    while (!q.empty()) {
      std::uint32_t x = q.front();
      q.pop();
      for (std::uint32_t y : b.neighbors(x)) {
        if (comp[y] < 0) {
          comp[y] = comp[i];
          q.push(y);
        }
      }
    }
  }
  for (std::size_t r = 1; r < reps.size(); ++r) b.link(reps[r - 1], reps[r]);
  return b.finish();
}

}  // namespace

JunctionTree collapse(const JunctionTree& t_plus, VertexId victim, CounterRng& rng) {
  if (!t_plus.vertices().contains(victim)) {
    throw std::invalid_argument("vertex " + std::to_string(victim.value) + " is not in the tree");
  }
  if (t_plus.vertices().size() == 1) throw std::invalid_argument("cannot collapse the last vertex");
  if (auto iso = t_plus.find(VertexSet::singleton(victim))) {
    JunctionTree joined = drop_isolated(t_plus, static_cast<std::uint32_t>(*iso));
    return randomize_at_separator(joined, VertexSet{}, rng);
  }
  const CollapsePlan plan = plan_collapse(t_plus, victim);
  std::vector<std::size_t> choice(plan.holders.size(), 0);
  for (std::size_t j = 0; j < choice.size(); ++j) {
    if (!plan.candidates[j].empty()) choice[j] = uniform_index(rng, plan.candidates[j].size());
  }
  return apply_collapse(t_plus, victim, plan, choice);
}

double collapser_density(const JunctionTree& t_plus, const JunctionTree& t) {
  const Step step = classify_step(t, t_plus);
  if (!step.graph_matches) return 0.0;
  const VertexId victim = step.added;
  const VertexSet isolated = VertexSet::singleton(victim);

  if (t_plus.find(isolated)) {
    if (non_empty_structure(t, VertexSet{}) != non_empty_structure(t_plus, isolated)) return 0.0;
    return 1.0 / nu(separator_forest(t, VertexSet{})).convert_to<double>();
  }

  const CollapsePlan plan = plan_collapse(t_plus, victim);
  std::uint64_t combinations = 1;
  double each = 1.0;
  for (const auto& c : plan.candidates) {
    if (c.empty()) continue;
    combinations *= c.size();
    each /= static_cast<double>(c.size());
    if (combinations > kMaxOriginCombinations) {
      throw std::runtime_error("collapser density: too many origin combinations to enumerate");
    }
  }
  const TreeKey target = t.key();
  double density = 0.0;
  std::vector<std::size_t> choice(plan.holders.size(), 0);
  while (true) {
    if (apply_collapse(t_plus, victim, plan, choice).key() == target) density += each;
    std::size_t j = 0;
    for (; j < choice.size(); ++j) {
      if (plan.candidates[j].empty()) continue;
      if (++choice[j] < plan.candidates[j].size()) break;
      choice[j] = 0;
    }
    if (j == choice.size()) break;
  }
  return density;
}

}  // namespace jtsmc
