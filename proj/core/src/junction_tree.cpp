#include "jtsmc/junction_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace jtsmc {

double log_of(const BigInt& x) {
  if (x <= 0) throw std::domain_error("log of a non-positive integer");
  const unsigned top = boost::multiprecision::msb(x);
  if (top < 1000) return std::log(x.convert_to<double>());
  const unsigned shift = top - 60;
  BigInt head = x >> shift;
  return std::log(head.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

// ---------------------------------------------------------------------------
// JunctionTree

JunctionTree::JunctionTree(int universe, std::vector<VertexSet> nodes, std::vector<Link> links)
    : universe_(universe), nodes_(std::move(nodes)), links_(std::move(links)) {
  if (universe < 0 || universe > kMaxOrder) throw InvalidTreeError("tree universe out of range");
  adjacency_.resize(nodes_.size());
  for (const Link& l : links_) {
    if (l.b >= nodes_.size()) throw InvalidTreeError("link endpoint out of range");
    adjacency_[l.a].push_back(l.b);
    if (l.a != l.b) adjacency_[l.b].push_back(l.a);
  }
}

JunctionTree JunctionTree::trivial(int universe, VertexId v) {
  return JunctionTree(universe, {VertexSet::singleton(v)}, {});
}

bool JunctionTree::adjacent(std::size_t i, std::size_t j) const {
  const auto& n = adjacency_[i];
  return std::find(n.begin(), n.end(), static_cast<std::uint32_t>(j)) != n.end();
}

VertexSet JunctionTree::vertices() const {
  VertexSet all;
  for (VertexSet c : nodes_) all |= c;
  return all;
}

std::optional<std::size_t> JunctionTree::find(VertexSet node) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i] == node) return i;
  }
  return std::nullopt;
}

TreeKey JunctionTree::key() const {
  TreeKey k;
  k.nodes.assign(nodes_.begin(), nodes_.end());
  std::sort(k.nodes.begin(), k.nodes.end());
  k.links.reserve(links_.size());
  for (const Link& l : links_) {
    VertexSet x = nodes_[l.a];
    VertexSet y = nodes_[l.b];
    if (y < x) std::swap(x, y);
    k.links.emplace_back(x, y);
  }
  std::sort(k.links.begin(), k.links.end());
  return k;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

std::string describe(const JunctionTree& t, std::size_t i) {
  std::ostringstream os;
  os << "node " << i << ' ' << t.node(i);
  return os.str();
}

std::vector<std::uint32_t> tree_path(const JunctionTree& t, std::uint32_t from, std::uint32_t to) {
  std::vector<std::int64_t> parent(t.size(), -1);
  std::queue<std::uint32_t> q;
  q.push(from);
  parent[from] = from;
  while (!q.empty()) {
    std::uint32_t x = q.front();
    q.pop();
    if (x == to) break;
    for (std::uint32_t y : t.neighbors(x)) {
      if (parent[y] < 0) {
        parent[y] = x;
        q.push(y);
      }
    }
  }
  std::vector<std::uint32_t> path;
  if (parent[to] < 0) return path;
  for (std::uint32_t x = to; x != from; x = static_cast<std::uint32_t>(parent[x])) path.push_back(x);
  path.push_back(from);
  std::reverse(path.begin(), path.end());
  return path;
}

}  // namespace

Validation validate(const JunctionTree& t) {
  const std::size_t n = t.size();
  if (n == 0) return {false, "tree has no nodes"};
  const VertexSet universe = VertexSet::range(t.universe());
  for (std::size_t i = 0; i < n; ++i) {
    if (t.node(i).empty()) return {false, describe(t, i) + " is empty"};
    if (!t.node(i).subset_of(universe)) return {false, describe(t, i) + " has labels outside 1..p"};
  }
  if (t.links().size() != n - 1) {
    return {false, "expected " + std::to_string(n - 1) + " links, found " + std::to_string(t.links().size())};
  }
  std::vector<Link> sorted(t.links().begin(), t.links().end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].a == sorted[i].b) return {false, "self-link at " + describe(t, sorted[i].a)};
    if (i > 0 && sorted[i] == sorted[i - 1]) {
      return {false, "duplicate link " + std::to_string(sorted[i].a) + "-" + std::to_string(sorted[i].b)};
    }
  }
  // n - 1 distinct links: connected iff acyclic.
  std::vector<bool> seen(n, false);
  std::queue<std::uint32_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!q.empty()) {
    std::uint32_t x = q.front();
    q.pop();
    for (std::uint32_t y : t.neighbors(x)) {
      if (!seen[y]) {
        seen[y] = true;
        ++reached;
        q.push(y);
      }
    }
  }
  if (reached != n) return {false, "links do not connect all nodes"};

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j && t.node(i).subset_of(t.node(j))) {
        return {false, describe(t, i) + " is contained in " + describe(t, j)};
      }
    }
  }

  // Junction property: the nodes holding each vertex span a subtree, i.e.
  // k holders are joined by exactly k - 1 links.
  for (VertexId x : t.vertices()) {
    std::size_t holders = 0;
    for (VertexSet c : t.nodes()) holders += c.contains(x) ? 1 : 0;
    std::size_t inner = 0;
    for (const Link& l : t.links()) {
      if (t.node(l.a).contains(x) && t.node(l.b).contains(x)) ++inner;
    }
    if (inner + 1 == holders) continue;

    // Witness: a holder unreachable from the first holder through holders.
    std::uint32_t first = 0;
    while (!t.node(first).contains(x)) ++first;
    std::vector<bool> in_comp(n, false);
    std::queue<std::uint32_t> bfs;
    bfs.push(first);
    in_comp[first] = true;
    while (!bfs.empty()) {
      std::uint32_t a = bfs.front();
      bfs.pop();
      for (std::uint32_t b : t.neighbors(a)) {
        if (!in_comp[b] && t.node(b).contains(x)) {
          in_comp[b] = true;
          bfs.push(b);
        }
      }
    }
    std::uint32_t other = 0;
    while (in_comp[other] || !t.node(other).contains(x)) ++other;
    std::ostringstream os;
    os << "vertex " << x.value << " is lost on the path ";
    std::string missing;
    bool first_step = true;
    for (std::uint32_t step : tree_path(t, first, other)) {
      if (!first_step) os << " - ";
      os << t.node(step);
      first_step = false;
      if (missing.empty() && !t.node(step).contains(x)) missing = describe(t, step);
    }
    os << " (missing from " << missing << ")";
    return {false, os.str()};
  }
  return {true, {}};
}

std::vector<VertexSet> adjacency_of(const JunctionTree& t) {
  std::vector<VertexSet> adj(static_cast<std::size_t>(t.universe()));
  for (VertexSet c : t.nodes()) {
    for (VertexId v : c) adj[v.value - 1] |= c - VertexSet::singleton(v);
  }
  return adj;
}

Graph underlying_graph(const JunctionTree& t) {
  if (Validation v = validate(t); !v) throw InvalidTreeError("invalid junction tree: " + v.diagnostic);
  Graph g(t.universe(), t.vertices());
  for (VertexSet c : t.nodes()) g.make_complete(c);
  return g;
}

JunctionTree junction_tree_of(const Graph& g) {
  std::vector<VertexSet> cl = cliques(g);
  if (cl.empty()) throw NotDecomposableError("graph has no vertices");
  const std::size_t k = cl.size();
  // Prim on intersection sizes; ties resolved towards lower indices.
  std::vector<bool> in_tree(k, false);
  std::vector<int> best(k, -1);
  std::vector<std::uint32_t> attach(k, 0);
  std::vector<Link> links;
  in_tree[0] = true;
  for (std::size_t j = 1; j < k; ++j) best[j] = (cl[0] & cl[j]).size();
  for (std::size_t step = 1; step < k; ++step) {
    std::size_t pick = k;
    for (std::size_t j = 0; j < k; ++j) {
      if (!in_tree[j] && (pick == k || best[j] > best[pick])) pick = j;
    }
    in_tree[pick] = true;
    links.emplace_back(attach[pick], static_cast<std::uint32_t>(pick));
    for (std::size_t j = 0; j < k; ++j) {
      int w = (cl[pick] & cl[j]).size();
      if (!in_tree[j] && w > best[j]) {
        best[j] = w;
        attach[j] = static_cast<std::uint32_t>(pick);
      }
    }
  }
  return JunctionTree(g.universe(), std::move(cl), std::move(links));
}

std::vector<VertexSet> separators(const JunctionTree& t) {
  std::vector<VertexSet> out;
  out.reserve(t.links().size());
  for (const Link& l : t.links()) out.push_back(t.separator(l));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Separator forests and counting

namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0U); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void join(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::uint32_t> parent;
};

// Nodes of T_S grouped into the components of F_S, components ordered by
// their lowest node index and members ascending.
std::vector<std::vector<std::uint32_t>> forest_components(const JunctionTree& t, VertexSet s) {
  if (!s.empty()) {
    bool is_sep = std::any_of(t.links().begin(), t.links().end(),
                              [&](const Link& l) { return t.separator(l) == s; });
    if (!is_sep) throw std::invalid_argument(s.to_string() + " is not a separator of the tree");
  }
  const std::size_t n = t.size();
  DisjointSets ds(n);
  for (const Link& l : t.links()) {
    if (s.subset_of(t.node(l.a)) && s.subset_of(t.node(l.b)) && t.separator(l) != s) ds.join(l.a, l.b);
  }
  std::vector<std::vector<std::uint32_t>> comps;
  std::vector<std::int64_t> slot(n, -1);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!s.subset_of(t.node(i))) continue;
    std::uint32_t r = ds.find(i);
    if (slot[r] < 0) {
      slot[r] = static_cast<std::int64_t>(comps.size());
      comps.emplace_back();
    }
    comps[static_cast<std::size_t>(slot[r])].push_back(i);
  }
  return comps;
}

}  // namespace

SeparatorForest separator_forest(const JunctionTree& t, VertexSet s) {
  SeparatorForest f;
  f.separator = s;
  for (const auto& comp : forest_components(t, s)) {
    f.component_sizes.push_back(static_cast<std::uint32_t>(comp.size()));
    f.total += static_cast<std::uint32_t>(comp.size());
  }
  return f;
}

BigInt nu(const SeparatorForest& f) {
  const std::size_t q = f.components();
  if (q <= 1) return 1;
  BigInt out = boost::multiprecision::pow(BigInt(f.total), static_cast<unsigned>(q - 2));
  for (std::uint32_t r : f.component_sizes) out *= r;
  return out;
}

MuFactorization mu_factorization(const JunctionTree& t) {
  MuFactorization m;
  for (VertexSet s : separators(t)) {
    BigInt f = nu(separator_forest(t, s));
    m.product *= f;
    m.factors.emplace(s, std::move(f));
  }
  m.log_product = log_of(m.product);
  return m;
}

BigInt mu(const JunctionTree& t) { return mu_factorization(t).product; }

double log_mu(const JunctionTree& t) { return mu_factorization(t).log_product; }

MuFactorization mu_update(const MuFactorization& prev, const JunctionTree& t_old, const JunctionTree& t_new) {
  const VertexSet old_v = t_old.vertices();
  const VertexSet new_v = t_new.vertices();
  if (!old_v.subset_of(new_v) || (new_v - old_v).size() != 1) {
    throw std::invalid_argument("mu_update: trees must differ by exactly one added vertex");
  }
  const std::vector<VertexSet> old_seps = separators(t_old);
  if (old_seps.size() != prev.factors.size() ||
      !std::equal(old_seps.begin(), old_seps.end(), prev.factors.begin(),
                  [](VertexSet s, const auto& kv) { return s == kv.first; })) {
    throw std::invalid_argument("mu_update: factorization does not match the previous tree");
  }
  const VertexId added = (new_v - old_v).front();

  std::vector<VertexSet> holders;
  for (VertexSet c : t_new.nodes()) {
    if (c.contains(added)) holders.push_back(c);
  }

  MuFactorization out;
  for (VertexSet s : separators(t_new)) {
    bool touched = s.empty() ||
                   std::any_of(holders.begin(), holders.end(), [s](VertexSet c) { return s.subset_of(c); });
    if (touched) {
      out.factors.emplace(s, nu(separator_forest(t_new, s)));
    } else {
      auto it = prev.factors.find(s);
      if (it == prev.factors.end()) {
        throw std::invalid_argument("mu_update: untouched separator " + s.to_string() + " missing from factorization");
      }
      out.factors.emplace(s, it->second);
    }
  }
  for (const auto& kv : out.factors) out.product *= kv.second;
  out.log_product = log_of(out.product);
  return out;
}

JunctionTree randomize_at_separator(const JunctionTree& t, VertexSet s, CounterRng& rng) {
  const auto comps = forest_components(t, s);
  const std::size_t q = comps.size();
  if (q <= 1) return t;

  std::vector<std::uint32_t> flat;
  std::vector<std::uint32_t> comp_of(t.size(), 0);
  for (std::size_t c = 0; c < q; ++c) {
    for (std::uint32_t i : comps[c]) {
      flat.push_back(i);
      comp_of[i] = static_cast<std::uint32_t>(c);
    }
  }

  // q - 2 nodes drawn with replacement from the whole forest, and one
  // representative per component.
  std::vector<std::uint32_t> list(q - 2);
  for (auto& y : list) y = flat[uniform_index(rng, flat.size())];
  std::vector<std::uint32_t> reps(q);
  for (std::size_t c = 0; c < q; ++c) reps[c] = comps[c][uniform_index(rng, comps[c].size())];

  std::vector<std::uint32_t> pending(q, 0);
  for (std::uint32_t y : list) ++pending[comp_of[y]];
  std::vector<bool> alive(q, true);

  std::vector<Link> links;
  links.reserve(t.links().size());
  for (const Link& l : t.links()) {
    bool cut = s.subset_of(t.node(l.a)) && s.subset_of(t.node(l.b)) && t.separator(l) == s;
    if (!cut) links.push_back(l);
  }
  for (std::uint32_t y : list) {
    std::size_t x = q;
    for (std::size_t c = q; c-- > 0;) {
      if (alive[c] && pending[c] == 0) {
        x = c;
        break;
      }
    }
    links.emplace_back(reps[x], y);
    alive[x] = false;
    --pending[comp_of[y]];
  }
  std::vector<std::uint32_t> last;
  for (std::size_t c = 0; c < q; ++c) {
    if (alive[c]) last.push_back(reps[c]);
  }
  links.emplace_back(last[0], last[1]);
  return JunctionTree(t.universe(), std::vector<VertexSet>(t.nodes().begin(), t.nodes().end()), std::move(links));
}

// ---------------------------------------------------------------------------
// Enumeration oracles

namespace {

// Labeled tree on k nodes from a Pruefer sequence of length k - 2.
std::vector<Link> decode_pruefer(const std::vector<std::uint32_t>& seq, std::uint32_t k) {
  std::vector<std::uint32_t> degree(k, 1);
  for (std::uint32_t x : seq) ++degree[x];
  std::vector<Link> links;
  for (std::uint32_t x : seq) {
    std::uint32_t leaf = 0;
    while (degree[leaf] != 1) ++leaf;
    links.emplace_back(leaf, x);
    --degree[leaf];
    --degree[x];
  }
  std::uint32_t u = 0;
  while (degree[u] != 1) ++u;
  std::uint32_t v = u + 1;
  while (degree[v] != 1) ++v;
  links.emplace_back(u, v);
  return links;
}

template <typename Visit>
void for_each_tree_on_cliques(const Graph& g, Visit&& visit) {
  std::vector<VertexSet> cl = cliques(g);
  const auto k = static_cast<std::uint32_t>(cl.size());
  if (k == 0) return;
  if (k == 1) {
    visit(JunctionTree(g.universe(), cl, {}));
    return;
  }
  std::vector<std::uint32_t> seq(k - 2, 0);
  while (true) {
    JunctionTree t(g.universe(), cl, decode_pruefer(seq, k));
    if (validate(t)) visit(std::move(t));
    std::size_t i = 0;
    while (i < seq.size() && ++seq[i] == k) seq[i++] = 0;
    if (i == seq.size()) break;
  }
}

}  // namespace

std::vector<JunctionTree> enumerate_junction_trees(const Graph& g) {
  std::vector<JunctionTree> out;
  for_each_tree_on_cliques(g, [&](JunctionTree t) { out.push_back(std::move(t)); });
  std::sort(out.begin(), out.end(), [](const JunctionTree& a, const JunctionTree& b) { return a.key() < b.key(); });
  return out;
}

std::vector<JunctionTree> enumerate_junction_trees(int p) {
  std::vector<JunctionTree> out;
  for (const Graph& g : enumerate_decomposable(p)) {
    auto trees = enumerate_junction_trees(g);
    std::move(trees.begin(), trees.end(), std::back_inserter(out));
  }
  return out;
}

std::uint64_t count_junction_trees_brute_force(const Graph& g) {
  std::uint64_t count = 0;
  for_each_tree_on_cliques(g, [&](const JunctionTree&) { ++count; });
  return count;
}

}  // namespace jtsmc
