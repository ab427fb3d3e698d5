#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "jtsmc/smc.hpp"

namespace oracle {

using jtsmc::Graph;
using jtsmc::VertexId;
using jtsmc::VertexSet;
using Mask = std::uint64_t;

namespace {

// Plain mutable tree: node masks plus an edge list over node indices.
struct Plain {
  std::vector<Mask> nodes;
  std::vector<bool> dead;
  std::vector<std::pair<int, int>> edges;

  static Plain of(const JunctionTree& t) {
    Plain p;
    for (VertexSet c : t.nodes()) p.nodes.push_back(c.mask());
    p.dead.assign(p.nodes.size(), false);
    for (const auto& l : t.links()) p.edges.emplace_back(static_cast<int>(l.a), static_cast<int>(l.b));
    return p;
  }

  int add(Mask m) {
    nodes.push_back(m);
    dead.push_back(false);
    return static_cast<int>(nodes.size()) - 1;
  }

  bool has_edge(int a, int b) const {
    return std::any_of(edges.begin(), edges.end(), [&](auto e) {
      return (e.first == a && e.second == b) || (e.first == b && e.second == a);
    });
  }

  void drop_edge(int a, int b) {
    std::erase_if(edges, [&](auto e) { return (e.first == a && e.second == b) || (e.first == b && e.second == a); });
  }

  std::vector<int> neighbours(int a) const {
    std::vector<int> out;
    for (auto [x, y] : edges) {
      if (x == a) out.push_back(y);
      if (y == a) out.push_back(x);
    }
    return out;
  }

  TreeKey key(int universe) const {
    std::vector<int> idx(nodes.size(), -1);
    std::vector<VertexSet> ns;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (dead[i]) continue;
      idx[i] = static_cast<int>(ns.size());
      ns.push_back(VertexSet::from_mask(nodes[i]));
    }
    std::vector<jtsmc::Link> ls;
    for (auto [a, b] : edges) ls.emplace_back(static_cast<std::uint32_t>(idx[a]), static_cast<std::uint32_t>(idx[b]));
    JunctionTree t(universe, ns, ls);
    if (!jtsmc::validate(t)) throw std::logic_error("oracle built an invalid tree");
    return t.key();
  }
};

std::vector<Mask> submasks(Mask m) {
  std::vector<Mask> out;
  for (Mask s = m;; s = (s - 1) & m) {
    out.push_back(s);
    if (s == 0) break;
  }
  return out;
}

// Calls f with every tree (edge list) on `q` labels, via Pruefer codes.
void for_each_labelled_tree(int q, const std::function<void(const std::vector<std::pair<int, int>>&)>& f) {
  if (q == 1) {
    f({});
    return;
  }
  if (q == 2) {
    f({{0, 1}});
    return;
  }
  std::vector<int> code(static_cast<std::size_t>(q - 2), 0);
  while (true) {
    std::vector<int> degree(static_cast<std::size_t>(q), 1);
    for (int c : code) ++degree[c];
    std::vector<std::pair<int, int>> edges;
    for (int c : code) {
      for (int leaf = 0; leaf < q; ++leaf) {
        if (degree[leaf] == 1) {
          edges.emplace_back(leaf, c);
          --degree[leaf];
          --degree[c];
          break;
        }
      }
    }
    int u = -1;
    for (int i = 0; i < q; ++i) {
      if (degree[i] == 1) {
        if (u < 0) {
          u = i;
        } else {
          edges.emplace_back(u, i);
        }
      }
    }
    f(edges);
    std::size_t k = 0;
    for (; k < code.size(); ++k) {
      if (++code[k] < q) break;
      code[k] = 0;
    }
    if (k == code.size()) break;
  }
}

// Every way of joining the connected pieces of `base` (its alive nodes and
// edges) into one tree, each reconnection listed once.
std::vector<Plain> reconnections(const Plain& base) {
  std::vector<int> comp(base.nodes.size(), -1);
  std::vector<std::vector<int>> members;
  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    if (base.dead[i] || comp[i] >= 0) continue;
    members.emplace_back();
    std::deque<int> q{static_cast<int>(i)};
    comp[i] = static_cast<int>(members.size()) - 1;
    while (!q.empty()) {
      int x = q.front();
      q.pop_front();
      members.back().push_back(x);
      for (int y : base.neighbours(x)) {
        if (comp[y] < 0) {
          comp[y] = comp[i];
          q.push_back(y);
        }
      }
    }
  }
  std::vector<Plain> out;
  for_each_labelled_tree(static_cast<int>(members.size()), [&](const std::vector<std::pair<int, int>>& tree) {
    // Choose an endpoint node inside each component for every tree edge.
    std::vector<std::size_t> pick(tree.size() * 2, 0);
    while (true) {
      Plain p = base;
      for (std::size_t e = 0; e < tree.size(); ++e) {
        p.edges.emplace_back(members[tree[e].first][pick[2 * e]], members[tree[e].second][pick[2 * e + 1]]);
      }
      out.push_back(std::move(p));
      std::size_t k = 0;
      for (; k < pick.size(); ++k) {
        const int c = (k % 2 == 0) ? tree[k / 2].first : tree[k / 2].second;
        if (++pick[k] < members[c].size()) break;
        pick[k] = 0;
      }
      if (k == pick.size()) break;
    }
  });
  return out;
}

void drop_empty_links(Plain& p) {
  std::erase_if(p.edges, [&](auto e) { return (p.nodes[e.first] & p.nodes[e.second]) == 0; });
}

void bfs_executions(const JunctionTree& t, double alpha, std::deque<std::uint32_t> queue, std::vector<bool> visited,
                    std::vector<std::uint32_t> result, double prob,
                    std::map<std::vector<std::uint32_t>, double>& out) {
  if (queue.empty()) {
    std::sort(result.begin(), result.end());
    out[result] += prob;
    return;
  }
  const std::uint32_t y = queue.front();
  queue.pop_front();
  visited[y] = true;
  result.push_back(y);
  std::vector<std::uint32_t> fresh;
  for (std::uint32_t z : t.neighbors(y)) {
    if (!visited[z]) fresh.push_back(z);
  }
  // Branch on every keep/skip pattern of the fresh neighbours.
  const std::size_t k = fresh.size();
  for (Mask pattern = 0; pattern < (Mask{1} << k); ++pattern) {
    std::deque<std::uint32_t> q = queue;
    double pr = prob;
    for (std::size_t i = 0; i < k; ++i) {
      if ((pattern >> i) & 1U) {
        q.push_back(fresh[i]);
        pr *= alpha;
      } else {
        pr *= 1.0 - alpha;
      }
    }
    bfs_executions(t, alpha, q, visited, result, pr, out);
  }
}

}  // namespace

bool is_chordal_naive(const Graph& g) {
  std::vector<int> order;
  for (VertexId v : g.vertices()) order.push_back(v.value);
  do {
    bool perfect = true;
    for (std::size_t i = 0; i < order.size() && perfect; ++i) {
      std::vector<int> later;
      for (std::size_t j = i + 1; j < order.size(); ++j) {
        if (g.has_edge(VertexId(order[i]), VertexId(order[j]))) later.push_back(order[j]);
      }
      for (std::size_t a = 0; a < later.size() && perfect; ++a) {
        for (std::size_t b = a + 1; b < later.size(); ++b) {
          if (!g.has_edge(VertexId(later[a]), VertexId(later[b]))) {
            perfect = false;
            break;
          }
        }
      }
    }
    if (perfect) return true;
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

std::vector<VertexSet> maximal_cliques_naive(const Graph& g) {
  const Mask all = g.vertices().mask();
  std::vector<Mask> complete;
  for (Mask s : submasks(all)) {
    if (s == 0) continue;
    bool ok = true;
    for (int a = 0; a < 64 && ok; ++a) {
      if (!((s >> a) & 1U)) continue;
      for (int b = a + 1; b < 64; ++b) {
        if (((s >> b) & 1U) && !g.has_edge(VertexId(a + 1), VertexId(b + 1))) {
          ok = false;
          break;
        }
      }
    }
    if (ok) complete.push_back(s);
  }
  std::vector<VertexSet> out;
  for (Mask s : complete) {
    const bool maximal =
        std::none_of(complete.begin(), complete.end(), [s](Mask o) { return o != s && (s & o) == s; });
    if (maximal) out.push_back(VertexSet::from_mask(s));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::map<std::vector<std::uint32_t>, double> subtree_distribution(const JunctionTree& t, double alpha, double beta) {
  std::map<std::vector<std::uint32_t>, double> out;
  out[{}] = 1.0 - beta;
  for (std::uint32_t root = 0; root < t.size(); ++root) {
    bfs_executions(t, alpha, {root}, std::vector<bool>(t.size(), false), {}, beta / static_cast<double>(t.size()),
                   out);
  }
  return out;
}

Distribution subtree_route_outcomes(const JunctionTree& t, int v, const std::vector<std::uint32_t>& sub) {
  const Mask vbit = Mask{1} << (v - 1);
  const int universe = t.universe();
  Distribution out;
  const Plain base = Plain::of(t);
  const std::size_t k = sub.size();
  auto in_sub = [&](int x) { return std::find(sub.begin(), sub.end(), static_cast<std::uint32_t>(x)) != sub.end(); };

  std::vector<Mask> union_sep(k, 0);
  std::vector<std::vector<Mask>> extra_options(k);
  std::vector<double> extra_prob(k);
  for (std::size_t j = 0; j < k; ++j) {
    const int c = static_cast<int>(sub[j]);
    bool mandated = false;
    for (int d : base.neighbours(c)) {
      if (in_sub(d)) union_sep[j] |= base.nodes[c] & base.nodes[d];
    }
    for (int d : base.neighbours(c)) {
      if (in_sub(d) && (base.nodes[c] & base.nodes[d]) == union_sep[j]) mandated = true;
    }
    const Mask free = base.nodes[c] & ~union_sep[j];
    for (Mask m : submasks(free)) {
      if (m != 0 || !mandated) extra_options[j].push_back(m);
    }
    extra_prob[j] = 1.0 / static_cast<double>(extra_options[j].size());
  }

  std::vector<std::size_t> pick(k, 0);
  while (true) {
    std::vector<Mask> retained(k);
    std::vector<bool> engulfed(k);
    std::vector<std::vector<int>> movable(k);
    double p_extra = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      const int c = static_cast<int>(sub[j]);
      retained[j] = union_sep[j] | extra_options[j][pick[j]];
      engulfed[j] = retained[j] == base.nodes[c];
      p_extra *= extra_prob[j];
      if (!engulfed[j]) {
        for (int d : base.neighbours(c)) {
          if (!in_sub(d) && ((base.nodes[c] & base.nodes[d]) & ~retained[j]) == 0) movable[j].push_back(d);
        }
      }
    }
    // Every relocation pattern.
    std::vector<Mask> moved(k, 0);
    while (true) {
      double pr = p_extra;
      for (std::size_t j = 0; j < k; ++j) pr /= std::ldexp(1.0, static_cast<int>(movable[j].size()));

      Plain p = base;
      std::vector<int> created(k);
      for (std::size_t j = 0; j < k; ++j) created[j] = p.add(retained[j] | vbit);
      for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
          if (base.has_edge(static_cast<int>(sub[a]), static_cast<int>(sub[b]))) {
            p.drop_edge(static_cast<int>(sub[a]), static_cast<int>(sub[b]));
            p.edges.emplace_back(created[a], created[b]);
          }
        }
      }
      for (std::size_t j = 0; j < k; ++j) {
        const int c = static_cast<int>(sub[j]);
        if (engulfed[j]) {
          for (int d : base.neighbours(c)) {
            if (in_sub(d)) continue;
            p.drop_edge(c, d);
            p.edges.emplace_back(created[j], d);
          }
          p.dead[c] = true;
        } else {
          p.edges.emplace_back(c, created[j]);
          for (std::size_t i = 0; i < movable[j].size(); ++i) {
            if ((moved[j] >> i) & 1U) {
              p.drop_edge(c, movable[j][i]);
              p.edges.emplace_back(created[j], movable[j][i]);
            }
          }
        }
      }
      out[p.key(universe)] += pr;

      std::size_t j = 0;
      for (; j < k; ++j) {
        if (++moved[j] < (Mask{1} << movable[j].size())) break;
        moved[j] = 0;
      }
      if (j == k) break;
    }

    std::size_t j = 0;
    for (; j < k; ++j) {
      if (++pick[j] < extra_options[j].size()) break;
      pick[j] = 0;
    }
    if (j == k) break;
  }
  return out;
}

Distribution expander_outcomes(const JunctionTree& t, int v, double alpha, double beta) {
  const Mask vbit = Mask{1} << (v - 1);
  const int universe = t.universe();
  Distribution out;

  // Empty subtree: isolated {v}, then every reconnection of the pieces left
  // after cutting the empty-separator links, uniformly.
  {
    Plain base = Plain::of(t);
    base.add(vbit);
    drop_empty_links(base);
    const std::vector<Plain> all = reconnections(base);
    for (const Plain& p : all) out[p.key(universe)] += (1.0 - beta) / static_cast<double>(all.size());
  }

  for (const auto& [sub, p_sub] : subtree_distribution(t, alpha, beta)) {
    if (sub.empty()) continue;
    for (const auto& [key, pr] : subtree_route_outcomes(t, v, sub)) out[key] += p_sub * pr;
  }
  return out;
}

Distribution collapser_outcomes(const JunctionTree& t_plus, int v) {
  const Mask vbit = Mask{1} << (v - 1);
  const int universe = t_plus.universe();
  Plain base = Plain::of(t_plus);
  Distribution out;

  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    if (base.nodes[i] != vbit) continue;
    Plain p = base;
    std::erase_if(p.edges, [&](auto e) { return e.first == static_cast<int>(i) || e.second == static_cast<int>(i); });
    p.dead[i] = true;
    drop_empty_links(p);
    const std::vector<Plain> all = reconnections(p);
    for (const Plain& r : all) out[r.key(universe)] += 1.0 / static_cast<double>(all.size());
    return out;
  }

  std::vector<int> holders;
  std::vector<std::vector<int>> cands;
  for (std::size_t i = 0; i < base.nodes.size(); ++i) {
    if (!(base.nodes[i] & vbit)) continue;
    holders.push_back(static_cast<int>(i));
    cands.emplace_back();
    for (int d : base.neighbours(static_cast<int>(i))) {
      if ((base.nodes[i] & base.nodes[d]) == (base.nodes[i] & ~vbit)) cands.back().push_back(d);
    }
  }
  std::vector<std::size_t> pick(holders.size(), 0);
  while (true) {
    Plain p = base;
    double pr = 1.0;
    for (std::size_t j = 0; j < holders.size(); ++j) {
      const int h = holders[j];
      int origin = 0;
      if (cands[j].empty()) {
        origin = p.add(base.nodes[h] & ~vbit);
      } else {
        origin = cands[j][pick[j]];
        pr /= static_cast<double>(cands[j].size());
      }
      for (int d : p.neighbours(h)) {
        if (d != origin && !p.has_edge(origin, d)) p.edges.emplace_back(origin, d);
      }
      std::erase_if(p.edges, [&](auto e) { return e.first == h || e.second == h; });
      p.dead[h] = true;
    }
    out[p.key(universe)] += pr;
    std::size_t j = 0;
    for (; j < pick.size(); ++j) {
      if (cands[j].empty()) continue;
      if (++pick[j] < cands[j].size()) break;
      pick[j] = 0;
    }
    if (j == pick.size()) break;
  }
  return out;
}

std::vector<JunctionTree> trees_on(int m, int universe) {
  std::vector<JunctionTree> out;
  for (const JunctionTree& t : jtsmc::enumerate_junction_trees(m)) {
    std::vector<VertexSet> nodes(t.nodes().begin(), t.nodes().end());
    std::vector<jtsmc::Link> links(t.links().begin(), t.links().end());
    out.emplace_back(universe, std::move(nodes), std::move(links));
  }
  return out;
}

JunctionTree random_representation(const Graph& g, jtsmc::CounterRng& rng) {
  JunctionTree t = jtsmc::junction_tree_of(g);
  for (int round = 0; round < 3; ++round) {
    for (VertexSet s : jtsmc::separators(t)) t = jtsmc::randomize_at_separator(t, s, rng);
  }
  return t;
}

double log_expected_estimate(const jtsmc::TargetModel& target, const jtsmc::ExpanderParams& params) {
  const int p = target.order();
  std::vector<int> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), 1);
  // Every path weight is taken relative to the best single-vertex score.
  double ref = -std::numeric_limits<double>::infinity();
  for (int v = 1; v <= p; ++v) ref = std::max(ref, target.log_score(JunctionTree::trivial(p, VertexId(v))));
  double total = 0.0;
  double perms = 0.0;
  std::function<double(const JunctionTree&, std::size_t)> descend = [&](const JunctionTree& t, std::size_t m) {
    if (m == order.size()) return 1.0;
    double sum = 0.0;
    const jtsmc::MuFactorization mu_t = jtsmc::mu_factorization(t);
    for (const auto& [key, prob] : expander_outcomes(t, order[m], params.alpha, params.beta)) {
      std::vector<jtsmc::Link> links;
      for (const auto& [a, b] : key.links) {
        const auto ia = std::lower_bound(key.nodes.begin(), key.nodes.end(), a) - key.nodes.begin();
        const auto ib = std::lower_bound(key.nodes.begin(), key.nodes.end(), b) - key.nodes.begin();
        links.emplace_back(static_cast<std::uint32_t>(ia), static_cast<std::uint32_t>(ib));
      }
      const JunctionTree next(p, key.nodes, links);
      const double w = std::exp(jtsmc::log_incremental_weight(target, t, mu_t, next, jtsmc::mu_factorization(next),
                                                              params));
      sum += prob * w * descend(next, m + 1);
    }
    return sum;
  };
  do {
    perms += 1.0;
    const JunctionTree start = JunctionTree::trivial(p, VertexId(order[0]));
    total += std::exp(target.log_score(start) - ref) * descend(start, 1);
  } while (std::next_permutation(order.begin(), order.end()));
  return ref + std::log(total / perms);
}

double expected_estimate(int p, const jtsmc::ExpanderParams& params) {
  return std::exp(log_expected_estimate(jtsmc::UniformTarget(p), params));
}

double log_marginal_1d(const Eigen::VectorXd& y, double scale, double df) {
  const double n = static_cast<double>(y.size());
  const double s = y.squaredNorm();
  const double a = df / 2.0;
  const double rate = scale / 2.0;
  // log of prior(lambda) * likelihood(lambda)
  auto log_f = [&](double lam) {
    return a * std::log(rate) - boost::math::lgamma(a) + (a - 1.0) * std::log(lam) - rate * lam +
           n / 2.0 * std::log(lam / (2.0 * std::numbers::pi)) - lam * s / 2.0;
  };
  const double shape = a + n / 2.0;
  const double mode = shape > 1.0 ? (shape - 1.0) / (rate + s / 2.0) : 1.0;
  const double c = log_f(mode);
  boost::math::quadrature::exp_sinh<double> integrator;
  const double integral = integrator.integrate([&](double lam) { return std::exp(log_f(lam) - c); }, 0.0,
                                               std::numeric_limits<double>::infinity(), 1e-14);
  return c + std::log(integral);
}

ExactPosterior exact_posterior(const jtsmc::TargetModel& model) {
  const int p = model.order();
  ExactPosterior out;
  std::vector<double> logs;
  std::vector<Graph> graphs = jtsmc::enumerate_decomposable(p);
  for (const Graph& g : graphs) logs.push_back(model.log_score(jtsmc::junction_tree_of(g)));
  const double top = *std::max_element(logs.begin(), logs.end());
  double z = 0.0;
  for (double l : logs) z += std::exp(l - top);
  out.edge_probability = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const double w = std::exp(logs[i] - top) / z;
    out.graphs.emplace_back(graphs[i], w);
    for (auto [a, b] : graphs[i].edges()) {
      out.edge_probability(a - 1, b - 1) += w;
      out.edge_probability(b - 1, a - 1) += w;
    }
  }
  return out;
}

double total_variation(const std::map<Graph, double>& approx, const ExactPosterior& exact) {
  double tv = 0.0;
  double covered = 0.0;
  for (const auto& [g, w] : exact.graphs) {
    auto it = approx.find(g);
    const double a = it == approx.end() ? 0.0 : it->second;
    covered += a;
    tv += std::abs(a - w);
  }
  double rest = 0.0;
  for (const auto& [g, w] : approx) rest += w;
  tv += std::max(0.0, rest - covered);
  return tv / 2.0;
}

}  // namespace oracle
