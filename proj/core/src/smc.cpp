#include "jtsmc/smc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace jtsmc {

namespace {

// Stream domains.
constexpr std::uint64_t kInit = 1;
constexpr std::uint64_t kPropagate = 2;
constexpr std::uint64_t kResample = 3;
constexpr std::uint64_t kSelect = 4;

int thread_count(const SMCConfig& cfg) {
#ifdef _OPENMP
  return cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#else
  (void)cfg;
  return 1;
#endif
}

// Runs body(i) for i in [0, n) on the OpenMP pool and rethrows the first
// exception afterwards.
template <typename Body>
void parallel_for(std::size_t n, int threads, Body&& body) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 8) num_threads(threads)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(jtsmc_error)
      if (!error) error = std::current_exception();
    }
  }
  (void)threads;
  if (error) std::rethrow_exception(error);
}

std::vector<double> normalized_weights(const std::vector<Particle>& particles) {
  const double total = log_sum_weights(particles);
  std::vector<double> w(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) w[i] = std::exp(particles[i].log_weight - total);
  return w;
}

std::size_t draw_categorical(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * cumulative.back());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

std::vector<std::uint32_t> resample(const std::vector<Particle>& particles, Resampling scheme, std::size_t count,
                                    CounterRng& rng) {
  std::vector<double> cumulative = normalized_weights(particles);
  for (std::size_t i = 1; i < cumulative.size(); ++i) cumulative[i] += cumulative[i - 1];
  std::vector<std::uint32_t> out(count);
  if (scheme == Resampling::systematic) {
    const double u = uniform01(rng);
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = static_cast<std::uint32_t>(draw_categorical(cumulative, (u + static_cast<double>(i)) / count));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      out[i] = static_cast<std::uint32_t>(draw_categorical(cumulative, uniform01(rng)));
    }
  }
  return out;
}

struct Run {
  const TargetModel& model;
  const SMCConfig& cfg;
  const RetainedPath* pinned = nullptr;
  std::uint64_t sweep = 0;

  ParticleSystem init() const {
    ParticleSystem sys;
    sys.stage = 1;
    sys.particles.resize(cfg.particle_count);
    parallel_for(cfg.particle_count, thread_count(cfg), [&](std::size_t i) {
      Particle& part = sys.particles[i];
      if (pinned && i == 0) {
        part.comb = {pinned->comb.front()};
        part.tree = pinned->trees.front();
      } else {
        CounterRng rng = CounterRng::stream(cfg.seed, kInit, sweep, 0, i);
        const VertexId v(static_cast<int>(uniform_index(rng, static_cast<std::size_t>(cfg.p))) + 1);
        part.comb = {v};
        part.tree = JunctionTree::trivial(cfg.p, v);
      }
      part.mu = mu_factorization(part.tree);
      part.log_weight = model.log_score(part.tree);
    });
    return sys;
  }

  ParticleSystem step(const ParticleSystem& prev) const {
    if (prev.stage >= cfg.p) throw std::invalid_argument("particles already cover every vertex");
    const std::size_t n = prev.particles.size();
    ParticleSystem next;
    next.stage = prev.stage + 1;

    CounterRng rrng = CounterRng::stream(cfg.seed, kResample, sweep, prev.stage);
    if (pinned) {
      std::vector<std::uint32_t> rest = resample(prev.particles, cfg.resampling, n - 1, rrng);
      next.ancestors.push_back(0);
      next.ancestors.insert(next.ancestors.end(), rest.begin(), rest.end());
    } else {
      next.ancestors = resample(prev.particles, cfg.resampling, n, rrng);
    }

    next.particles.resize(n);
    parallel_for(n, thread_count(cfg), [&](std::size_t i) {
      const Particle& parent = prev.particles[next.ancestors[i]];
      Particle& child = next.particles[i];
      if (pinned && i == 0) {
        child.comb.assign(pinned->comb.begin(), pinned->comb.begin() + next.stage);
        child.tree = pinned->trees[static_cast<std::size_t>(next.stage - 1)];
      } else {
        CounterRng rng = CounterRng::stream(cfg.seed, kPropagate, sweep, prev.stage, i);
        child.comb = combination_step(parent.comb, cfg.p, rng);
        child.tree = expand(parent.tree, child.comb.back(), cfg.params, rng).first;
      }
      child.mu = mu_update(parent.mu, parent.tree, child.tree);
      child.log_weight =
          log_incremental_weight(model, parent.tree, parent.mu, child.tree, child.mu, cfg.params);
    });
    return next;
  }

  // Runs every stage; keeps the whole population history when asked.
  SMCResult run(std::vector<ParticleSystem>* history) const {
    const auto start = std::chrono::steady_clock::now();
    SMCResult result;
    result.config = cfg;
    ParticleSystem sys = init();
    result.log_omega.push_back(log_sum_weights(sys.particles));
    while (sys.stage < cfg.p) {
      ParticleSystem next = step(sys);
      if (history) history->push_back(std::move(sys));
      sys = std::move(next);
      result.log_omega.push_back(log_sum_weights(sys.particles));
    }
    if (history) history->push_back(sys);
    result.particles = std::move(sys.particles);
    double total = 0.0;
    for (double lo : result.log_omega) total += lo;
    result.log_z = total - cfg.p * std::log(static_cast<double>(cfg.particle_count));
    result.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  }
};

RetainedPath trace_back(const std::vector<ParticleSystem>& history, std::size_t k) {
  RetainedPath path;
  path.comb = history.back().particles[k].comb;
  path.trees.resize(history.size());
  for (std::size_t s = history.size(); s-- > 0;) {
    path.trees[s] = history[s].particles[k].tree;
    if (s > 0) k = history[s].ancestors[k];
  }
  return path;
}

std::size_t select_final(const std::vector<Particle>& particles, const SMCConfig& cfg, std::uint64_t sweep) {
  CounterRng rng = CounterRng::stream(cfg.seed, kSelect, sweep);
  std::vector<double> cumulative = normalized_weights(particles);
  for (std::size_t i = 1; i < cumulative.size(); ++i) cumulative[i] += cumulative[i - 1];
  return draw_categorical(cumulative, uniform01(rng));
}

void check_conditional(const SMCConfig& cfg) {
  if (cfg.p < 1 || cfg.p > kMaxOrder) throw std::invalid_argument("target order out of range");
  if (cfg.particle_count < 1) throw std::invalid_argument("need at least one particle");
}

}  // namespace

void SMCConfig::check() const {
  if (p < 1 || p > kMaxOrder) throw std::invalid_argument("target order out of range");
  if (particle_count < 2) throw std::invalid_argument("need at least two particles");
}

Combination combination_step(const Combination& comb, int p, CounterRng& rng) {
  VertexSet used;
  for (VertexId v : comb) used.insert(v);
  const VertexSet unused = VertexSet::range(p) - used;
  if (unused.empty()) throw std::invalid_argument("combination already holds every vertex");
  std::size_t pick = uniform_index(rng, static_cast<std::size_t>(unused.size()));
  Combination out = comb;
  for (VertexId v : unused) {
    if (pick-- == 0) {
      out.push_back(v);
      break;
    }
  }
  return out;
}

double log_sum_weights(const std::vector<Particle>& particles) {
  double top = -std::numeric_limits<double>::infinity();
  for (const Particle& part : particles) top = std::max(top, part.log_weight);
  if (!std::isfinite(top)) throw std::runtime_error("every particle weight vanished");
  double sum = 0.0;
  for (const Particle& part : particles) sum += std::exp(part.log_weight - top);
  return top + std::log(sum);
}

double log_incremental_weight(const TargetModel& model, const JunctionTree& parent, const MuFactorization& parent_mu,
                              const JunctionTree& child, const MuFactorization& child_mu,
                              const ExpanderParams& params) {
  const double forward = expander_density(parent, child, params);
  if (!(forward > 0.0)) throw std::logic_error("realized transition has zero expander density");
  const double backward = collapser_density(child, parent);
  return model.log_score_delta(parent, child) + parent_mu.log_product - child_mu.log_product + std::log(backward) -
         std::log(forward);
}

ParticleSystem init_particles(const TargetModel& model, const SMCConfig& cfg) {
  cfg.check();
  return Run{model, cfg}.init();
}

ParticleSystem smc_step(const ParticleSystem& system, const TargetModel& model, const SMCConfig& cfg) {
  cfg.check();
  return Run{model, cfg}.step(system);
}

SMCResult run_smc(const TargetModel& model, const SMCConfig& cfg) {
  cfg.check();
  if (model.order() != cfg.p) throw std::invalid_argument("model order differs from the configured order");
  return Run{model, cfg}.run(nullptr);
}

// ---------------------------------------------------------------------------
// Summaries

PosteriorSummary summarize_graphs(int p, const std::vector<WeightedGraph>& weighted) {
  std::map<Graph, double> totals;
  double sum = 0.0;
  for (const WeightedGraph& wg : weighted) {
    if (!(wg.weight >= 0.0)) throw std::invalid_argument("negative graph weight");
    totals[wg.graph] += wg.weight;
    sum += wg.weight;
  }
  if (!(sum > 0.0)) throw std::invalid_argument("graph weights sum to zero");
  PosteriorSummary out;
  out.edge_probability = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [g, w] : totals) {
    out.graphs.push_back({g, w / sum});
    for (auto [a, b] : g.edges()) {
      out.edge_probability(a - 1, b - 1) += w / sum;
      out.edge_probability(b - 1, a - 1) += w / sum;
    }
  }
  out.edge_probability = out.edge_probability.cwiseMin(1.0);
  std::stable_sort(out.graphs.begin(), out.graphs.end(),
                   [](const WeightedGraph& x, const WeightedGraph& y) { return x.weight > y.weight; });
  out.map_graph = out.graphs.front().graph;
  return out;
}

PosteriorSummary posterior_summary(const SMCResult& result) {
  const std::vector<double> w = normalized_weights(result.particles);
  std::vector<WeightedGraph> weighted;
  weighted.reserve(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) weighted.push_back({underlying_graph(result.particles[i].tree), w[i]});
  return summarize_graphs(result.config.p, weighted);
}

// ---------------------------------------------------------------------------
// Conditional SMC

void check_path(const RetainedPath& path, int p, const ExpanderParams& params) {
  const auto fail = [](const std::string& why) { throw std::invalid_argument("inconsistent retained path: " + why); };
  if (path.comb.size() != static_cast<std::size_t>(p) || path.trees.size() != path.comb.size()) {
    fail("expected " + std::to_string(p) + " vertices and trees");
  }
  VertexSet seen;
  for (std::size_t k = 0; k < path.comb.size(); ++k) {
    const VertexId v = path.comb[k];
    if (v.value < 1 || v.value > p || seen.contains(v)) fail("combination is not a sequence of distinct vertices");
    seen.insert(v);
    const JunctionTree& t = path.trees[k];
    if (t.vertices() != seen) fail("tree " + std::to_string(k + 1) + " does not cover the combination prefix");
    if (Validation val = validate(t); !val) fail(val.diagnostic);
    if (k > 0 && !(expander_density(path.trees[k - 1], t, params) > 0.0 &&
                   collapser_density(t, path.trees[k - 1]) > 0.0)) {
      fail("tree " + std::to_string(k + 1) + " is not an expansion of its predecessor");
    }
  }
}

std::pair<SMCResult, RetainedPath> conditional_smc(const TargetModel& model, const SMCConfig& cfg,
                                                   const RetainedPath& retained, std::uint64_t sweep) {
  check_conditional(cfg);
  check_path(retained, cfg.p, cfg.params);
  std::vector<ParticleSystem> history;
  Run run{model, cfg, &retained, sweep};
  SMCResult result = run.run(&history);
  RetainedPath path = trace_back(history, select_final(result.particles, cfg, sweep));
  return {std::move(result), std::move(path)};
}

RetainedPath initial_path(const TargetModel& model, const SMCConfig& cfg) {
  check_conditional(cfg);
  std::vector<ParticleSystem> history;
  SMCResult result = Run{model, cfg}.run(&history);
  return trace_back(history, select_final(result.particles, cfg, 0));
}

ParticleGibbsResult run_particle_gibbs(const TargetModel& model, const SMCConfig& cfg, std::size_t iterations,
                                       std::size_t burnin) {
  if (iterations <= burnin) throw std::invalid_argument("iterations must exceed the burn-in");
  RetainedPath path = initial_path(model, cfg);
  ParticleGibbsResult out;
  std::vector<WeightedGraph> kept;
  for (std::size_t it = 1; it <= iterations; ++it) {
    path = conditional_smc(model, cfg, path, it).second;
    if (it > burnin) {
      out.chain.push_back(underlying_graph(path.trees.back()));
      kept.push_back({out.chain.back(), 1.0});
    }
  }
  out.summary = summarize_graphs(cfg.p, kept);
  return out;
}

}  // namespace jtsmc
