#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "jtsmc/graph.hpp"
#include "jtsmc/junction_tree.hpp"
#include "jtsmc/kernels.hpp"
#include "jtsmc/models.hpp"
#include "jtsmc/rng.hpp"

namespace jtsmc {

/// Vertices in insertion order.
using Combination = std::vector<VertexId>;

/// Append a uniformly chosen vertex of 1..p not yet in `comb`.
/// Throws std::invalid_argument if comb already holds p vertices.
Combination combination_step(const Combination& comb, int p, CounterRng& rng);

struct Particle {
  Combination comb;
  JunctionTree tree;
  MuFactorization mu;
  double log_weight = 0.0;
};

struct ParticleSystem {
  std::vector<Particle> particles;
  std::vector<std::uint32_t> ancestors;  // parent index per particle; empty at stage 1
  int stage = 0;
};

enum class Resampling { multinomial, systematic };

struct SMCConfig {
  int p = 1;
  std::size_t particle_count = 10000;
  ExpanderParams params;
  std::uint64_t seed = 0;
  Resampling resampling = Resampling::multinomial;
  int threads = 0;  // 0: OpenMP default

  /// Throws std::invalid_argument on p < 1 or N < 2.
  void check() const;
};

struct SMCResult {
  SMCConfig config;
  std::vector<Particle> particles;  // final population
  std::vector<double> log_omega;    // log of the weight sum at each stage
  double log_z = 0.0;               // sum(log_omega) - p log N
  double runtime_s = 0.0;
};

ParticleSystem init_particles(const TargetModel& model, const SMCConfig& cfg);

/// Resample, extend the combination, expand the tree and reweight. The
/// random streams are keyed by (seed, stage, particle index).
ParticleSystem smc_step(const ParticleSystem& system, const TargetModel& model, const SMCConfig& cfg);

/// Log incremental weight of moving `parent` to `child`: target ratio times
/// mu ratio times collapser density over expander density.
/// Throws std::logic_error when the expander cannot produce `child`.
double log_incremental_weight(const TargetModel& model, const JunctionTree& parent, const MuFactorization& parent_mu,
                              const JunctionTree& child, const MuFactorization& child_mu,
                              const ExpanderParams& params);

SMCResult run_smc(const TargetModel& model, const SMCConfig& cfg);

/// Log-sum-exp of the weights in index order.
double log_sum_weights(const std::vector<Particle>& particles);

struct WeightedGraph {
  Graph graph;
  double weight = 0.0;
};

struct PosteriorSummary {
  std::vector<WeightedGraph> graphs;  // descending weight, sums to 1
  Eigen::MatrixXd edge_probability;   // p x p, symmetric, zero diagonal
  Graph map_graph;
};

PosteriorSummary posterior_summary(const SMCResult& result);

/// Normalized summary from graphs with nonnegative weights.
PosteriorSummary summarize_graphs(int p, const std::vector<WeightedGraph>& weighted);

/// Full insertion history: comb holds p vertices and trees[k] covers the
/// first k + 1 of them.
struct RetainedPath {
  Combination comb;
  std::vector<JunctionTree> trees;
};

/// Throws std::invalid_argument when the path is not a valid insertion
/// history for a target of order p.
void check_path(const RetainedPath& path, int p, const ExpanderParams& params);

/// Conditional SMC sweep: particle 0 follows `retained` at every stage, the
/// others resample from the whole population. A new path is traced back from
/// a particle drawn in proportion to its final weight. `sweep` separates the
/// random streams of successive sweeps. Allows N = 1.
std::pair<SMCResult, RetainedPath> conditional_smc(const TargetModel& model, const SMCConfig& cfg,
                                                   const RetainedPath& retained, std::uint64_t sweep);

/// A path traced back from one unconditional run, used to start a chain.
RetainedPath initial_path(const TargetModel& model, const SMCConfig& cfg);

struct ParticleGibbsResult {
  PosteriorSummary summary;
  std::vector<Graph> chain;  // final graph of every kept iteration
};

/// Iterate conditional_smc; the graphs after `burnin` iterations are
/// summarized with equal weight.
ParticleGibbsResult run_particle_gibbs(const TargetModel& model, const SMCConfig& cfg, std::size_t iterations,
                                       std::size_t burnin);

}  // namespace jtsmc
