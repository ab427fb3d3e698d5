#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "jtsmc/graph.hpp"
#include "jtsmc/junction_tree.hpp"

namespace jtsmc {

/// Unnormalized target over decomposable graphs in clique-separator form:
/// log score = sum over nodes - sum over link separators.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual int order() const = 0;
  virtual double log_clique_score(VertexSet clique) const = 0;
  virtual double log_separator_score(VertexSet separator) const { return log_clique_score(separator); }

  double log_score(const JunctionTree& t) const;

  /// log_score(after) - log_score(before), touching only the nodes and
  /// separators that differ between the two trees.
  double log_score_delta(const JunctionTree& before, const JunctionTree& after) const;
};

/// Constant target; its normalizing constant is the number of decomposable
/// graphs.
class UniformTarget final : public TargetModel {
 public:
  explicit UniformTarget(int p);

  int order() const override { return p_; }
  double log_clique_score(VertexSet) const override { return 0.0; }

 private:
  int p_;
};

/// log J(D, delta) = d*nu*log 2 + log Gamma_d(nu) - nu*log|D|, nu = (delta+d-1)/2:
/// the reciprocal normalizer of the inverse Wishart with df delta and scale D.
/// Throws std::invalid_argument if D is not symmetric positive definite or
/// delta <= 0.
double log_wishart_norm(const Eigen::MatrixXd& scale, double df);

/// Zero-mean Gaussian graphical model with a hyper inverse Wishart prior.
/// Clique score: -(n|C|/2) log(2 pi) + log J(Phi_C + S_C, delta + n) - log J(Phi_C, delta),
/// with S = y^T y. Scores are cached per vertex subset; concurrent calls are
/// safe.
class GGMModel final : public TargetModel {
 public:
  GGMModel(Eigen::MatrixXd data, Eigen::MatrixXd scale, double df, std::size_t cache_capacity = 1 << 16);

  /// Identity scale and df = p.
  static GGMModel with_default_prior(Eigen::MatrixXd data);

  GGMModel(GGMModel&&) noexcept;
  GGMModel& operator=(GGMModel&&) noexcept;
  ~GGMModel() override;

  int order() const override { return static_cast<int>(data_.cols()); }
  int samples() const { return static_cast<int>(data_.rows()); }
  const Eigen::MatrixXd& data() const { return data_; }
  const Eigen::MatrixXd& scale() const { return scale_; }
  const Eigen::MatrixXd& scatter() const { return scatter_; }
  double df() const { return df_; }

  double log_clique_score(VertexSet clique) const override;

  /// Score without consulting the cache.
  double compute_clique_score(VertexSet clique) const;

 private:
  struct Cache;

  Eigen::MatrixXd data_;
  Eigen::MatrixXd scale_;
  Eigen::MatrixXd scatter_;
  double df_;
  std::unique_ptr<Cache> cache_;
};

/// Rows and columns of `m` indexed by the members of `s` (label v -> index v-1).
Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, VertexSet s);

struct SyntheticGGMSpec {
  Graph graph;
  double epsilon = 0.5;
  double upsilon = 1.0;
  int n = 100;
  std::uint64_t seed = 0;
};

struct SyntheticGGM {
  Eigen::MatrixXd data;       // n x p
  Eigen::MatrixXd precision;  // p x p
  double shift = 0.0;         // diagonal shift applied for positive definiteness
};

/// Random precision matrix with the graph's zero pattern (edge entries of
/// random sign with magnitude uniform between the two interval ends,
/// diagonal uniform on the same interval, then the smallest diagonal shift
/// making it positive definite) and n draws from N(0, precision^-1).
/// Throws std::invalid_argument for a non-decomposable graph, n < 1, or a
/// degenerate interval.
SyntheticGGM generate_synthetic_ggm(const SyntheticGGMSpec& spec);

/// log sum_{r=1..p} C(p, r) 2^(r(p-r)).
double asymptotic_count(int p);

}  // namespace jtsmc
