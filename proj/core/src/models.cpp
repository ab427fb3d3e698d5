#include "jtsmc/models.hpp"

#include <algorithm>
#include <cmath>
#include <list>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include <boost/math/special_functions/gamma.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "jtsmc/rng.hpp"

namespace jtsmc {

// ---------------------------------------------------------------------------
// TargetModel

double TargetModel::log_score(const JunctionTree& t) const {
  double s = 0.0;
  for (VertexSet c : t.nodes()) s += log_clique_score(c);
  for (const Link& l : t.links()) s -= log_separator_score(t.separator(l));
  return s;
}

namespace {

struct Parts {
  std::vector<VertexSet> nodes;
  std::vector<VertexSet> seps;
};

Parts parts_of(const JunctionTree& t) {
  Parts p;
  p.nodes.assign(t.nodes().begin(), t.nodes().end());
  for (const Link& l : t.links()) p.seps.push_back(t.separator(l));
  std::sort(p.nodes.begin(), p.nodes.end());
  std::sort(p.seps.begin(), p.seps.end());
  return p;
}

std::vector<VertexSet> minus(const std::vector<VertexSet>& a, const std::vector<VertexSet>& b) {
  std::vector<VertexSet> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

}  // namespace

double TargetModel::log_score_delta(const JunctionTree& before, const JunctionTree& after) const {
  const Parts a = parts_of(before);
  const Parts b = parts_of(after);
  double d = 0.0;
  for (VertexSet c : minus(b.nodes, a.nodes)) d += log_clique_score(c);
  for (VertexSet c : minus(a.nodes, b.nodes)) d -= log_clique_score(c);
  for (VertexSet s : minus(b.seps, a.seps)) d -= log_separator_score(s);
  for (VertexSet s : minus(a.seps, b.seps)) d += log_separator_score(s);
  return d;
}

UniformTarget::UniformTarget(int p) : p_(p) {
  if (p < 1 || p > kMaxOrder) throw std::invalid_argument("target order out of range");
}

// ---------------------------------------------------------------------------
// Wishart normalizer

double log_wishart_norm(const Eigen::MatrixXd& scale, double df) {
  if (scale.rows() != scale.cols()) throw std::invalid_argument("scale matrix must be square");
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  const auto d = static_cast<double>(scale.rows());
  if (scale.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("scale matrix is not positive definite");
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double nu = (df + d - 1.0) / 2.0;
  // log multivariate gamma
  double lg = d * (d - 1.0) / 4.0 * std::log(std::numbers::pi);
  for (int j = 0; j < scale.rows(); ++j) lg += boost::math::lgamma(nu - j / 2.0);
  return d * nu * std::log(2.0) + lg - nu * log_det;
}

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, VertexSet s) {
  std::vector<int> idx;
  for (VertexId v : s) idx.push_back(v.value - 1);
  if (!idx.empty() && idx.back() >= m.rows()) throw std::out_of_range("subset exceeds matrix dimension");
  return m(idx, idx);
}

// ---------------------------------------------------------------------------
// GGMModel

struct GGMModel::Cache {
  static constexpr std::size_t kShards = 16;

  struct Shard {
    std::mutex lock;
    std::list<std::pair<std::uint64_t, double>> order;  // most recent first
    std::unordered_map<std::uint64_t, std::list<std::pair<std::uint64_t, double>>::iterator> index;
  };

  explicit Cache(std::size_t capacity) : per_shard(std::max<std::size_t>(1, capacity / kShards)) {}

  Shard& shard_for(std::uint64_t key) { return shards[mix64(key) % kShards]; }

  bool get(std::uint64_t key, double& value) {
    Shard& s = shard_for(key);
    std::lock_guard guard(s.lock);
    auto it = s.index.find(key);
    if (it == s.index.end()) return false;
    s.order.splice(s.order.begin(), s.order, it->second);
    value = it->second->second;
    return true;
  }

  void put(std::uint64_t key, double value) {
    Shard& s = shard_for(key);
    std::lock_guard guard(s.lock);
    if (s.index.count(key)) return;
    s.order.emplace_front(key, value);
    s.index[key] = s.order.begin();
    if (s.order.size() > per_shard) {
      s.index.erase(s.order.back().first);
      s.order.pop_back();
    }
  }

  std::size_t per_shard;
  std::array<Shard, kShards> shards;
};

GGMModel::GGMModel(Eigen::MatrixXd data, Eigen::MatrixXd scale, double df, std::size_t cache_capacity)
    : data_(std::move(data)), scale_(std::move(scale)), df_(df), cache_(std::make_unique<Cache>(cache_capacity)) {
  if (data_.rows() < 1) throw std::invalid_argument("data must contain at least one observation");
  if (data_.cols() < 1 || data_.cols() > kMaxOrder) throw std::invalid_argument("data dimension out of range");
  if (scale_.rows() != data_.cols() || scale_.cols() != data_.cols()) {
    throw std::invalid_argument("scale matrix dimension does not match the data");
  }
  if (!data_.allFinite() || !scale_.allFinite()) throw std::invalid_argument("non-finite data or scale entries");
  if (!(df_ > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (!scale_.isApprox(scale_.transpose())) throw std::invalid_argument("scale matrix is not symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(scale_).info() != Eigen::Success) {
    throw std::invalid_argument("scale matrix is not positive definite");
  }
  scatter_ = data_.transpose() * data_;
}

GGMModel GGMModel::with_default_prior(Eigen::MatrixXd data) {
  const auto p = data.cols();
  return GGMModel(std::move(data), Eigen::MatrixXd::Identity(p, p), static_cast<double>(p));
}

GGMModel::GGMModel(GGMModel&&) noexcept = default;
GGMModel& GGMModel::operator=(GGMModel&&) noexcept = default;
GGMModel::~GGMModel() = default;

double GGMModel::compute_clique_score(VertexSet clique) const {
  if (clique.empty()) return 0.0;
  const Eigen::MatrixXd phi = submatrix(scale_, clique);
  const Eigen::MatrixXd post = phi + submatrix(scatter_, clique);
  const double n = static_cast<double>(samples());
  return -n * clique.size() / 2.0 * std::log(2.0 * std::numbers::pi) + log_wishart_norm(post, df_ + n) -
         log_wishart_norm(phi, df_);
}

double GGMModel::log_clique_score(VertexSet clique) const {
  if (clique.empty()) return 0.0;
  double value = 0.0;
  if (cache_->get(clique.mask(), value)) return value;
  value = compute_clique_score(clique);
  cache_->put(clique.mask(), value);
  return value;
}

// ---------------------------------------------------------------------------
// Synthetic data

namespace {

bool positive_definite(const Eigen::MatrixXd& m) {
  return Eigen::LLT<Eigen::MatrixXd>(m).info() == Eigen::Success;
}

// Smallest d >= 0 such that m + d I is positive definite, by bisection.
double minimal_shift(const Eigen::MatrixXd& m) {
  const auto id = Eigen::MatrixXd::Identity(m.rows(), m.cols());
  if (positive_definite(m)) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (!positive_definite(m + hi * id)) hi *= 2.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (positive_definite(m + mid * id) ? hi : lo) = mid;
  }
  return hi + 1e-8;
}

}  // namespace

SyntheticGGM generate_synthetic_ggm(const SyntheticGGMSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("sample count must be positive");
  const double lo = std::min(spec.epsilon, spec.upsilon);
  const double hi = std::max(spec.epsilon, spec.upsilon);
  if (!(lo >= 0.0) || !(hi <= 1.0) || !(hi > lo)) {
    throw std::invalid_argument("interval endpoints must be distinct values in [0, 1]");
  }
  if (!is_decomposable(spec.graph)) throw NotDecomposableError("graph is not decomposable");

  const int p = spec.graph.universe();
  CounterRng rng = CounterRng::stream(spec.seed, 0x67656e);
  boost::random::uniform_real_distribution<double> magnitude(lo, hi);

  SyntheticGGM out;
  out.precision = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) out.precision(i, i) = magnitude(rng);
  for (auto [a, b] : spec.graph.edges()) {
    const double sign = bernoulli(rng, 0.5) ? 1.0 : -1.0;
    const double w = sign * magnitude(rng);
    out.precision(a - 1, b - 1) = w;
    out.precision(b - 1, a - 1) = w;
  }
  out.shift = minimal_shift(out.precision);
  out.precision.diagonal().array() += out.shift;

  // x = L^-T z gives Cov(x) = (L L^T)^-1.
  Eigen::LLT<Eigen::MatrixXd> llt(out.precision);
  boost::random::normal_distribution<double> normal;
  Eigen::MatrixXd z(p, spec.n);
  for (int j = 0; j < spec.n; ++j) {
    for (int i = 0; i < p; ++i) z(i, j) = normal(rng);
  }
  out.data = llt.matrixU().solve(z).transpose();
  return out;
}

double asymptotic_count(int p) {
  if (p < 1) throw std::invalid_argument("order must be positive");
  std::vector<double> terms;
  for (int r = 1; r <= p; ++r) {
    const double log_binom =
        boost::math::lgamma(p + 1.0) - boost::math::lgamma(r + 1.0) - boost::math::lgamma(p - r + 1.0);
    terms.push_back(log_binom + static_cast<double>(r) * (p - r) * std::log(2.0));
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum);
}

}  // namespace jtsmc
