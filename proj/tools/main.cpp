// jtsmc command-line tool.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jtsmc/graph.hpp"
#include "jtsmc/io.hpp"
#include "jtsmc/junction_tree.hpp"
#include "jtsmc/models.hpp"
#include "jtsmc/smc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInvalid = 2;

// Input that parsed but failed a structural check.
struct ValidationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void emit(const json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    jtsmc::write_json(out, j);
  }
}

void write_csv_with_manifest(const fs::path& path, const Eigen::MatrixXd& m, const jtsmc::RunManifest& manifest) {
  jtsmc::write_matrix_csv(path, m);
  jtsmc::write_json(fs::path(path.string() + ".manifest.json"), manifest.to_json());
}

struct SamplerFlags {
  std::size_t n = 10000;
  double alpha = 0.5;
  double beta = 0.5;
  std::uint64_t seed = 0;
  int threads = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("-N,--particles", n, "Number of particles")->check(CLI::PositiveNumber);
    cmd->add_option("--alpha", alpha, "Subtree continuation probability")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--beta", beta, "Nonempty-subtree probability")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--threads", threads, "Worker threads (0: all)")->check(CLI::NonNegativeNumber);
  }

  jtsmc::SMCConfig config(int p) const {
    jtsmc::SMCConfig cfg;
    cfg.p = p;
    cfg.particle_count = n;
    cfg.params = jtsmc::ExpanderParams(alpha, beta);
    cfg.seed = seed;
    cfg.threads = threads;
    return cfg;
  }

  json to_json() const {
    return {{"N", n}, {"alpha", alpha}, {"beta", beta}, {"seed", seed}, {"threads", threads}};
  }
};

// ---------------------------------------------------------------------------

struct EstimateCount {
  int p = 1;
  int reps = 1;
  SamplerFlags sampler;
  std::string out;

  int run() const {
    if (p < 1 || p > jtsmc::kMaxOrder) throw CLI::ValidationError("--p", "order must lie in 1..64");
    json flags = sampler.to_json();
    flags["p"] = p;
    flags["reps"] = reps;
    auto manifest = jtsmc::RunManifest::begin("estimate-count", flags, sampler.seed);

    jtsmc::UniformTarget target(p);
    std::vector<double> estimates;
    json replicates = json::array();
    for (int r = 0; r < reps; ++r) {
      SamplerFlags rep = sampler;
      rep.seed = sampler.seed + static_cast<std::uint64_t>(r);
      jtsmc::SMCResult res = jtsmc::run_smc(target, rep.config(p));
      estimates.push_back(std::exp(res.log_z));
      replicates.push_back({{"seed", rep.seed}, {"log_Z", res.log_z}, {"estimate", estimates.back()},
                            {"runtime_s", res.runtime_s}});
    }
    double mean = 0.0;
    for (double e : estimates) mean += e;
    mean /= reps;
    double var = 0.0;
    for (double e : estimates) var += (e - mean) * (e - mean);
    const double std_err = reps > 1 ? std::sqrt(var / (reps - 1) / reps) : 0.0;
    const double log_all_graphs = p * (p - 1) / 2.0 * std::log(2.0);

    manifest.finish();
    emit({{"p", p},
          {"replicates", replicates},
          {"mean", mean},
          {"std_err", std_err},
          {"fraction", std::exp(std::log(mean) - log_all_graphs)},
          {"fraction_std_err", std_err * std::exp(-log_all_graphs)},
          {"log_asymptotic", jtsmc::asymptotic_count(p)},
          {"manifest", manifest.to_json()}},
         out);
    return kExitOk;
  }
};

struct ExactCount {
  int p = 1;
  std::string out;

  int run() const {
    auto manifest = jtsmc::RunManifest::begin("exact-count", {{"p", p}}, 0);
    const std::uint64_t count = jtsmc::count_decomposable(p);
    const double all = std::ldexp(1.0, p * (p - 1) / 2);
    manifest.finish();
    emit({{"p", p}, {"count", count}, {"fraction", static_cast<double>(count) / all}, {"manifest", manifest.to_json()}},
         out);
    return kExitOk;
  }
};

jtsmc::JunctionTree load_valid_tree(const std::string& path) {
  jtsmc::JunctionTree t = jtsmc::read_tree(path);
  if (jtsmc::Validation v = jtsmc::validate(t); !v) throw ValidationFailure(v.diagnostic);
  return t;
}

struct Mu {
  std::string tree;
  std::string out;

  int run() const {
    auto manifest = jtsmc::RunManifest::begin("mu", {{"tree", tree}}, 0);
    const jtsmc::JunctionTree t = load_valid_tree(tree);
    const jtsmc::MuFactorization f = jtsmc::mu_factorization(t);
    json factors = json::array();
    for (const auto& [s, nu] : f.factors) factors.push_back({{"separator", s.labels()}, {"nu", nu.str()}});
    manifest.finish();
    emit({{"mu", f.product.str()}, {"log_mu", f.log_product}, {"factors", factors}, {"manifest", manifest.to_json()}},
         out);
    return kExitOk;
  }
};

struct Validate {
  std::string tree;

  int run() const {
    const jtsmc::Validation v = jtsmc::validate(jtsmc::read_tree(tree));
    std::cout << json{{"valid", v.ok}, {"diagnostic", v.diagnostic}}.dump(2) << '\n';
    return v.ok ? kExitOk : kExitInvalid;
  }
};

struct GgmPosterior {
  std::string data;
  std::string scale;
  std::optional<double> df;
  std::string method = "pgibbs";
  std::size_t pg_iters = 1000;
  std::size_t burnin = 300;
  SamplerFlags sampler;
  std::string out;
  std::string heatmap;

  int run() const {
    json flags = sampler.to_json();
    flags.update({{"data", data}, {"scale", scale}, {"method", method}, {"pg_iters", pg_iters}, {"burnin", burnin}});
    if (df) flags["df"] = *df;
    auto manifest = jtsmc::RunManifest::begin("ggm-posterior", flags, sampler.seed);

    Eigen::MatrixXd y = jtsmc::read_matrix_csv(data);
    if (y.rows() < 1) throw std::invalid_argument("data file has no observations");
    const auto p = y.cols();
    Eigen::MatrixXd phi = scale.empty() ? Eigen::MatrixXd::Identity(p, p) : jtsmc::read_matrix_csv(scale);
    if (phi.rows() != p || phi.cols() != p) throw std::invalid_argument("scale matrix dimension does not match the data");
    jtsmc::GGMModel model(std::move(y), std::move(phi), df.value_or(static_cast<double>(p)));
    const jtsmc::SMCConfig cfg = sampler.config(static_cast<int>(p));

    json result;
    jtsmc::PosteriorSummary summary;
    if (method == "smc") {
      jtsmc::SMCResult res = jtsmc::run_smc(model, cfg);
      summary = jtsmc::posterior_summary(res);
      result = jtsmc::smc_result_to_json(res, summary);
    } else {
      jtsmc::ParticleGibbsResult res = jtsmc::run_particle_gibbs(model, cfg, pg_iters, burnin);
      summary = res.summary;
      json graphs = json::array();
      for (const auto& wg : summary.graphs) {
        graphs.push_back({{"edges", jtsmc::graph_to_json(wg.graph)["edges"]}, {"weight", wg.weight}});
      }
      result = {{"p", p}, {"N", cfg.particle_count}, {"seed", cfg.seed}, {"alpha", cfg.params.alpha},
                {"beta", cfg.params.beta}, {"iterations", pg_iters}, {"burnin", burnin}, {"graphs", graphs}};
    }
    result["map_graph"] = jtsmc::graph_to_json(summary.map_graph);
    manifest.finish();
    result["manifest"] = manifest.to_json();
    if (!heatmap.empty()) write_csv_with_manifest(heatmap, summary.edge_probability, manifest);
    emit(result, out);
    return kExitOk;
  }
};

struct GenData {
  std::string graph;
  int n = 100;
  double epsilon = 0.5;
  double upsilon = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string precision;

  int run() const {
    auto manifest = jtsmc::RunManifest::begin(
        "gen-data", {{"graph", graph}, {"n", n}, {"epsilon", epsilon}, {"upsilon", upsilon}, {"seed", seed}}, seed);
    jtsmc::SyntheticGGMSpec spec;
    spec.graph = jtsmc::read_graph(graph);
    if (!jtsmc::is_decomposable(spec.graph)) throw ValidationFailure("graph is not decomposable");
    spec.n = n;
    spec.epsilon = epsilon;
    spec.upsilon = upsilon;
    spec.seed = seed;
    const jtsmc::SyntheticGGM g = jtsmc::generate_synthetic_ggm(spec);
    manifest.finish();
    write_csv_with_manifest(out, g.data, manifest);
    if (!precision.empty()) write_csv_with_manifest(precision, g.precision, manifest);
    return kExitOk;
  }
};

struct EnumerateTrees {
  std::string graph;
  std::optional<int> p;
  bool count_only = false;
  std::string out;

  int run() const {
    if (graph.empty() == !p.has_value()) throw CLI::ValidationError("enumerate-trees", "give exactly one of --graph, --p");
    auto manifest = jtsmc::RunManifest::begin("enumerate-trees", {{"graph", graph}, {"p", p ? *p : 0}}, 0);
    std::vector<jtsmc::JunctionTree> trees;
    if (p) {
      trees = jtsmc::enumerate_junction_trees(*p);
    } else {
      const jtsmc::Graph g = jtsmc::read_graph(graph);
      if (!jtsmc::is_decomposable(g)) throw ValidationFailure("graph is not decomposable");
      trees = jtsmc::enumerate_junction_trees(g);
    }
    json list = json::array();
    if (!count_only) {
      for (const auto& t : trees) list.push_back(jtsmc::tree_to_json(t));
    }
    manifest.finish();
    json result{{"count", trees.size()}, {"manifest", manifest.to_json()}};
    if (!count_only) result["trees"] = list;
    emit(result, out);
    return kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Junction-tree sequential Monte Carlo over decomposable graphs"};
  app.set_version_flag("--version", std::string(jtsmc::kVersion));
  app.require_subcommand(1);

  EstimateCount estimate;
  auto* c_est = app.add_subcommand("estimate-count", "Estimate the number of decomposable graphs on p vertices");
  c_est->add_option("-p,--p", estimate.p, "Number of vertices")->required();
  c_est->add_option("--reps", estimate.reps, "Independent replicates")->check(CLI::PositiveNumber);
  estimate.sampler.add(c_est);
  c_est->add_option("-o,--out", estimate.out, "Output JSON (default stdout)");

  ExactCount exact;
  auto* c_exact = app.add_subcommand("exact-count", "Count decomposable graphs by exhaustive enumeration");
  c_exact->add_option("-p,--p", exact.p, "Number of vertices")->required()->check(CLI::Range(1, jtsmc::kMaxEnumerationOrder));
  c_exact->add_option("-o,--out", exact.out, "Output JSON (default stdout)");

  Mu mu;
  auto* c_mu = app.add_subcommand("mu", "Number of junction trees of a tree's underlying graph");
  c_mu->add_option("tree", mu.tree, "Tree JSON file")->required()->check(CLI::ExistingFile);
  c_mu->add_option("-o,--out", mu.out, "Output JSON (default stdout)");

  Validate val;
  auto* c_val = app.add_subcommand("validate", "Check a tree JSON file for the junction property");
  c_val->add_option("tree", val.tree, "Tree JSON file")->required()->check(CLI::ExistingFile);

  GgmPosterior ggm;
  ggm.sampler.n = 50;
  auto* c_ggm = app.add_subcommand("ggm-posterior", "Posterior over decomposable Gaussian graphical models");
  c_ggm->add_option("--data", ggm.data, "Data CSV, n rows by p columns")->required()->check(CLI::ExistingFile);
  c_ggm->add_option("--scale", ggm.scale, "Prior scale matrix CSV (default identity)")->check(CLI::ExistingFile);
  c_ggm->add_option("--df", ggm.df, "Prior degrees of freedom (default p)")->check(CLI::PositiveNumber);
  c_ggm->add_option("--method", ggm.method, "pgibbs or smc")->check(CLI::IsMember({"pgibbs", "smc"}));
  c_ggm->add_option("--pg-iters", ggm.pg_iters, "Particle Gibbs iterations")->check(CLI::PositiveNumber);
  c_ggm->add_option("--burnin", ggm.burnin, "Discarded initial iterations");
  ggm.sampler.add(c_ggm);
  c_ggm->add_option("-o,--out", ggm.out, "Posterior JSON (default stdout)");
  c_ggm->add_option("--heatmap", ggm.heatmap, "Edge probability CSV");

  GenData gen;
  auto* c_gen = app.add_subcommand("gen-data", "Synthetic Gaussian data for a decomposable graph");
  c_gen->add_option("--graph", gen.graph, "Graph JSON or adjacency CSV")->required()->check(CLI::ExistingFile);
  c_gen->add_option("-n,--n", gen.n, "Number of observations")->check(CLI::PositiveNumber);
  c_gen->add_option("--epsilon", gen.epsilon, "Interval end");
  c_gen->add_option("--upsilon", gen.upsilon, "Interval end");
  c_gen->add_option("--seed", gen.seed, "Random seed");
  c_gen->add_option("-o,--out", gen.out, "Data CSV")->required();
  c_gen->add_option("--precision", gen.precision, "Precision matrix CSV");

  EnumerateTrees enumerate;
  auto* c_enum = app.add_subcommand("enumerate-trees", "List every junction tree of a graph or of all graphs on p vertices");
  c_enum->add_option("--graph", enumerate.graph, "Graph JSON or adjacency CSV")->check(CLI::ExistingFile);
  c_enum->add_option("-p,--p", enumerate.p, "Number of vertices")->check(CLI::Range(1, jtsmc::kMaxEnumerationOrder));
  c_enum->add_flag("--count-only", enumerate.count_only, "Print only the number of trees");
  c_enum->add_option("-o,--out", enumerate.out, "Output JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (c_est->parsed()) return estimate.run();
    if (c_exact->parsed()) return exact.run();
    if (c_mu->parsed()) return mu.run();
    if (c_val->parsed()) return val.run();
    if (c_ggm->parsed()) return ggm.run();
    if (c_gen->parsed()) return gen.run();
    if (c_enum->parsed()) return enumerate.run();
  } catch (const ValidationFailure& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const jtsmc::InvalidTreeError& e) {
    std::cerr << "validation failed: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
