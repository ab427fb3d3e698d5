#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "jtsmc/graph.hpp"
#include "jtsmc/junction_tree.hpp"
#include "jtsmc/smc.hpp"

namespace jtsmc {

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kVersion = "0.1.0";

// Graph: {"p": 4, "edges": [[1, 2], [2, 3]]}, labels 1-based.
nlohmann::json graph_to_json(const Graph& g);
Graph graph_from_json(const nlohmann::json& j);

/// Square 0/1 adjacency matrix, comma separated.
Graph graph_from_adjacency_csv(const std::string& text);

/// JSON unless the file ends in .csv.
Graph read_graph(const std::filesystem::path& path);

// Tree: {"p": 3, "nodes": [[1, 2], [2, 3]], "links": [[0, 1]]}, links index nodes.
nlohmann::json tree_to_json(const JunctionTree& t);
JunctionTree tree_from_json(const nlohmann::json& j);
JunctionTree read_tree(const std::filesystem::path& path);

/// Comma-separated reals, one row per line, no header.
Eigen::MatrixXd parse_matrix_csv(const std::string& text);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Record of one command invocation, embedded in every artifact.
struct RunManifest {
  std::string command;
  nlohmann::json flags = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::string started;
  std::string finished;

  /// Stamps `started` with the current UTC time.
  static RunManifest begin(std::string command, nlohmann::json flags, std::uint64_t seed);
  void finish();
  nlohmann::json to_json() const;
};

std::string utc_timestamp();

/// {"p", "N", "seed", "alpha", "beta", "log_Z", "omega", "graphs", "runtime_s"}.
nlohmann::json smc_result_to_json(const SMCResult& result, const PosteriorSummary& summary);

}  // namespace jtsmc
