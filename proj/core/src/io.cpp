#include "jtsmc/io.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

namespace jtsmc {

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int label_of(const nlohmann::json& j, int p) {
  if (!j.is_number_integer()) throw FormatError("vertex label must be an integer");
  const int v = j.get<int>();
  if (v < 1 || v > p) throw FormatError("vertex label " + std::to_string(v) + " outside 1.." + std::to_string(p));
  return v;
}

int order_of(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("p") || !j["p"].is_number_integer()) {
    throw FormatError("expected an object with an integer \"p\"");
  }
  const int p = j["p"].get<int>();
  if (p < 1 || p > kMaxOrder) throw FormatError("\"p\" must lie in 1.." + std::to_string(kMaxOrder));
  return p;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Graphs

nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a, b});
  return {{"p", g.universe()}, {"edges", edges}};
}

Graph graph_from_json(const nlohmann::json& j) {
  const int p = order_of(j);
  if (!j.contains("edges") || !j["edges"].is_array()) throw FormatError("expected an \"edges\" array");
  Graph g(p);
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2) throw FormatError("each edge must be a pair of labels");
    const int a = label_of(e[0], p);
    const int b = label_of(e[1], p);
    if (a == b) throw FormatError("self-loop on vertex " + std::to_string(a));
    g.add_edge(VertexId(a), VertexId(b));
  }
  return g;
}

Graph graph_from_adjacency_csv(const std::string& text) {
  Eigen::MatrixXd m = parse_matrix_csv(text);
  if (m.rows() != m.cols() || m.rows() < 1 || m.rows() > kMaxOrder) {
    throw FormatError("adjacency matrix must be square with 1.." + std::to_string(kMaxOrder) + " rows");
  }
  const int p = static_cast<int>(m.rows());
  Graph g(p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) {
      const double x = m(i, j);
      if (x != 0.0 && x != 1.0) throw FormatError("adjacency entries must be 0 or 1");
      if (m(j, i) != x) throw FormatError("adjacency matrix is not symmetric");
      if (i == j && x != 0.0) throw FormatError("adjacency diagonal must be zero");
      if (i < j && x == 1.0) g.add_edge(VertexId(i + 1), VertexId(j + 1));
    }
  }
  return g;
}

Graph read_graph(const std::filesystem::path& path) {
  const std::string text = slurp(path);
  if (path.extension() == ".csv") return graph_from_adjacency_csv(text);
  try {
    return graph_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Trees

nlohmann::json tree_to_json(const JunctionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (VertexSet c : t.nodes()) nodes.push_back(c.labels());
  nlohmann::json links = nlohmann::json::array();
  for (const Link& l : t.links()) links.push_back({l.a, l.b});
  return {{"p", t.universe()}, {"nodes", nodes}, {"links", links}};
}

JunctionTree tree_from_json(const nlohmann::json& j) {
  const int p = order_of(j);
  if (!j.contains("nodes") || !j["nodes"].is_array()) throw FormatError("expected a \"nodes\" array");
  if (!j.contains("links") || !j["links"].is_array()) throw FormatError("expected a \"links\" array");
  std::vector<VertexSet> nodes;
  for (const auto& n : j["nodes"]) {
    if (!n.is_array()) throw FormatError("each node must be an array of labels");
    VertexSet c;
    for (const auto& v : n) c.insert(VertexId(label_of(v, p)));
    nodes.push_back(c);
  }
  std::vector<Link> links;
  for (const auto& l : j["links"]) {
    if (!l.is_array() || l.size() != 2 || !l[0].is_number_unsigned() || !l[1].is_number_unsigned()) {
      throw FormatError("each link must be a pair of node indices");
    }
    const auto a = l[0].get<std::uint64_t>();
    const auto b = l[1].get<std::uint64_t>();
    if (a >= nodes.size() || b >= nodes.size()) throw FormatError("link endpoint out of range");
    links.emplace_back(static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b));
  }
  return JunctionTree(p, std::move(nodes), std::move(links));
}

JunctionTree read_tree(const std::filesystem::path& path) {
  try {
    return tree_from_json(nlohmann::json::parse(slurp(path)));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Matrices

Eigen::MatrixXd parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    for (const std::string& cell : split(line, ',')) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw FormatError("line " + std::to_string(line_no) + ": cannot parse \"" + cell + "\" as a number");
      }
      if (cell.find_first_not_of(" \t", used) != std::string::npos) {
        throw FormatError("line " + std::to_string(line_no) + ": trailing characters in \"" + cell + "\"");
      }
      row.push_back(x);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                        " columns");
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path) { return parse_matrix_csv(slurp(path)); }

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

nlohmann::json read_json(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(slurp(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Manifest and results

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

RunManifest RunManifest::begin(std::string command, nlohmann::json flags, std::uint64_t seed) {
  RunManifest m;
  m.command = std::move(command);
  m.flags = std::move(flags);
  m.seed = seed;
  m.started = utc_timestamp();
  return m;
}

void RunManifest::finish() { finished = utc_timestamp(); }

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"flags", flags},       {"seed", seed},
          {"version", version}, {"started", started}, {"finished", finished}};
}

nlohmann::json smc_result_to_json(const SMCResult& result, const PosteriorSummary& summary) {
  nlohmann::json omega = nlohmann::json::array();
  for (double lo : result.log_omega) omega.push_back(std::exp(lo));
  nlohmann::json graphs = nlohmann::json::array();
  for (const WeightedGraph& wg : summary.graphs) {
    graphs.push_back({{"edges", graph_to_json(wg.graph)["edges"]}, {"weight", wg.weight}});
  }
  return {{"p", result.config.p},
          {"N", result.config.particle_count},
          {"seed", result.config.seed},
          {"alpha", result.config.params.alpha},
          {"beta", result.config.params.beta},
          {"log_Z", result.log_z},
          {"omega", omega},
          {"log_omega", result.log_omega},
          {"graphs", graphs},
          {"runtime_s", result.runtime_s}};
}

}  // namespace jtsmc
