#include <doctest.h>

#include <map>

#include <boost/math/distributions/chi_squared.hpp>

#include "jtsmc/junction_tree.hpp"
#include "jtsmc/kernels.hpp"
#include "oracles.hpp"

using namespace jtsmc;

namespace {

JunctionTree make(int p, std::vector<VertexSet> nodes, std::vector<Link> links) {
  return JunctionTree(p, std::move(nodes), std::move(links));
}

JunctionTree star_tree() {
  return make(4, {VertexSet{1, 2}, VertexSet{1, 3}, VertexSet{1, 4}}, {{0, 1}, {1, 2}});
}

JunctionTree empty3() { return make(3, {VertexSet{1}, VertexSet{2}, VertexSet{3}}, {{0, 1}, {1, 2}}); }

// Chi-square goodness of fit of `draws` randomizations against uniform.
double uniformity_p_value(const JunctionTree& t, VertexSet s, int draws, std::size_t expected_support) {
  std::map<TreeKey, int> counts;
  for (int i = 0; i < draws; ++i) {
    CounterRng rng = CounterRng::stream(99, i);
    JunctionTree out = randomize_at_separator(t, s, rng);
    REQUIRE(validate(out));
    REQUIRE(underlying_graph(out) == underlying_graph(t));
    ++counts[out.key()];
  }
  REQUIRE(counts.size() == expected_support);
  const double e = static_cast<double>(draws) / static_cast<double>(expected_support);
  double stat = 0.0;
  for (const auto& [k, c] : counts) stat += (c - e) * (c - e) / e;
  boost::math::chi_squared dist(static_cast<double>(expected_support - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST_CASE("validate examples") {
  CHECK(validate(make(3, {VertexSet{1, 2}, VertexSet{2, 3}}, {{0, 1}})));
  Validation bad = validate(make(4, {VertexSet{1, 2}, VertexSet{3, 4}, VertexSet{1, 4}}, {{0, 1}, {1, 2}}));
  CHECK_FALSE(bad);
  CHECK(bad.diagnostic.find("vertex 1") != std::string::npos);
  CHECK_FALSE(validate(make(3, {VertexSet{1, 2}, VertexSet{2}}, {{0, 1}})));  // nested
  CHECK_FALSE(validate(make(3, {VertexSet{1}, VertexSet{2}, VertexSet{3}}, {{0, 1}})));  // disconnected
  CHECK_FALSE(validate(make(3, {VertexSet{1}, VertexSet{2}}, {{0, 1}, {0, 1}})));
  CHECK_FALSE(validate(make(3, {VertexSet{}}, {})));
}

TEST_CASE("underlying graph examples") {
  CHECK(underlying_graph(make(3, {VertexSet{1, 2, 3}}, {})) == Graph::complete(3, VertexSet::range(3)));
  CHECK(underlying_graph(make(2, {VertexSet{1}, VertexSet{2}}, {{0, 1}})) == Graph(2));
  Graph path(3);
  path.add_edge(VertexId(1), VertexId(2));
  path.add_edge(VertexId(2), VertexId(3));
  CHECK(underlying_graph(make(3, {VertexSet{1, 2}, VertexSet{2, 3}}, {{0, 1}})) == path);
  CHECK_THROWS_AS(underlying_graph(make(4, {VertexSet{1, 2}, VertexSet{3, 4}, VertexSet{1, 4}}, {{0, 1}, {1, 2}})),
                  InvalidTreeError);
}

TEST_CASE("junction_tree_of round-trips every graph with p <= 5") {
  CHECK(junction_tree_of(Graph(3)).size() == 3);
  CHECK(junction_tree_of(Graph::complete(4, VertexSet::range(4))).size() == 1);
  for (const Graph& g : enumerate_decomposable(5)) {
    JunctionTree t = junction_tree_of(g);
    REQUIRE(validate(t));
    CHECK(underlying_graph(t) == g);
  }
}

TEST_CASE("separator forests and nu") {
  SeparatorForest f = separator_forest(empty3(), VertexSet{});
  CHECK(f.components() == 3);
  CHECK(f.total == 3);
  CHECK(nu(f) == 3);
  SeparatorForest g = separator_forest(make(3, {VertexSet{1, 2}, VertexSet{2, 3}}, {{0, 1}}), VertexSet{2});
  CHECK(g.component_sizes == std::vector<std::uint32_t>{1, 1});
  CHECK(nu(g) == 1);
  SeparatorForest s = separator_forest(star_tree(), VertexSet{1});
  CHECK(s.component_sizes == std::vector<std::uint32_t>{1, 1, 1});
  CHECK(nu(SeparatorForest{VertexSet{}, {4}, 4}) == 1);
  CHECK(nu(SeparatorForest{VertexSet{}, {1, 2}, 3}) == 2);
  CHECK_THROWS_AS(separator_forest(star_tree(), VertexSet{2}), std::invalid_argument);
}

TEST_CASE("mu examples") {
  CHECK(mu(make(3, {VertexSet{1, 2, 3}}, {})) == 1);
  CHECK(mu(empty3()) == 3);
  CHECK(mu(star_tree()) == 3);
  CHECK(count_junction_trees_brute_force(underlying_graph(star_tree())) == 3);
}

TEST_CASE("mu matches brute force and is representation independent for p <= 5") {
  CounterRng rng = CounterRng::stream(5);
  for (int p = 1; p <= 5; ++p) {
    for (const Graph& g : enumerate_decomposable(p)) {
      const BigInt m = mu(junction_tree_of(g));
      REQUIRE(m == count_junction_trees_brute_force(g));
      for (int r = 0; r < 5; ++r) CHECK(mu(oracle::random_representation(g, rng)) == m);
    }
  }
}

TEST_CASE("mu_update matches recomputation and carries factors over") {
  const ExpanderParams params(0.5, 0.5);
  SUBCASE("engulfing K_m keeps mu at 1") {
    JunctionTree k3 = make(4, {VertexSet{1, 2, 3}}, {});
    JunctionTree k4 = make(4, {VertexSet{1, 2, 3, 4}}, {});
    CHECK(mu_update(mu_factorization(k3), k3, k4).product == 1);
  }
  SUBCASE("isolated vertex 2 -> 3") {
    JunctionTree e2 = make(3, {VertexSet{1}, VertexSet{2}}, {{0, 1}});
    CHECK(mu_update(mu_factorization(e2), e2, empty3()).product == 3);
  }
  SUBCASE("sampled transitions") {
    for (int m = 1; m <= 4; ++m) {
      for (const JunctionTree& t : oracle::trees_on(m, 6)) {
        const MuFactorization before = mu_factorization(t);
        for (int draw = 0; draw < 20; ++draw) {
          CounterRng rng = CounterRng::stream(17, m, draw, t.size());
          JunctionTree next = expand(t, VertexId(m + 1), params, rng).first;
          const MuFactorization upd = mu_update(before, t, next);
          const MuFactorization full = mu_factorization(next);
          REQUIRE(upd.product == full.product);
          REQUIRE(upd.factors == full.factors);
          CHECK(upd.log_product == doctest::Approx(full.log_product));
          // Separators untouched by the new vertex keep their factor.
          for (const auto& [s, value] : upd.factors) {
            bool touched = s.empty();
            for (VertexSet c : next.nodes()) {
              if (c.contains(VertexId(m + 1)) && s.subset_of(c)) touched = true;
            }
            if (!touched) CHECK(value == before.factors.at(s));
          }
        }
      }
    }
  }
  SUBCASE("inconsistent inputs") {
    JunctionTree e2 = make(3, {VertexSet{1}, VertexSet{2}}, {{0, 1}});
    CHECK_THROWS_AS(mu_update(mu_factorization(e2), e2, e2), std::invalid_argument);
    CHECK_THROWS_AS(mu_update(mu_factorization(star_tree()), e2, empty3()), std::invalid_argument);
  }
}

TEST_CASE("randomize_at_separator") {
  SUBCASE("single component is unchanged") {
    JunctionTree t = make(3, {VertexSet{1, 2}, VertexSet{2, 3}}, {{0, 1}});
    CounterRng rng(1);
    CHECK(randomize_at_separator(t, VertexSet{2}, rng) == t);
  }
  SUBCASE("uniform over reconnections") {
    CHECK(uniformity_p_value(empty3(), VertexSet{}, 30000, 3) > 0.001);
    CHECK(uniformity_p_value(star_tree(), VertexSet{1}, 30000, 3) > 0.001);
    JunctionTree mixed = make(4, {VertexSet{1, 2}, VertexSet{2, 3}, VertexSet{4}}, {{0, 1}, {1, 2}});
    CHECK(uniformity_p_value(mixed, VertexSet{}, 30000, 2) > 0.001);
    JunctionTree empty4 =
        make(4, {VertexSet{1}, VertexSet{2}, VertexSet{3}, VertexSet{4}}, {{0, 1}, {1, 2}, {2, 3}});
    CHECK(uniformity_p_value(empty4, VertexSet{}, 30000, 16) > 0.001);
  }
  SUBCASE("invalid separator") {
    CounterRng rng(1);
    CHECK_THROWS_AS(randomize_at_separator(star_tree(), VertexSet{3}, rng), std::invalid_argument);
  }
}

TEST_CASE("enumerated trees per p") {
  // Every enumerated tree is valid and distinct.
  for (int p = 1; p <= 4; ++p) {
    auto trees = enumerate_junction_trees(p);
    std::map<TreeKey, int> seen;
    for (const auto& t : trees) {
      REQUIRE(validate(t));
      ++seen[t.key()];
    }
    CHECK(seen.size() == trees.size());
  }
  CHECK(enumerate_junction_trees(2).size() == 2);
  CHECK(enumerate_junction_trees(3).size() == 10);  // 7 graphs with mu 1, empty graph with mu 3
}
