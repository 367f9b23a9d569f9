#include <catch_amalgamated.hpp>

#include <random>

#include "support.hpp"

using namespace netcox;
using Catch::Matchers::WithinAbs;

namespace {

SimpleGraph graph(int n, std::vector<PairKey> e) { return SimpleGraph::from_edges(n, e); }

}  // namespace

TEST_CASE("fixed graph statistics", "[netstats]") {
  const SimpleGraph k3 = graph(3, {{1, 2}, {2, 3}, {1, 3}});
  CHECK(clustering_coefficient(k3).value == 1.0);
  CHECK(diameter(k3).value == 1);

  const SimpleGraph path5 = graph(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}});
  CHECK(diameter(path5).value == 4);
  CHECK(clustering_coefficient(path5).value == 0.0);
  CHECK_FALSE(clustering_coefficient(path5).undefined);

  const SimpleGraph star = graph(5, {{1, 2}, {1, 3}, {1, 4}, {1, 5}});
  CHECK(clustering_coefficient(star).value == 0.0);
  CHECK(diameter(star).value == 2);
  CHECK(degree_distribution(star) == std::vector<std::int64_t>{0, 4, 0, 0, 1});

  const SimpleGraph k4 = graph(4, {{1, 2}, {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}});
  CHECK(clustering_coefficient(k4).value == 1.0);

  // K3 plus a 4-node path: the path is the larger component.
  const SimpleGraph mixed = graph(8, {{1, 2}, {2, 3}, {1, 3}, {4, 5}, {5, 6}, {6, 7}});
  const DiameterResult d = diameter(mixed);
  CHECK(d.value == 3);
  CHECK(d.disconnected);
  CHECK(degree_distribution(mixed) == std::vector<std::int64_t>{1, 2, 5});

  const SimpleGraph empty = graph(4, {});
  CHECK(clustering_coefficient(empty).undefined);
  CHECK(diameter(empty).value == 0);
  CHECK_FALSE(diameter(empty).disconnected);
  CHECK(degree_distribution(empty) == std::vector<std::int64_t>{4});

  // A single edge has no connected triple.
  const SimpleGraph edge = graph(3, {{1, 2}});
  CHECK(clustering_coefficient(edge).undefined);
  CHECK(diameter(edge).value == 1);
}

TEST_CASE("graph statistics match brute force on random graphs", "[netstats]") {
  std::mt19937_64 rng(2024);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 3 + static_cast<int>(rng() % 14);
    std::bernoulli_distribution on(0.05 + 0.4 * (rep % 7) / 6.0);
    std::vector<PairKey> e;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j)
        if (on(rng)) e.push_back({i, j});
    const SimpleGraph g = graph(n, e);
    const testsupport::BruteGraph b(g);
    const auto [cv, cu] = b.clustering();
    const ClusteringResult c = clustering_coefficient(g);
    CHECK_THAT(c.value, WithinAbs(cv, 1e-15));
    CHECK(c.undefined == cu);
    const auto [dv, dd] = b.diameter();
    const DiameterResult d = diameter(g);
    CHECK(d.value == dv);
    CHECK(d.disconnected == dd);
    const auto hist = degree_distribution(g);
    std::int64_t total = 0, ends = 0;
    for (std::size_t k = 0; k < hist.size(); ++k) {
      total += hist[k];
      ends += static_cast<std::int64_t>(k) * hist[k];
    }
    CHECK(total == n);
    CHECK(ends == 2 * static_cast<std::int64_t>(e.size()));
  }
}

TEST_CASE("frequency regimes select edges by count", "[netstats]") {
  const std::vector<PairKey> pairs{{1, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 5}};
  const std::vector<std::int64_t> counts{0, 2, 4, 7, 15};
  auto edges = [&](FrequencyRegime r) { return regime_subgraph(5, pairs, counts, r).n_edges(); };
  CHECK(edges({1, 3}) == 1);
  CHECK(edges({2, 4}) == 2);
  CHECK(edges({5, 12}) == 1);
  CHECK(edges({10, std::nullopt}) == 1);
  CHECK(edges({0, 0}) == 1);
  CHECK(FrequencyRegime{10, std::nullopt}.label() == "(10,inf)");
  CHECK(default_regimes().size() == 6);
  CHECK_THROWS_AS(edges({4, 2}), Error);
}

namespace {

Panel gof_panel(int n, double p_active, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Panel p = testsupport::random_panel(rng, n, 2, 1, true, p_active);
  return with_counts(p, simulate_panel_counts(p, Eigen::VectorXd::Constant(1, 0.8), seed));
}

}  // namespace

TEST_CASE("goodness-of-fit bands", "[netstats]") {
  const Panel p = gof_panel(15, 0.6, 4);
  const Eigen::VectorXd th = Eigen::VectorXd::Constant(1, 0.8);

  SECTION("degenerate with two simulations") {
    GofOptions o;
    o.n_sims = 2;
    const GofReport r = gof_bands(th, p, 1, o);
    CHECK(r.regimes.size() == 6);
    for (const auto& reg : r.regimes) {
      std::size_t h = 0;
      for (auto v : reg.clustering_hist) h += v;
      CHECK(h == 2);
    }
    o.n_sims = 1;
    CHECK_THROWS_AS(gof_bands(th, p, 1, o), Error);
  }

  SECTION("bands are ordered and deterministic") {
    GofOptions o;
    o.n_sims = 300;
    o.quantiles = {0.05, 0.5, 0.95};
    const GofReport r = gof_bands(th, p, 1, o);
    const GofReport again = gof_bands(th, p, 1, o);
    for (std::size_t g = 0; g < r.regimes.size(); ++g) {
      const auto& reg = r.regimes[g];
      std::size_t dsum = 0;
      for (auto v : reg.diameter_hist) dsum += v;
      CHECK(dsum == 300);
      CHECK(reg.clustering_undefined_fraction >= 0.0);
      CHECK(reg.clustering_undefined_fraction <= 1.0);
      for (std::size_t d = 0; d < reg.degree_bands.size(); ++d) {
        const auto& q = reg.degree_bands[d].quantiles;
        CHECK(q[0] <= q[1]);
        CHECK(q[1] <= q[2]);
        CHECK(q == again.regimes[g].degree_bands[d].quantiles);
      }
      CHECK(reg.clustering_hist == again.regimes[g].clustering_hist);
      CHECK(reg.diameter_hist == again.regimes[g].diameter_hist);
    }
    o.seed = 2;
    const GofReport other = gof_bands(th, p, 1, o);
    bool differs = false;
    for (std::size_t g = 0; g < r.regimes.size(); ++g)
      differs = differs || other.regimes[g].clustering_hist != r.regimes[g].clustering_hist;
    CHECK(differs);
  }

  SECTION("observed statistics use the recorded counts of active pairs") {
    GofOptions o;
    o.n_sims = 2;
    o.regimes = {{1, std::nullopt}};
    const GofReport r = gof_bands(th, p, 0, o);
    const auto& b = p.cell(0);
    std::vector<PairKey> e;
    for (std::size_t k = 0; k < b.size(); ++k)
      if (b.censor[k] && b.counts[k] >= 1) e.push_back(b.pairs[k]);
    const SimpleGraph g = SimpleGraph::from_edges(15, e);
    const auto hist = degree_distribution(g);
    for (std::size_t d = 0; d < hist.size(); ++d) CHECK(r.regimes[0].degree_bands[d].observed == hist[d]);
    CHECK(r.regimes[0].clustering_observed == clustering_coefficient(g).value);
    CHECK(r.regimes[0].diameter_observed == diameter(g).value);
  }
}
