#pragma once

// Graph statistics for goodness-of-fit checks: regime subgraphs of a count
// table, degree distribution, global clustering, diameter, and quantile
// bands over networks simulated from a fitted model.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netcox/error.hpp"
#include "netcox/model.hpp"
#include "netcox/parallel.hpp"
#include "netcox/random.hpp"
#include "netcox/simulator.hpp"
#include "netcox/stats.hpp"

namespace netcox {

/// Undirected simple graph on nodes 1..n with sorted adjacency lists.
class SimpleGraph {
 public:
  SimpleGraph() = default;
  explicit SimpleGraph(int n_nodes) : adj_(static_cast<std::size_t>(n_nodes)) {
    require(n_nodes >= 0, "node count must be nonnegative");
  }

  static SimpleGraph from_edges(int n_nodes, std::span<const PairKey> edges) {
    SimpleGraph g(n_nodes);
    for (const PairKey& e : edges) {
      require(e.i != e.j, "simple graphs have no self-loops");
      require(e.i >= 1 && e.j >= 1 && e.i <= n_nodes && e.j <= n_nodes, "edge node out of range");
      g.adj_[e.i - 1].push_back(e.j - 1);
      g.adj_[e.j - 1].push_back(e.i - 1);
    }
    for (auto& nb : g.adj_) {
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
    return g;
  }

  int n_nodes() const { return static_cast<int>(adj_.size()); }
  std::size_t n_edges() const {
    std::size_t s = 0;
    for (const auto& nb : adj_) s += nb.size();
    return s / 2;
  }
  /// Neighbors of node v (0-based), sorted.
  const std::vector<int>& neighbors(int v) const { return adj_[static_cast<std::size_t>(v)]; }
  std::size_t degree(int v) const { return adj_[static_cast<std::size_t>(v)].size(); }
  bool has_edge(int u, int v) const {
    const auto& nb = adj_[static_cast<std::size_t>(u)];
    return std::binary_search(nb.begin(), nb.end(), v);
  }

 private:
  std::vector<std::vector<int>> adj_;
};

/// Edge iff l1 <= count <= l2; l2 empty means no upper cap.
struct FrequencyRegime {
  std::int64_t l1 = 1;
  std::optional<std::int64_t> l2;

  bool contains(std::int64_t c) const { return c >= l1 && (!l2 || c <= *l2); }
  std::string label() const {
    return "(" + std::to_string(l1) + "," + (l2 ? std::to_string(*l2) : std::string("inf")) + ")";
  }
  void validate() const {
    require(l1 >= 0, "regime lower bound must be >= 0");
    require(!l2 || *l2 >= l1, "regime requires l1 <= l2");
  }
};

inline std::vector<FrequencyRegime> default_regimes() {
  return {{1, 3}, {2, 4}, {3, 5}, {4, 6}, {5, 12}, {10, std::nullopt}};
}

inline SimpleGraph regime_subgraph(int n_nodes, std::span<const PairKey> pairs,
                                   std::span<const std::int64_t> counts,
                                   const FrequencyRegime& regime) {
  regime.validate();
  require(pairs.size() == counts.size(), "pairs and counts must align");
  std::vector<PairKey> edges;
  for (std::size_t r = 0; r < pairs.size(); ++r)
    if (regime.contains(counts[r])) edges.push_back(pairs[r]);
  return SimpleGraph::from_edges(n_nodes, edges);
}

/// hist[d] = number of nodes of degree d, d = 0..max degree.
inline std::vector<std::int64_t> degree_distribution(const SimpleGraph& g) {
  std::vector<std::int64_t> hist(1, 0);
  for (int v = 0; v < g.n_nodes(); ++v) {
    const std::size_t d = g.degree(v);
    if (d >= hist.size()) hist.resize(d + 1, 0);
    ++hist[d];
  }
  return hist;
}

struct ClusteringResult {
  double value = 0.0;
  bool undefined = false;  // no connected triple; value reported as 0
};

/// Global transitivity: closed connected triples / connected triples, each
/// triple counted once per center node (a triangle contributes 3 to both).
inline ClusteringResult clustering_coefficient(const SimpleGraph& g) {
  std::int64_t closed = 0;
  std::int64_t triples = 0;
  for (int u = 0; u < g.n_nodes(); ++u) {
    const auto& nb = g.neighbors(u);
    const auto d = static_cast<std::int64_t>(nb.size());
    triples += d * (d - 1) / 2;
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t b = a + 1; b < nb.size(); ++b)
        if (g.has_edge(nb[a], nb[b])) ++closed;
  }
  if (triples == 0) return {0.0, true};
  return {static_cast<double>(closed) / static_cast<double>(triples), false};
}

struct DiameterResult {
  int value = 0;
  bool disconnected = false;  // more than one component with an edge
};

/// Largest shortest-path distance within the largest connected component
/// (by node count; ties take the larger diameter). Isolated nodes are
/// ignored; a graph without edges has diameter 0.
inline DiameterResult diameter(const SimpleGraph& g) {
  const int n = g.n_nodes();
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> members;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0 || g.degree(s) == 0) continue;
    const int id = static_cast<int>(members.size());
    members.emplace_back();
    std::vector<int> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      members[id].push_back(v);
      for (int w : g.neighbors(v)) {
        if (comp[w] < 0) {
          comp[w] = id;
          stack.push_back(w);
        }
      }
    }
  }
  DiameterResult res;
  res.disconnected = members.size() > 1;
  std::size_t best_size = 0;
  std::vector<int> dist(static_cast<std::size_t>(n), -1);
  for (const auto& m : members) {
    if (m.size() < best_size) continue;
    int diam = 0;
    for (int s : m) {
      for (int v : m) dist[v] = -1;
      std::queue<int> bfs;
      bfs.push(s);
      dist[s] = 0;
      while (!bfs.empty()) {
        const int v = bfs.front();
        bfs.pop();
        diam = std::max(diam, dist[v]);
        for (int w : g.neighbors(v)) {
          if (dist[w] < 0) {
            dist[w] = dist[v] + 1;
            bfs.push(w);
          }
        }
      }
    }
    if (m.size() > best_size) {
      res.value = diam;
    } else {
      res.value = std::max(res.value, diam);
    }
    best_size = m.size();
  }
  return res;
}

struct DegreeBand {
  std::size_t degree = 0;
  std::vector<double> quantiles;  // one per requested level
  std::int64_t observed = 0;
};

struct RegimeReport {
  FrequencyRegime regime;
  std::vector<DegreeBand> degree_bands;
  std::vector<std::int64_t> clustering_hist;  // equal-width bins over [0, 1]
  double clustering_observed = 0.0;
  bool clustering_observed_undefined = false;
  double clustering_undefined_fraction = 0.0;
  std::vector<std::int64_t> diameter_hist;  // index = diameter
  int diameter_observed = 0;
  bool diameter_observed_disconnected = false;
  double disconnected_fraction = 0.0;
};

struct GofReport {
  std::size_t cell = 0;
  std::size_t n_sims = 0;
  std::vector<double> quantile_levels;
  std::vector<RegimeReport> regimes;
};

struct GofOptions {
  std::size_t n_sims = 3840;
  std::vector<double> quantiles{0.1, 0.9};
  std::vector<FrequencyRegime> regimes = default_regimes();
  std::size_t clustering_bins = 20;
  std::uint64_t seed = 1;
};

namespace detail {

struct GraphStats {
  std::vector<std::int64_t> degrees;
  ClusteringResult clustering;
  DiameterResult diam;
};

inline GraphStats graph_stats(const SimpleGraph& g) {
  return {degree_distribution(g), clustering_coefficient(g), diameter(g)};
}

}  // namespace detail

/**
 * Simulates n_sims count tables for `cell` under theta (uncensored pairs
 * only), and summarizes each regime subgraph: per-degree quantile bands of
 * the node counts, a clustering histogram and a diameter histogram. The
 * observed statistics use the panel's recorded counts of uncensored pairs
 * in the same cell.
 */
inline GofReport gof_bands(const Eigen::VectorXd& theta, const Panel& panel, std::size_t cell,
                           const GofOptions& opts) {
  require(opts.n_sims >= 2, "n_sims must be at least 2");
  require(!opts.quantiles.empty(), "at least one quantile level is required");
  for (double p : opts.quantiles) require(p > 0.0 && p < 1.0, "quantile levels must lie in (0, 1)");
  require(!opts.regimes.empty(), "at least one regime is required");
  for (const auto& r : opts.regimes) r.validate();
  require(opts.clustering_bins >= 1, "clustering_bins must be positive");
  require(cell < panel.n_cells(), "target cell out of range");
  require(theta.size() == panel.q(), "theta dimension must equal panel q");

  const CellBlock& b = panel.cell(cell);
  std::vector<PairKey> pairs;
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < b.size(); ++r) {
    if (b.censor[r]) {
      pairs.push_back(b.pairs[r]);
      rows.push_back(r);
    }
  }
  const int n = panel.n_nodes();
  const std::size_t n_reg = opts.regimes.size();

  std::vector<std::vector<detail::GraphStats>> sims(opts.n_sims);
  parallel_for(opts.n_sims, [&](std::size_t s) {
    const auto all = simulate_cell_counts(panel, cell, theta, rng::derive({opts.seed, s}));
    std::vector<std::int64_t> counts(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) counts[k] = all[rows[k]];
    sims[s].reserve(n_reg);
    for (const auto& reg : opts.regimes) {
      sims[s].push_back(detail::graph_stats(regime_subgraph(n, pairs, counts, reg)));
    }
  });

  std::vector<std::int64_t> obs_counts(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) obs_counts[k] = b.counts[rows[k]];

  GofReport report;
  report.cell = cell;
  report.n_sims = opts.n_sims;
  report.quantile_levels = opts.quantiles;
  const auto n_sims_d = static_cast<double>(opts.n_sims);
  for (std::size_t g = 0; g < n_reg; ++g) {
    RegimeReport rr;
    rr.regime = opts.regimes[g];
    const detail::GraphStats obs =
        detail::graph_stats(regime_subgraph(n, pairs, obs_counts, rr.regime));

    std::size_t max_deg = obs.degrees.size();
    for (const auto& s : sims) max_deg = std::max(max_deg, s[g].degrees.size());
    std::vector<double> column(opts.n_sims);
    for (std::size_t d = 0; d < max_deg; ++d) {
      DegreeBand band;
      band.degree = d;
      for (std::size_t s = 0; s < opts.n_sims; ++s) {
        const auto& h = sims[s][g].degrees;
        column[s] = d < h.size() ? static_cast<double>(h[d]) : 0.0;
      }
      for (double p : opts.quantiles) band.quantiles.push_back(stats::quantile(column, p));
      band.observed = d < obs.degrees.size() ? obs.degrees[d] : 0;
      rr.degree_bands.push_back(std::move(band));
    }

    rr.clustering_hist.assign(opts.clustering_bins, 0);
    std::size_t undefined = 0;
    std::size_t disconnected = 0;
    for (const auto& s : sims) {
      const auto& st = s[g];
      if (st.clustering.undefined) ++undefined;
      const auto bin = std::min(
          opts.clustering_bins - 1,
          static_cast<std::size_t>(st.clustering.value * static_cast<double>(opts.clustering_bins)));
      ++rr.clustering_hist[bin];
      const auto dv = static_cast<std::size_t>(st.diam.value);
      if (dv >= rr.diameter_hist.size()) rr.diameter_hist.resize(dv + 1, 0);
      ++rr.diameter_hist[dv];
      if (st.diam.disconnected) ++disconnected;
    }
    rr.clustering_observed = obs.clustering.value;
    rr.clustering_observed_undefined = obs.clustering.undefined;
    rr.clustering_undefined_fraction = static_cast<double>(undefined) / n_sims_d;
    rr.diameter_observed = obs.diam.value;
    rr.diameter_observed_disconnected = obs.diam.disconnected;
    rr.disconnected_fraction = static_cast<double>(disconnected) / n_sims_d;
    report.regimes.push_back(std::move(rr));
  }
  return report;
}

}  // namespace netcox
