#pragma once

// Helpers shared by the test binaries: random instance generators and
// straight-loop reference implementations used as oracles.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "netcox/netcox.hpp"

namespace testsupport {

using netcox::Panel;
using netcox::PairKey;

/// Random small panel: every pair of n nodes is listed in every cell with a
/// random censor flag, Poisson-ish counts and covariates in [-1, 1] (first
/// column 1 when `intercept`).
inline Panel random_panel(std::mt19937_64& rng, int n_nodes, std::size_t n_cells, int q,
                          bool intercept = true, double p_censor = 0.8) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::bernoulli_distribution active(p_censor);
  std::poisson_distribution<int> cnt(1.5);
  Panel p(n_nodes, n_cells, q, false);
  std::vector<double> x(static_cast<std::size_t>(q));
  for (std::size_t c = 0; c < n_cells; ++c) {
    for (int i = 1; i <= n_nodes; ++i) {
      for (int j = i + 1; j <= n_nodes; ++j) {
        for (int a = 0; a < q; ++a) x[a] = (a == 0 && intercept) ? 1.0 : unif(rng);
        p.add_record(c, {i, j}, cnt(rng), active(rng), x);
      }
    }
  }
  return p;
}

/// Local log-likelihood by a direct loop over panel records:
/// (1/h) sum_k K((k - k0)/h) sum_{uncensored} [count * eta - exposure * exp(eta)].
inline double brute_loglik(const Panel& p, const netcox::Kernel& k, double h, std::size_t k0,
                           const Eigen::VectorXd& theta) {
  double s = 0.0;
  for (std::size_t c = 0; c < p.n_cells(); ++c) {
    const double w = k((static_cast<double>(c) - static_cast<double>(k0)) / h);
    if (w == 0.0) continue;
    const auto& b = p.cell(c);
    for (std::size_t r = 0; r < b.size(); ++r) {
      if (!b.censor[r]) continue;
      const auto x = b.row(r, p.q());
      double eta = 0.0;
      for (int a = 0; a < p.q(); ++a) eta += theta(a) * x[a];
      s += w * (static_cast<double>(b.counts[r]) * eta - p.cell_exposure()[c] * std::exp(eta));
    }
  }
  return s / h;
}

inline Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double step = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index a = 0; a < x.size(); ++a) {
    Eigen::VectorXd xp = x, xm = x;
    xp(a) += step;
    xm(a) -= step;
    g(a) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

inline Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& g, const Eigen::VectorXd& x,
    double step = 1e-5) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd j(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    Eigen::VectorXd xp = x, xm = x;
    xp(a) += step;
    xm(a) -= step;
    j.col(a) = (g(xp) - g(xm)) / (2.0 * step);
  }
  return j;
}

/// Golden-section maximization of a unimodal f on [lo, hi].
inline double golden_max(const std::function<double(double)>& f, double lo, double hi,
                         double tol = 1e-12) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  const auto na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

/// Asymptotic two-sample KS critical value at level 1%.
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  const auto nd = static_cast<double>(n), md = static_cast<double>(m);
  return 1.628 * std::sqrt((nd + md) / (nd * md));
}

/// Graph statistics by definition on an adjacency matrix: O(n^3) triple
/// scan and Floyd-Warshall distances.
struct BruteGraph {
  int n;
  std::vector<std::vector<int>> a;

  explicit BruteGraph(const netcox::SimpleGraph& g) : n(g.n_nodes()), a(n, std::vector<int>(n, 0)) {
    for (int u = 0; u < n; ++u)
      for (int v : g.neighbors(u)) a[u][v] = 1;
  }

  std::pair<double, bool> clustering() const {
    double closed = 0, triples = 0;
    for (int c = 0; c < n; ++c)
      for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y)
          if (x != c && y != c && a[c][x] && a[c][y]) {
            triples += 1;
            closed += a[x][y];
          }
    if (triples == 0) return {0.0, true};
    return {closed / triples, false};
  }

  std::pair<int, bool> diameter() const {
    const int inf = 1 << 20;
    std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
    for (int u = 0; u < n; ++u) {
      d[u][u] = 0;
      for (int v = 0; v < n; ++v)
        if (a[u][v]) d[u][v] = 1;
    }
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
    // Components among non-isolated nodes.
    std::vector<int> seen(n, 0);
    int best_size = 0, best_diam = 0, comps = 0;
    for (int s = 0; s < n; ++s) {
      bool isolated = true;
      for (int v = 0; v < n; ++v) isolated = isolated && !a[s][v];
      if (isolated || seen[s]) continue;
      ++comps;
      int size = 0, diam = 0;
      for (int v = 0; v < n; ++v) {
        if (d[s][v] < inf) {
          seen[v] = 1;
          ++size;
          for (int w = 0; w < n; ++w)
            if (d[s][w] < inf) diam = std::max(diam, d[v][w]);
        }
      }
      if (size > best_size || (size == best_size && diam > best_diam)) {
        best_size = size;
        best_diam = diam;
      }
    }
    return {best_diam, comps > 1};
  }
};

}  // namespace testsupport
