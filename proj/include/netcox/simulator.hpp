#pragma once

// Event simulation from the Cox-type intensity C_ij(t) exp(theta(t)^T X_ij(t))
// with piecewise-constant covariates and selectors, and the Monte Carlo
// normality study for the local MLE.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netcox/error.hpp"
#include "netcox/estimator.hpp"
#include "netcox/likelihood.hpp"
#include "netcox/model.hpp"
#include "netcox/parallel.hpp"
#include "netcox/random.hpp"
#include "netcox/stats.hpp"

namespace netcox {

struct CovariateRule {
  enum class Kind { Intercept, Bernoulli, Uniform, Normal };
  Kind kind = Kind::Intercept;
  double a = 0.0;  // Bernoulli: p; Uniform: lower; Normal: mean
  double b = 1.0;  // Uniform: upper; Normal: sd

  static CovariateRule intercept() { return {}; }
  static CovariateRule bernoulli(double p) { return {Kind::Bernoulli, p, 0.0}; }
  static CovariateRule uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static CovariateRule normal(double mean, double sd) { return {Kind::Normal, mean, sd}; }
};

struct CensorRule {
  enum class Kind { Constant, Bernoulli, Replay };
  Kind kind = Kind::Constant;
  double p = 1.0;  // Bernoulli: per-pair probability, frozen over the horizon
};

enum class SimMethod { Auto, PerPiece, Thinning };
enum class ThinningBound { PerPiece, Global };

/**
 * Simulation design on cells (c L, (c+1) L], c = 0..n_cells-1. Covariates
 * are drawn per pair per cell from `covariates` (one rule per column), or
 * replayed from `replay` when `replay_covariates` is set. The selector is
 * constant, a frozen per-pair Bernoulli(p), or replayed from `replay`.
 */
struct SimDesign {
  int n_nodes = 2;
  bool directed = false;
  std::size_t n_cells = 1;
  double cell_length = 1.0;
  ParameterCurve true_curve;
  std::vector<CovariateRule> covariates{CovariateRule::intercept()};
  CensorRule censor;
  std::optional<Panel> replay;
  bool replay_covariates = false;
  std::uint64_t seed = 1;
  SimMethod method = SimMethod::Auto;
  ThinningBound bound = ThinningBound::PerPiece;

  int q() const {
    return replay_covariates && replay ? replay->q() : static_cast<int>(covariates.size());
  }
  double horizon() const { return static_cast<double>(n_cells) * cell_length; }

  void validate() const {
    require(n_nodes >= 2, "design needs at least two nodes");
    require(n_cells >= 1, "design needs at least one cell");
    require(cell_length > 0.0 && std::isfinite(cell_length), "cell_length must be positive");
    require(!true_curve.values.empty(), "design needs a true parameter curve");
    for (const auto& v : true_curve.values) {
      require(v.size() == q(), "true parameter dimension must equal q");
    }
    if (censor.kind == CensorRule::Kind::Bernoulli) {
      require(censor.p >= 0.0 && censor.p <= 1.0, "censor probability must be in [0, 1]");
    }
    if (censor.kind == CensorRule::Kind::Replay || replay_covariates) {
      require(replay.has_value(), "replay requested without a replay panel");
      require(replay->n_cells() == n_cells && replay->n_nodes() == n_nodes,
              "replay panel shape must match the design");
    }
    if (!replay_covariates) require(!covariates.empty(), "design needs covariate rules");
  }
};

namespace detail {

enum StreamPurpose : std::uint64_t {
  kCensor = 1,
  kCovariates = 2,
  kCounts = 3,
  kEvents = 4,
  kReplicate = 5,
};

inline double draw_covariate(const CovariateRule& rule, rng::Stream& s) {
  switch (rule.kind) {
    case CovariateRule::Kind::Intercept: return 1.0;
    case CovariateRule::Kind::Bernoulli: return s.bernoulli(rule.a) ? 1.0 : 0.0;
    case CovariateRule::Kind::Uniform: return s.uniform(rule.a, rule.b);
    case CovariateRule::Kind::Normal: return rule.a + rule.b * s.normal();
  }
  return 0.0;
}

inline void check_eta(double eta) {
  if (eta > kMaxLinearPredictor) {
    fail(ErrorCode::Overflow,
         "unbounded intensity: theta^T x = " + std::to_string(eta) + " exceeds 700");
  }
}

}  // namespace detail

/// Draws the covariate/selector panel of a design (counts left at 0).
inline Panel realize_design(const SimDesign& design) {
  design.validate();
  const int q = design.q();
  Panel panel(design.n_nodes, design.n_cells, q, design.directed);
  std::vector<double> times(design.n_cells), edges(design.n_cells + 1);
  for (std::size_t c = 0; c <= design.n_cells; ++c) {
    edges[c] = static_cast<double>(c) * design.cell_length;
    if (c < design.n_cells) times[c] = (static_cast<double>(c) + 0.5) * design.cell_length;
  }
  panel.set_cell_times(times);
  panel.set_cell_edges(edges);
  panel.set_cell_exposure(std::vector<double>(design.n_cells, design.cell_length));

  if (design.replay && (design.replay_covariates || design.censor.kind == CensorRule::Kind::Replay)) {
    require(design.replay_covariates && design.censor.kind == CensorRule::Kind::Replay,
            "partial replay (covariates xor selector) is not supported");
    for (std::size_t c = 0; c < design.n_cells; ++c) {
      const CellBlock& b = design.replay->cell(c);
      for (std::size_t r = 0; r < b.size(); ++r) {
        panel.add_record(c, b.pairs[r], 0, b.censor[r] != 0, b.row(r, q));
      }
    }
    return panel;
  }

  const int n = design.n_nodes;
  std::vector<double> x(static_cast<std::size_t>(q));
  for (NodeId i = 1; i <= n; ++i) {
    for (NodeId j = design.directed ? 1 : i + 1; j <= n; ++j) {
      if (i == j) continue;
      const PairKey p{i, j};
      const std::uint64_t idx = pair_index(p, n, design.directed);
      bool active = true;
      if (design.censor.kind == CensorRule::Kind::Bernoulli) {
        rng::Stream cs(design.seed, rng::derive({detail::kCensor, idx}));
        active = cs.bernoulli(design.censor.p);
      }
      if (!active) continue;
      rng::Stream xs(design.seed, rng::derive({detail::kCovariates, idx}));
      for (std::size_t c = 0; c < design.n_cells; ++c) {
        for (int a = 0; a < q; ++a) {
          x[static_cast<std::size_t>(a)] = detail::draw_covariate(design.covariates[a], xs);
        }
        panel.add_record(c, p, 0, true, x);
      }
    }
  }
  return panel;
}

using CellCounts = std::vector<std::vector<std::int64_t>>;

/// Counts for one cell: Poisson(exp(theta^T x) * exposure) for uncensored
/// records, 0 for censored ones; aligned with the cell's records.
inline std::vector<std::int64_t> simulate_cell_counts(const Panel& panel, std::size_t cell,
                                                      const Eigen::VectorXd& theta,
                                                      std::uint64_t seed) {
  require(theta.size() == panel.q(), "theta dimension must equal panel q");
  const CellBlock& b = panel.cell(cell);
  const double expo = panel.cell_exposure()[cell];
  std::vector<std::int64_t> out(b.size(), 0);
  for (std::size_t r = 0; r < b.size(); ++r) {
    if (!b.censor[r]) continue;
    const auto x = b.row(r, panel.q());
    double eta = 0.0;
    for (int a = 0; a < panel.q(); ++a) eta += theta(a) * x[static_cast<std::size_t>(a)];
    detail::check_eta(eta);
    const std::uint64_t idx = pair_index(b.pairs[r], panel.n_nodes(), panel.directed());
    rng::Stream s(seed, rng::derive({detail::kCounts, cell, idx}));
    out[r] = s.poisson(std::exp(eta) * expo);
  }
  return out;
}

inline CellCounts simulate_panel_counts(const Panel& panel, const ParameterCurve& curve,
                                        std::uint64_t seed) {
  CellCounts out(panel.n_cells());
  for (std::size_t c = 0; c < panel.n_cells(); ++c) {
    out[c] = simulate_cell_counts(panel, c, curve.at(panel.cell_times()[c]), seed);
  }
  return out;
}

inline CellCounts simulate_panel_counts(const Panel& panel, const Eigen::VectorXd& theta,
                                        std::uint64_t seed) {
  return simulate_panel_counts(panel, ParameterCurve::constant(theta), seed);
}

/// Copy of the panel with record counts replaced.
inline Panel with_counts(const Panel& panel, const CellCounts& counts) {
  require(counts.size() == panel.n_cells(), "count table does not match panel cells");
  Panel out = panel;
  for (std::size_t c = 0; c < panel.n_cells(); ++c) {
    require(counts[c].size() == panel.cell(c).size(), "count table does not match cell records");
    out.cell(c).counts = counts[c];
  }
  return out;
}

namespace detail {

// max over t in [a, b] of theta(t)^T x for a piecewise-linear curve.
inline double max_linear_predictor(const ParameterCurve& curve, std::span<const double> x,
                                   double a, double b) {
  auto eta = [&](double t) {
    const Eigen::VectorXd th = curve.at(t);
    double v = 0.0;
    for (Eigen::Index k = 0; k < th.size(); ++k) v += th(k) * x[static_cast<std::size_t>(k)];
    return v;
  };
  double m = std::max(eta(a), eta(b));
  for (double t : curve.eval_times)
    if (t > a && t < b) m = std::max(m, eta(t));
  return m;
}

}  // namespace detail

/**
 * Event stream from a realized design panel. Per-piece path: the count on
 * each uncensored piece is Poisson(lambda * length) with uniform placement.
 * Thinning path (Lewis-Shedler): candidates from a homogeneous process at
 * the bounding rate exp(max theta(t)^T x), accepted with probability
 * lambda(t) / bound. Auto uses the per-piece path iff the curve is constant.
 */
inline EventStream simulate_stream(const SimDesign& design, const Panel& realized) {
  design.validate();
  const auto& edges = realized.cell_edges();
  require(edges.size() == realized.n_cells() + 1, "realized design needs cell edges");
  const int q = realized.q();
  const bool thinning = design.method == SimMethod::Thinning ||
                        (design.method == SimMethod::Auto && !design.true_curve.is_constant());
  require(thinning || design.true_curve.is_constant(),
          "per-piece simulation requires a time-constant parameter curve");

  // Records grouped by pair, cells ascending.
  struct Piece {
    std::size_t cell;
    std::span<const double> x;
  };
  std::map<PairKey, std::vector<Piece>> by_pair;
  for (std::size_t c = 0; c < realized.n_cells(); ++c) {
    const CellBlock& b = realized.cell(c);
    for (std::size_t r = 0; r < b.size(); ++r) {
      if (b.censor[r]) by_pair[b.pairs[r]].push_back({c, b.row(r, q)});
    }
  }

  std::vector<Event> events;
  for (const auto& [pair, pieces] : by_pair) {
    const std::uint64_t idx = pair_index(pair, realized.n_nodes(), realized.directed());
    rng::Stream s(design.seed, rng::derive({detail::kEvents, idx}));
    double global_bound = -std::numeric_limits<double>::infinity();
    if (thinning && design.bound == ThinningBound::Global) {
      for (const Piece& p : pieces) {
        global_bound = std::max(global_bound, detail::max_linear_predictor(
                                                  design.true_curve, p.x, edges[p.cell],
                                                  edges[p.cell + 1]));
      }
    }
    for (const Piece& p : pieces) {
      const double a = edges[p.cell];
      const double b = edges[p.cell + 1];
      if (!thinning) {
        const Eigen::VectorXd th = design.true_curve.values.front();
        double eta = 0.0;
        for (int k = 0; k < q; ++k) eta += th(k) * p.x[static_cast<std::size_t>(k)];
        detail::check_eta(eta);
        const std::int64_t n = s.poisson(std::exp(eta) * (b - a));
        for (std::int64_t e = 0; e < n; ++e) events.push_back({s.uniform(a, b), pair.i, pair.j});
        continue;
      }
      const double bound_eta = design.bound == ThinningBound::Global
                                   ? global_bound
                                   : detail::max_linear_predictor(design.true_curve, p.x, a, b);
      detail::check_eta(bound_eta);
      const double rate = std::exp(bound_eta);
      for (double t = a + s.exponential(rate); t < b; t += s.exponential(rate)) {
        const Eigen::VectorXd th = design.true_curve.at(t);
        double eta = 0.0;
        for (int k = 0; k < q; ++k) eta += th(k) * p.x[static_cast<std::size_t>(k)];
        if (s.uniform() * rate <= std::exp(eta)) events.push_back({t, pair.i, pair.j});
      }
    }
  }
  return EventStream(design.n_nodes, design.horizon(), design.directed, std::move(events));
}

inline EventStream simulate_stream(const SimDesign& design) {
  return simulate_stream(design, realize_design(design));
}

struct CoordinateSummary {
  double coverage_90 = 0.0;
  double coverage_95 = 0.0;
  double coverage_99 = 0.0;
  double mean_z = 0.0;
  double var_z = 0.0;
  double ad_stat = 0.0;
  double whitened_mean = 0.0;
  double whitened_var = 0.0;
  double whitened_ad = 0.0;
  double bias = 0.0;
  double rmse = 0.0;
  double mean_se = 0.0;
  double empirical_sd = 0.0;
};

struct StudyReport {
  std::size_t n_reps = 0;
  std::size_t n_used = 0;
  std::size_t n_excluded = 0;
  std::map<std::string, std::size_t> exclusions;  // by error code
  std::vector<CoordinateSummary> coordinates;
  Eigen::VectorXd theta0;
};

struct StudyOptions {
  std::size_t t0_cell = 0;
  bool use_stream = false;  // simulate via the event stream instead of panel counts
};

/**
 * Monte Carlo check of asymptotic normality. For each replicate the design
 * is re-drawn and simulated under a seed derived from (design.seed, rep),
 * fitted at t0, and standardized errors z_m = (theta_hat_m - theta0_m) / se_m
 * are collected. Coverage is the fraction of |z_m| below the two-sided
 * 90/95/99% normal quantiles. The whitened errors Cov^{-1/2}(theta_hat -
 * theta0) are summarized separately. The design must be time-stationary with
 * time-constant selectors, so that the bias terms of the limit vanish.
 */
inline StudyReport mc_normality_study(const SimDesign& design, const ModelSpec& spec,
                                      const SolverConfig& cfg, std::size_t n_reps,
                                      StudyOptions opts = {}) {
  design.validate();
  spec.validate();
  require(n_reps >= 1, "n_reps must be at least 1");
  require(design.true_curve.is_constant(), "normality study requires a constant theta0");
  require(design.censor.kind != CensorRule::Kind::Replay && !design.replay_covariates,
          "normality study requires a stationary design (no replay)");
  require(opts.t0_cell < design.n_cells, "t0 cell out of range");
  const int q = design.q();
  require(spec.q == q, "model q must equal design q");
  const Eigen::VectorXd theta0 = design.true_curve.values.front();

  struct Rep {
    std::optional<Eigen::VectorXd> z;
    Eigen::VectorXd white;
    Eigen::VectorXd err;
    Eigen::VectorXd se;
    std::string error;
  };
  std::vector<Rep> reps(n_reps);
  parallel_for(n_reps, [&](std::size_t k) {
    SimDesign d = design;
    d.seed = rng::derive({detail::kReplicate, design.seed, k});
    Rep& rep = reps[k];
    try {
      Panel panel = realize_design(d);
      if (opts.use_stream) {
        const EventStream es = simulate_stream(d, panel);
        const BinnedCounts bc = bin_events(es, d.cell_length);
        CellCounts counts(panel.n_cells());
        for (std::size_t c = 0; c < panel.n_cells(); ++c) {
          const CellBlock& b = panel.cell(c);
          counts[c].resize(b.size());
          for (std::size_t r = 0; r < b.size(); ++r) counts[c][r] = bc.at(c, b.pairs[r]);
        }
        panel = with_counts(panel, counts);
      } else {
        panel = with_counts(panel, simulate_panel_counts(panel, theta0, d.seed));
      }
      const LocalLikContext ctx =
          make_panel_context(panel, spec.kernel, spec.bandwidth, opts.t0_cell);
      const FitResult fit = fit_at(ctx, spec, cfg, Eigen::VectorXd::Zero(q));
      if (!fit.solver.converged) {
        rep.error = std::string(to_string(ErrorCode::NotConverged));
        return;
      }
      rep.err = fit.theta_hat - theta0;
      rep.se = fit.std_errors;
      rep.z = rep.err.cwiseQuotient(fit.std_errors);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.covariance);
      const Eigen::MatrixXd inv_sqrt = es.eigenvectors() *
                                       es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                                       es.eigenvectors().transpose();
      rep.white = inv_sqrt * rep.err;
    } catch (const Error& e) {
      rep.error = std::string(to_string(e.code()));
    }
  });

  StudyReport report;
  report.n_reps = n_reps;
  report.theta0 = theta0;
  std::vector<std::vector<double>> z(q), w(q), err(q), se(q);
  for (const Rep& rep : reps) {
    if (!rep.z) {
      ++report.n_excluded;
      ++report.exclusions[rep.error];
      continue;
    }
    ++report.n_used;
    for (int m = 0; m < q; ++m) {
      z[m].push_back((*rep.z)(m));
      w[m].push_back(rep.white(m));
      err[m].push_back(rep.err(m));
      se[m].push_back(rep.se(m));
    }
  }
  report.coordinates.resize(q);
  if (report.n_used == 0) return report;
  const double z90 = stats::normal_quantile(0.95);
  const double z95 = stats::normal_quantile(0.975);
  const double z99 = stats::normal_quantile(0.995);
  for (int m = 0; m < q; ++m) {
    CoordinateSummary& s = report.coordinates[m];
    const auto n = static_cast<double>(z[m].size());
    for (double v : z[m]) {
      s.coverage_90 += std::abs(v) <= z90;
      s.coverage_95 += std::abs(v) <= z95;
      s.coverage_99 += std::abs(v) <= z99;
    }
    s.coverage_90 /= n;
    s.coverage_95 /= n;
    s.coverage_99 /= n;
    s.mean_z = stats::mean(z[m]);
    s.var_z = stats::variance(z[m]);
    s.ad_stat = stats::anderson_darling_normal(z[m]);
    s.whitened_mean = stats::mean(w[m]);
    s.whitened_var = stats::variance(w[m]);
    s.whitened_ad = stats::anderson_darling_normal(w[m]);
    s.bias = stats::mean(err[m]);
    double sq = 0.0;
    for (double e : err[m]) sq += e * e;
    s.rmse = std::sqrt(sq / n);
    s.mean_se = stats::mean(se[m]);
    s.empirical_sd = std::sqrt(stats::variance(err[m]));
  }
  return report;
}

}  // namespace netcox
