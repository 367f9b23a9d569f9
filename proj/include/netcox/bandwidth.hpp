#pragma once

// Bandwidth choice by one-sided cross-validation: each cell is predicted from
// a local-linear fit on strictly earlier cells with the one-sided version of
// the target kernel, and the winning bandwidth is transferred to the
// two-sided kernel through the equivalent-kernel factor.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netcox/error.hpp"
#include "netcox/estimator.hpp"
#include "netcox/kernel.hpp"
#include "netcox/likelihood.hpp"
#include "netcox/model.hpp"
#include "netcox/parallel.hpp"

namespace netcox {

struct OneSidedFit {
  std::size_t cell = 0;
  Eigen::VectorXd mu0;
  Eigen::VectorXd mu1;
  std::vector<std::size_t> rows;  // uncensored records of the cell
  std::vector<double> predictions;
  std::vector<std::int64_t> observed;
  SolverDiagnostics solver;
};

/// Local-linear fit of (mu0, mu1) at `cell` from strictly earlier cells
/// with kernel `one_sided`; predictions are exp(mu0^T x) for the cell's
/// uncensored records. `box` bounds both mu0 and mu1.
inline OneSidedFit one_sided_local_linear_fit(const Panel& panel, std::size_t cell,
                                              const Kernel& one_sided, double bandwidth,
                                              const ThetaBox& box, const SolverConfig& cfg,
                                              const Eigen::VectorXd& init = {}) {
  require(one_sided.support_hi() <= 0.0, "cross-validation needs a kernel supported on [-1, 0]");
  const int q = panel.q();
  require(box.dim() == q, "theta box dimension must equal panel q");
  const LocalLikContext ctx =
      make_panel_context(panel, one_sided, bandwidth, cell, {.local_linear = true, .exclude_center = true});
  if (ctx.window_pieces() < 2) {
    fail(ErrorCode::InsufficientHistory,
         "cell " + std::to_string(cell) + " has fewer than two past cells in the kernel window");
  }
  ModelSpec spec;
  spec.kernel = one_sided;
  spec.bandwidth = bandwidth;
  spec.q = 2 * q;
  spec.theta_box.lo.resize(2 * q);
  spec.theta_box.hi.resize(2 * q);
  spec.theta_box.lo << box.lo, box.lo;
  spec.theta_box.hi << box.hi, box.hi;

  const Eigen::VectorXd start = init.size() == 2 * q ? init : Eigen::VectorXd::Zero(2 * q);
  const FitResult fit = fit_at(ctx, spec, cfg, start);

  OneSidedFit out;
  out.cell = cell;
  out.mu0 = fit.theta_hat.head(q);
  out.mu1 = fit.theta_hat.tail(q);
  out.solver = fit.solver;
  const CellBlock& b = panel.cell(cell);
  for (std::size_t r = 0; r < b.size(); ++r) {
    if (!b.censor[r]) continue;
    const auto x = b.row(r, q);
    double eta = 0.0;
    for (int a = 0; a < q; ++a) eta += out.mu0(a) * x[static_cast<std::size_t>(a)];
    out.rows.push_back(r);
    out.predictions.push_back(std::exp(eta));
    out.observed.push_back(b.counts[r]);
  }
  return out;
}

/// Pearson contribution (pred - obs)^2 / pred of one record.
inline double pearson_term(double prediction, std::int64_t observed) {
  const double d = prediction - static_cast<double>(observed);
  return d * d / prediction;
}

struct CvError {
  double h = 0.0;
  std::optional<double> err;  // empty when no cell could be scored
  std::size_t cells_scored = 0;
  std::size_t cells_skipped = 0;
  std::map<std::string, std::size_t> skip_reasons;
};

/// Pearson prediction error (pred - obs)^2 / pred averaged over the
/// uncensored pairs of each scored cell, then over scored cells. Cells with
/// no uncensored pair or whose fit fails are skipped and counted.
inline CvError cv_error(const Panel& panel, const Kernel& one_sided, double bandwidth,
                        const ThetaBox& box, const SolverConfig& cfg) {
  CvError out;
  out.h = bandwidth;
  double total = 0.0;
  Eigen::VectorXd warm;
  for (std::size_t k = 0; k < panel.n_cells(); ++k) {
    if (panel.active_size(k) == 0) {
      ++out.cells_skipped;
      ++out.skip_reasons["EmptyCell"];
      continue;
    }
    try {
      const OneSidedFit fit = one_sided_local_linear_fit(panel, k, one_sided, bandwidth, box, cfg,
                                                         cfg.warm_start ? warm : Eigen::VectorXd{});
      if (!fit.solver.converged) fail(ErrorCode::NotConverged, "one-sided fit did not converge");
      double s = 0.0;
      for (std::size_t r = 0; r < fit.predictions.size(); ++r)
        s += pearson_term(fit.predictions[r], fit.observed[r]);
      total += s / static_cast<double>(fit.predictions.size());
      ++out.cells_scored;
      warm.resize(2 * panel.q());
      warm << fit.mu0, fit.mu1;
    } catch (const Error& e) {
      ++out.cells_skipped;
      ++out.skip_reasons[std::string(to_string(e.code()))];
    }
  }
  if (out.cells_scored > 0) out.err = total / static_cast<double>(out.cells_scored);
  return out;
}

enum class Rounding { Nearest, Floor };

struct CvResult {
  std::vector<CvError> errors;
  double h_l = 0.0;
  double factor = 0.0;
  double h_k_raw = 0.0;  // h_l * factor before rounding
  double h_k = 0.0;
  Rounding rounding = Rounding::Nearest;
};

struct BandwidthOptions {
  Rounding rounding = Rounding::Nearest;
  SolverConfig solver;
  std::optional<ThetaBox> theta_box;  // default: uniform [-20, 20]^q
};

inline double round_bandwidth(double h, Rounding mode) {
  const double r = mode == Rounding::Floor ? std::floor(h) : std::round(h);
  return std::max(1.0, r);
}

/**
 * Evaluates cv_error for each integer candidate with the one-sided version
 * of `target`, picks the minimizer h_L (ties to the smallest h), and returns
 * h_K = round(h_L * factor) where factor transfers from the local-linear
 * equivalent of the one-sided kernel to the target kernel.
 */
inline CvResult select_bandwidth(const Panel& panel, const Kernel& target,
                                 const std::vector<int>& candidates,
                                 const BandwidthOptions& opts = {}) {
  if (candidates.empty()) fail(ErrorCode::InvalidArgument, "candidate bandwidth set is empty");
  for (int h : candidates) require(h >= 1, "candidate bandwidths must be integers >= 1");
  const Kernel one_sided = Kernel::one_sided(target);
  const ThetaBox box = opts.theta_box ? *opts.theta_box : ThetaBox::uniform(panel.q());
  box.validate();

  CvResult res;
  res.rounding = opts.rounding;
  res.factor = bandwidth_transfer_factor(equivalent_local_linear(one_sided), target);
  res.errors.resize(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t c) {
    res.errors[c] = cv_error(panel, one_sided, candidates[c], box, opts.solver);
  });

  std::optional<std::size_t> best;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& e = res.errors[c];
    if (!e.err || !std::isfinite(*e.err)) continue;
    if (!best || *e.err < *res.errors[*best].err ||
        (*e.err == *res.errors[*best].err && e.h < res.errors[*best].h)) {
      best = c;
    }
  }
  if (!best) {
    fail(ErrorCode::InsufficientHistory, "no candidate bandwidth could score any cell");
  }
  res.h_l = res.errors[*best].h;
  res.h_k_raw = res.h_l * res.factor;
  res.h_k = round_bandwidth(res.h_k_raw, opts.rounding);
  return res;
}

}  // namespace netcox
