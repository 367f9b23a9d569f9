#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "netcox/error.hpp"
#include "netcox/kernel.hpp"
#include "netcox/likelihood.hpp"
#include "netcox/model.hpp"
#include "netcox/parallel.hpp"
#include "netcox/stats.hpp"

namespace netcox {

struct SolverConfig {
  double grad_tol = 1e-8;  // on ||score||_inf / |L_n(t0)|
  int max_iter = 100;
  int step_halving_max = 40;
  double ridge_floor = 1e-10;
  bool warm_start = true;

  void validate() const {
    require(grad_tol > 0.0 && ridge_floor > 0.0, "solver tolerances must be positive");
    require(max_iter > 0 && step_halving_max > 0, "solver iteration limits must be positive");
  }
};

/// |L_n(t0)|, floored at 1 so that tolerances and normalizations stay positive
/// when the evaluation cell itself is fully censored.
inline double active_normalizer(const LocalLikContext& ctx) {
  return std::max<double>(1.0, static_cast<double>(ctx.active_size()));
}

namespace detail {

inline std::vector<double> to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

struct Spectrum {
  double min = 0.0;
  double max = 0.0;
  Eigen::VectorXd min_vector;
};

inline Spectrum spectrum(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Spectrum s;
  s.min = es.eigenvalues()(0);
  s.max = es.eigenvalues()(sym.rows() - 1);
  s.min_vector = es.eigenvectors().col(0);
  return s;
}

}  // namespace detail

/**
 * Plug-in covariance of the local MLE:
 *
 *   Cov = int K^2 * Sigma^{-1} / (|L_n(t0)| h),  Sigma = -(1/|L_n(t0)|) d2l(theta_hat),
 *
 * where d2l already carries the 1/h factor of the local log-likelihood.
 * Fails with Singular (naming the null direction) when Sigma is not
 * numerically positive definite.
 */
inline Eigen::MatrixXd asymptotic_covariance(const LocalLikContext& ctx,
                                             const Eigen::VectorXd& theta_hat) {
  const double norm = active_normalizer(ctx);
  const Eigen::MatrixXd sigma = -hessian(ctx, theta_hat) / norm;
  const detail::Spectrum sp = detail::spectrum(sigma);
  if (!(sp.min > 1e-12 * std::max(sp.max, 0.0)) || sp.max <= 0.0) {
    fail(ErrorCode::Singular, "information matrix is singular (collinear covariates?)",
         detail::to_std(sp.min_vector));
  }
  Eigen::MatrixXd cov = kernel_l2(ctx.kernel()) *
                        sigma.llt().solve(Eigen::MatrixXd::Identity(ctx.q(), ctx.q())) /
                        (norm * ctx.bandwidth());
  return 0.5 * (cov + cov.transpose());
}

struct KantorovichDiagnostic {
  double B = 0.0;      // ||(d2 f)^{-1}|| of the normalized objective f = l / |L_n(t0)|
  double eta = 0.0;    // ||Newton step||
  double K_lip = 0.0;  // local Lipschitz estimate of d2 f along the Newton direction
  double r = 0.0;      // B * K_lip * eta; r <= 1/2 certifies a root within 2 eta
  bool certified() const { return r <= 0.5; }
};

inline KantorovichDiagnostic kantorovich_check(const LocalLikContext& ctx,
                                               const Eigen::VectorXd& theta) {
  const double norm = active_normalizer(ctx);
  const LikEval e = evaluate(ctx, theta, Derivatives::Hessian);
  if (e.overflow) fail(ErrorCode::Overflow, "linear predictor exceeds 700");
  const Eigen::MatrixXd neg_h = -e.hessian / norm;
  const detail::Spectrum sp = detail::spectrum(neg_h);
  if (!(sp.min > 0.0)) {
    fail(ErrorCode::Singular, "Hessian is singular", detail::to_std(sp.min_vector));
  }
  KantorovichDiagnostic d;
  d.B = 1.0 / sp.min;
  const Eigen::VectorXd step = neg_h.ldlt().solve(e.score / norm);
  d.eta = step.norm();
  if (d.eta == 0.0) return d;
  const Eigen::VectorXd dir = step / d.eta;
  const double eps = 1e-5 * std::max(1.0, theta.norm());
  const Eigen::MatrixXd hp = hessian(ctx, theta + eps * dir) / norm;
  const Eigen::MatrixXd hm = hessian(ctx, theta - eps * dir) / norm;
  d.K_lip = (hp - hm).operatorNorm() / (2.0 * eps);
  d.r = d.B * d.K_lip * d.eta;
  return d;
}

/**
 * Local MLE at the context's evaluation point by damped Newton (full step,
 * halved until the log-likelihood does not decrease) with projection onto
 * the parameter box. Coordinates held at a bound by an outward-pointing
 * score are frozen for the Newton step.
 *
 * Errors: NoExposure when no uncensored pair has exposure in the window;
 * UnboundedMLE when the maximizer sits on the box boundary or the curvature
 * collapses along a direction the score still pushes; Singular for a flat,
 * unpushed direction (collinear covariates). Non-convergence is flagged on
 * the result, not thrown.
 */
inline FitResult fit_at(const LocalLikContext& ctx, const ModelSpec& spec, const SolverConfig& cfg,
                        const Eigen::VectorXd& init) {
  spec.theta_box.validate();
  cfg.validate();
  const int q = ctx.q();
  require(spec.theta_box.dim() == q, "theta box dimension must match the context");
  require(init.size() == q, "initial value dimension mismatch");
  if (!ctx.has_exposure()) {
    fail(ErrorCode::NoExposure, "every pair is censored throughout the kernel window");
  }
  const ThetaBox& box = spec.theta_box;
  const double norm = active_normalizer(ctx);
  const double tol = cfg.grad_tol * norm;

  FitResult res;
  res.t0 = ctx.t0();
  res.cell = ctx.center_cell();
  res.active_size = ctx.active_size();
  res.effective_scale = static_cast<double>(ctx.active_size()) * ctx.bandwidth();
  res.boundary_warning = ctx.boundary_warning();

  Eigen::VectorXd theta = box.project(init.allFinite() ? init : Eigen::VectorXd::Zero(q));
  LikEval cur = evaluate(ctx, theta);
  if (cur.overflow) {
    theta = box.project(Eigen::VectorXd::Zero(q));
    cur = evaluate(ctx, theta);
    if (cur.overflow) fail(ErrorCode::Overflow, "linear predictor exceeds 700 at theta = 0");
  }
  try {
    res.solver.kantorovich_r = kantorovich_check(ctx, theta).r;
  } catch (const Error&) {
    res.solver.kantorovich_r.reset();
  }

  // Free coordinates: not pinned at a bound by an outward score.
  auto free_mask = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& g) {
    std::vector<int> idx;
    for (int a = 0; a < q; ++a) {
      const bool at_lo = th(a) <= box.lo(a) && g(a) < 0.0;
      const bool at_hi = th(a) >= box.hi(a) && g(a) > 0.0;
      if (!at_lo && !at_hi) idx.push_back(a);
    }
    return idx;
  };
  auto projected_norm = [&](const Eigen::VectorXd& g, const std::vector<int>& idx) {
    double m = 0.0;
    for (int a : idx) m = std::max(m, std::abs(g(a)));
    return m;
  };
  auto newton_step = [&](const LikEval& ev, const std::vector<int>& idx) {
    const auto nf = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd hf(nf, nf);
    Eigen::VectorXd gf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      gf(a) = ev.score(idx[a]) / norm;
      for (Eigen::Index b = 0; b < nf; ++b) hf(a, b) = -ev.hessian(idx[a], idx[b]) / norm;
    }
    const detail::Spectrum sp = detail::spectrum(hf);
    if (sp.min < cfg.ridge_floor * std::max(1.0, sp.max)) {
      Eigen::VectorXd dir = Eigen::VectorXd::Zero(q);
      for (Eigen::Index a = 0; a < nf; ++a) dir(idx[a]) = sp.min_vector(a);
      const double push = gf.dot(sp.min_vector);
      if (std::abs(push) * norm > tol) {
        if (push < 0.0) dir = -dir;
        fail(ErrorCode::UnboundedMLE,
             "log-likelihood keeps increasing along a direction with vanishing curvature",
             detail::to_std(dir));
      }
      fail(ErrorCode::Singular, "Hessian is singular along a covariate direction",
           detail::to_std(dir));
    }
    const Eigen::VectorXd sf = hf.llt().solve(gf);
    Eigen::VectorXd step = Eigen::VectorXd::Zero(q);
    for (Eigen::Index a = 0; a < nf; ++a) step(idx[a]) = sf(a);
    return step;
  };
  // Damped step: halve until l does not decrease. Returns false if no step is
  // accepted.
  auto line_search = [&](const Eigen::VectorXd& step) {
    double s = 1.0;
    for (int k = 0; k <= cfg.step_halving_max; ++k, s *= 0.5) {
      const Eigen::VectorXd cand = box.project(theta + s * step);
      if (cand == theta) return false;
      const double val = local_loglik(ctx, cand);
      if (std::isfinite(val) && val >= cur.value) {
        theta = cand;
        cur = evaluate(ctx, theta);
        return true;
      }
    }
    return false;
  };

  // A small score alone is not enough: along a recession direction (no
  // events, separation) the score decays like exp(theta) while Newton keeps
  // stepping by O(1). Requiring a small step as well carries such iterates
  // to the box, where they are reported as unbounded.
  constexpr double kStepTol = 1e-3;
  bool converged = false;
  int iter = 0;
  std::vector<int> idx = free_mask(theta, cur.score);
  for (; iter < cfg.max_iter; ++iter) {
    const Eigen::VectorXd step = idx.empty() ? Eigen::VectorXd::Zero(q) : newton_step(cur, idx);
    if (projected_norm(cur.score, idx) <= tol && step.lpNorm<Eigen::Infinity>() <= kStepTol) {
      converged = true;
      break;
    }
    if (!line_search(step)) break;
    idx = free_mask(theta, cur.score);
  }
  if (!converged) {
    converged = projected_norm(cur.score, idx) <= tol;
  }
  if (converged && !idx.empty()) {
    // One extra full Newton step drives the score to rounding level. Near the
    // optimum the change in l is below rounding, so judge it by the score.
    const Eigen::VectorXd cand = box.project(theta + newton_step(cur, idx));
    const LikEval next = evaluate(ctx, cand);
    if (!next.overflow && free_mask(cand, next.score) == idx &&
        projected_norm(next.score, idx) <= projected_norm(cur.score, idx)) {
      theta = cand;
      cur = next;
      ++iter;
    }
  }

  if (converged && static_cast<int>(idx.size()) < q) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(q);
    for (int a = 0; a < q; ++a) {
      if (std::find(idx.begin(), idx.end(), a) == idx.end()) dir(a) = cur.score(a) > 0 ? 1.0 : -1.0;
    }
    fail(ErrorCode::UnboundedMLE,
         "maximizer lies on the boundary of the parameter box (no interior MLE)",
         detail::to_std(dir));
  }

  res.theta_hat = theta;
  res.solver.iterations = iter;
  res.solver.grad_norm = cur.score.lpNorm<Eigen::Infinity>();
  res.solver.tolerance = tol;
  res.solver.converged = converged && res.solver.grad_norm <= tol;
  res.covariance = asymptotic_covariance(ctx, theta);
  res.std_errors = res.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return res;
}

struct ConfidenceBand {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  double multiplier = 0.0;
};

/// Pointwise band theta_hat +- z_{(1+level)/2} se per coordinate.
inline ConfidenceBand confidence_band(const FitResult& fit, double level) {
  require(level >= 0.0 && level < 1.0, "confidence level must be in [0, 1)");
  ConfidenceBand band;
  band.multiplier = level == 0.0 ? 0.0 : stats::normal_quantile(0.5 * (1.0 + level));
  band.lower = fit.theta_hat - band.multiplier * fit.std_errors;
  band.upper = fit.theta_hat + band.multiplier * fit.std_errors;
  return band;
}

struct FitOutcome {
  double t0 = 0.0;
  std::size_t cell = 0;
  std::optional<FitResult> fit;
  std::optional<Error> error;
};

struct CurveFit {
  ParameterCurve curve;
  std::vector<FitOutcome> fits;
};

inline FitOutcome fit_panel_cell(const Panel& panel, const ModelSpec& spec,
                                 const SolverConfig& cfg, double t0,
                                 const Eigen::VectorXd& init) {
  FitOutcome out;
  out.t0 = t0;
  out.cell = panel.cell_of_time(t0);
  try {
    const LocalLikContext ctx = make_panel_context(panel, spec.kernel, spec.bandwidth, out.cell);
    out.fit = fit_at(ctx, spec, cfg, init);
    out.fit->t0 = t0;
  } catch (const Error& e) {
    out.error = e;
  }
  return out;
}

/// Sweeps spec.eval_times over a panel. With warm starts each fit starts from
/// the previous estimate and the sweep is sequential; otherwise fits start
/// from 0 and run in parallel. Failures are recorded per evaluation time.
inline CurveFit fit_curve(const Panel& panel, const ModelSpec& spec, const SolverConfig& cfg) {
  spec.validate();
  require(!spec.eval_times.empty(), "eval_times must be nonempty");
  require(spec.q == panel.q(), "model q must equal panel q");
  const auto n = spec.eval_times.size();
  CurveFit out;
  out.fits.resize(n);
  if (cfg.warm_start) {
    Eigen::VectorXd init = Eigen::VectorXd::Zero(spec.q);
    for (std::size_t k = 0; k < n; ++k) {
      out.fits[k] = fit_panel_cell(panel, spec, cfg, spec.eval_times[k], init);
      if (out.fits[k].fit) init = out.fits[k].fit->theta_hat;
    }
  } else {
    parallel_for(n, [&](std::size_t k) {
      out.fits[k] =
          fit_panel_cell(panel, spec, cfg, spec.eval_times[k], Eigen::VectorXd::Zero(spec.q));
    });
  }
  for (const FitOutcome& f : out.fits) {
    if (!f.fit) continue;
    out.curve.eval_times.push_back(f.t0);
    out.curve.values.push_back(f.fit->theta_hat);
  }
  return out;
}

}  // namespace netcox
