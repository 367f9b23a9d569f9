#pragma once

// Kernel-localized log-likelihood of the Cox-type intensity
//   lambda_ij(t) = C_ij(t) exp(theta^T X_ij(t)),
// its score and Hessian, in discrete-panel and continuous-time forms.
//
// Both forms reduce to the same row representation: for every uncensored
// pair and every piece on which covariates are constant,
//   event weight    = sum over jumps in the piece of K((t - t0)/h)
//   exposure weight = integral over the piece of K((t - t0)/h) (times the
//                     piece exposure in panel form)
// so that
//   l(theta) = (1/h) sum_rows [ event_w * theta^T x - exposure_w * exp(theta^T x) ].
//
// Rows are put in a canonical order (by piece, then covariate vector) and rows
// with identical covariates in one piece are merged. The value of l therefore
// does not depend on node labels, and the reduction order is fixed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "netcox/error.hpp"
#include "netcox/kernel.hpp"
#include "netcox/model.hpp"
#include "netcox/parallel.hpp"

namespace netcox {

inline constexpr double kMaxLinearPredictor = 700.0;

struct ContextOptions {
  /// Augment covariates to (x, (k - k0) x) for a local-linear fit in time.
  bool local_linear = false;
  /// Force zero weight on the evaluation cell itself.
  bool exclude_center = false;
};

class LocalLikContext {
 public:
  int q() const { return q_; }
  double bandwidth() const { return h_; }
  double t0() const { return t0_; }
  std::size_t center_cell() const { return center_; }
  std::size_t active_size() const { return active_size_; }
  bool boundary_warning() const { return boundary_warning_; }
  const Kernel& kernel() const { return kernel_; }

  std::size_t rows() const { return event_w_.size(); }
  std::span<const double> x_row(std::size_t r) const {
    return {x_.data() + r * static_cast<std::size_t>(q_), static_cast<std::size_t>(q_)};
  }
  double event_weight(std::size_t r) const { return event_w_[r]; }
  double exposure_weight(std::size_t r) const { return expo_w_[r]; }
  std::size_t row_piece(std::size_t r) const { return piece_[r]; }
  /// Number of distinct pieces (cells) with at least one row.
  std::size_t window_pieces() const {
    std::vector<std::size_t> p = piece_;
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return p.size();
  }

  double total_event_weight() const {
    return std::accumulate(event_w_.begin(), event_w_.end(), 0.0);
  }
  double total_exposure_weight() const {
    return std::accumulate(expo_w_.begin(), expo_w_.end(), 0.0);
  }
  bool has_exposure() const {
    return std::any_of(expo_w_.begin(), expo_w_.end(), [](double w) { return w > 0.0; });
  }

 private:
  friend LocalLikContext make_panel_context(const Panel&, const Kernel&, double, std::size_t,
                                            ContextOptions);
  friend LocalLikContext make_stream_context(const EventStream&, const Panel&, const Kernel&,
                                             double, double);

  struct RawRow {
    std::size_t piece;
    std::vector<double> x;
    double event_w;
    double expo_w;
  };

  // Sorts rows canonically and merges identical covariate vectors per piece.
  void assign_rows(std::vector<RawRow> raw) {
    std::sort(raw.begin(), raw.end(), [](const RawRow& a, const RawRow& b) {
      if (a.piece != b.piece) return a.piece < b.piece;
      if (a.x != b.x) return a.x < b.x;
      if (a.event_w != b.event_w) return a.event_w < b.event_w;
      return a.expo_w < b.expo_w;
    });
    for (std::size_t r = 0; r < raw.size();) {
      std::size_t e = r + 1;
      double ew = raw[r].event_w;
      double xw = raw[r].expo_w;
      while (e < raw.size() && raw[e].piece == raw[r].piece && raw[e].x == raw[r].x) {
        ew += raw[e].event_w;
        xw += raw[e].expo_w;
        ++e;
      }
      piece_.push_back(raw[r].piece);
      x_.insert(x_.end(), raw[r].x.begin(), raw[r].x.end());
      event_w_.push_back(ew);
      expo_w_.push_back(xw);
      r = e;
    }
  }

  Kernel kernel_ = Kernel::triangular();
  int q_ = 1;
  double h_ = 1.0;
  double t0_ = 0.0;
  std::size_t center_ = 0;
  std::size_t active_size_ = 0;
  bool boundary_warning_ = false;
  std::vector<double> x_;
  std::vector<double> event_w_;
  std::vector<double> expo_w_;
  std::vector<std::size_t> piece_;
};

/**
 * Panel form. Cell k gets the discrete weight K((k - k0) / bandwidth), left
 * unnormalized; the log-likelihood carries the factor 1/bandwidth. Pairs
 * with censor = 0 in a cell contribute nothing.
 */
inline LocalLikContext make_panel_context(const Panel& panel, const Kernel& kernel,
                                          double bandwidth, std::size_t center_cell,
                                          ContextOptions opts = {}) {
  require(bandwidth > 0.0 && std::isfinite(bandwidth), "bandwidth must be positive");
  if (center_cell >= panel.n_cells()) {
    fail(ErrorCode::InvalidArgument,
         "evaluation cell " + std::to_string(center_cell) + " out of range");
  }
  LocalLikContext ctx;
  ctx.kernel_ = kernel;
  ctx.h_ = bandwidth;
  ctx.center_ = center_cell;
  ctx.t0_ = panel.cell_times()[center_cell];
  ctx.active_size_ = panel.active_size(center_cell);
  const int q = panel.q();
  ctx.q_ = opts.local_linear ? 2 * q : q;

  const auto k0 = static_cast<std::int64_t>(center_cell);
  const auto lo = static_cast<std::int64_t>(std::floor(k0 + kernel.support_lo() * bandwidth));
  const auto hi = static_cast<std::int64_t>(std::ceil(k0 + kernel.support_hi() * bandwidth));
  const auto last = static_cast<std::int64_t>(panel.n_cells()) - 1;

  std::vector<LocalLikContext::RawRow> raw;
  for (std::int64_t k = lo; k <= hi; ++k) {
    const double lag = static_cast<double>(k - k0);
    double w = kernel(lag / bandwidth);
    if (opts.exclude_center && k == k0) w = 0.0;
    if (w == 0.0) continue;
    if (k < 0 || k > last) {
      ctx.boundary_warning_ = true;
      continue;
    }
    const auto c = static_cast<std::size_t>(k);
    const CellBlock& block = panel.cell(c);
    const double expo = panel.cell_exposure()[c];

    // Integer aggregation of identical covariate rows before weighting.
    struct Entry {
      std::vector<double> x;
      std::int64_t count;
      std::int64_t mult;
    };
    std::vector<Entry> entries;
    entries.reserve(block.size());
    for (std::size_t r = 0; r < block.size(); ++r) {
      if (!block.censor[r]) continue;
      const auto row = block.row(r, q);
      std::vector<double> x(row.begin(), row.end());
      if (opts.local_linear)
        for (double v : row) x.push_back(lag * v);
      entries.push_back({std::move(x), block.counts[r], 1});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
      return a.x != b.x ? a.x < b.x : a.count < b.count;
    });
    for (std::size_t r = 0; r < entries.size();) {
      std::size_t e = r + 1;
      std::int64_t count = entries[r].count;
      std::int64_t mult = 1;
      while (e < entries.size() && entries[e].x == entries[r].x) {
        count += entries[e].count;
        ++mult;
        ++e;
      }
      raw.push_back({c, std::move(entries[r].x), w * static_cast<double>(count),
                     w * expo * static_cast<double>(mult)});
      r = e;
    }
  }
  ctx.assign_rows(std::move(raw));
  return ctx;
}

/**
 * Continuous-time form. `design` supplies pieces (cell_edges) on which the
 * censor indicator and covariates of each listed pair are constant; pairs not
 * listed in a piece are censored there. A jump at time t belongs to the piece
 * with e_c < t <= e_{c+1} and uses that piece's covariates.
 */
inline LocalLikContext make_stream_context(const EventStream& stream, const Panel& design,
                                           const Kernel& kernel, double h, double t0) {
  require(h > 0.0 && std::isfinite(h), "bandwidth must be positive");
  const auto& edges = design.cell_edges();
  require(!edges.empty(), "continuous-time context needs panel cell_edges");
  require(stream.directed() == design.directed(), "stream/design directedness mismatch");
  const std::size_t n_pieces = design.n_cells();
  const int q = design.q();

  auto piece_of = [&](double t) -> std::ptrdiff_t {
    if (t <= edges.front() || t > edges.back()) return -1;
    const auto it = std::lower_bound(edges.begin(), edges.end(), t);
    return static_cast<std::ptrdiff_t>(it - edges.begin()) - 1;
  };

  LocalLikContext ctx;
  ctx.kernel_ = kernel;
  ctx.h_ = h;
  ctx.t0_ = t0;
  ctx.q_ = q;
  const std::ptrdiff_t p0 = t0 <= edges.front() ? 0 : piece_of(t0);
  ctx.center_ = p0 < 0 ? n_pieces - 1 : static_cast<std::size_t>(p0);
  ctx.active_size_ = design.active_size(ctx.center_);
  ctx.boundary_warning_ =
      t0 + kernel.support_lo() * h < edges.front() || t0 + kernel.support_hi() * h > edges.back();

  // Per-piece lookup from pair to record row.
  std::vector<std::map<PairKey, std::size_t>> lookup(n_pieces);
  for (std::size_t c = 0; c < n_pieces; ++c) {
    const CellBlock& b = design.cell(c);
    for (std::size_t r = 0; r < b.size(); ++r) lookup[c][b.pairs[r]] = r;
  }
  std::vector<std::map<PairKey, double>> jump_w(n_pieces);
  for (const Event& e : stream.events()) {
    const std::ptrdiff_t p = piece_of(e.time);
    if (p < 0) continue;
    const double w = kernel((e.time - t0) / h);
    if (w == 0.0) continue;
    jump_w[static_cast<std::size_t>(p)][{e.i, e.j}] += w;
  }

  std::vector<LocalLikContext::RawRow> raw;
  for (std::size_t c = 0; c < n_pieces; ++c) {
    const double expo = h * kernel.integral((edges[c] - t0) / h, (edges[c + 1] - t0) / h);
    const CellBlock& b = design.cell(c);
    for (std::size_t r = 0; r < b.size(); ++r) {
      if (!b.censor[r]) continue;
      const auto jw = jump_w[c].find(b.pairs[r]);
      const double ew = jw == jump_w[c].end() ? 0.0 : jw->second;
      if (expo == 0.0 && ew == 0.0) continue;
      const auto row = b.row(r, q);
      raw.push_back({c, std::vector<double>(row.begin(), row.end()), ew, expo});
    }
  }
  ctx.assign_rows(std::move(raw));
  return ctx;
}

enum class Derivatives { None, Score, Hessian };

struct LikEval {
  double value = 0.0;
  Eigen::VectorXd score;
  Eigen::MatrixXd hessian;
  bool overflow = false;
  double max_eta = -std::numeric_limits<double>::infinity();
};

namespace detail {

inline constexpr std::size_t kBlockRows = 256;

// Partial layout: [value, score(q), hessian upper triangle(q(q+1)/2), max_eta].
inline std::size_t partial_stride(int q) {
  return 2 + static_cast<std::size_t>(q) + static_cast<std::size_t>(q * (q + 1) / 2);
}

inline void accumulate_block(const LocalLikContext& ctx, const double* theta, int q,
                             Derivatives order, std::size_t begin, std::size_t end,
                             double* out) {
  const std::size_t stride = partial_stride(q);
  std::fill(out, out + stride, 0.0);
  double* grad = out + 1;
  double* hess = out + 1 + q;
  double max_eta = -std::numeric_limits<double>::infinity();
  for (std::size_t r = begin; r < end; ++r) {
    const double* x = ctx.x_row(r).data();
    double eta = 0.0;
    for (int a = 0; a < q; ++a) eta += x[a] * theta[a];
    max_eta = std::max(max_eta, eta);
    const double ew = ctx.event_weight(r);
    const double xw = ctx.exposure_weight(r);
    const double mu = xw * std::exp(std::min(eta, kMaxLinearPredictor));
    out[0] += ew * eta - mu;
    if (order == Derivatives::None) continue;
    const double resid = ew - mu;
    for (int a = 0; a < q; ++a) grad[a] += resid * x[a];
    if (order != Derivatives::Hessian) continue;
    std::size_t idx = 0;
    for (int a = 0; a < q; ++a)
      for (int b = a; b < q; ++b) hess[idx++] -= mu * x[a] * x[b];
  }
  out[stride - 1] = max_eta;
}

// Pairwise (tree) combination of block partials in fixed order.
inline void pairwise_combine(std::vector<double>& partials, std::size_t stride,
                             std::size_t n_blocks) {
  for (std::size_t width = 1; width < n_blocks; width *= 2) {
    for (std::size_t b = 0; b + width < n_blocks; b += 2 * width) {
      double* dst = partials.data() + b * stride;
      const double* src = partials.data() + (b + width) * stride;
      for (std::size_t k = 0; k + 1 < stride; ++k) dst[k] += src[k];
      dst[stride - 1] = std::max(dst[stride - 1], src[stride - 1]);
    }
  }
}

}  // namespace detail

inline LikEval evaluate(const LocalLikContext& ctx, const Eigen::VectorXd& theta,
                        Derivatives order = Derivatives::Hessian) {
  const int q = ctx.q();
  require(theta.size() == q, "theta dimension mismatch");
  require(theta.allFinite(), "theta must be finite");
  const std::size_t stride = detail::partial_stride(q);
  const std::size_t n_blocks =
      std::max<std::size_t>(1, (ctx.rows() + detail::kBlockRows - 1) / detail::kBlockRows);
  std::vector<double> partials(n_blocks * stride);
  auto block = [&](std::size_t b) {
    const std::size_t begin = b * detail::kBlockRows;
    const std::size_t end = std::min(ctx.rows(), begin + detail::kBlockRows);
    detail::accumulate_block(ctx, theta.data(), q, order, begin, end,
                             partials.data() + b * stride);
  };
  if (n_blocks >= 64) {
    parallel_for(n_blocks, block);
  } else {
    for (std::size_t b = 0; b < n_blocks; ++b) block(b);
  }
  detail::pairwise_combine(partials, stride, n_blocks);

  const double inv_h = 1.0 / ctx.bandwidth();
  LikEval out;
  out.max_eta = partials[stride - 1];
  out.overflow = out.max_eta > kMaxLinearPredictor;
  out.value = out.overflow ? -std::numeric_limits<double>::infinity() : partials[0] * inv_h;
  if (order != Derivatives::None) {
    out.score = Eigen::Map<const Eigen::VectorXd>(partials.data() + 1, q) * inv_h;
  }
  if (order == Derivatives::Hessian) {
    out.hessian.resize(q, q);
    std::size_t idx = 0;
    for (int a = 0; a < q; ++a) {
      for (int b = a; b < q; ++b) {
        const double v = partials[1 + q + idx++] * inv_h;
        out.hessian(a, b) = v;
        out.hessian(b, a) = v;
      }
    }
  }
  return out;
}

/// Local log-likelihood; -infinity when some theta^T x exceeds 700.
inline double local_loglik(const LocalLikContext& ctx, const Eigen::VectorXd& theta) {
  return evaluate(ctx, theta, Derivatives::None).value;
}

inline Eigen::VectorXd score(const LocalLikContext& ctx, const Eigen::VectorXd& theta) {
  LikEval e = evaluate(ctx, theta, Derivatives::Score);
  if (e.overflow) {
    fail(ErrorCode::Overflow, "linear predictor " + std::to_string(e.max_eta) + " exceeds 700");
  }
  return std::move(e.score);
}

inline Eigen::MatrixXd hessian(const LocalLikContext& ctx, const Eigen::VectorXd& theta) {
  LikEval e = evaluate(ctx, theta, Derivatives::Hessian);
  if (e.overflow) {
    fail(ErrorCode::Overflow, "linear predictor " + std::to_string(e.max_eta) + " exceeds 700");
  }
  return std::move(e.hessian);
}

}  // namespace netcox
