#pragma once

// Core domain types: event streams, discretized panels, model specification,
// parameter curves and fit results.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netcox/error.hpp"
#include "netcox/kernel.hpp"

namespace netcox {

using NodeId = std::int32_t;

struct PairKey {
  NodeId i = 0;
  NodeId j = 0;
  auto operator<=>(const PairKey&) const = default;
};

/// Canonical pair: undirected pairs are stored with i < j.
inline PairKey make_pair_key(NodeId a, NodeId b, bool directed) {
  if (!directed && a > b) std::swap(a, b);
  return {a, b};
}

/// Number of distinct pairs on n nodes: n(n-1)/2, or n(n-1) when directed.
inline std::uint64_t pair_count(int n_nodes, bool directed) {
  const auto n = static_cast<std::uint64_t>(n_nodes);
  return directed ? n * (n - 1) : n * (n - 1) / 2;
}

/// Dense 0-based index of a canonical pair in [0, pair_count).
inline std::uint64_t pair_index(PairKey p, int n_nodes, bool directed) {
  const auto n = static_cast<std::uint64_t>(n_nodes);
  const auto i = static_cast<std::uint64_t>(p.i - 1);
  const auto j = static_cast<std::uint64_t>(p.j - 1);
  if (directed) return i * (n - 1) + (j > i ? j - 1 : j);
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

struct Event {
  double time = 0.0;
  NodeId i = 0;
  NodeId j = 0;
  bool operator==(const Event&) const = default;
};

/// Timestamped pair interactions on nodes 1..n over (0, T]. Events are kept
/// sorted by time; ties (including repeated events of one pair) are allowed.
class EventStream {
 public:
  EventStream() = default;

  EventStream(int n_nodes, double horizon, bool directed, std::vector<Event> events)
      : n_nodes_(n_nodes), horizon_(horizon), directed_(directed), events_(std::move(events)) {
    if (n_nodes_ < 2) fail(ErrorCode::InvalidData, "event stream needs at least two nodes");
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
      fail(ErrorCode::InvalidData, "event stream horizon must be positive and finite");
    }
    for (std::size_t k = 0; k < events_.size(); ++k) {
      Event& e = events_[k];
      if (!(e.time > 0.0 && e.time <= horizon_)) {
        fail(ErrorCode::InvalidData, "event " + std::to_string(k) + " at time " +
                                         std::to_string(e.time) + " lies outside (0, T]");
      }
      if (e.i < 1 || e.j < 1 || e.i > n_nodes_ || e.j > n_nodes_ || e.i == e.j) {
        fail(ErrorCode::InvalidData, "event " + std::to_string(k) + " has an invalid pair (" +
                                         std::to_string(e.i) + "," + std::to_string(e.j) + ")");
      }
      const PairKey p = make_pair_key(e.i, e.j, directed_);
      e.i = p.i;
      e.j = p.j;
    }
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
  }

  int n_nodes() const { return n_nodes_; }
  double horizon() const { return horizon_; }
  bool directed() const { return directed_; }
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }

  /// N_ij(t): number of events of the pair in (0, t].
  std::int64_t count(PairKey pair, double t) const {
    const PairKey p = make_pair_key(pair.i, pair.j, directed_);
    std::int64_t c = 0;
    for (const Event& e : events_) {
      if (e.time > t) break;
      if (e.i == p.i && e.j == p.j) ++c;
    }
    return c;
  }

 private:
  int n_nodes_ = 2;
  double horizon_ = 1.0;
  bool directed_ = false;
  std::vector<Event> events_;
};

/// Per-cell, per-pair event counts over cells (c L, (c+1) L].
struct BinnedCounts {
  double cell_length = 1.0;
  std::vector<std::map<PairKey, std::int64_t>> cells;

  std::size_t n_cells() const { return cells.size(); }
  std::int64_t at(std::size_t cell, PairKey p) const {
    const auto it = cells.at(cell).find(p);
    return it == cells[cell].end() ? 0 : it->second;
  }
  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& c : cells)
      for (const auto& [_, v] : c) t += v;
    return t;
  }
};

inline BinnedCounts bin_events(const EventStream& stream, double cell_length) {
  require(cell_length > 0.0 && std::isfinite(cell_length), "cell_length must be positive");
  const auto n_cells =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(stream.horizon() / cell_length)));
  BinnedCounts out;
  out.cell_length = cell_length;
  out.cells.resize(n_cells);
  for (const Event& e : stream.events()) {
    auto c = static_cast<std::int64_t>(std::ceil(e.time / cell_length)) - 1;
    c = std::clamp<std::int64_t>(c, 0, static_cast<std::int64_t>(n_cells) - 1);
    ++out.cells[static_cast<std::size_t>(c)][{e.i, e.j}];
  }
  return out;
}

/// Records of one panel cell, stored column-wise; `x` is row-major with q
/// entries per record.
struct CellBlock {
  std::vector<PairKey> pairs;
  std::vector<std::int64_t> counts;
  std::vector<std::uint8_t> censor;
  std::vector<double> x;

  std::size_t size() const { return pairs.size(); }
  std::span<const double> row(std::size_t r, int q) const {
    return {x.data() + r * static_cast<std::size_t>(q), static_cast<std::size_t>(q)};
  }
};

/**
 * Discretized observation grid. Each cell holds sparse per-pair records with
 * the event count, the censor indicator C and the covariate vector X, which
 * are constant within the cell. `cell_exposure` is the integrated baseline
 * exposure of a cell (1 per cell unless stated otherwise).
 */
class Panel {
 public:
  Panel() = default;
  Panel(int n_nodes, std::size_t n_cells, int q, bool directed = false)
      : n_nodes_(n_nodes), q_(q), directed_(directed), cells_(n_cells),
        cell_times_(n_cells), cell_exposure_(n_cells, 1.0) {
    require(n_nodes >= 2, "panel needs at least two nodes");
    require(q >= 1, "covariate dimension must be at least 1");
    for (std::size_t c = 0; c < n_cells; ++c) cell_times_[c] = static_cast<double>(c);
  }

  int n_nodes() const { return n_nodes_; }
  int q() const { return q_; }
  bool directed() const { return directed_; }
  std::size_t n_cells() const { return cells_.size(); }

  const CellBlock& cell(std::size_t c) const { return cells_.at(c); }
  CellBlock& cell(std::size_t c) { return cells_.at(c); }

  const std::vector<double>& cell_times() const { return cell_times_; }
  void set_cell_times(std::vector<double> t) {
    require(t.size() == n_cells(), "cell_times size mismatch");
    cell_times_ = std::move(t);
  }
  const std::vector<double>& cell_exposure() const { return cell_exposure_; }
  void set_cell_exposure(std::vector<double> e) {
    require(e.size() == n_cells(), "cell_exposure size mismatch");
    for (double v : e) require(v >= 0.0 && std::isfinite(v), "cell exposure must be >= 0");
    cell_exposure_ = std::move(e);
  }
  /// Piece boundaries (size n_cells + 1) for continuous-time use; empty if unset.
  const std::vector<double>& cell_edges() const { return cell_edges_; }
  void set_cell_edges(std::vector<double> edges) {
    require(edges.size() == n_cells() + 1, "cell_edges must have n_cells + 1 entries");
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
      require(edges[c + 1] > edges[c], "cell_edges must be strictly increasing");
    }
    cell_edges_ = std::move(edges);
  }
  const std::vector<std::string>& column_names() const { return column_names_; }
  void set_column_names(std::vector<std::string> names) {
    require(names.size() == static_cast<std::size_t>(q_), "column name count must equal q");
    column_names_ = std::move(names);
  }

  void add_record(std::size_t c, PairKey pair, std::int64_t count, bool censor,
                  std::span<const double> x) {
    require(x.size() == static_cast<std::size_t>(q_), "covariate length must equal q");
    require(count >= 0, "counts must be nonnegative");
    const PairKey p = make_pair_key(pair.i, pair.j, directed_);
    require(p.i >= 1 && p.j >= 1 && p.i <= n_nodes_ && p.j <= n_nodes_ && p.i != p.j,
            "record pair out of range");
    CellBlock& b = cells_.at(c);
    b.pairs.push_back(p);
    b.counts.push_back(count);
    b.censor.push_back(censor ? 1 : 0);
    b.x.insert(b.x.end(), x.begin(), x.end());
  }

  /// L(k): pairs with censor = 1 in cell k.
  std::vector<PairKey> active_set(std::size_t c) const {
    if (c >= n_cells()) {
      fail(ErrorCode::InvalidArgument, "cell index " + std::to_string(c) + " out of range");
    }
    std::vector<PairKey> out;
    const CellBlock& b = cells_[c];
    for (std::size_t r = 0; r < b.size(); ++r)
      if (b.censor[r]) out.push_back(b.pairs[r]);
    return out;
  }

  std::size_t active_size(std::size_t c) const {
    if (c >= n_cells()) {
      fail(ErrorCode::InvalidArgument, "cell index " + std::to_string(c) + " out of range");
    }
    const auto& cen = cells_[c].censor;
    return static_cast<std::size_t>(std::count(cen.begin(), cen.end(), std::uint8_t{1}));
  }

  /// Cell whose representative time is closest to t (first on ties).
  std::size_t cell_of_time(double t) const {
    require(!cell_times_.empty(), "panel has no cells");
    std::size_t best = 0;
    for (std::size_t c = 1; c < cell_times_.size(); ++c) {
      if (std::abs(cell_times_[c] - t) < std::abs(cell_times_[best] - t)) best = c;
    }
    return best;
  }

  std::int64_t total_count() const {
    std::int64_t t = 0;
    for (const auto& b : cells_)
      for (auto v : b.counts) t += v;
    return t;
  }

  /// Checks that no pair appears twice within a cell.
  void validate() const {
    for (std::size_t c = 0; c < cells_.size(); ++c) {
      std::vector<PairKey> seen = cells_[c].pairs;
      std::sort(seen.begin(), seen.end());
      if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
        fail(ErrorCode::InvalidData, "cell " + std::to_string(c) + " has duplicate pair records");
      }
    }
  }

 private:
  int n_nodes_ = 2;
  int q_ = 1;
  bool directed_ = false;
  std::vector<CellBlock> cells_;
  std::vector<double> cell_times_;
  std::vector<double> cell_exposure_;
  std::vector<double> cell_edges_;
  std::vector<std::string> column_names_;
};

/// Copy of the panel with node labels mapped through `perm` (perm[i-1] is the
/// new label of node i).
inline Panel relabel_nodes(const Panel& panel, std::span<const NodeId> perm) {
  require(perm.size() == static_cast<std::size_t>(panel.n_nodes()), "permutation size mismatch");
  Panel out(panel.n_nodes(), panel.n_cells(), panel.q(), panel.directed());
  out.set_cell_times(panel.cell_times());
  out.set_cell_exposure(panel.cell_exposure());
  if (!panel.cell_edges().empty()) out.set_cell_edges(panel.cell_edges());
  if (!panel.column_names().empty()) out.set_column_names(panel.column_names());
  for (std::size_t c = 0; c < panel.n_cells(); ++c) {
    const CellBlock& b = panel.cell(c);
    for (std::size_t r = 0; r < b.size(); ++r) {
      const PairKey p{perm[b.pairs[r].i - 1], perm[b.pairs[r].j - 1]};
      out.add_record(c, p, b.counts[r], b.censor[r] != 0, b.row(r, panel.q()));
    }
  }
  return out;
}

/// Compact convex parameter box Theta.
struct ThetaBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static ThetaBox uniform(int q, double lo = -20.0, double hi = 20.0) {
    return {Eigen::VectorXd::Constant(q, lo), Eigen::VectorXd::Constant(q, hi)};
  }
  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& theta) const {
    return theta.size() == lo.size() && (theta.array() >= lo.array()).all() &&
           (theta.array() <= hi.array()).all();
  }
  Eigen::VectorXd project(const Eigen::VectorXd& theta) const {
    return theta.cwiseMax(lo).cwiseMin(hi);
  }
  void validate() const {
    require(lo.size() == hi.size() && lo.size() > 0, "theta box dimension mismatch");
    require((lo.array() < hi.array()).all(), "theta box must have nonempty interior");
    require(lo.allFinite() && hi.allFinite(), "theta box must be bounded");
  }
};

struct ModelSpec {
  Kernel kernel = Kernel::triangular();
  double bandwidth = 1.0;  // cells for panel fits, time units for stream fits
  int q = 1;
  ThetaBox theta_box = ThetaBox::uniform(1);
  std::vector<double> eval_times;
  bool directed = false;

  static ModelSpec with_dimension(int q, double bandwidth, Kernel kernel = Kernel::triangular()) {
    ModelSpec s;
    s.kernel = std::move(kernel);
    s.bandwidth = bandwidth;
    s.q = q;
    s.theta_box = ThetaBox::uniform(q);
    return s;
  }

  void validate() const {
    require(bandwidth > 0.0 && std::isfinite(bandwidth), "bandwidth must be positive");
    require(q >= 1, "q must be at least 1");
    theta_box.validate();
    require(theta_box.dim() == q, "theta box dimension must equal q");
  }
};

/// theta(t) on a grid; linear interpolation between grid points and constant
/// extrapolation outside.
struct ParameterCurve {
  std::vector<double> eval_times;
  std::vector<Eigen::VectorXd> values;

  static ParameterCurve constant(const Eigen::VectorXd& theta) { return {{0.0}, {theta}}; }

  bool is_constant() const {
    for (std::size_t k = 1; k < values.size(); ++k)
      if (values[k] != values[0]) return false;
    return true;
  }

  Eigen::VectorXd at(double t) const {
    require(!values.empty() && values.size() == eval_times.size(), "empty parameter curve");
    if (t <= eval_times.front()) return values.front();
    if (t >= eval_times.back()) return values.back();
    const auto it = std::upper_bound(eval_times.begin(), eval_times.end(), t);
    const auto k = static_cast<std::size_t>(it - eval_times.begin());
    const double w = (t - eval_times[k - 1]) / (eval_times[k] - eval_times[k - 1]);
    return (1.0 - w) * values[k - 1] + w * values[k];
  }
};

struct SolverDiagnostics {
  int iterations = 0;
  double grad_norm = 0.0;  // infinity norm of the score at the returned point
  double tolerance = 0.0;
  bool converged = false;
  std::optional<double> kantorovich_r;  // evaluated at the starting point
};

struct FitResult {
  double t0 = 0.0;
  std::size_t cell = 0;
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd std_errors;
  std::size_t active_size = 0;
  double effective_scale = 0.0;  // |L_n(t0)| * h
  SolverDiagnostics solver;
  bool boundary_warning = false;
};

}  // namespace netcox
