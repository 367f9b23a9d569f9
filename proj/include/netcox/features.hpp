#pragma once

// Weekly covariate panel built from daily tour counts, and the split of a
// link-presence path into addition and deletion processes.
//
// Day convention: the week starts on the anchor weekday (Friday by default),
// so day d = 1 is the anchor day and d = 4..7 are Monday..Thursday. Daily
// counts are indexed from the epoch, week k covering days 7k..7k+6.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "netcox/error.hpp"
#include "netcox/model.hpp"

namespace netcox {

enum FeatureColumn : int {
  kColIntercept = 0,
  kColActivity,
  kColCommonNeighbors,
  kColMaxDegree,
  kColFridayAvg,
  kColFridayInactive,
  kFeatureColumnCount
};

inline constexpr std::array<const char*, kFeatureColumnCount> kFeatureColumnNames{
    "intercept", "activity", "common_neighbors", "max_degree", "friday_avg", "friday_inactive"};

struct FeatureSpec {
  double r = 0.8;
  int weekday_first = 4;  // activity days, in the week's own numbering
  int weekday_last = 7;
  int lookback_weeks = 4;
  int anchor_weekday = 5;  // ISO numbering, Monday = 1; 5 = Friday
  std::array<bool, kFeatureColumnCount> columns{true, true, true, true, true, true};

  int q() const { return static_cast<int>(std::count(columns.begin(), columns.end(), true)); }

  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    for (int c = 0; c < kFeatureColumnCount; ++c)
      if (columns[c]) out.emplace_back(kFeatureColumnNames[c]);
    return out;
  }

  void validate() const {
    require(r > 0.0 && r < 1.0, "decay r must be in (0, 1)");
    require(lookback_weeks >= 1, "lookback_weeks must be at least 1");
    require(weekday_first >= 1 && weekday_first <= weekday_last && weekday_last <= 7,
            "weekday window must satisfy 1 <= first <= last <= 7");
    require(anchor_weekday >= 1 && anchor_weekday <= 7, "anchor_weekday must be in 1..7");
    require(q() >= 1, "at least one feature column must be enabled");
  }
};

/// A = (1 - r) sum_d r^(7 - d) delta_d, where delta[m] is the count of day
/// d = first_day + m.
inline double weekday_activity(std::span<const double> delta, double r, int first_day = 4) {
  require(r > 0.0 && r < 1.0, "decay r must be in (0, 1)");
  require(first_day >= 1 && first_day + static_cast<int>(delta.size()) - 1 <= 7,
          "activity days must lie in 1..7");
  double s = 0.0;
  for (std::size_t m = 0; m < delta.size(); ++m) {
    s += std::pow(r, 7 - (first_day + static_cast<int>(m))) * delta[m];
  }
  return (1.0 - r) * s;
}

/// Index of the first week with complete feature history.
inline std::size_t first_usable_week(const FeatureSpec& spec) {
  return static_cast<std::size_t>(std::max(2, spec.lookback_weeks));
}

/**
 * Weekly panel: cell k is week k, its count is the number of anchor-day
 * tours in week k, and only pairs with C = 1 (some tour on any day of weeks
 * k - lookback .. k - 1) get a record. Covariates use weeks k - 1 and k - 2
 * only. Weeks before the first usable week stay empty. Pairs are treated as
 * undirected. Cell times are the anchor-day noon of each week, in hours
 * since the epoch.
 */
inline Panel build_weekly_panel(const BinnedCounts& daily, int n_nodes, const FeatureSpec& spec) {
  spec.validate();
  require(n_nodes >= 2, "panel needs at least two nodes");
  const std::size_t n_days = daily.n_cells();
  const std::size_t n_weeks = (n_days + 6) / 7;
  const std::size_t first = first_usable_week(spec);
  const auto lookback = static_cast<std::size_t>(spec.lookback_weeks);
  if (n_weeks < lookback + 2) {
    fail(ErrorCode::InsufficientHistory,
         "need at least " + std::to_string(lookback + 2) + " weeks of data, got " +
             std::to_string(n_weeks) + "; first usable week is " + std::to_string(first));
  }

  // Per-week tables keyed by canonical undirected pair.
  std::vector<std::map<PairKey, std::int64_t>> week_total(n_weeks), friday(n_weeks);
  std::vector<std::map<PairKey, double>> activity(n_weeks);
  const int width = spec.weekday_last - spec.weekday_first + 1;
  std::map<PairKey, std::vector<double>> scratch;
  for (std::size_t w = 0; w < n_weeks; ++w) {
    scratch.clear();
    for (int d = 1; d <= 7; ++d) {
      const std::size_t day = 7 * w + static_cast<std::size_t>(d - 1);
      if (day >= n_days) break;
      for (const auto& [p0, v] : daily.cells[day]) {
        if (v == 0) continue;
        const PairKey p = make_pair_key(p0.i, p0.j, false);
        require(p.i >= 1 && p.j <= n_nodes && p.i != p.j, "daily count pair out of range");
        week_total[w][p] += v;
        if (d == 1) friday[w][p] += v;
        if (d >= spec.weekday_first && d <= spec.weekday_last) {
          auto& row = scratch[p];
          row.resize(static_cast<std::size_t>(width), 0.0);
          row[static_cast<std::size_t>(d - spec.weekday_first)] += static_cast<double>(v);
        }
      }
    }
    for (const auto& [p, delta] : scratch) {
      activity[w][p] = weekday_activity(delta, spec.r, spec.weekday_first);
    }
  }

  // Anchor-day graphs G(w): sorted adjacency lists.
  std::vector<std::vector<std::vector<NodeId>>> adj(n_weeks);
  for (std::size_t w = 0; w < n_weeks; ++w) {
    adj[w].assign(static_cast<std::size_t>(n_nodes) + 1, {});
    for (const auto& [p, v] : friday[w]) {
      if (v <= 0) continue;
      adj[w][p.i].push_back(p.j);
      adj[w][p.j].push_back(p.i);
    }
    for (auto& nb : adj[w]) std::sort(nb.begin(), nb.end());
  }
  auto lookup = [](const auto& table, PairKey p) {
    const auto it = table.find(p);
    return it == table.end() ? 0.0 : static_cast<double>(it->second);
  };

  Panel panel(n_nodes, n_weeks, spec.q(), false);
  std::vector<double> times(n_weeks);
  for (std::size_t w = 0; w < n_weeks; ++w) times[w] = 168.0 * static_cast<double>(w) + 12.0;
  panel.set_cell_times(times);
  panel.set_column_names(spec.column_names());

  std::vector<double> full(kFeatureColumnCount), x;
  for (std::size_t k = first; k < n_weeks; ++k) {
    std::map<PairKey, bool> eligible;
    for (std::size_t w = k - lookback; w < k; ++w)
      for (const auto& [p, v] : week_total[w])
        if (v > 0) eligible[p] = true;
    const auto& g = adj[k - 1];
    for (const auto& [p, _] : eligible) {
      const auto& ni = g[p.i];
      const auto& nj = g[p.j];
      std::size_t common = 0;
      for (std::size_t a = 0, b = 0; a < ni.size() && b < nj.size();) {
        if (ni[a] < nj[b]) {
          ++a;
        } else if (nj[b] < ni[a]) {
          ++b;
        } else {
          ++common;
          ++a;
          ++b;
        }
      }
      const double t_avg = 0.5 * (lookup(friday[k - 1], p) + lookup(friday[k - 2], p));
      full[kColIntercept] = 1.0;
      full[kColActivity] = lookup(activity[k - 1], p);
      full[kColCommonNeighbors] = static_cast<double>(common);
      full[kColMaxDegree] = static_cast<double>(std::max(ni.size(), nj.size()));
      full[kColFridayAvg] = t_avg;
      full[kColFridayInactive] = t_avg == 0.0 ? 1.0 : 0.0;
      x.clear();
      for (int c = 0; c < kFeatureColumnCount; ++c)
        if (spec.columns[c]) x.push_back(full[c]);
      const auto count = static_cast<std::int64_t>(lookup(friday[k], p));
      panel.add_record(k, p, count, true, x);
    }
  }
  return panel;
}

/// Piecewise-constant {0, 1} link path of one pair: value z0 before the
/// first change, then the listed (time, new value) changes.
struct LinkPath {
  PairKey pair;
  int z0 = 0;
  std::vector<std::pair<double, int>> changes;

  /// Right-continuous value Z(t).
  int at(double t) const {
    int z = z0;
    for (const auto& [s, v] : changes) {
      if (s > t) break;
      z = v;
    }
    return z;
  }
  /// Left limit Z(t-).
  int before(double t) const {
    int z = z0;
    for (const auto& [s, v] : changes) {
      if (s >= t) break;
      z = v;
    }
    return z;
  }
  int eligible_addition(double t) const { return 1 - before(t); }
  int eligible_deletion(double t) const { return before(t); }
};

struct LinkEventSplit {
  EventStream additions;
  EventStream deletions;
  std::vector<LinkPath> paths;  // normalized: only genuine jumps kept
};

/// Up-crossings become addition events, down-crossings deletion events.
/// A "change" to the current value is dropped; values outside {0, 1} or
/// non-increasing change times are errors.
inline LinkEventSplit split_link_events(const std::vector<LinkPath>& paths, int n_nodes,
                                        double horizon, bool directed = false) {
  std::vector<Event> up, down;
  std::vector<LinkPath> norm;
  norm.reserve(paths.size());
  for (const LinkPath& p : paths) {
    if (p.z0 != 0 && p.z0 != 1) fail(ErrorCode::InvalidData, "link path values must be 0 or 1");
    LinkPath q{make_pair_key(p.pair.i, p.pair.j, directed), p.z0, {}};
    int z = p.z0;
    double last = 0.0;
    for (const auto& [t, v] : p.changes) {
      if (v != 0 && v != 1) {
        fail(ErrorCode::InvalidData, "non-unit jump in link path (value " + std::to_string(v) +
                                         " at t = " + std::to_string(t) + ")");
      }
      require(t > last, "link path change times must be positive and increasing");
      require(t <= horizon, "link path change after the horizon");
      last = t;
      if (v == z) continue;
      (v == 1 ? up : down).push_back({t, q.pair.i, q.pair.j});
      q.changes.emplace_back(t, v);
      z = v;
    }
    norm.push_back(std::move(q));
  }
  return {EventStream(n_nodes, horizon, directed, std::move(up)),
          EventStream(n_nodes, horizon, directed, std::move(down)), std::move(norm)};
}

}  // namespace netcox
