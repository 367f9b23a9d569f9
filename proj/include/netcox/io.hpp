#pragma once

// File formats: events CSV, panel JSON, fit CSV/JSON, report JSON, and trip
// record ingestion. Doubles are written with 17 significant digits so every
// text round trip is exact.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "netcox/bandwidth.hpp"
#include "netcox/error.hpp"
#include "netcox/estimator.hpp"
#include "netcox/model.hpp"
#include "netcox/netstats.hpp"
#include "netcox/simulator.hpp"

namespace netcox::io {

using json = nlohmann::ordered_json;

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(std::string_view s, const std::string& context) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorCode::InvalidData, context + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

inline std::int64_t parse_int(std::string_view s, const std::string& context) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(ErrorCode::InvalidData, context + ": cannot parse integer '" + std::string(s) + "'");
  }
  return v;
}

/// Splits one CSV line; double quotes group fields and "" is a literal quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        out.back() += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

// ---------------------------------------------------------------- streams

inline std::string read_text(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << text;
  if (!out) fail(ErrorCode::Io, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------- events CSV

/// `# n_nodes=N horizon=T directed=0|1` followed by `time_hours,i,j` rows.
inline std::string events_to_csv(const EventStream& s) {
  std::string out = "# n_nodes=" + std::to_string(s.n_nodes()) +
                    " horizon=" + format_double(s.horizon()) +
                    " directed=" + (s.directed() ? "1" : "0") + "\ntime_hours,i,j\n";
  for (const Event& e : s.events()) {
    out += format_double(e.time) + "," + std::to_string(e.i) + "," + std::to_string(e.j) + "\n";
  }
  return out;
}

inline EventStream events_from_csv(const std::string& text, const std::string& name = "events") {
  std::istringstream in(text);
  std::string line;
  std::optional<int> n_nodes;
  std::optional<double> horizon;
  bool directed = false;
  bool header = false;
  std::vector<Event> events;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string ctx = name + ":" + std::to_string(lineno);
    if (line.empty() || line == "\r") continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = kv.substr(0, eq);
        const std::string val = kv.substr(eq + 1);
        if (key == "n_nodes") n_nodes = static_cast<int>(parse_int(val, ctx));
        if (key == "horizon") horizon = parse_double(val, ctx);
        if (key == "directed") directed = parse_int(val, ctx) != 0;
      }
      continue;
    }
    const auto f = split_csv_line(line);
    if (!header) {
      header = true;
      if (f.size() != 3 || f[0] != "time_hours" || f[1] != "i" || f[2] != "j") {
        fail(ErrorCode::InvalidData, ctx + ": expected header 'time_hours,i,j'");
      }
      continue;
    }
    if (f.size() != 3) fail(ErrorCode::InvalidData, ctx + ": expected 3 fields");
    events.push_back({parse_double(f[0], ctx), static_cast<NodeId>(parse_int(f[1], ctx)),
                      static_cast<NodeId>(parse_int(f[2], ctx))});
  }
  if (!n_nodes) {
    int m = 2;
    for (const Event& e : events) m = std::max({m, static_cast<int>(e.i), static_cast<int>(e.j)});
    n_nodes = m;
  }
  if (!horizon) {
    double t = 0.0;
    for (const Event& e : events) t = std::max(t, e.time);
    horizon = t > 0.0 ? t : 1.0;
  }
  return EventStream(*n_nodes, *horizon, directed, std::move(events));
}

// ---------------------------------------------------------------- panel JSON

inline json panel_to_json(const Panel& p) {
  json j;
  j["n_nodes"] = p.n_nodes();
  j["n_cells"] = p.n_cells();
  j["q"] = p.q();
  j["directed"] = p.directed();
  j["cell_times"] = p.cell_times();
  j["cell_exposure"] = p.cell_exposure();
  if (!p.cell_edges().empty()) j["cell_edges"] = p.cell_edges();
  j["column_names"] = p.column_names();
  json recs = json::array();
  for (std::size_t c = 0; c < p.n_cells(); ++c) {
    const CellBlock& b = p.cell(c);
    for (std::size_t r = 0; r < b.size(); ++r) {
      const auto x = b.row(r, p.q());
      recs.push_back({{"cell", c},
                      {"i", b.pairs[r].i},
                      {"j", b.pairs[r].j},
                      {"count", b.counts[r]},
                      {"censor", b.censor[r] != 0},
                      {"x", std::vector<double>(x.begin(), x.end())}});
    }
  }
  j["records"] = std::move(recs);
  return j;
}

inline Panel panel_from_json(const json& j) {
  try {
    Panel p(j.at("n_nodes").get<int>(), j.at("n_cells").get<std::size_t>(), j.at("q").get<int>(),
            j.value("directed", false));
    if (j.contains("cell_times")) p.set_cell_times(j["cell_times"].get<std::vector<double>>());
    if (j.contains("cell_exposure")) {
      p.set_cell_exposure(j["cell_exposure"].get<std::vector<double>>());
    }
    if (j.contains("cell_edges")) p.set_cell_edges(j["cell_edges"].get<std::vector<double>>());
    if (j.contains("column_names") && !j["column_names"].empty()) {
      p.set_column_names(j["column_names"].get<std::vector<std::string>>());
    }
    std::size_t k = 0;
    for (const auto& r : j.at("records")) {
      const auto x = r.at("x").get<std::vector<double>>();
      const json& cen = r.at("censor");
      const bool censor = cen.is_boolean() ? cen.get<bool>() : cen.get<int>() != 0;
      try {
        p.add_record(r.at("cell").get<std::size_t>(),
                     {r.at("i").get<NodeId>(), r.at("j").get<NodeId>()},
                     r.at("count").get<std::int64_t>(), censor, x);
      } catch (const Error& e) {
        fail(e.code(), "records[" + std::to_string(k) + "]: " + e.what());
      }
      ++k;
    }
    p.validate();
    return p;
  } catch (const json::exception& e) {
    fail(ErrorCode::InvalidData, std::string("panel JSON: ") + e.what());
  }
}

inline json parse_json(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidData, name + ": " + e.what());
  }
}

// ---------------------------------------------------------------- fits

inline std::string curve_to_csv(const CurveFit& cf, int q) {
  std::string out = "t0";
  for (int a = 1; a <= q; ++a) out += ",theta_" + std::to_string(a);
  for (int a = 1; a <= q; ++a) out += ",se_" + std::to_string(a);
  out += ",active_size,converged,status\n";
  for (const FitOutcome& f : cf.fits) {
    out += format_double(f.t0);
    if (f.fit) {
      for (int a = 0; a < q; ++a) out += "," + format_double(f.fit->theta_hat(a));
      for (int a = 0; a < q; ++a) out += "," + format_double(f.fit->std_errors(a));
      out += "," + std::to_string(f.fit->active_size) + "," +
             (f.fit->solver.converged ? "1" : "0") + ",ok\n";
    } else {
      for (int a = 0; a < 2 * q; ++a) out += ",nan";
      out += ",0,0," + std::string(to_string(f.error->code())) + "\n";
    }
  }
  return out;
}

struct FitRow {
  double t0 = 0.0;
  Eigen::VectorXd theta;
  Eigen::VectorXd se;
  bool ok = false;
};

inline std::vector<FitRow> curve_from_csv(const std::string& text, const std::string& name) {
  std::istringstream in(text);
  std::string line;
  std::vector<FitRow> rows;
  int q = -1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string ctx = name + ":" + std::to_string(lineno);
    const auto f = split_csv_line(line);
    if (q < 0) {
      require(f.size() >= 6 && f[0] == "t0", ctx + ": not a fit CSV header");
      q = static_cast<int>((f.size() - 4) / 2);
      continue;
    }
    require(f.size() == static_cast<std::size_t>(2 * q + 4), ctx + ": wrong field count");
    FitRow r;
    r.t0 = parse_double(f[0], ctx);
    r.theta.resize(q);
    r.se.resize(q);
    for (int a = 0; a < q; ++a) {
      r.theta(a) = parse_double(f[1 + a], ctx);
      r.se(a) = parse_double(f[1 + q + a], ctx);
    }
    r.ok = f.back() == "ok";
    rows.push_back(std::move(r));
  }
  return rows;
}

inline json fit_to_json(const CurveFit& cf, double confidence_level) {
  json out = json::array();
  for (const FitOutcome& f : cf.fits) {
    json j{{"t0", f.t0}, {"cell", f.cell}};
    if (f.fit) {
      const FitResult& r = *f.fit;
      const ConfidenceBand band = confidence_band(r, confidence_level);
      std::vector<std::vector<double>> cov(static_cast<std::size_t>(r.covariance.rows()));
      for (Eigen::Index a = 0; a < r.covariance.rows(); ++a)
        for (Eigen::Index b = 0; b < r.covariance.cols(); ++b) cov[a].push_back(r.covariance(a, b));
      j["theta"] = std::vector<double>(r.theta_hat.begin(), r.theta_hat.end());
      j["se"] = std::vector<double>(r.std_errors.begin(), r.std_errors.end());
      j["covariance"] = cov;
      j["band"] = {{"level", confidence_level},
                   {"lower", std::vector<double>(band.lower.begin(), band.lower.end())},
                   {"upper", std::vector<double>(band.upper.begin(), band.upper.end())}};
      j["active_size"] = r.active_size;
      j["effective_scale"] = r.effective_scale;
      j["boundary_warning"] = r.boundary_warning;
      j["solver"] = {{"iterations", r.solver.iterations},
                     {"grad_norm", r.solver.grad_norm},
                     {"tolerance", r.solver.tolerance},
                     {"converged", r.solver.converged}};
      if (r.solver.kantorovich_r) j["solver"]["kantorovich_r"] = *r.solver.kantorovich_r;
    } else {
      j["error"] = {{"code", to_string(f.error->code())}, {"message", f.error->what()}};
      if (!f.error->direction().empty()) j["error"]["direction"] = f.error->direction();
    }
    out.push_back(std::move(j));
  }
  return out;
}

// ---------------------------------------------------------------- reports

inline json study_to_json(const StudyReport& r) {
  json coords = json::array();
  for (const CoordinateSummary& c : r.coordinates) {
    coords.push_back({{"coverage_90", c.coverage_90},
                      {"coverage_95", c.coverage_95},
                      {"coverage_99", c.coverage_99},
                      {"mean_z", c.mean_z},
                      {"var_z", c.var_z},
                      {"ad_stat", c.ad_stat},
                      {"whitened_mean", c.whitened_mean},
                      {"whitened_var", c.whitened_var},
                      {"whitened_ad", c.whitened_ad},
                      {"bias", c.bias},
                      {"rmse", c.rmse},
                      {"mean_se", c.mean_se},
                      {"empirical_sd", c.empirical_sd},
                      {"n_excluded", r.n_excluded}});
  }
  return {{"n_reps", r.n_reps},
          {"n_used", r.n_used},
          {"n_excluded", r.n_excluded},
          {"exclusions", r.exclusions},
          {"theta0", std::vector<double>(r.theta0.begin(), r.theta0.end())},
          {"coordinates", coords}};
}

inline std::string quantile_key(double p) {
  const double pct = 100.0 * p;
  if (std::abs(pct - std::round(pct)) < 1e-9) return "q" + std::to_string(std::lround(pct));
  return "q" + format_double(pct);
}

inline json gof_to_json(const GofReport& g) {
  json regimes = json::array();
  for (const RegimeReport& rr : g.regimes) {
    json bands = json::array();
    for (const DegreeBand& b : rr.degree_bands) {
      json jb{{"degree", b.degree}, {"observed", b.observed}};
      for (std::size_t k = 0; k < b.quantiles.size(); ++k) {
        jb[quantile_key(g.quantile_levels[k])] = b.quantiles[k];
      }
      bands.push_back(std::move(jb));
    }
    json l2 = rr.regime.l2 ? json(*rr.regime.l2) : json(nullptr);
    regimes.push_back(
        {{"regime", {{"l1", rr.regime.l1}, {"l2", l2}, {"label", rr.regime.label()}}},
         {"degree_bands", bands},
         {"clustering",
          {{"hist", rr.clustering_hist},
           {"observed", rr.clustering_observed},
           {"observed_undefined", rr.clustering_observed_undefined},
           {"undefined_fraction", rr.clustering_undefined_fraction}}},
         {"diameter",
          {{"hist", rr.diameter_hist},
           {"observed", rr.diameter_observed},
           {"observed_disconnected", rr.diameter_observed_disconnected},
           {"disconnected_fraction", rr.disconnected_fraction}}}});
  }
  return {{"cell", g.cell},
          {"n_sims", g.n_sims},
          {"quantiles", g.quantile_levels},
          {"regimes", regimes}};
}

inline json cv_to_json(const CvResult& r) {
  json errs = json::array();
  for (const CvError& e : r.errors) {
    errs.push_back({{"h", e.h},
                    {"err", e.err ? json(*e.err) : json(nullptr)},
                    {"cells_scored", e.cells_scored},
                    {"cells_skipped", e.cells_skipped},
                    {"skip_reasons", e.skip_reasons}});
  }
  return {{"errors", errs},
          {"h_l", r.h_l},
          {"factor", r.factor},
          {"h_k_unrounded", r.h_k_raw},
          {"h_k", r.h_k},
          {"rounding", r.rounding == Rounding::Floor ? "floor" : "nearest"}};
}

// ---------------------------------------------------------------- trips

struct TripColumns {
  std::string start_time = "start_time";
  std::string end_time = "end_time";
  std::string start_station = "start_station";
  std::string end_station = "end_station";
};

struct Reject {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  EventStream events;
  std::vector<std::string> stations;  // stations[k] is the original id of node k + 1
  std::string epoch;                  // ISO date of hour 0
  std::size_t n_rows = 0;
  std::size_t n_multi_day = 0;
  std::size_t n_round_trips = 0;
  std::size_t n_malformed = 0;
  std::vector<Reject> rejects;
};

struct CivilTime {
  std::chrono::sys_days date;
  int seconds = 0;  // since midnight
};

/// Accepts "YYYY-MM-DD HH:MM[:SS]" (also with 'T') and "M/D/YYYY H:MM[:SS]".
inline std::optional<CivilTime> parse_timestamp(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  const auto sep = s.find_first_of(" T");
  if (sep == std::string_view::npos) return std::nullopt;
  const std::string_view date = s.substr(0, sep);
  std::string_view clock = s.substr(sep + 1);
  while (!clock.empty() && clock.front() == ' ') clock.remove_prefix(1);

  auto split = [](std::string_view v, char c) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t k = 0; k <= v.size(); ++k) {
      if (k == v.size() || v[k] == c) {
        parts.push_back(v.substr(start, k - start));
        start = k + 1;
      }
    }
    return parts;
  };
  auto num = [](std::string_view v, int& out) {
    if (v.empty()) return false;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    return ec == std::errc{} && p == v.data() + v.size();
  };

  int y = 0, m = 0, d = 0;
  if (date.find('-') != std::string_view::npos) {
    const auto p = split(date, '-');
    if (p.size() != 3 || !num(p[0], y) || !num(p[1], m) || !num(p[2], d)) return std::nullopt;
  } else {
    const auto p = split(date, '/');
    if (p.size() != 3 || !num(p[0], m) || !num(p[1], d) || !num(p[2], y)) return std::nullopt;
  }
  const auto t = split(clock, ':');
  int hh = 0, mm = 0, ss = 0;
  if (t.size() < 2 || t.size() > 3 || !num(t[0], hh) || !num(t[1], mm)) return std::nullopt;
  if (t.size() == 3) {
    // Fractional seconds are truncated.
    const auto dot = t[2].find('.');
    if (!num(t[2].substr(0, dot), ss)) return std::nullopt;
  }
  if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return CivilTime{std::chrono::sys_days{ymd}, hh * 3600 + mm * 60 + ss};
}

inline std::string iso_date(std::chrono::sys_days d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/**
 * Trips CSV -> undirected event stream in hours since the epoch, which is
 * midnight of the anchor weekday on or before the first trip date. Trips
 * spanning two calendar days and round trips are dropped; malformed rows
 * are collected as rejects. Station ids become nodes 1..n in sorted order
 * (numeric order when every id is an integer). A trip starting exactly at
 * midnight is stamped one second later so it falls inside its own day.
 */
inline IngestResult ingest_trips(const std::string& text, const TripColumns& cols,
                                 int anchor_weekday = 5) {
  require(anchor_weekday >= 1 && anchor_weekday <= 7, "anchor_weekday must be in 1..7");
  std::istringstream in(text);
  std::string line;
  IngestResult res;
  std::size_t lineno = 0;
  int c_st = -1, c_et = -1, c_ss = -1, c_es = -1;
  std::size_t n_fields = 0;
  struct Trip {
    CivilTime start;
    std::string a, b;
  };
  std::vector<Trip> trips;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (c_st < 0) {
      for (std::size_t k = 0; k < f.size(); ++k) {
        if (f[k] == cols.start_time) c_st = static_cast<int>(k);
        if (f[k] == cols.end_time) c_et = static_cast<int>(k);
        if (f[k] == cols.start_station) c_ss = static_cast<int>(k);
        if (f[k] == cols.end_station) c_es = static_cast<int>(k);
      }
      if (c_st < 0 || c_et < 0 || c_ss < 0 || c_es < 0) {
        fail(ErrorCode::InvalidData, "trips:" + std::to_string(lineno) +
                                         ": header lacks one of the configured columns '" +
                                         cols.start_time + "', '" + cols.end_time + "', '" +
                                         cols.start_station + "', '" + cols.end_station + "'");
      }
      n_fields = f.size();
      continue;
    }
    ++res.n_rows;
    auto reject = [&](std::string why) {
      ++res.n_malformed;
      res.rejects.push_back({lineno, std::move(why)});
    };
    if (f.size() != n_fields) {
      reject("expected " + std::to_string(n_fields) + " fields, got " + std::to_string(f.size()));
      continue;
    }
    const auto st = parse_timestamp(f[c_st]);
    const auto et = parse_timestamp(f[c_et]);
    if (!st || !et) {
      reject("unparseable timestamp");
      continue;
    }
    if (f[c_ss].empty() || f[c_es].empty()) {
      reject("missing station id");
      continue;
    }
    if (et->date < st->date || (et->date == st->date && et->seconds < st->seconds)) {
      reject("end_time before start_time");
      continue;
    }
    if (et->date != st->date) {
      ++res.n_multi_day;
      continue;
    }
    if (f[c_ss] == f[c_es]) {
      ++res.n_round_trips;
      res.rejects.push_back({lineno, "round trip"});
      continue;
    }
    trips.push_back({*st, f[c_ss], f[c_es]});
  }
  if (c_st < 0) fail(ErrorCode::InvalidData, "trips: missing header row");
  if (trips.empty()) fail(ErrorCode::InvalidData, "trips: no usable trip records");

  // Dense station ids.
  std::vector<std::string> ids;
  for (const Trip& t : trips) {
    ids.push_back(t.a);
    ids.push_back(t.b);
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const bool numeric = std::all_of(ids.begin(), ids.end(), [](const std::string& s) {
    std::int64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && p == s.data() + s.size();
  });
  if (numeric) {
    std::sort(ids.begin(), ids.end(), [](const std::string& a, const std::string& b) {
      return std::stoll(a) < std::stoll(b);
    });
  }
  require(ids.size() >= 2, "trips: fewer than two distinct stations");
  std::map<std::string, NodeId> index;
  for (std::size_t k = 0; k < ids.size(); ++k) index[ids[k]] = static_cast<NodeId>(k + 1);

  using namespace std::chrono;
  sys_days first = trips.front().start.date;
  sys_days last = first;
  for (const Trip& t : trips) {
    first = std::min(first, t.start.date);
    last = std::max(last, t.start.date);
  }
  const int wd = static_cast<int>(weekday{first}.iso_encoding());
  const sys_days epoch = first - days{(wd - anchor_weekday + 7) % 7};

  std::vector<Event> events;
  events.reserve(trips.size());
  for (const Trip& t : trips) {
    const double day = static_cast<double>((t.start.date - epoch).count());
    const int sec = t.start.seconds == 0 ? 1 : t.start.seconds;
    events.push_back({24.0 * day + static_cast<double>(sec) / 3600.0, index[t.a], index[t.b]});
  }
  const double horizon = 24.0 * static_cast<double>((last - epoch).count() + 1);
  res.events = EventStream(static_cast<int>(ids.size()), horizon, false, std::move(events));
  res.stations = std::move(ids);
  res.epoch = iso_date(epoch);
  return res;
}

inline std::string stations_to_csv(const std::vector<std::string>& stations) {
  std::string out = "node,station\n";
  for (std::size_t k = 0; k < stations.size(); ++k) {
    std::string id = stations[k];
    if (id.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : id) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      id = q + "\"";
    }
    out += std::to_string(k + 1) + "," + id + "\n";
  }
  return out;
}

inline json ingest_report(const IngestResult& r) {
  json rej = json::array();
  for (const Reject& x : r.rejects) rej.push_back({{"line", x.line}, {"reason", x.reason}});
  return {{"rows", r.n_rows},
          {"events", r.events.size()},
          {"stations", r.stations.size()},
          {"epoch", r.epoch},
          {"horizon_hours", r.events.horizon()},
          {"dropped_multi_day", r.n_multi_day},
          {"dropped_round_trips", r.n_round_trips},
          {"malformed", r.n_malformed},
          {"rejects", rej}};
}

}  // namespace netcox::io
