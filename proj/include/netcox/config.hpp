#pragma once

// Run configuration and simulation design files (JSON). Unknown keys are
// rejected with the offending path so typos do not pass silently.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "netcox/bandwidth.hpp"
#include "netcox/error.hpp"
#include "netcox/estimator.hpp"
#include "netcox/features.hpp"
#include "netcox/io.hpp"
#include "netcox/kernel.hpp"
#include "netcox/netstats.hpp"
#include "netcox/simulator.hpp"

namespace netcox::config {

using json = nlohmann::ordered_json;

[[noreturn]] inline void config_error(const std::string& path, const std::string& msg) {
  fail(ErrorCode::InvalidArgument, "config " + path + ": " + msg);
}

inline void check_keys(const json& j, const std::string& path, std::set<std::string> allowed) {
  if (!j.is_object()) config_error(path, "expected an object");
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) config_error(path + "." + k, "unknown key");
  }
}

template <class T>
T get_as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error(path, "wrong type");
  }
}

/// "1..52", "1,2,5" or "1..10,20,30..32".
inline std::vector<int> parse_candidates(const std::string& text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    if (!item.empty()) {
      const auto dots = item.find("..");
      const std::string ctx = "candidates '" + text + "'";
      if (dots == std::string::npos) {
        out.push_back(static_cast<int>(io::parse_int(item, ctx)));
      } else {
        const auto lo = io::parse_int(item.substr(0, dots), ctx);
        const auto hi = io::parse_int(item.substr(dots + 2), ctx);
        if (hi < lo) fail(ErrorCode::InvalidArgument, ctx + ": empty range");
        for (auto h = lo; h <= hi; ++h) out.push_back(static_cast<int>(h));
      }
    }
    start = end + 1;
  }
  return out;
}

inline int parse_weekday(const json& j, const std::string& path) {
  if (j.is_number_integer()) {
    const int v = j.get<int>();
    if (v < 1 || v > 7) config_error(path, "weekday number must be in 1..7 (Monday = 1)");
    return v;
  }
  static const std::map<std::string, int> names{{"monday", 1},   {"tuesday", 2}, {"wednesday", 3},
                                                {"thursday", 4}, {"friday", 5},  {"saturday", 6},
                                                {"sunday", 7}};
  std::string s = get_as<std::string>(j, path);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  const auto it = names.find(s);
  if (it == names.end()) config_error(path, "unknown weekday '" + s + "'");
  return it->second;
}

inline ThetaBox parse_theta_box(const json& j, int q, const std::string& path) {
  check_keys(j, path, {"lo", "hi"});
  auto side = [&](const char* key, double def) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(q, def);
    if (!j.contains(key)) return v;
    const json& s = j[key];
    const std::string p = path + "." + key;
    if (s.is_number()) return Eigen::VectorXd::Constant(q, s.get<double>()).eval();
    const auto vals = get_as<std::vector<double>>(s, p);
    if (static_cast<int>(vals.size()) != q) config_error(p, "length must equal q");
    for (int a = 0; a < q; ++a) v(a) = vals[static_cast<std::size_t>(a)];
    return v;
  };
  ThetaBox box{side("lo", -20.0), side("hi", 20.0)};
  try {
    box.validate();
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  return box;
}

struct RunConfig {
  Kernel kernel = Kernel::triangular();
  std::optional<double> bandwidth;
  bool bandwidth_auto = false;
  std::vector<int> candidates;
  Rounding rounding = Rounding::Nearest;
  FeatureSpec features;
  std::vector<double> eval_times;
  std::vector<std::size_t> eval_cells;
  std::vector<FrequencyRegime> regimes = default_regimes();
  std::size_t n_sims = 3840;
  std::vector<double> quantiles{0.1, 0.9};
  std::uint64_t seed = 1;
  json theta_box;  // resolved once q is known
  double confidence_level = 0.95;
  SolverConfig solver;
  io::TripColumns trips;
  std::optional<std::size_t> target_cell;
  std::size_t n_reps = 400;
  std::map<std::string, std::string> paths;

  ThetaBox box(int q) const {
    return theta_box.is_null() ? ThetaBox::uniform(q) : parse_theta_box(theta_box, q, "theta_box");
  }

  std::vector<int> candidate_set() const {
    if (!candidates.empty()) return candidates;
    std::vector<int> all(52);
    for (int h = 1; h <= 52; ++h) all[static_cast<std::size_t>(h - 1)] = h;
    return all;
  }
};

inline RunConfig parse_run_config(const json& j) {
  RunConfig c;
  if (j.is_null()) return c;
  check_keys(j, "", {"kernel", "bandwidth", "candidates", "rounding", "features", "eval_times",
                     "eval_cells", "regimes", "n_sims", "quantiles", "seed", "theta_box",
                     "confidence_level", "solver", "trips", "target_cell", "n_reps", "paths"});
  if (j.contains("kernel")) {
    try {
      c.kernel = parse_kernel(get_as<std::string>(j["kernel"], "kernel"));
    } catch (const Error& e) {
      config_error("kernel", e.what());
    }
  }
  if (j.contains("bandwidth")) {
    const json& b = j["bandwidth"];
    if (b.is_string()) {
      if (b.get<std::string>() != "auto") config_error("bandwidth", "expected a number or \"auto\"");
      c.bandwidth_auto = true;
    } else {
      c.bandwidth = get_as<double>(b, "bandwidth");
      if (!(*c.bandwidth > 0.0)) config_error("bandwidth", "must be positive");
    }
  }
  if (j.contains("candidates")) {
    const json& v = j["candidates"];
    c.candidates = v.is_string() ? parse_candidates(v.get<std::string>())
                                 : get_as<std::vector<int>>(v, "candidates");
    if (c.candidates.empty()) config_error("candidates", "candidate set is empty");
    for (int h : c.candidates)
      if (h < 1) config_error("candidates", "candidates must be integers >= 1");
  }
  if (j.contains("rounding")) {
    const auto r = get_as<std::string>(j["rounding"], "rounding");
    if (r == "nearest") {
      c.rounding = Rounding::Nearest;
    } else if (r == "floor") {
      c.rounding = Rounding::Floor;
    } else {
      config_error("rounding", "expected \"nearest\" or \"floor\"");
    }
  }
  if (j.contains("features")) {
    const json& f = j["features"];
    check_keys(f, "features", {"r", "lookback_weeks", "anchor_weekday", "weekday_first",
                               "weekday_last", "columns"});
    if (f.contains("r")) c.features.r = get_as<double>(f["r"], "features.r");
    if (f.contains("lookback_weeks")) {
      c.features.lookback_weeks = get_as<int>(f["lookback_weeks"], "features.lookback_weeks");
    }
    if (f.contains("anchor_weekday")) {
      c.features.anchor_weekday = parse_weekday(f["anchor_weekday"], "features.anchor_weekday");
    }
    if (f.contains("weekday_first")) {
      c.features.weekday_first = get_as<int>(f["weekday_first"], "features.weekday_first");
    }
    if (f.contains("weekday_last")) {
      c.features.weekday_last = get_as<int>(f["weekday_last"], "features.weekday_last");
    }
    if (f.contains("columns")) {
      c.features.columns.fill(false);
      for (const auto& name : get_as<std::vector<std::string>>(f["columns"], "features.columns")) {
        const auto it = std::find(kFeatureColumnNames.begin(), kFeatureColumnNames.end(), name);
        if (it == kFeatureColumnNames.end()) {
          config_error("features.columns", "unknown column '" + name + "'");
        }
        c.features.columns[static_cast<std::size_t>(it - kFeatureColumnNames.begin())] = true;
      }
    }
    try {
      c.features.validate();
    } catch (const Error& e) {
      config_error("features", e.what());
    }
  }
  if (j.contains("eval_times")) c.eval_times = get_as<std::vector<double>>(j["eval_times"], "eval_times");
  if (j.contains("eval_cells")) {
    c.eval_cells = get_as<std::vector<std::size_t>>(j["eval_cells"], "eval_cells");
  }
  if (j.contains("regimes")) {
    c.regimes.clear();
    std::size_t k = 0;
    for (const auto& r : j["regimes"]) {
      const std::string p = "regimes[" + std::to_string(k++) + "]";
      if (!r.is_array() || r.size() != 2) config_error(p, "expected [l1, l2] with l2 null for infinity");
      FrequencyRegime reg;
      reg.l1 = get_as<std::int64_t>(r[0], p);
      if (!r[1].is_null()) reg.l2 = get_as<std::int64_t>(r[1], p);
      try {
        reg.validate();
      } catch (const Error& e) {
        config_error(p, e.what());
      }
      c.regimes.push_back(reg);
    }
    if (c.regimes.empty()) config_error("regimes", "at least one regime is required");
  }
  if (j.contains("n_sims")) c.n_sims = get_as<std::size_t>(j["n_sims"], "n_sims");
  if (j.contains("quantiles")) c.quantiles = get_as<std::vector<double>>(j["quantiles"], "quantiles");
  for (double p : c.quantiles)
    if (!(p > 0.0 && p < 1.0)) config_error("quantiles", "levels must lie in (0, 1)");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("theta_box")) {
    c.theta_box = j["theta_box"];
    check_keys(c.theta_box, "theta_box", {"lo", "hi"});
  }
  if (j.contains("confidence_level")) {
    c.confidence_level = get_as<double>(j["confidence_level"], "confidence_level");
    if (!(c.confidence_level >= 0.0 && c.confidence_level < 1.0)) {
      config_error("confidence_level", "must be in [0, 1)");
    }
  }
  if (j.contains("solver")) {
    const json& s = j["solver"];
    check_keys(s, "solver", {"grad_tol", "max_iter", "step_halving_max", "ridge_floor", "warm_start"});
    if (s.contains("grad_tol")) c.solver.grad_tol = get_as<double>(s["grad_tol"], "solver.grad_tol");
    if (s.contains("max_iter")) c.solver.max_iter = get_as<int>(s["max_iter"], "solver.max_iter");
    if (s.contains("step_halving_max")) {
      c.solver.step_halving_max = get_as<int>(s["step_halving_max"], "solver.step_halving_max");
    }
    if (s.contains("ridge_floor")) {
      c.solver.ridge_floor = get_as<double>(s["ridge_floor"], "solver.ridge_floor");
    }
    if (s.contains("warm_start")) c.solver.warm_start = get_as<bool>(s["warm_start"], "solver.warm_start");
    try {
      c.solver.validate();
    } catch (const Error& e) {
      config_error("solver", e.what());
    }
  }
  if (j.contains("trips")) {
    const json& t = j["trips"];
    check_keys(t, "trips", {"start_time", "end_time", "start_station", "end_station"});
    if (t.contains("start_time")) c.trips.start_time = get_as<std::string>(t["start_time"], "trips.start_time");
    if (t.contains("end_time")) c.trips.end_time = get_as<std::string>(t["end_time"], "trips.end_time");
    if (t.contains("start_station")) {
      c.trips.start_station = get_as<std::string>(t["start_station"], "trips.start_station");
    }
    if (t.contains("end_station")) {
      c.trips.end_station = get_as<std::string>(t["end_station"], "trips.end_station");
    }
  }
  if (j.contains("target_cell")) c.target_cell = get_as<std::size_t>(j["target_cell"], "target_cell");
  if (j.contains("n_reps")) c.n_reps = get_as<std::size_t>(j["n_reps"], "n_reps");
  if (j.contains("paths")) {
    const json& p = j["paths"];
    check_keys(p, "paths", {"trips", "events", "stations", "panel", "fit", "design", "out"});
    for (const auto& [k, v] : p.items()) c.paths[k] = get_as<std::string>(v, "paths." + k);
  }
  return c;
}

/**
 * Design file:
 *   {"n_nodes", "directed", "n_cells", "cell_length",
 *    "theta0": [...] | "curve": {"times": [...], "values": [[...], ...]},
 *    "covariates": [{"kind": "intercept"|"bernoulli"|"uniform"|"normal", ...}],
 *    "censor": {"kind": "constant"|"bernoulli"|"replay", "p"},
 *    "method": "auto"|"per_piece"|"thinning", "bound": "per_piece"|"global"}
 * Replay designs take their covariates and selectors from a panel supplied
 * separately.
 */
inline SimDesign parse_design(const json& j, std::optional<Panel> replay = std::nullopt) {
  check_keys(j, "design", {"n_nodes", "directed", "n_cells", "cell_length", "theta0", "curve",
                           "covariates", "censor", "method", "bound", "replay_covariates"});
  SimDesign d;
  auto need = [&](const char* key) -> const json& {
    if (!j.contains(key)) config_error(std::string("design.") + key, "missing");
    return j[key];
  };
  d.n_nodes = get_as<int>(need("n_nodes"), "design.n_nodes");
  d.directed = j.value("directed", false);
  d.n_cells = get_as<std::size_t>(need("n_cells"), "design.n_cells");
  if (j.contains("cell_length")) d.cell_length = get_as<double>(j["cell_length"], "design.cell_length");

  if (j.contains("covariates")) {
    d.covariates.clear();
    std::size_t k = 0;
    for (const auto& c : j["covariates"]) {
      const std::string p = "design.covariates[" + std::to_string(k++) + "]";
      check_keys(c, p, {"kind", "p", "lo", "hi", "mean", "sd"});
      const auto kind = get_as<std::string>(c.at("kind"), p + ".kind");
      if (kind == "intercept") {
        d.covariates.push_back(CovariateRule::intercept());
      } else if (kind == "bernoulli") {
        d.covariates.push_back(CovariateRule::bernoulli(c.value("p", 0.5)));
      } else if (kind == "uniform") {
        d.covariates.push_back(CovariateRule::uniform(c.value("lo", 0.0), c.value("hi", 1.0)));
      } else if (kind == "normal") {
        d.covariates.push_back(CovariateRule::normal(c.value("mean", 0.0), c.value("sd", 1.0)));
      } else {
        config_error(p + ".kind", "unknown covariate kind '" + kind + "'");
      }
    }
  }
  if (j.contains("censor")) {
    const json& c = j["censor"];
    check_keys(c, "design.censor", {"kind", "p"});
    const auto kind = get_as<std::string>(c.at("kind"), "design.censor.kind");
    if (kind == "constant") {
      d.censor.kind = CensorRule::Kind::Constant;
    } else if (kind == "bernoulli") {
      d.censor.kind = CensorRule::Kind::Bernoulli;
      d.censor.p = c.value("p", 1.0);
    } else if (kind == "replay") {
      d.censor.kind = CensorRule::Kind::Replay;
    } else {
      config_error("design.censor.kind", "unknown censor kind '" + kind + "'");
    }
  }
  d.replay_covariates = j.value("replay_covariates", false);
  if (d.replay_covariates || d.censor.kind == CensorRule::Kind::Replay) {
    if (!replay) config_error("design", "replay requested but no replay panel given");
    d.replay = std::move(replay);
  }

  const int q = d.q();
  if (j.contains("theta0")) {
    const auto th = get_as<std::vector<double>>(j["theta0"], "design.theta0");
    if (static_cast<int>(th.size()) != q) config_error("design.theta0", "length must equal q");
    d.true_curve = ParameterCurve::constant(Eigen::Map<const Eigen::VectorXd>(th.data(), q));
  } else if (j.contains("curve")) {
    const json& c = j["curve"];
    check_keys(c, "design.curve", {"times", "values"});
    d.true_curve.eval_times = get_as<std::vector<double>>(c.at("times"), "design.curve.times");
    const auto vals = get_as<std::vector<std::vector<double>>>(c.at("values"), "design.curve.values");
    if (vals.size() != d.true_curve.eval_times.size() || vals.empty()) {
      config_error("design.curve", "times and values must have equal nonzero length");
    }
    for (const auto& v : vals) {
      if (static_cast<int>(v.size()) != q) config_error("design.curve.values", "length must equal q");
      d.true_curve.values.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), q));
    }
    if (!std::is_sorted(d.true_curve.eval_times.begin(), d.true_curve.eval_times.end())) {
      config_error("design.curve.times", "must be increasing");
    }
  } else {
    config_error("design", "one of theta0 or curve is required");
  }

  if (j.contains("method")) {
    const auto m = get_as<std::string>(j["method"], "design.method");
    if (m == "auto") {
      d.method = SimMethod::Auto;
    } else if (m == "per_piece") {
      d.method = SimMethod::PerPiece;
    } else if (m == "thinning") {
      d.method = SimMethod::Thinning;
    } else {
      config_error("design.method", "unknown method '" + m + "'");
    }
  }
  if (j.contains("bound")) {
    const auto b = get_as<std::string>(j["bound"], "design.bound");
    if (b == "per_piece") {
      d.bound = ThinningBound::PerPiece;
    } else if (b == "global") {
      d.bound = ThinningBound::Global;
    } else {
      config_error("design.bound", "unknown bound '" + b + "'");
    }
  }
  try {
    d.validate();
  } catch (const Error& e) {
    config_error("design", e.what());
  }
  return d;
}

}  // namespace netcox::config
