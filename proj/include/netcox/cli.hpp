#pragma once

// Command-line front end: ingest | features | fit | bandwidth | simulate |
// gof | mc-validate. Paths default to "-" (stdin/stdout) where that makes
// the commands composable in a pipe. Failures print {"error": {...}} on
// stderr; exit code 2 for usage/configuration errors, 1 otherwise.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "netcox/bandwidth.hpp"
#include "netcox/config.hpp"
#include "netcox/error.hpp"
#include "netcox/estimator.hpp"
#include "netcox/features.hpp"
#include "netcox/io.hpp"
#include "netcox/netstats.hpp"
#include "netcox/simulator.hpp"

namespace netcox::cli {

using json = nlohmann::ordered_json;

namespace detail {

inline config::RunConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return config::parse_run_config(io::parse_json(io::read_text(path), path));
}

inline std::string pick(const std::string& flag, const config::RunConfig& cfg, const char* key,
                        const std::string& fallback) {
  if (!flag.empty()) return flag;
  const auto it = cfg.paths.find(key);
  return it != cfg.paths.end() ? it->second : fallback;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  for (const auto& f : io::split_csv_line(text)) {
    if (!f.empty()) out.push_back(io::parse_double(f, what));
  }
  return out;
}

// Evaluation times: configured cells, configured times, or every cell with
// uncensored pairs.
inline std::vector<double> eval_times(const Panel& panel, const config::RunConfig& cfg) {
  std::vector<double> out;
  for (std::size_t c : cfg.eval_cells) {
    if (c >= panel.n_cells()) {
      fail(ErrorCode::InvalidArgument, "eval_cells entry " + std::to_string(c) + " out of range");
    }
    out.push_back(panel.cell_times()[c]);
  }
  out.insert(out.end(), cfg.eval_times.begin(), cfg.eval_times.end());
  if (out.empty()) {
    for (std::size_t c = 0; c < panel.n_cells(); ++c)
      if (panel.active_size(c) > 0) out.push_back(panel.cell_times()[c]);
  }
  return out;
}

}  // namespace detail

inline int run(int argc, char** argv) {
  CLI::App app{"netcox: local likelihood for time-varying Cox-type network event models"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "run configuration (JSON)");
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "random seed (overrides config)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "trip records CSV -> events CSV");
  std::string trips_path, events_out, stations_out, report_out;
  ingest->add_option("--trips", trips_path, "trip records CSV");
  ingest->add_option("--out", events_out, "events CSV (default stdout)");
  ingest->add_option("--stations", stations_out, "station id mapping CSV");
  ingest->add_option("--report", report_out, "ingestion report JSON");

  // features
  auto* features = app.add_subcommand("features", "events CSV -> weekly covariate panel JSON");
  std::string events_in, panel_out;
  features->add_option("--events", events_in, "events CSV (default stdin)");
  features->add_option("--out", panel_out, "panel JSON (default stdout)");

  // fit
  auto* fit = app.add_subcommand("fit", "panel JSON -> fitted curve CSV");
  std::string fit_panel, fit_out, fit_json;
  std::optional<double> fit_bw;
  fit->add_option("--panel", fit_panel, "panel JSON (default stdin)");
  fit->add_option("--bandwidth", fit_bw, "bandwidth in cells (overrides config)");
  fit->add_option("--out", fit_out, "curve CSV (default stdout)");
  fit->add_option("--json", fit_json, "detailed fit JSON");

  // bandwidth
  auto* bw = app.add_subcommand("bandwidth", "one-sided cross-validation bandwidth choice");
  std::string bw_panel, bw_out, bw_kernel, bw_rounding;
  std::optional<std::string> bw_candidates;
  bw->add_option("--panel", bw_panel, "panel JSON (default stdin)");
  bw->add_option("--candidates", bw_candidates, "candidate bandwidths, e.g. 1..52 or 3,5,8");
  bw->add_option("--target-kernel", bw_kernel, "two-sided target kernel");
  bw->add_option("--rounding", bw_rounding, "nearest | floor")
      ->check(CLI::IsMember({"nearest", "floor"}));
  bw->add_option("--out", bw_out, "result JSON (default stdout)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate events from a design");
  std::string sim_design, sim_replay, sim_events, sim_panel, sim_mode = "stream";
  sim->add_option("--design", sim_design, "design JSON")->required();
  sim->add_option("--replay-panel", sim_replay, "panel JSON for replayed covariates/selectors");
  sim->add_option("--mode", sim_mode, "stream | panel")->check(CLI::IsMember({"stream", "panel"}));
  sim->add_option("--events-out", sim_events, "events CSV (stream mode)");
  sim->add_option("--panel-out", sim_panel, "panel JSON with simulated counts");

  // gof
  auto* gof = app.add_subcommand("gof", "goodness-of-fit bands from simulated networks");
  std::string gof_panel, gof_fit, gof_theta, gof_out;
  std::optional<std::size_t> gof_cell, gof_nsims;
  gof->add_option("--panel", gof_panel, "panel JSON (default stdin)");
  gof->add_option("--fit", gof_fit, "fitted curve CSV; uses the row nearest the target cell");
  gof->add_option("--theta", gof_theta, "comma-separated parameter vector");
  gof->add_option("--cell", gof_cell, "target cell (default: last cell)");
  gof->add_option("--n-sims", gof_nsims, "number of simulated networks");
  gof->add_option("--out", gof_out, "report JSON (default stdout)");

  // mc-validate
  auto* mc = app.add_subcommand("mc-validate", "Monte Carlo normality study");
  std::string mc_design, mc_out;
  std::optional<double> mc_bw;
  std::optional<std::size_t> mc_reps, mc_cell;
  bool mc_stream = false;
  mc->add_option("--design", mc_design, "design JSON")->required();
  mc->add_option("--bandwidth", mc_bw, "bandwidth in cells");
  mc->add_option("--reps", mc_reps, "number of replicates");
  mc->add_option("--cell", mc_cell, "evaluation cell (default: middle cell)");
  mc->add_flag("--stream", mc_stream, "simulate event streams instead of panel counts");
  mc->add_option("--out", mc_out, "report JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    config::RunConfig cfg = detail::load_config(config_path);
    if (seed) cfg.seed = *seed;

    if (ingest->parsed()) {
      const std::string path = detail::pick(trips_path, cfg, "trips", "");
      if (path.empty()) fail(ErrorCode::InvalidArgument, "ingest needs --trips");
      const io::IngestResult res =
          io::ingest_trips(io::read_text(path), cfg.trips, cfg.features.anchor_weekday);
      io::write_text(detail::pick(events_out, cfg, "events", "-"), io::events_to_csv(res.events));
      const std::string st = detail::pick(stations_out, cfg, "stations", "");
      if (!st.empty()) io::write_text(st, io::stations_to_csv(res.stations));
      if (!report_out.empty()) io::write_text(report_out, detail::dump(io::ingest_report(res)));
      return 0;
    }

    if (features->parsed()) {
      const std::string path = detail::pick(events_in, cfg, "events", "-");
      const EventStream es = io::events_from_csv(io::read_text(path), path);
      const Panel panel = build_weekly_panel(bin_events(es, 24.0), es.n_nodes(), cfg.features);
      io::write_text(detail::pick(panel_out, cfg, "panel", "-"), io::panel_to_json(panel).dump() + "\n");
      return 0;
    }

    if (fit->parsed()) {
      const std::string path = detail::pick(fit_panel, cfg, "panel", "-");
      const Panel panel = io::panel_from_json(io::parse_json(io::read_text(path), path));
      ModelSpec spec;
      spec.kernel = cfg.kernel;
      spec.q = panel.q();
      spec.theta_box = cfg.box(panel.q());
      if (fit_bw) {
        spec.bandwidth = *fit_bw;
      } else if (cfg.bandwidth) {
        spec.bandwidth = *cfg.bandwidth;
      } else if (cfg.bandwidth_auto) {
        BandwidthOptions bo;
        bo.rounding = cfg.rounding;
        bo.solver = cfg.solver;
        bo.theta_box = spec.theta_box;
        spec.bandwidth = select_bandwidth(panel, cfg.kernel, cfg.candidate_set(), bo).h_k;
      } else {
        fail(ErrorCode::InvalidArgument, "fit needs a bandwidth (--bandwidth or config)");
      }
      if (!(spec.bandwidth > 0.0)) fail(ErrorCode::InvalidArgument, "bandwidth must be positive");
      spec.eval_times = detail::eval_times(panel, cfg);
      const CurveFit cf = fit_curve(panel, spec, cfg.solver);
      io::write_text(detail::pick(fit_out, cfg, "fit", "-"), io::curve_to_csv(cf, panel.q()));
      if (!fit_json.empty()) {
        json j{{"bandwidth", spec.bandwidth},
               {"kernel", spec.kernel.name()},
               {"column_names", panel.column_names()},
               {"fits", io::fit_to_json(cf, cfg.confidence_level)}};
        io::write_text(fit_json, detail::dump(j));
      }
      return 0;
    }

    if (bw->parsed()) {
      std::vector<int> cands = cfg.candidate_set();
      if (bw_candidates) {
        cands = config::parse_candidates(*bw_candidates);
        if (cands.empty()) fail(ErrorCode::InvalidArgument, "--candidates is empty");
      }
      const std::string path = detail::pick(bw_panel, cfg, "panel", "-");
      const Panel panel = io::panel_from_json(io::parse_json(io::read_text(path), path));
      const Kernel target = bw_kernel.empty() ? cfg.kernel : parse_kernel(bw_kernel);
      BandwidthOptions bo;
      bo.rounding = bw_rounding.empty() ? cfg.rounding
                    : bw_rounding == "floor" ? Rounding::Floor
                                             : Rounding::Nearest;
      bo.solver = cfg.solver;
      bo.theta_box = cfg.box(panel.q());
      const CvResult res = select_bandwidth(panel, target, cands, bo);
      io::write_text(bw_out.empty() ? "-" : bw_out, detail::dump(io::cv_to_json(res)));
      return 0;
    }

    if (sim->parsed()) {
      std::optional<Panel> replay;
      if (!sim_replay.empty()) {
        replay = io::panel_from_json(io::parse_json(io::read_text(sim_replay), sim_replay));
      }
      SimDesign d = config::parse_design(io::parse_json(io::read_text(sim_design), sim_design), replay);
      d.seed = cfg.seed;
      Panel panel = realize_design(d);
      if (sim_mode == "stream") {
        const EventStream es = simulate_stream(d, panel);
        const BinnedCounts bc = bin_events(es, d.cell_length);
        CellCounts counts(panel.n_cells());
        for (std::size_t c = 0; c < panel.n_cells(); ++c) {
          const CellBlock& b = panel.cell(c);
          counts[c].resize(b.size());
          for (std::size_t r = 0; r < b.size(); ++r) counts[c][r] = bc.at(c, b.pairs[r]);
        }
        panel = with_counts(panel, counts);
        if (!sim_events.empty() || sim_panel.empty()) {
          io::write_text(sim_events.empty() ? "-" : sim_events, io::events_to_csv(es));
        }
      } else {
        panel = with_counts(panel, simulate_panel_counts(panel, d.true_curve, d.seed));
        if (sim_panel.empty()) sim_panel = "-";
      }
      if (!sim_panel.empty()) io::write_text(sim_panel, io::panel_to_json(panel).dump() + "\n");
      return 0;
    }

    if (gof->parsed()) {
      const std::string path = detail::pick(gof_panel, cfg, "panel", "-");
      const Panel panel = io::panel_from_json(io::parse_json(io::read_text(path), path));
      const std::size_t cell = gof_cell ? *gof_cell : cfg.target_cell.value_or(panel.n_cells() - 1);
      if (cell >= panel.n_cells()) fail(ErrorCode::InvalidArgument, "--cell out of range");
      Eigen::VectorXd theta;
      if (!gof_theta.empty()) {
        const auto v = detail::parse_list(gof_theta, "--theta");
        theta = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
      } else {
        const std::string fp = detail::pick(gof_fit, cfg, "fit", "");
        if (fp.empty()) fail(ErrorCode::InvalidArgument, "gof needs --theta or --fit");
        const auto rows = io::curve_from_csv(io::read_text(fp), fp);
        const double t = panel.cell_times()[cell];
        const io::FitRow* best = nullptr;
        for (const auto& r : rows) {
          if (r.ok && (!best || std::abs(r.t0 - t) < std::abs(best->t0 - t))) best = &r;
        }
        if (!best) fail(ErrorCode::InvalidData, fp + ": no successful fit rows");
        theta = best->theta;
      }
      if (theta.size() != panel.q()) fail(ErrorCode::InvalidArgument, "theta length must equal panel q");
      GofOptions go;
      go.n_sims = gof_nsims ? *gof_nsims : cfg.n_sims;
      go.quantiles = cfg.quantiles;
      go.regimes = cfg.regimes;
      go.seed = cfg.seed;
      const GofReport rep = gof_bands(theta, panel, cell, go);
      io::write_text(gof_out.empty() ? "-" : gof_out, detail::dump(io::gof_to_json(rep)));
      return 0;
    }

    if (mc->parsed()) {
      SimDesign d = config::parse_design(io::parse_json(io::read_text(mc_design), mc_design));
      d.seed = cfg.seed;
      const double h = mc_bw ? *mc_bw : cfg.bandwidth.value_or(0.0);
      if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "mc-validate needs --bandwidth");
      ModelSpec spec;
      spec.kernel = cfg.kernel;
      spec.bandwidth = h;
      spec.q = d.q();
      spec.theta_box = cfg.box(d.q());
      StudyOptions so;
      so.t0_cell = mc_cell ? *mc_cell : cfg.target_cell.value_or(d.n_cells / 2);
      so.use_stream = mc_stream;
      const StudyReport rep =
          mc_normality_study(d, spec, cfg.solver, mc_reps ? *mc_reps : cfg.n_reps, so);
      io::write_text(mc_out.empty() ? "-" : mc_out, detail::dump(io::study_to_json(rep)));
      return 0;
    }
  } catch (const Error& e) {
    json j{{"error", {{"code", to_string(e.code())}, {"message", e.what()}}}};
    if (!e.direction().empty()) j["error"]["direction"] = e.direction();
    std::cerr << j.dump() << std::endl;
    return e.code() == ErrorCode::InvalidArgument ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump() << std::endl;
    return 1;
  }
  return 2;
}

}  // namespace netcox::cli
