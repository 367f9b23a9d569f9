#include <catch_amalgamated.hpp>

#include <filesystem>
#include <random>
#include <sys/wait.h>
#include <unistd.h>

#include "support.hpp"

using namespace netcox;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

struct Run {
  int status = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("netcox_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

fs::path scratch(const std::string& name) { return scratch_dir() / name; }

void write_file(const fs::path& p, const std::string& text) { io::write_text(p.string(), text); }
std::string read_file(const fs::path& p) { return io::read_text(p.string()); }

Run cli(const std::string& args) {
  const fs::path out = scratch("stdout.txt"), err = scratch("stderr.txt");
  const std::string cmd = std::string("\"") + NETCOX_CLI + "\" " + args + " >\"" + out.string() +
                          "\" 2>\"" + err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  Run r;
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::string data(const std::string& name) { return std::string(NETCOX_TEST_DATA) + "/" + name; }

/// Synthetic trip log over ten weeks starting on a Friday.
std::string synthetic_trips() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> station(1, 9), minute(0, 59), hour(6, 21);
  std::bernoulli_distribution busy(0.5);
  std::string text = "id,start_time,end_time,start_station,end_station\n";
  int id = 0;
  for (int day = 0; day < 70; ++day) {
    const auto date = std::chrono::sys_days{std::chrono::year{2012} / 1 / 6} + std::chrono::days{day};
    const std::string iso = io::iso_date(date);
    const int n = busy(rng) ? 12 : 4;
    for (int k = 0; k < n; ++k) {
      const int h = hour(rng), m = minute(rng);
      char st[32], et[32];
      std::snprintf(st, sizeof st, "%s %02d:%02d", iso.c_str(), h, m);
      std::snprintf(et, sizeof et, "%s %02d:%02d", iso.c_str(), h + 1, m);
      text += std::to_string(++id) + "," + st + "," + et + "," + std::to_string(station(rng)) + "," +
              std::to_string(station(rng)) + "\n";
    }
  }
  return text;
}

}  // namespace

TEST_CASE("usage errors exit with status 2", "[cli]") {
  CHECK(cli("").status == 2);
  CHECK(cli("frobnicate").status == 2);
  CHECK(cli("simulate").status == 2);  // --design is required
  CHECK(cli("--help").status == 0);
  const Run r = cli("bandwidth --panel " + data("golden_panel.json") + " --candidates \"\"");
  CHECK(r.status == 2);
  CHECK_THAT(r.err, ContainsSubstring("\"code\":\"InvalidArgument\""));
}

TEST_CASE("invalid input reports a JSON error", "[cli]") {
  write_file(scratch("bad.json"), "{\"n_nodes\": 3");
  const Run r = cli("fit --bandwidth 2 --panel " + scratch("bad.json").string());
  CHECK(r.status == 1);
  CHECK_THAT(r.err, ContainsSubstring("\"code\":\"InvalidData\""));
  const Run c = cli("--config " + data("golden_config.json") + " fit --panel /nonexistent/panel.json");
  CHECK(c.status == 1);
  CHECK_THAT(c.err, ContainsSubstring("\"code\":\"Io\""));
  write_file(scratch("typo.json"), R"({"bandwdith": 3})");
  CHECK(cli("--config " + scratch("typo.json").string() + " fit --panel " + data("golden_panel.json")).status == 2);
}

TEST_CASE("golden fixture is reproduced bit for bit", "[cli]") {
  const Run sim = cli("--seed 20120106 simulate --design " + data("golden_design.json") + " --mode panel");
  REQUIRE(sim.status == 0);
  CHECK(sim.out == read_file(data("golden_panel.json")));
  const Run fit = cli("--config " + data("golden_config.json") + " fit --panel " + data("golden_panel.json"));
  REQUIRE(fit.status == 0);
  CHECK(fit.out == read_file(data("golden_fit.csv")));
}

TEST_CASE("CLI fit agrees with the library", "[cli]") {
  const Panel panel = io::panel_from_json(io::parse_json(read_file(data("golden_panel.json")), "p"));
  ModelSpec spec = ModelSpec::with_dimension(panel.q(), 4.0);
  for (std::size_t c = 0; c < panel.n_cells(); ++c)
    if (panel.active_size(c) > 0) spec.eval_times.push_back(panel.cell_times()[c]);
  const CurveFit cf = fit_curve(panel, spec, {});
  const Run r = cli("fit --bandwidth 4 --panel " + data("golden_panel.json") + " --json " +
                    scratch("fit.json").string());
  REQUIRE(r.status == 0);
  CHECK(r.out == io::curve_to_csv(cf, panel.q()));
  const auto j = io::parse_json(read_file(scratch("fit.json")), "fit.json");
  CHECK(j["bandwidth"] == 4.0);
  CHECK(j["fits"].size() == cf.fits.size());
}

TEST_CASE("simulate and mc-validate are deterministic", "[cli]") {
  const std::string design = data("golden_design.json");
  const Run a = cli("--seed 5 simulate --design " + design);
  const Run b = cli("--seed 5 simulate --design " + design);
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  CHECK_THAT(a.out, ContainsSubstring("time_hours,i,j"));
  CHECK(cli("--seed 6 simulate --design " + design).out != a.out);

  const Run m1 = cli("--seed 3 mc-validate --design " + design + " --bandwidth 4 --reps 30");
  const Run m2 = cli("--seed 3 mc-validate --design " + design + " --bandwidth 4 --reps 30");
  REQUIRE(m1.status == 0);
  CHECK(m1.out == m2.out);
  const auto j = io::parse_json(m1.out, "mc");
  CHECK(j["n_reps"] == 30);
}

TEST_CASE("gof output is reproducible", "[cli]") {
  const std::string args = "--seed 9 gof --panel " + data("golden_panel.json") + " --fit " +
                           data("golden_fit.csv") + " --n-sims 50";
  const Run a = cli(args), b = cli(args);
  REQUIRE(a.status == 0);
  CHECK(a.out == b.out);
  const auto j = io::parse_json(a.out, "gof");
  CHECK(j["n_sims"] == 50);
  CHECK(cli("gof --panel " + data("golden_panel.json")).status == 2);
}

TEST_CASE("bandwidth subcommand", "[cli]") {
  const Run r = cli("bandwidth --panel " + data("golden_panel.json") + " --candidates 3..8 --rounding floor");
  REQUIRE(r.status == 0);
  const auto j = io::parse_json(r.out, "bw");
  const Panel panel = io::panel_from_json(io::parse_json(read_file(data("golden_panel.json")), "p"));
  BandwidthOptions o;
  o.rounding = Rounding::Floor;
  const CvResult res = select_bandwidth(panel, Kernel::triangular(), {3, 4, 5, 6, 7, 8}, o);
  CHECK(j == io::cv_to_json(res));
}

TEST_CASE("ingest, features and fit pipeline", "[cli]") {
  write_file(scratch("trips.csv"), synthetic_trips());
  const Run ing = cli("ingest --trips " + scratch("trips.csv").string() + " --out " +
                      scratch("events.csv").string() + " --stations " + scratch("stations.csv").string() +
                      " --report " + scratch("report.json").string());
  REQUIRE(ing.status == 0);
  const auto rep = io::parse_json(read_file(scratch("report.json")), "report");
  CHECK(rep["epoch"] == "2012-01-06");

  const Run feat = cli("features --events " + scratch("events.csv").string() + " --out " +
                       scratch("panel.json").string());
  REQUIRE(feat.status == 0);
  const Run fit = cli("fit --bandwidth 3 --panel " + scratch("panel.json").string());
  REQUIRE(fit.status == 0);

  // Same pipeline in process.
  const io::IngestResult ir = io::ingest_trips(synthetic_trips(), {});
  CHECK(io::events_to_csv(ir.events) == read_file(scratch("events.csv")));
  const Panel panel = build_weekly_panel(bin_events(ir.events, 24.0), ir.events.n_nodes(), FeatureSpec{});
  CHECK(io::panel_to_json(panel).dump() + "\n" == read_file(scratch("panel.json")));
  ModelSpec spec = ModelSpec::with_dimension(panel.q(), 3.0);
  for (std::size_t c = 0; c < panel.n_cells(); ++c)
    if (panel.active_size(c) > 0) spec.eval_times.push_back(panel.cell_times()[c]);
  CHECK(fit.out == io::curve_to_csv(fit_curve(panel, spec, {}), panel.q()));
}
