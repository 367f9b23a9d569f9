// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "support.hpp"

using namespace netcox;
namespace ts = testsupport;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------- 1

Outcome kernel_constants() {
  const Kernel k = Kernel::triangular();
  const double l2 = kernel_l2(k), m2 = kernel_moment(k, 2);
  const double rho = 1.0 / bandwidth_transfer_factor(equivalent_local_linear(Kernel::one_sided(k)), k);
  const bool ok = std::abs(l2 - 2.0 / 3.0) <= 1e-9 && std::abs(m2 - 1.0 / 6.0) <= 1e-9 &&
                  std::abs(rho - 1.82) <= 0.01;
  return {ok, fmt("int K^2 = %.12f, M2 = %.12f, h_L/h_K = %.5f", l2, m2, rho)};
}

// ---------------------------------------------------------------- 2

Outcome derivatives() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  double worst_g = 0.0, worst_h = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int q = 1 + rep % 3;
    const int n = 2 + rep % 2;  // 1 or 3 pairs
    const std::size_t cells = 1 + static_cast<std::size_t>(rep % 6);
    const Panel p = ts::random_panel(rng, n, cells, q, rep % 4 != 0, 0.9);
    const double h = 1.0 + 0.5 * (rep % 7);
    const Kernel k = rep % 2 ? Kernel::triangular() : Kernel::epanechnikov();
    const auto ctx = make_panel_context(p, k, h, static_cast<std::size_t>(rep) % cells);
    Eigen::VectorXd th(q);
    for (int a = 0; a < q; ++a) th(a) = u(rng);
    const Eigen::VectorXd g = score(ctx, th);
    const Eigen::VectorXd fg = ts::fd_gradient([&](const Eigen::VectorXd& t) { return local_loglik(ctx, t); }, th);
    const Eigen::MatrixXd hm = hessian(ctx, th);
    const Eigen::MatrixXd fh = ts::fd_jacobian([&](const Eigen::VectorXd& t) { return score(ctx, t); }, th);
    if (g.norm() > 0) worst_g = std::max(worst_g, (g - fg).norm() / g.norm());
    else worst_g = std::max(worst_g, fg.norm());
    if (hm.norm() > 0) worst_h = std::max(worst_h, (hm - fh).norm() / hm.norm());
    else worst_h = std::max(worst_h, fh.norm());
  }
  return {worst_g <= 1e-6 && worst_h <= 1e-6,
          fmt("max relative error: score %.2e, Hessian %.2e", worst_g, worst_h)};
}

// ---------------------------------------------------------------- 3

Outcome closed_form() {
  std::mt19937_64 rng(3);
  std::poisson_distribution<int> pois(1.7);
  std::uniform_int_distribution<int> cells_d(1, 9), pairs_d(1, 12);
  std::bernoulli_distribution active(0.8);
  double worst = 0.0;
  int done = 0;
  for (int rep = 0; done < 100; ++rep) {
    const auto cells = static_cast<std::size_t>(cells_d(rng));
    Panel p(6, cells, 1);
    const std::size_t k0 = static_cast<std::size_t>(rng() % cells);
    const double h = 0.8 + static_cast<double>(rng() % 50) / 10.0;
    const Kernel k = rep % 2 ? Kernel::triangular() : Kernel::epanechnikov();
    double w = 0, e = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      const int m = pairs_d(rng);
      const double wt = k((static_cast<double>(c) - static_cast<double>(k0)) / h);
      int idx = 0;
      for (int i = 1; i <= 6 && idx < m; ++i)
        for (int j = i + 1; j <= 6 && idx < m; ++j, ++idx) {
          const int v = pois(rng);
          const bool on = active(rng);
          p.add_record(c, {i, j}, v, on, std::vector<double>{1.0});
          if (on) {
            w += wt * v;
            e += wt;
          }
        }
    }
    if (!(w > 0)) continue;  // no interior MLE; checked separately in unit tests
    const auto ctx = make_panel_context(p, k, h, k0);
    const FitResult f = fit_at(ctx, ModelSpec::with_dimension(1, h, k), {}, Eigen::VectorXd::Zero(1));
    worst = std::max(worst, std::abs(f.theta_hat(0) - std::log(w / e)));
    ++done;
  }
  return {worst <= 1e-8, fmt("100 instances, max |theta_hat - log(W/E)| = %.2e", worst)};
}

// ---------------------------------------------------------------- 4, 5

SimDesign stationary_design(int n) {
  SimDesign d;
  d.n_nodes = n;
  d.n_cells = 11;
  d.cell_length = 1.0;
  d.covariates = {CovariateRule::intercept(), CovariateRule::bernoulli(0.5)};
  d.true_curve = ParameterCurve::constant(Eigen::Vector2d(0.0, 0.4));
  d.seed = 42;
  return d;
}

// Triangular kernel with h = 6 puts weight on lags -5..5: an 11-cell window.
const ModelSpec kStudySpec = ModelSpec::with_dimension(2, 6.0);
std::optional<StudyReport> g_small_study;

Outcome coverage() {
  g_small_study = mc_normality_study(stationary_design(60), kStudySpec, {}, 400, {.t0_cell = 5});
  const StudyReport& r = *g_small_study;
  bool ok = r.n_used > 0;
  std::string d = fmt("n=60, %zu/%zu replicates used;", r.n_used, r.n_reps);
  for (std::size_t m = 0; m < r.coordinates.size(); ++m) {
    const auto& c = r.coordinates[m];
    ok = ok && c.coverage_95 >= 0.90 && c.coverage_95 <= 0.98 && std::abs(c.mean_z) <= 0.15;
    d += fmt(" theta_%zu: coverage %.4f, mean z %+.4f, var z %.3f;", m + 1, c.coverage_95, c.mean_z, c.var_z);
  }
  return {ok, d};
}

Outcome rate() {
  if (!g_small_study) g_small_study = mc_normality_study(stationary_design(60), kStudySpec, {}, 400, {.t0_cell = 5});
  const StudyReport big = mc_normality_study(stationary_design(240), kStudySpec, {}, 400, {.t0_cell = 5});
  bool ok = big.n_used > 0;
  std::string d;
  for (std::size_t m = 0; m < big.coordinates.size(); ++m) {
    const double ratio = big.coordinates[m].rmse / g_small_study->coordinates[m].rmse;
    ok = ok && ratio <= 0.75;
    d += fmt("theta_%zu: RMSE %.5f -> %.5f (ratio %.3f); ", m + 1, g_small_study->coordinates[m].rmse,
             big.coordinates[m].rmse, ratio);
  }
  return {ok, d};
}

// ---------------------------------------------------------------- 6

Outcome simulator() {
  // Interevent gaps of one pair at constant rate, by both generators.
  SimDesign d;
  d.n_nodes = 2;
  d.n_cells = 50;
  d.cell_length = 1.0;
  const double lambda = 2.0;
  d.true_curve = ParameterCurve::constant(Eigen::VectorXd::Constant(1, std::log(lambda)));
  auto gaps = [&](SimMethod m, std::uint64_t base) {
    std::vector<double> out;
    d.method = m;
    for (std::uint64_t s = 0; out.size() < 10000; ++s) {
      d.seed = rng::derive({base, s});
      const auto& ev = simulate_stream(d).events();
      for (std::size_t k = 1; k < ev.size() && out.size() < 10000; ++k) out.push_back(ev[k].time - ev[k - 1].time);
    }
    return out;
  };
  const auto a = gaps(SimMethod::PerPiece, 1), b = gaps(SimMethod::Thinning, 2);
  const double ks = ts::ks_statistic(a, b), crit = ts::ks_critical_1pct(a.size(), b.size());

  // Mean count over 1000 replicates against lambda T, for both generators.
  const double T = d.horizon();
  const double sigma = std::sqrt(lambda * T / 1000.0);
  double worst = 0.0;
  for (SimMethod m : {SimMethod::PerPiece, SimMethod::Thinning}) {
    d.method = m;
    double total = 0.0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
      d.seed = rng::derive({3, s});
      total += static_cast<double>(simulate_stream(d).size());
    }
    worst = std::max(worst, std::abs(total / 1000.0 - lambda * T) / sigma);
  }
  return {ks < crit && worst <= 3.0,
          fmt("KS D = %.4f (1%% critical %.4f); mean count within %.2f sigma of lambda T = %.0f", ks, crit,
              worst, lambda * T)};
}

// ---------------------------------------------------------------- 7

Outcome graphs() {
  auto make = [](int n, std::vector<PairKey> e) { return SimpleGraph::from_edges(n, e); };
  bool fixed = clustering_coefficient(make(3, {{1, 2}, {2, 3}, {1, 3}})).value == 1.0 &&
               diameter(make(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}})).value == 4 &&
               clustering_coefficient(make(5, {{1, 2}, {1, 3}, {1, 4}, {1, 5}})).value == 0.0;
  std::mt19937_64 rng(7);
  int mismatches = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + static_cast<int>(rng() % 29);
    std::bernoulli_distribution on(std::uniform_real_distribution<double>(0.02, 0.5)(rng));
    std::vector<PairKey> e;
    for (int i = 1; i <= n; ++i)
      for (int j = i + 1; j <= n; ++j)
        if (on(rng)) e.push_back({i, j});
    const SimpleGraph g = make(n, e);
    const ts::BruteGraph b(g);
    const auto [cv, cu] = b.clustering();
    const auto [dv, dd] = b.diameter();
    std::vector<std::int64_t> deg(1, 0);
    for (int v = 0; v < n; ++v) {
      int dgr = 0;
      for (int w = 0; w < n; ++w) dgr += b.a[v][w];
      if (static_cast<std::size_t>(dgr) >= deg.size()) deg.resize(dgr + 1, 0);
      ++deg[dgr];
    }
    const auto c = clustering_coefficient(g);
    const auto d = diameter(g);
    if (c.value != cv || c.undefined != cu || d.value != dv || d.disconnected != dd ||
        degree_distribution(g) != deg) {
      ++mismatches;
    }
  }
  return {fixed && mismatches == 0,
          fmt("fixed cases %s; %d/200 random graphs differ from brute force", fixed ? "exact" : "WRONG",
              mismatches)};
}

// ---------------------------------------------------------------- 8

Outcome bandwidth() {
  const std::size_t cells = 60;
  SimDesign d;
  d.n_nodes = 8;
  d.n_cells = cells;
  for (std::size_t k = 0; k < cells; ++k) {
    d.true_curve.eval_times.push_back(static_cast<double>(k) + 0.5);
    d.true_curve.values.push_back(
        Eigen::VectorXd::Constant(1, std::log(0.5) + std::sin(2 * std::numbers::pi * static_cast<double>(k) / 60.0)));
  }
  auto draw = [&](std::uint64_t seed) {
    d.seed = seed;
    const Panel p = realize_design(d);
    return with_counts(p, simulate_panel_counts(p, d.true_curve, seed));
  };
  // Oracle: bandwidth minimizing the MSE of theta_hat against the truth over
  // all cells, on replicates disjoint from the selection runs.
  const int max_h = 30;
  std::vector<double> mse(max_h + 1, 0.0);
  for (std::uint64_t r = 0; r < 40; ++r) {
    const Panel p = draw(rng::derive({88, r}));
    for (int h = 1; h <= max_h; ++h) {
      for (std::size_t k = 0; k < cells; ++k) {
        double err = 0.0;
        try {
          const auto ctx = make_panel_context(p, Kernel::triangular(), h, k);
          const FitResult f = fit_at(ctx, ModelSpec::with_dimension(1, h), {}, Eigen::VectorXd::Zero(1));
          err = f.theta_hat(0) - d.true_curve.values[k](0);
        } catch (const Error&) {
          err = 20.0;  // no interior estimate: charged as a box-sized miss
        }
        mse[h] += err * err;
      }
    }
  }
  int oracle = 1;
  for (int h = 2; h <= max_h; ++h)
    if (mse[h] < mse[oracle]) oracle = h;

  std::vector<int> cand;
  for (int h = 1; h <= max_h; ++h) cand.push_back(h);
  int within = 0;
  std::string picks;
  for (std::uint64_t r = 0; r < 50; ++r) {
    const CvResult res = select_bandwidth(draw(rng::derive({99, r})), Kernel::triangular(), cand);
    within += res.h_k >= oracle / 2.0 && res.h_k <= 2.0 * oracle;
    picks += fmt("%g ", res.h_k);
  }
  const double f = bandwidth_transfer_factor(equivalent_local_linear(Kernel::one_sided(Kernel::triangular())),
                                             Kernel::triangular());
  const double transferred = 23.0 * f;
  const bool ok = within >= 40 && std::abs(transferred - 12.6) <= 0.05;
  return {ok, fmt("oracle h = %d; %d/50 selections within a factor 2; 23 -> %.3f (nearest %g, floor %g); picks: ",
                  oracle, within, transferred, round_bandwidth(transferred, Rounding::Nearest),
                  round_bandwidth(transferred, Rounding::Floor)) +
                  picks};
}

// ---------------------------------------------------------------- 9

Outcome gof() {
  // Fit a synthetic model, then compare bands from one batch of simulated
  // networks with per-degree medians of a disjoint batch.
  SimDesign d;
  d.n_nodes = 40;
  d.n_cells = 9;
  d.covariates = {CovariateRule::intercept(), CovariateRule::bernoulli(0.3)};
  d.true_curve = ParameterCurve::constant(Eigen::Vector2d(0.6, 1.2));
  d.censor = {CensorRule::Kind::Bernoulli, 0.3};
  d.seed = 9;
  Panel p = realize_design(d);
  p = with_counts(p, simulate_panel_counts(p, d.true_curve, 9));
  const std::size_t cell = 8;
  const FitResult fit = fit_at(make_panel_context(p, Kernel::triangular(), 4.0, cell),
                               ModelSpec::with_dimension(2, 4.0), {}, Eigen::VectorXd::Zero(2));

  GofOptions bands;
  bands.n_sims = 200;
  bands.seed = 1;
  GofOptions medians = bands;
  medians.seed = 2;
  medians.quantiles = {0.5};
  const GofReport a = gof_bands(fit.theta_hat, p, cell, bands);
  const GofReport b = gof_bands(fit.theta_hat, p, cell, medians);

  const auto defaults = default_regimes();
  const std::vector<std::pair<std::int64_t, std::optional<std::int64_t>>> expect{
      {1, 3}, {2, 4}, {3, 5}, {4, 6}, {5, 12}, {10, std::nullopt}};
  bool regimes_ok = defaults.size() == expect.size();
  for (std::size_t g = 0; regimes_ok && g < expect.size(); ++g)
    regimes_ok = defaults[g].l1 == expect[g].first && defaults[g].l2 == expect[g].second;
  const bool levels_ok = a.quantile_levels == std::vector<double>{0.1, 0.9};

  // Bins where either batch puts mass; all-zero bins would pass trivially.
  int bins = 0, inside = 0;
  for (std::size_t g = 0; g < a.regimes.size(); ++g) {
    const auto& ra = a.regimes[g].degree_bands;
    const auto& rb = b.regimes[g].degree_bands;
    for (std::size_t k = 0; k < std::max(ra.size(), rb.size()); ++k) {
      const double lo = k < ra.size() ? ra[k].quantiles[0] : 0.0;
      const double hi = k < ra.size() ? ra[k].quantiles[1] : 0.0;
      const double med = k < rb.size() ? rb[k].quantiles[0] : 0.0;
      if (hi == 0.0 && med == 0.0) continue;
      ++bins;
      inside += med >= lo && med <= hi;
    }
  }
  const double frac = bins ? static_cast<double>(inside) / bins : 0.0;
  return {regimes_ok && levels_ok && frac >= 0.70,
          fmt("%d/%d nonempty degree bins contain the second-batch median (%.3f); default regimes %s", inside,
              bins, frac, regimes_ok ? "match" : "DIFFER")};
}

// ---------------------------------------------------------------- 10

std::string run_cli(const std::string& args) {
  const std::string out = (std::filesystem::temp_directory_path() /
                           ("netcox_accept_" + std::to_string(::getpid()) + ".out"))
                              .string();
  const std::string cmd = std::string("\"") + NETCOX_CLI + "\" " + args + " >\"" + out + "\" 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  std::string text = WIFEXITED(raw) && WEXITSTATUS(raw) == 0 ? io::read_text(out) : "<exit failure>";
  std::filesystem::remove(out);
  return text;
}

Outcome determinism() {
  std::vector<std::string> failures;
  auto same = [&](const std::string& what, const auto& a, const auto& b) {
    if (!(a == b)) failures.push_back(what);
  };

  // Library level.
  SimDesign d = stationary_design(20);
  d.true_curve = ParameterCurve{{0.0, 11.0}, {Eigen::Vector2d(-0.5, 0.4), Eigen::Vector2d(0.5, -0.4)}};
  d.censor = {CensorRule::Kind::Bernoulli, 0.6};
  same("stream", simulate_stream(d).events(), simulate_stream(d).events());
  const Panel p = realize_design(d);
  same("panel counts", simulate_panel_counts(p, d.true_curve, 4), simulate_panel_counts(p, d.true_curve, 4));
  const Panel filled = with_counts(p, simulate_panel_counts(p, d.true_curve, 4));
  GofOptions go;
  go.n_sims = 100;
  same("gof", io::gof_to_json(gof_bands(Eigen::Vector2d(0.0, 0.4), filled, 5, go)),
       io::gof_to_json(gof_bands(Eigen::Vector2d(0.0, 0.4), filled, 5, go)));
  const std::vector<int> cand{3, 4, 5, 6, 8};
  same("bandwidth", io::cv_to_json(select_bandwidth(filled, Kernel::triangular(), cand)),
       io::cv_to_json(select_bandwidth(filled, Kernel::triangular(), cand)));
  SimDesign sd = stationary_design(20);
  same("study", io::study_to_json(mc_normality_study(sd, kStudySpec, {}, 50, {.t0_cell = 5})),
       io::study_to_json(mc_normality_study(sd, kStudySpec, {}, 50, {.t0_cell = 5})));

  // Command level.
  const auto dir = std::filesystem::temp_directory_path() / ("netcox_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const std::string design = (dir / "design.json").string();
  io::write_text(design, R"({"n_nodes": 15, "n_cells": 11, "theta0": [-0.3, 0.5],
    "covariates": [{"kind": "intercept"}, {"kind": "normal", "mean": 0, "sd": 1}],
    "censor": {"kind": "bernoulli", "p": 0.7}})");
  const std::string panel = (dir / "panel.json").string();
  io::write_text(panel, run_cli("--seed 4 simulate --design " + design + " --mode panel"));
  const std::string fitcsv = (dir / "fit.csv").string();
  io::write_text(fitcsv, run_cli("fit --bandwidth 4 --panel " + panel));
  for (const std::string& cmd : {"--seed 11 simulate --design " + design,
                                "--seed 11 simulate --design " + design + " --mode panel",
                                "--seed 11 gof --n-sims 60 --panel " + panel + " --fit " + fitcsv,
                                "--seed 11 mc-validate --reps 40 --bandwidth 4 --design " + design,
                                "--seed 11 mc-validate --reps 20 --bandwidth 4 --stream --design " + design,
                                "bandwidth --candidates 3..7 --panel " + panel}) {
    const std::string a = run_cli(cmd), b = run_cli(cmd);
    if (a == "<exit failure>" || a != b) failures.push_back("cli: " + cmd.substr(0, cmd.find(" --")));
  }
  std::filesystem::remove_all(dir);

  // Exact relabeling invariance of theta_hat.
  std::mt19937_64 rng(10);
  const Panel base = ts::random_panel(rng, 12, 7, 3);
  std::vector<NodeId> perm(12);
  std::iota(perm.begin(), perm.end(), 1);
  int relabel_fail = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(perm.begin(), perm.end(), rng);
    const Panel q = relabel_nodes(base, perm);
    const auto spec = ModelSpec::with_dimension(3, 3.0);
    const FitResult a = fit_at(make_panel_context(base, spec.kernel, 3.0, 3), spec, {}, Eigen::VectorXd::Zero(3));
    const FitResult b = fit_at(make_panel_context(q, spec.kernel, 3.0, 3), spec, {}, Eigen::VectorXd::Zero(3));
    relabel_fail += !(a.theta_hat == b.theta_hat);
  }
  if (relabel_fail) failures.push_back("relabeling");
  std::string detail = "library: stream, panel, gof, bandwidth, study; cli: 6 commands; 20 relabelings";
  for (const auto& f : failures) detail += "; MISMATCH " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kernel constants", kernel_constants},
      {"derivative correctness", derivatives},
      {"closed-form intercept oracle", closed_form},
      {"asymptotic normality coverage", coverage},
      {"rate of convergence", rate},
      {"simulator self-consistency", simulator},
      {"graph statistics", graphs},
      {"bandwidth pipeline", bandwidth},
      {"goodness-of-fit protocol", gof},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << k + 1 << ". " << criteria[k].first << " ["
              << fmt("%.2f s", secs) << "]: " << o.detail << std::endl;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : "acceptance: all criteria passed")
            << std::endl;
  return failed ? 1 : 0;
}
