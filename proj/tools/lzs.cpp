// lzs: command-line front end for spectra, Floquet data, time traces and
// (A, eps0) sweeps of the driven qubit-resonator system.
//
// Exit status: 0 ok, 1 runtime error, 2 bad config / arguments,
// 3 more than 1% of the sweep points failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lzs/fbm.hpp"
#include "lzs/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

struct Common {
  std::string config;
  std::string out = ".";
  int workers = 0;
  bool resume = false;
  std::string format = "csv";
};

lzs::SweepConfig config_or_default(const std::string& path) {
  if (!path.empty()) return lzs::load_config(path);
  // Only params matter for spectrum-like commands; a 1x1 grid keeps the
  // validator happy.
  return lzs::validate_config(json{{"grid",
                                    {{"A_over_omega_min", 0.0},
                                     {"A_over_omega_max", 0.0},
                                     {"A_steps", 1},
                                     {"eps0_over_omega_min", 0.0},
                                     {"eps0_over_omega_max", 0.0},
                                     {"eps0_steps", 1}}}});
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

lzs::PropagatorOptions propagator(const lzs::SweepConfig& cfg) {
  return {cfg.numerics.n_t, cfg.numerics.ode_tol, cfg.numerics.integrator};
}

// Hamiltonian and target projector of the closed model at one point.
std::pair<lzs::HarmonicHamiltonian, lzs::Matrix> closed_model(const lzs::SweepConfig& cfg, double a, double e) {
  lzs::SystemParams p = cfg.params;
  p.amp = a * p.omega;
  p.eps0 = e * p.omega;
  switch (cfg.model) {
    case lzs::ModelKind::kRabi:
      return {lzs::rabi_hamiltonian(p), lzs::up_projector(p.n_max).entries()};
    case lzs::ModelKind::kDjc: {
      lzs::DjcParams d = lzs::DjcParams::from_system(p, cfg.djc_n);
      d.delta0 = p.eps0;
      lzs::Matrix target = lzs::Matrix::Zero(2, 2);
      target(0, 0) = 1.0;
      return {lzs::djc_hamiltonian(d), target};
    }
    case lzs::ModelKind::kQubitStructured: {
      lzs::Matrix up = lzs::Matrix::Zero(2, 2);
      up(1, 1) = 1.0;
      return {lzs::qubit_hamiltonian(p), up};
    }
  }
  throw lzs::InputError("unknown model");
}

// spectrum ---------------------------------------------------------------------

int cmd_spectrum(const Common& c, double eps_min, double eps_max, int steps) {
  const lzs::SweepConfig cfg = config_or_default(c.config);
  if (steps < 1 || !(eps_min <= eps_max)) throw lzs::ConfigError({"spectrum: need steps >= 1 and eps-min <= eps-max"});
  const fs::path dir = ensure_dir(c.out);
  std::ofstream f(dir / "spectrum.csv");
  f << "eps_over_omega_r";
  for (int k = 0; k < cfg.params.dim(); ++k) f << ",E" << k;
  f << '\n';
  char buf[40];
  for (int s = 0; s < steps; ++s) {
    const double eps = steps == 1 ? eps_min : eps_min + (eps_max - eps_min) * s / (steps - 1);
    const lzs::StaticSpectrum sp = lzs::static_spectrum(cfg.params, eps);
    std::snprintf(buf, sizeof buf, "%.12g", eps);
    f << buf;
    for (int k = 0; k < sp.energies.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", sp.energies(k));
      f << ',' << buf;
    }
    f << '\n';
  }
  // Photonic gaps near eps = -omega_r (levels 2n+1, 2n+2) and the qubit gap at 0.
  json gaps = json::array();
  const double w = cfg.params.omega_r;
  for (int n = 0; n < cfg.params.n_max; ++n) {
    const auto r = lzs::gap_scan(cfg.params, {2 * n + 1, 2 * n + 2}, {-w - 0.5 * w, -w + 0.5 * w}, 1e-3 * w);
    gaps.push_back({{"n", n}, {"eps_min", r.eps_min}, {"gap", r.gap},
                    {"reference_2g_sqrt_n1", 2.0 * cfg.params.g * std::sqrt(n + 1.0)},
                    {"boundary_minimum", r.boundary_minimum}});
  }
  const auto q = lzs::gap_scan(cfg.params, {0, 1}, {-0.5 * w, 0.5 * w}, 1e-3 * w);
  json meta = {{"params", cfg.to_json()["params"]},
               {"qubit_gap", {{"eps_min", q.eps_min}, {"gap", q.gap}}},
               {"photonic_gaps_near_minus_omega_r", gaps}};
  std::ofstream(dir / "spectrum_gaps.json") << meta.dump(2) << '\n';
  std::cout << "wrote " << (dir / "spectrum.csv").string() << " (" << steps << " rows)\n" << meta.dump(2) << '\n';
  return 0;
}

// floquet ----------------------------------------------------------------------

int cmd_floquet(const Common& c, double a, double e) {
  const lzs::SweepConfig cfg = config_or_default(c.config);
  const auto [h, proj] = closed_model(cfg, a, e);
  const auto t0 = std::chrono::steady_clock::now();
  const lzs::FloquetSolution sol = lzs::solve_floquet(h, propagator(cfg));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const fs::path dir = ensure_dir(c.out);
  std::ofstream f(dir / "quasienergies.csv");
  f << "index,quasienergy_over_omega\n";
  json q = json::array();
  for (int k = 0; k < sol.dim(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", k, sol.quasienergies(k) / sol.omega);
    f << buf;
    q.push_back(sol.quasienergies(k) / sol.omega);
  }
  const double pbar = lzs::time_averaged_probability(sol, cfg.initial_state(), proj);
  json out = {{"A_over_omega", a},          {"eps0_over_omega", e},
              {"quasienergies_over_omega", q}, {"degenerate", sol.degenerate},
              {"time_averaged_probability", pbar}, {"seconds", secs}};
  std::cout << out.dump(2) << '\n';
  return 0;
}

// trace ------------------------------------------------------------------------

int cmd_trace(const Common& c, double a, double e, double periods, int stride, double window) {
  const lzs::SweepConfig cfg = lzs::load_config(c.config);
  if (!(periods >= 0.0) || stride < 1) throw lzs::ConfigError({"trace: need periods >= 0 and stride >= 1"});
  const fs::path dir = ensure_dir(c.out);
  const long count = static_cast<long>(std::floor(periods * cfg.numerics.n_t / stride)) + 1;
  const std::vector<double> times = lzs::sample_times(cfg.numerics.n_t, count, stride);
  lzs::ProbabilityTrace trace;
  if (cfg.observable == lzs::ObservableKind::kUnitaryAvg) {
    const auto [h, proj] = closed_model(cfg, a, e);
    const lzs::FloquetSolution sol = lzs::solve_floquet(h, propagator(cfg));
    trace = lzs::instantaneous_probability(sol, cfg.initial_state(), proj, times);
  } else {
    // Period-averaged p_up at whole periods.
    lzs::DissipativeOptions opts;
    opts.numerics = propagator(cfg);
    opts.k_max = cfg.numerics.k_max;
    opts.steady = false;
    for (long k = 0; k <= static_cast<long>(std::floor(periods)); ++k) opts.times_over_tau.push_back(double(k));
    lzs::SystemParams p = cfg.params;
    p.amp = a * p.omega;
    p.eps0 = e * p.omega;
    lzs::DissipativeResult res;
    if (cfg.model == lzs::ModelKind::kQubitStructured) {
      res = lzs::structured_bath_run(p, *cfg.bath, cfg.initial_state(), opts);
    } else {
      const lzs::Matrix x =
          lzs::tensor(lzs::identity(2, lzs::BasisTag::qubit()),
                      lzs::annihilation_op(p.n_max) + lzs::creation_op(p.n_max))
              .entries();
      res = lzs::dissipative_run(lzs::rabi_hamiltonian(p), x, lzs::up_projector(p.n_max).entries(), *cfg.bath,
                                 cfg.initial_state(), opts);
    }
    trace = res.p_up_vs_time;
  }
  {
    std::ofstream f(dir / "trace.csv");
    trace.write_csv(f);
  }
  if (window > 0.0) {
    std::ofstream f(dir / "trace_avg.csv");
    lzs::running_average(trace, window).write_csv(f);
  }
  std::cout << "wrote " << trace.times.size() << " samples to " << (dir / "trace.csv").string() << '\n';
  return 0;
}

lzs::SweepResult read_result(const fs::path& dir) {
  if (fs::exists(dir / "result.csv")) {
    std::ifstream in(dir / "result.csv");
    return lzs::read_result_csv(in);
  }
  if (fs::exists(dir / "result.bin")) return lzs::read_result_binary(dir / "result.bin");
  throw lzs::InputError("no result.csv or result.bin in " + dir.string());
}

int cmd_cut(const Common& c, const std::string& axis, double at) {
  const fs::path dir(c.out);
  const lzs::SweepResult r = read_result(dir);
  const lzs::Axis fixed = axis == "A" ? lzs::Axis::kA : lzs::Axis::kEps0;
  const lzs::Curve curve = lzs::cut_1d(r, fixed, at);
  const std::string free = fixed == lzs::Axis::kA ? "eps0_over_omega" : "A_over_omega";
  std::ofstream f(dir / "cut.csv");
  f << free << ",value\n";
  for (std::size_t k = 0; k < curve.coords.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g,%.17g\n", curve.coords[k], curve.values[k]);
    f << buf;
  }
  std::cout << "cut at " << axis << " = " << curve.selected << " (requested " << curve.requested << "), "
            << curve.coords.size() << " points -> " << (dir / "cut.csv").string() << '\n';
  return 0;
}

// sweep ------------------------------------------------------------------------

json diagnostics_summary(const lzs::SweepResult& r) {
  long truncation = 0;
  double max_tail = 0.0, max_null = 0.0, max_pos = 0.0;
  std::map<std::string, long> methods;
  json failures = json::array();
  for (std::size_t k = 0; k < r.diagnostics.size(); ++k) {
    const auto& d = r.diagnostics[k];
    if (d.truncation_warning) ++truncation;
    max_tail = std::max(max_tail, d.fourier_tail);
    max_null = std::max(max_null, d.null_residual);
    max_pos = std::max(max_pos, d.positivity_deficit);
    if (!d.evolution_method.empty()) ++methods[d.evolution_method];
    if (d.failed && failures.size() < 50) failures.push_back({{"index", k}, {"message", d.message}});
  }
  long out_of_range = 0;
  for (double v : r.values) {
    if (!std::isnan(v) && (v < -1e-6 || v > 1.0 + 1e-6)) ++out_of_range;
  }
  return {{"failed_points", r.failed()},
          {"failures", failures},
          {"values_outside_unit_interval", out_of_range},
          {"truncation_warnings", truncation},
          {"max_fourier_tail", max_tail},
          {"max_null_residual", max_null},
          {"max_positivity_deficit", max_pos},
          {"evolution_methods", methods}};
}

int cmd_sweep(const Common& c, bool plot) {
  lzs::SweepConfig cfg = lzs::load_config(c.config);
  if (c.workers > 0) cfg.workers = c.workers;
  const fs::path dir = ensure_dir(c.out);
  const std::string hash = cfg.hash();
  const fs::path log_path = dir / "progress.log";

  std::map<long, double> known;
  if (c.resume) known = lzs::load_progress(log_path, hash);
  lzs::ProgressLog log(log_path, hash, c.resume);

  lzs::SweepRunOptions run;
  run.workers = cfg.workers;
  run.known = &known;
  const long total = cfg.grid.size();
  long done = static_cast<long>(known.size());
  const long stride = std::max(1L, total / 20);
  run.on_point = [&](long idx, double v) {
    log.record(idx, v);
    if (++done % stride == 0 || done == total) std::cerr << "\r" << done << "/" << total << " points" << std::flush;
  };
  const lzs::SweepResult result = lzs::run_sweep(cfg, run);
  std::cerr << '\n';

  if (c.format == "binary") {
    lzs::write_result_binary(dir / "result.bin", result);
  } else {
    std::ofstream f(dir / "result.csv");
    lzs::write_result_csv(f, result);
    if (!f) throw std::runtime_error("write failed for result.csv");
  }
  if (plot) lzs::emit_plot(result, dir / "heatmap.png");

  json meta;
  meta["config"] = cfg.to_json();
  meta["config_hash"] = hash;
  meta["defaults_applied"] = cfg.defaults_applied;
  meta["version"] = {{"lzs", LZS_VERSION},
                     {"compiler", __VERSION__},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
  meta["timing"] = {{"wall_seconds", result.wall_time},
                    {"points_computed", result.computed},
                    {"points_resumed", result.resumed},
                    {"seconds_per_point", result.computed > 0 ? result.wall_time / result.computed : 0.0},
                    {"workers", cfg.workers}};
  meta["diagnostics"] = diagnostics_summary(result);
  meta["output"] = {{"format", c.format}, {"layout", "row-major, A outer, eps0 inner, inclusive endpoints"}};
  json notes = json::array();
  notes.push_back("probabilities for unitary_avg are infinite-time averages (Floquet-diagonal period averages)");
  if (cfg.observable != lzs::ObservableKind::kUnitaryAvg) {
    notes.push_back("dissipative values are averaged over one drive period starting at the sample time");
    notes.push_back("Lamb shift and bath counter-term are not included in the master equation");
  }
  meta["notes"] = notes;
  std::ofstream(dir / "meta.json") << meta.dump(2) << '\n';

  const long failed = result.failed();
  std::cout << "sweep " << hash << ": " << total << " points (" << result.computed << " computed, " << result.resumed
            << " resumed), " << failed << " failed, " << result.wall_time << " s\n";
  if (failed * 100 > total) return kExitPartial;
  return 0;
}

// regions / plot ---------------------------------------------------------------

int cmd_regions(const Common& c) {
  const lzs::SweepConfig cfg = lzs::load_config(c.config);
  const fs::path dir = ensure_dir(c.out);
  lzs::SweepResult r;
  r.grid = cfg.grid;
  r.values.assign(static_cast<std::size_t>(cfg.grid.size()), std::nan(""));
  const double omega_r = cfg.params.omega_r / cfg.params.omega;  // in units of omega
  const lzs::ResonanceRegions regions = lzs::resonance_regions(omega_r, cfg.grid.rect());
  lzs::emit_overlay(regions, r, dir / "regions.json");
  std::cout << "regions present:";
  for (auto reg : regions.present) std::cout << ' ' << lzs::to_string(reg);
  std::cout << "\nwrote " << (dir / "regions.json").string() << '\n';
  return 0;
}

int cmd_plot(const Common& c, const std::string& palette, bool colorbar) {
  const fs::path dir(c.out);
  const lzs::SweepResult r = read_result(dir);
  lzs::PlotOptions opts;
  opts.palette = palette == "gray" ? lzs::Palette::kGray : lzs::Palette::kViridis;
  opts.colorbar = colorbar;
  lzs::emit_plot(r, dir / "heatmap.png", opts);
  std::cout << "wrote " << (dir / "heatmap.png").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven qubit-resonator LZS interferometry: Floquet spectra, traces and parameter sweeps"};
  app.require_subcommand(1);
  Common c;
  auto add_common = [&c](CLI::App* sub, bool need_config) {
    auto* opt = sub->add_option("--config", c.config, "run configuration (JSON)");
    if (need_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
  };

  double eps_min = -1.5, eps_max = 1.5;
  int steps = 601;
  auto* spectrum = app.add_subcommand("spectrum", "static spectrum vs bias (units of omega_r)");
  add_common(spectrum, false);
  spectrum->add_option("--eps-min", eps_min)->capture_default_str();
  spectrum->add_option("--eps-max", eps_max)->capture_default_str();
  spectrum->add_option("--steps", steps)->capture_default_str();

  double a = 0.0, e = 0.0;
  auto* floquet = app.add_subcommand("floquet", "quasienergies and averaged probability at one point");
  add_common(floquet, false);
  floquet->add_option("--A", a, "A/omega")->required();
  floquet->add_option("--eps0", e, "eps0/omega")->required();

  double periods = 100.0, window = 0.0, cut_at = 0.0;
  int stride = 16;
  std::string cut_axis;
  auto* trace = app.add_subcommand("trace", "time series at one point, or a 1-D cut of a finished sweep");
  add_common(trace, false);
  trace->add_option("--A", a, "A/omega");
  trace->add_option("--eps0", e, "eps0/omega");
  trace->add_option("--periods", periods, "length in drive periods")->capture_default_str();
  trace->add_option("--stride", stride, "sample stride (1/n_t periods)")->capture_default_str();
  trace->add_option("--window", window, "running-average window (periods)");
  trace->add_option("--cut", cut_axis, "fixed axis of a cut through <out>/result.*")->check(CLI::IsMember({"A", "eps0"}));
  trace->add_option("--at", cut_at, "coordinate of the cut (units of omega)");

  bool plot = false;
  auto* sweep = app.add_subcommand("sweep", "grid sweep over (A, eps0)");
  add_common(sweep, true);
  sweep->add_option("--workers", c.workers, "worker threads (overrides config)")->check(CLI::PositiveNumber);
  sweep->add_flag("--resume", c.resume, "continue from <out>/progress.log");
  sweep->add_option("--format", c.format)->check(CLI::IsMember({"csv", "binary"}))->capture_default_str();
  sweep->add_flag("--plot", plot, "also write heatmap.png");

  auto* regions = app.add_subcommand("regions", "resonance-region overlay for the config rectangle");
  add_common(regions, true);

  std::string palette = "viridis";
  bool no_colorbar = false;
  auto* plot_cmd = app.add_subcommand("plot", "heatmap.png from <out>/result.*");
  add_common(plot_cmd, false);
  plot_cmd->add_option("--palette", palette)->check(CLI::IsMember({"viridis", "gray"}))->capture_default_str();
  plot_cmd->add_flag("--no-colorbar", no_colorbar);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*spectrum) return cmd_spectrum(c, eps_min, eps_max, steps);
    if (*floquet) return cmd_floquet(c, a, e);
    if (*trace) {
      if (!cut_axis.empty()) return cmd_cut(c, cut_axis, cut_at);
      if (c.config.empty()) throw lzs::ConfigError({"trace: --config is required for time series"});
      return cmd_trace(c, a, e, periods, stride, window);
    }
    if (*sweep) return cmd_sweep(c, plot);
    if (*regions) return cmd_regions(c);
    if (*plot_cmd) return cmd_plot(c, palette, !no_colorbar);
  } catch (const lzs::ConfigError& err) {
    std::cerr << "config error: " << err.what() << '\n';
    return kExitConfig;
  } catch (const lzs::InputError& err) {
    std::cerr << "input error: " << err.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
