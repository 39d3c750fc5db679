#pragma once

// Run configuration, parallel (A, eps0) sweeps, result persistence, 1-D cuts,
// region overlays and heatmap output.
//
// Grid semantics: inclusive endpoints, row-major with A outer and eps0 inner;
// both axes are in units of the drive frequency omega.  Physical parameters
// in the config are in units of omega_r (which is therefore 1).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lzs/bath.hpp"
#include "lzs/floquet.hpp"
#include "lzs/hilbert_ops.hpp"
#include "lzs/unitary_dynamics.hpp"

namespace lzs {

enum class ModelKind { kRabi, kDjc, kQubitStructured };
enum class ObservableKind { kUnitaryAvg, kDissipativeAtTime, kDissipativeSteady };

std::string to_string(ModelKind m);
std::string to_string(ObservableKind o);

struct Grid {
  double a_min = 0.0, a_max = 0.0;
  int a_steps = 1;
  double eps0_min = 0.0, eps0_max = 0.0;
  int eps0_steps = 1;

  [[nodiscard]] double a(int i) const;
  [[nodiscard]] double eps0(int j) const;
  [[nodiscard]] long size() const { return static_cast<long>(a_steps) * eps0_steps; }
  [[nodiscard]] Rect rect() const { return {a_min, a_max, eps0_min, eps0_max}; }
};

struct Numerics {
  int n_t = 1024;
  int k_max = 200;
  double ode_tol = 1e-10;
  Integrator integrator = Integrator::kMagnus;
};

struct SweepConfig {
  ModelKind model = ModelKind::kRabi;
  int djc_n = 3;                      // model == djc: photon index; eps0 axis is delta0
  SystemParams params;                // eps0 and amp are overwritten per point
  std::optional<BathSpec> bath;
  Grid grid;
  ObservableKind observable = ObservableKind::kUnitaryAvg;
  double t_over_tau = 0.0;            // dissipative_at_time
  std::string initial_label;          // empty when amplitudes are given
  std::vector<cplx> initial_amplitudes;
  Numerics numerics;
  int workers = 1;
  std::vector<std::string> defaults_applied;

  /// Normalized config (all defaults filled in), the input of hash().
  [[nodiscard]] nlohmann::json to_json() const;
  /// 16 hex digits; independent of `workers`.
  [[nodiscard]] std::string hash() const;
  [[nodiscard]] Vector initial_state() const;
  [[nodiscard]] int dim() const;
};

/// Thrown by validate_config with every problem found.
class ConfigError : public InputError {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  [[nodiscard]] const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Strict schema check (unknown keys rejected) plus defaults:
/// delta 0.0038, omega 0.0375, g 0.0019, n_max 3, kappa 0.001,
/// omega_d 12.5, T 0.0175 (all over omega_r).
SweepConfig validate_config(const nlohmann::json& raw);
SweepConfig load_config(const std::filesystem::path& path);

struct PointDiagnostic {
  bool failed = false;
  std::string message;
  bool truncation_warning = false;
  double fourier_tail = 0.0;
  double null_residual = 0.0;
  double positivity_deficit = 0.0;
  std::string evolution_method;
};

/// Single grid point (A and eps0 in units of omega).
double evaluate_point(const SweepConfig& cfg, double a_over_omega, double eps0_over_omega,
                      PointDiagnostic* diag = nullptr);

struct SweepResult {
  Grid grid;
  std::vector<double> values;          // size grid.size(), NaN for failures
  std::vector<PointDiagnostic> diagnostics;
  std::string config_hash;
  double wall_time = 0.0;              // seconds
  long computed = 0;                   // points evaluated in this run
  long resumed = 0;                    // points taken from a previous run

  [[nodiscard]] double at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.eps0_steps + j]; }
  [[nodiscard]] long failed() const;
};

struct SweepRunOptions {
  int workers = 0;                                     // 0: take cfg.workers
  const std::map<long, double>* known = nullptr;       // resume: index -> value
  std::function<void(long, double)> on_point;          // called serialized
};

/// Independent evaluation of every point; output is identical for any worker
/// count.  Failures become NaN with a diagnostic; the sweep never aborts.
SweepResult run_sweep(const SweepConfig& cfg, const SweepRunOptions& opts = {});

// Persistence ---------------------------------------------------------------

/// "A_over_omega,eps0_over_omega,value"; values with 17 significant digits.
void write_result_csv(std::ostream& out, const SweepResult& r);
SweepResult read_result_csv(std::istream& in);

/// char[8] "LZSSWP01", uint32 a_steps, uint32 eps0_steps, float64 a_min, a_max,
/// eps0_min, eps0_max, float64[a_steps*eps0_steps] values (little-endian).
void write_result_binary(const std::filesystem::path& path, const SweepResult& r);
SweepResult read_result_binary(const std::filesystem::path& path);

/// Progress log for --resume: a header with the config hash, then one
/// "index,value" line per finished point.
class ProgressLog {
 public:
  ProgressLog(const std::filesystem::path& path, const std::string& config_hash, bool append);
  ~ProgressLog();
  ProgressLog(const ProgressLog&) = delete;
  ProgressLog& operator=(const ProgressLog&) = delete;

  void record(long index, double value);

 private:
  std::FILE* file_ = nullptr;
};

/// Finished points of a previous run with the same hash (NaN entries are
/// dropped so that failed points are retried).  Empty when the file is
/// missing; throws InputError on a hash mismatch.
std::map<long, double> load_progress(const std::filesystem::path& path, const std::string& config_hash);

// Post-processing -------------------------------------------------------------

enum class Axis { kA, kEps0 };

struct Curve {
  Axis axis = Axis::kA;        // the fixed axis
  double requested = 0.0;
  double selected = 0.0;       // grid coordinate actually used
  std::vector<double> coords;  // along the free axis
  std::vector<double> values;
};

/// Nearest grid line at `value` of the fixed axis.
Curve cut_1d(const SweepResult& r, Axis fixed_axis, double value);

/// JSON overlay with the region boundaries; `regions` must be built for the
/// sweep rectangle in units of omega.
void emit_overlay(const ResonanceRegions& regions, const SweepResult& r, const std::filesystem::path& out);

enum class Palette { kViridis, kGray };

struct PlotOptions {
  Palette palette = Palette::kViridis;
  bool colorbar = true;
  int cell_pixels = 0;  // 0: chosen from the grid size
};

/// PNG heatmap, eps0 horizontal, A vertical (increasing upwards), values
/// mapped from [0, 1]; NaN cells drawn black.
void emit_plot(const SweepResult& r, const std::filesystem::path& out, const PlotOptions& opts = {});

}  // namespace lzs
