#include "lzs/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <png.h>

#include "lzs/fbm.hpp"

namespace lzs {

using nlohmann::json;

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::kRabi: return "rabi";
    case ModelKind::kDjc: return "djc";
    case ModelKind::kQubitStructured: return "qubit_structured";
  }
  return "?";
}

std::string to_string(ObservableKind o) {
  switch (o) {
    case ObservableKind::kUnitaryAvg: return "unitary_avg";
    case ObservableKind::kDissipativeAtTime: return "dissipative_at_time";
    case ObservableKind::kDissipativeSteady: return "dissipative_steady";
  }
  return "?";
}

double Grid::a(int i) const {
  if (a_steps == 1) return a_min;
  return a_min + (a_max - a_min) * i / (a_steps - 1);
}

double Grid::eps0(int j) const {
  if (eps0_steps == 1) return eps0_min;
  return eps0_min + (eps0_max - eps0_min) * j / (eps0_steps - 1);
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : InputError([&errors] {
        std::string msg = "invalid config:";
        for (const auto& e : errors) msg += "\n  - " + e;
        return msg;
      }()),
      errors_(std::move(errors)) {}

// Config ---------------------------------------------------------------------

namespace {

class Reader {
 public:
  std::vector<std::string> errors;
  std::vector<std::string> defaults;

  void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
      const bool ok = std::any_of(allowed.begin(), allowed.end(), [&key](const char* k) { return key == k; });
      if (!ok) errors.push_back("unknown key '" + where + key + "'");
    }
  }

  double number(const json& obj, const std::string& where, const char* key, std::optional<double> fallback) {
    if (!obj.contains(key)) {
      if (!fallback) {
        errors.push_back("missing key '" + where + key + "'");
        return 0.0;
      }
      defaults.push_back(where + key + " = " + fmt(*fallback));
      return *fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
      errors.push_back("'" + where + key + "' must be a number");
      return fallback.value_or(0.0);
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) errors.push_back("'" + where + key + "' must be finite");
    return x;
  }

  long integer(const json& obj, const std::string& where, const char* key, std::optional<long> fallback) {
    if (!obj.contains(key)) {
      if (!fallback) {
        errors.push_back("missing key '" + where + key + "'");
        return 0;
      }
      defaults.push_back(where + key + " = " + std::to_string(*fallback));
      return *fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      errors.push_back("'" + where + key + "' must be an integer");
      return fallback.value_or(0);
    }
    return v.get<long>();
  }

  std::string text(const json& obj, const std::string& where, const char* key, std::optional<std::string> fallback) {
    if (!obj.contains(key)) {
      if (!fallback) {
        errors.push_back("missing key '" + where + key + "'");
        return {};
      }
      defaults.push_back(where + key + " = " + *fallback);
      return *fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_string()) {
      errors.push_back("'" + where + key + "' must be a string");
      return fallback.value_or("");
    }
    return v.get<std::string>();
  }

  const json* object(const json& obj, const std::string& key, bool required) {
    if (!obj.contains(key)) {
      if (required) errors.push_back("missing object '" + key + "'");
      return nullptr;
    }
    if (!obj.at(key).is_object()) {
      errors.push_back("'" + key + "' must be an object");
      return nullptr;
    }
    return &obj.at(key);
  }

  static std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
  }
};

const json kEmpty = json::object();

}  // namespace

SweepConfig validate_config(const json& raw) {
  if (!raw.is_object()) throw ConfigError({"config must be a JSON object"});
  Reader rd;
  SweepConfig cfg;
  rd.check_keys(raw, "", {"model", "djc_n", "params", "bath", "grid", "observable", "t_over_tau",
                          "initial_state", "numerics", "workers"});

  const std::string model = rd.text(raw, "", "model", std::string("rabi"));
  if (model == "rabi") {
    cfg.model = ModelKind::kRabi;
  } else if (model == "djc") {
    cfg.model = ModelKind::kDjc;
  } else if (model == "qubit_structured") {
    cfg.model = ModelKind::kQubitStructured;
  } else {
    rd.errors.push_back("model must be one of rabi, djc, qubit_structured");
  }
  if (cfg.model == ModelKind::kDjc) {
    cfg.djc_n = static_cast<int>(rd.integer(raw, "", "djc_n", 3L));
    if (cfg.djc_n < 0) rd.errors.push_back("djc_n must be >= 0");
  } else if (raw.contains("djc_n")) {
    rd.errors.push_back("djc_n is only valid with model = djc");
  }

  // System parameters, units of omega_r.
  {
    const json* p = rd.object(raw, "params", false);
    const json& obj = p ? *p : kEmpty;
    rd.check_keys(obj, "params.", {"delta_over_omega_r", "omega_over_omega_r", "g_over_omega_r", "n_max"});
    cfg.params.omega_r = 1.0;
    cfg.params.delta = rd.number(obj, "params.", "delta_over_omega_r", 0.0038);
    cfg.params.omega = rd.number(obj, "params.", "omega_over_omega_r", 0.0375);
    cfg.params.g = rd.number(obj, "params.", "g_over_omega_r", 0.0019);
    cfg.params.n_max = static_cast<int>(rd.integer(obj, "params.", "n_max", 3L));
    if (cfg.params.delta < 0.0) rd.errors.push_back("params.delta_over_omega_r must be >= 0");
    if (!(cfg.params.omega > 0.0)) rd.errors.push_back("params.omega_over_omega_r must be > 0");
    if (cfg.params.g < 0.0) rd.errors.push_back("params.g_over_omega_r must be >= 0");
    if (cfg.params.n_max < 0 || cfg.params.n_max > 64) rd.errors.push_back("params.n_max must lie in [0, 64]");
  }

  // Grid, units of omega.
  if (const json* g = rd.object(raw, "grid", true)) {
    rd.check_keys(*g, "grid.", {"A_over_omega_min", "A_over_omega_max", "A_steps", "eps0_over_omega_min",
                                "eps0_over_omega_max", "eps0_steps"});
    cfg.grid.a_min = rd.number(*g, "grid.", "A_over_omega_min", std::nullopt);
    cfg.grid.a_max = rd.number(*g, "grid.", "A_over_omega_max", std::nullopt);
    const long as = rd.integer(*g, "grid.", "A_steps", std::nullopt);
    cfg.grid.eps0_min = rd.number(*g, "grid.", "eps0_over_omega_min", std::nullopt);
    cfg.grid.eps0_max = rd.number(*g, "grid.", "eps0_over_omega_max", std::nullopt);
    const long es = rd.integer(*g, "grid.", "eps0_steps", std::nullopt);
    if (as < 1) rd.errors.push_back("grid.A_steps must be >= 1");
    if (es < 1) rd.errors.push_back("grid.eps0_steps must be >= 1");
    if (as > 100000 || es > 100000) rd.errors.push_back("grid steps must be <= 100000");
    cfg.grid.a_steps = static_cast<int>(std::clamp(as, 1L, 100000L));
    cfg.grid.eps0_steps = static_cast<int>(std::clamp(es, 1L, 100000L));
    if (cfg.grid.a_min < 0.0) rd.errors.push_back("grid.A_over_omega_min must be >= 0");
    if (cfg.grid.a_min > cfg.grid.a_max) rd.errors.push_back("grid: A range is empty (min > max)");
    if (cfg.grid.eps0_min > cfg.grid.eps0_max) rd.errors.push_back("grid: eps0 range is empty (min > max)");
  }

  const std::string obs = rd.text(raw, "", "observable", std::string("unitary_avg"));
  if (obs == "unitary_avg") {
    cfg.observable = ObservableKind::kUnitaryAvg;
  } else if (obs == "dissipative_at_time") {
    cfg.observable = ObservableKind::kDissipativeAtTime;
  } else if (obs == "dissipative_steady") {
    cfg.observable = ObservableKind::kDissipativeSteady;
  } else {
    rd.errors.push_back("observable must be one of unitary_avg, dissipative_at_time, dissipative_steady");
  }
  const bool dissipative = cfg.observable != ObservableKind::kUnitaryAvg;
  if (cfg.observable == ObservableKind::kDissipativeAtTime) {
    cfg.t_over_tau = rd.number(raw, "", "t_over_tau", std::nullopt);
    if (cfg.t_over_tau < 0.0) rd.errors.push_back("t_over_tau must be >= 0");
  } else if (raw.contains("t_over_tau")) {
    rd.errors.push_back("t_over_tau is only valid with observable = dissipative_at_time");
  }

  // Bath.
  if (raw.contains("bath")) {
    if (!dissipative) {
      rd.errors.push_back("a bath is set but observable = unitary_avg describes the closed system");
    }
    if (const json* b = rd.object(raw, "bath", false)) {
      rd.check_keys(*b, "bath.", {"model", "kappa", "omega_d_over_omega_r", "temperature_over_omega_r"});
      const std::string fallback = cfg.model == ModelKind::kQubitStructured ? "structured" : "ohmic";
      const std::string bm = rd.text(*b, "bath.", "model", fallback);
      BathSpec spec;
      spec.kappa = rd.number(*b, "bath.", "kappa", 0.001);
      spec.temperature = rd.number(*b, "bath.", "temperature_over_omega_r", 0.0175);
      if (bm == "ohmic") {
        spec.model = BathModel::kOhmic;
        spec.omega_d = rd.number(*b, "bath.", "omega_d_over_omega_r", 12.5);
        if (cfg.model == ModelKind::kQubitStructured) {
          rd.errors.push_back("model qubit_structured needs bath.model = structured");
        }
      } else if (bm == "structured") {
        spec.model = BathModel::kStructured;
        if (b->contains("omega_d_over_omega_r")) {
          rd.errors.push_back("bath.omega_d_over_omega_r is only valid for the ohmic bath");
        }
        spec.g = cfg.params.g;
        spec.omega_r = 1.0;
        if (cfg.model == ModelKind::kRabi) {
          rd.errors.push_back("the structured bath replaces the resonator; use model = qubit_structured");
        }
      } else {
        rd.errors.push_back("bath.model must be ohmic or structured");
      }
      if (!(spec.kappa > 0.0)) rd.errors.push_back("bath.kappa must be > 0");
      if (spec.temperature < 0.0) rd.errors.push_back("bath.temperature_over_omega_r must be >= 0");
      if (spec.model == BathModel::kOhmic && !(spec.omega_d > 0.0)) {
        rd.errors.push_back("bath.omega_d_over_omega_r must be > 0");
      }
      cfg.bath = spec;
    }
  } else if (dissipative) {
    rd.errors.push_back("observable = " + obs + " needs a bath");
  }
  if (dissipative && cfg.model == ModelKind::kDjc) {
    rd.errors.push_back("the djc model is closed; dissipative observables need model rabi or qubit_structured");
  }

  // Numerics.
  {
    const json* n = rd.object(raw, "numerics", false);
    const json& obj = n ? *n : kEmpty;
    rd.check_keys(obj, "numerics.", {"n_t", "k_max", "ode_tol", "integrator"});
    cfg.numerics.n_t = static_cast<int>(rd.integer(obj, "numerics.", "n_t", 1024L));
    cfg.numerics.ode_tol = rd.number(obj, "numerics.", "ode_tol", 1e-10);
    const std::string integ = rd.text(obj, "numerics.", "integrator", std::string("magnus"));
    if (integ == "magnus") {
      cfg.numerics.integrator = Integrator::kMagnus;
    } else if (integ == "rk") {
      cfg.numerics.integrator = Integrator::kRungeKutta;
    } else {
      rd.errors.push_back("numerics.integrator must be magnus or rk");
    }
    if (cfg.numerics.n_t < 8 || cfg.numerics.n_t % 2 != 0 || cfg.numerics.n_t > (1 << 20)) {
      rd.errors.push_back("numerics.n_t must be even and in [8, 2^20]");
    }
    if (!(cfg.numerics.ode_tol > 0.0 && cfg.numerics.ode_tol <= 1e-4)) {
      rd.errors.push_back("numerics.ode_tol must lie in (0, 1e-4]");
    }
    if (dissipative) {
      const long fallback = std::min(200L, static_cast<long>(cfg.numerics.n_t / 2 - 1));
      cfg.numerics.k_max = static_cast<int>(rd.integer(obj, "numerics.", "k_max", fallback));
      if (cfg.numerics.k_max < 1 || cfg.numerics.k_max > cfg.numerics.n_t / 2 - 1) {
        rd.errors.push_back("numerics.k_max must lie in [1, n_t/2 - 1]");
      }
    } else if (obj.contains("k_max")) {
      rd.errors.push_back("numerics.k_max only applies to dissipative observables");
    }
  }

  // Initial state.
  const std::string default_label = cfg.model == ModelKind::kRabi ? "down,0" : "down";
  if (raw.contains("initial_state") && raw.at("initial_state").is_array()) {
    for (const auto& amp : raw.at("initial_state")) {
      if (amp.is_number()) {
        cfg.initial_amplitudes.emplace_back(amp.get<double>(), 0.0);
      } else if (amp.is_array() && amp.size() == 2 && amp[0].is_number() && amp[1].is_number()) {
        cfg.initial_amplitudes.emplace_back(amp[0].get<double>(), amp[1].get<double>());
      } else {
        rd.errors.push_back("initial_state amplitudes must be numbers or [re, im] pairs");
        break;
      }
    }
  } else {
    cfg.initial_label = rd.text(raw, "", "initial_state", default_label);
  }

  cfg.workers = static_cast<int>(rd.integer(raw, "", "workers", 1L));
  if (cfg.workers < 1 || cfg.workers > 1024) rd.errors.push_back("workers must lie in [1, 1024]");

  if (rd.errors.empty()) {
    try {
      const Vector psi = cfg.initial_state();
      (void)psi;
    } catch (const InputError& e) {
      rd.errors.push_back(std::string("initial_state: ") + e.what());
    }
  }
  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  cfg.defaults_applied = rd.defaults;
  return cfg;
}

SweepConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path.string()});
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("JSON parse error: ") + e.what()});
  }
  return validate_config(raw);
}

int SweepConfig::dim() const { return model == ModelKind::kRabi ? 2 * (params.n_max + 1) : 2; }

Vector SweepConfig::initial_state() const {
  const int d = dim();
  if (!initial_amplitudes.empty()) {
    if (static_cast<int>(initial_amplitudes.size()) != d) {
      throw InputError("expected " + std::to_string(d) + " amplitudes");
    }
    Vector v(d);
    for (int i = 0; i < d; ++i) v(i) = initial_amplitudes[static_cast<std::size_t>(i)];
    if (std::abs(v.norm() - 1.0) > 1e-9) throw InputError("amplitudes are not normalized");
    return v;
  }
  switch (model) {
    case ModelKind::kRabi:
      return basis_state(d, parse_basis_label(initial_label, params.n_max));
    case ModelKind::kDjc: {
      // Doublet {|up,n>, |down,n+1>}: "down" means |down,n+1>.
      const std::string n_lo = std::to_string(djc_n), n_hi = std::to_string(djc_n + 1);
      if (initial_label == "down" || initial_label == "down," + n_hi) return basis_state(2, 1);
      if (initial_label == "up" || initial_label == "up," + n_lo) return basis_state(2, 0);
      throw InputError("djc initial state must be 'down' (|down,n+1>) or 'up' (|up,n>)");
    }
    case ModelKind::kQubitStructured:
      return basis_state(2, parse_basis_label(initial_label, -1));
  }
  throw InputError("unknown model");
}

json SweepConfig::to_json() const {
  json j;
  j["model"] = to_string(model);
  if (model == ModelKind::kDjc) j["djc_n"] = djc_n;
  j["params"] = {{"delta_over_omega_r", params.delta},
                 {"omega_over_omega_r", params.omega},
                 {"g_over_omega_r", params.g},
                 {"n_max", params.n_max}};
  if (bath) {
    json b = {{"model", bath->model_name()},
              {"kappa", bath->kappa},
              {"temperature_over_omega_r", bath->temperature}};
    if (bath->model == BathModel::kOhmic) b["omega_d_over_omega_r"] = bath->omega_d;
    j["bath"] = b;
  }
  j["grid"] = {{"A_over_omega_min", grid.a_min},     {"A_over_omega_max", grid.a_max},
               {"A_steps", grid.a_steps},            {"eps0_over_omega_min", grid.eps0_min},
               {"eps0_over_omega_max", grid.eps0_max}, {"eps0_steps", grid.eps0_steps}};
  j["observable"] = to_string(observable);
  if (observable == ObservableKind::kDissipativeAtTime) j["t_over_tau"] = t_over_tau;
  if (initial_amplitudes.empty()) {
    j["initial_state"] = initial_label;
  } else {
    json amps = json::array();
    for (const auto& a : initial_amplitudes) amps.push_back({a.real(), a.imag()});
    j["initial_state"] = amps;
  }
  j["numerics"] = {{"n_t", numerics.n_t},
                   {"ode_tol", numerics.ode_tol},
                   {"integrator", numerics.integrator == Integrator::kMagnus ? "magnus" : "rk"}};
  if (observable != ObservableKind::kUnitaryAvg) j["numerics"]["k_max"] = numerics.k_max;
  j["workers"] = workers;
  return j;
}

std::string SweepConfig::hash() const {
  json j = to_json();
  j.erase("workers");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Evaluation -----------------------------------------------------------------

double evaluate_point(const SweepConfig& cfg, double a_over_omega, double eps0_over_omega,
                      PointDiagnostic* diag) {
  SystemParams p = cfg.params;
  p.amp = a_over_omega * p.omega;
  p.eps0 = eps0_over_omega * p.omega;
  const PropagatorOptions po{cfg.numerics.n_t, cfg.numerics.ode_tol, cfg.numerics.integrator};
  const Vector psi0 = cfg.initial_state();

  if (cfg.observable == ObservableKind::kUnitaryAvg) {
    switch (cfg.model) {
      case ModelKind::kRabi: {
        const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), po);
        return time_averaged_probability(sol, psi0, up_projector(p.n_max).entries());
      }
      case ModelKind::kDjc: {
        DjcParams d = DjcParams::from_system(p, cfg.djc_n);
        d.delta0 = p.eps0;  // the eps0 axis is delta0 for this model
        const FloquetSolution sol = solve_floquet(djc_hamiltonian(d), po);
        Matrix target = Matrix::Zero(2, 2);
        target(0, 0) = 1.0;  // |up,n>
        return time_averaged_probability(sol, psi0, target);
      }
      case ModelKind::kQubitStructured: {
        const FloquetSolution sol = solve_floquet(qubit_hamiltonian(p), po);
        Matrix up = Matrix::Zero(2, 2);
        up(1, 1) = 1.0;
        return time_averaged_probability(sol, psi0, up);
      }
    }
  }

  DissipativeOptions dopt;
  dopt.numerics = po;
  dopt.k_max = cfg.numerics.k_max;
  if (cfg.observable == ObservableKind::kDissipativeAtTime) {
    dopt.times_over_tau = {cfg.t_over_tau};
    dopt.steady = false;
  }
  DissipativeResult res;
  if (cfg.model == ModelKind::kQubitStructured) {
    BathSpec b = *cfg.bath;
    b.g = p.g;
    b.omega_r = p.omega_r;
    res = structured_bath_run(p, b, psi0, dopt);
  } else {
    const Matrix x = tensor(identity(2, BasisTag::qubit()), annihilation_op(p.n_max) + creation_op(p.n_max)).entries();
    res = dissipative_run(rabi_hamiltonian(p), x, up_projector(p.n_max).entries(), *cfg.bath, psi0, dopt);
  }
  if (diag) {
    diag->truncation_warning = res.truncation_warning;
    diag->fourier_tail = res.fourier_tail;
    diag->null_residual = res.null_residual;
    diag->positivity_deficit = res.positivity_deficit;
    diag->evolution_method = res.evolution_method;
  }
  return dopt.steady ? res.steady_p_up : res.p_up_vs_time.values.front();
}

long SweepResult::failed() const {
  return static_cast<long>(std::count_if(values.begin(), values.end(), [](double v) { return std::isnan(v); }));
}

SweepResult run_sweep(const SweepConfig& cfg, const SweepRunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  SweepResult out;
  out.grid = cfg.grid;
  out.config_hash = cfg.hash();
  const long n = cfg.grid.size();
  out.values.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());
  out.diagnostics.assign(static_cast<std::size_t>(n), {});

  std::atomic<long> next{0};
  std::atomic<long> computed{0};
  std::mutex report;
  auto worker = [&] {
    for (long idx = next++; idx < n; idx = next++) {
      const auto k = static_cast<std::size_t>(idx);
      if (opts.known) {
        if (auto it = opts.known->find(idx); it != opts.known->end()) {
          out.values[k] = it->second;
          continue;
        }
      }
      const int i = static_cast<int>(idx / cfg.grid.eps0_steps);
      const int j = static_cast<int>(idx % cfg.grid.eps0_steps);
      PointDiagnostic& diag = out.diagnostics[k];
      double value = std::numeric_limits<double>::quiet_NaN();
      try {
        value = evaluate_point(cfg, cfg.grid.a(i), cfg.grid.eps0(j), &diag);
        if (!std::isfinite(value)) throw NumericalError("non-finite observable");
      } catch (const std::exception& e) {
        value = std::numeric_limits<double>::quiet_NaN();
        diag.failed = true;
        diag.message = e.what();
      }
      out.values[k] = value;
      ++computed;
      if (opts.on_point) {
        const std::lock_guard<std::mutex> lock(report);
        opts.on_point(idx, value);
      }
    }
  };

  const int workers = std::max(1, opts.workers > 0 ? opts.workers : cfg.workers);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  out.computed = computed.load();
  out.resumed = n - out.computed;
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

// Persistence ----------------------------------------------------------------

namespace {

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_coord(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw InputError("bad number '" + s + "'");
  return v;
}

// Recovers inclusive-endpoint axis parameters from sorted distinct coordinates.
void axis_from_coords(const std::vector<double>& c, double& lo, double& hi, int& steps) {
  if (c.empty()) throw InputError("empty axis");
  lo = c.front();
  hi = c.back();
  steps = static_cast<int>(c.size());
}

}  // namespace

void write_result_csv(std::ostream& out, const SweepResult& r) {
  out << "A_over_omega,eps0_over_omega,value\n";
  for (int i = 0; i < r.grid.a_steps; ++i) {
    const std::string a = format_coord(r.grid.a(i));
    for (int j = 0; j < r.grid.eps0_steps; ++j) {
      out << a << ',' << format_coord(r.grid.eps0(j)) << ',' << format_value(r.at(i, j)) << '\n';
    }
  }
}

SweepResult read_result_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("A_over_omega,eps0_over_omega,value", 0) != 0) {
    throw InputError("not a sweep result CSV (bad header)");
  }
  std::vector<double> as, es, vals;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, e, v;
    if (!std::getline(ss, a, ',') || !std::getline(ss, e, ',') || !std::getline(ss, v)) {
      throw InputError("malformed CSV line: " + line);
    }
    as.push_back(parse_double(a));
    es.push_back(parse_double(e));
    vals.push_back(parse_double(v));
  }
  if (vals.empty()) throw InputError("sweep result CSV has no rows");
  // Row-major with A outer: eps0 coordinates repeat with period eps0_steps.
  std::size_t ne = 1;
  while (ne < es.size() && as[ne] == as[0]) ++ne;
  if (vals.size() % ne != 0) throw InputError("CSV rows do not form a rectangular grid");
  std::vector<double> acoords, ecoords(es.begin(), es.begin() + static_cast<long>(ne));
  for (std::size_t i = 0; i < vals.size(); i += ne) acoords.push_back(as[i]);
  SweepResult r;
  axis_from_coords(acoords, r.grid.a_min, r.grid.a_max, r.grid.a_steps);
  axis_from_coords(ecoords, r.grid.eps0_min, r.grid.eps0_max, r.grid.eps0_steps);
  r.values = std::move(vals);
  r.diagnostics.assign(r.values.size(), {});
  return r;
}

namespace {

constexpr char kSweepMagic[8] = {'L', 'Z', 'S', 'S', 'W', 'P', '0', '1'};
static_assert(std::endian::native == std::endian::little, "binary result format assumes a little-endian host");

}  // namespace

void write_result_binary(const std::filesystem::path& path, const SweepResult& r) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kSweepMagic, 8);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(r.grid.a_steps),
                                 static_cast<std::uint32_t>(r.grid.eps0_steps)};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  const double box[4] = {r.grid.a_min, r.grid.a_max, r.grid.eps0_min, r.grid.eps0_max};
  out.write(reinterpret_cast<const char*>(box), sizeof box);
  out.write(reinterpret_cast<const char*>(r.values.data()),
            static_cast<std::streamsize>(r.values.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

SweepResult read_result_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kSweepMagic, 8) != 0) throw InputError("not a sweep result file");
  std::uint32_t dims[2];
  double box[4];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  in.read(reinterpret_cast<char*>(box), sizeof box);
  SweepResult r;
  r.grid = {box[0], box[1], static_cast<int>(dims[0]), box[2], box[3], static_cast<int>(dims[1])};
  r.values.resize(static_cast<std::size_t>(r.grid.size()));
  in.read(reinterpret_cast<char*>(r.values.data()), static_cast<std::streamsize>(r.values.size() * sizeof(double)));
  if (!in) throw InputError("truncated sweep result file");
  r.diagnostics.assign(r.values.size(), {});
  return r;
}

ProgressLog::ProgressLog(const std::filesystem::path& path, const std::string& config_hash, bool append) {
  const bool exists = std::filesystem::exists(path);
  file_ = std::fopen(path.c_str(), append ? "a" : "w");
  if (!file_) throw std::runtime_error("cannot open progress log " + path.string());
  if (!append || !exists) std::fprintf(file_, "# lzs-progress %s\n", config_hash.c_str());
  std::fflush(file_);
}

ProgressLog::~ProgressLog() {
  if (file_) std::fclose(file_);
}

void ProgressLog::record(long index, double value) {
  std::fprintf(file_, "%ld,%s\n", index, format_value(value).c_str());
  std::fflush(file_);
}

std::map<long, double> load_progress(const std::filesystem::path& path, const std::string& config_hash) {
  std::map<long, double> known;
  std::ifstream in(path);
  if (!in) return known;
  std::string line;
  if (!std::getline(in, line)) return known;
  if (line != "# lzs-progress " + config_hash) {
    throw InputError("progress log " + path.string() + " belongs to a different config");
  }
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    if (comma == std::string::npos) continue;  // torn last line
    try {
      const long idx = std::stol(line.substr(0, comma));
      const double v = parse_double(line.substr(comma + 1));
      if (!std::isnan(v)) known[idx] = v;
    } catch (const std::exception&) {
      continue;
    }
  }
  return known;
}

// Post-processing ------------------------------------------------------------

Curve cut_1d(const SweepResult& r, Axis fixed_axis, double value) {
  const bool along_a = fixed_axis == Axis::kA;
  const double lo = along_a ? r.grid.a_min : r.grid.eps0_min;
  const double hi = along_a ? r.grid.a_max : r.grid.eps0_max;
  const int steps = along_a ? r.grid.a_steps : r.grid.eps0_steps;
  const double slack = 1e-9 * std::max({1.0, std::abs(lo), std::abs(hi)});
  if (!std::isfinite(value) || value < lo - slack || value > hi + slack) {
    throw InputError("cut position outside the grid range");
  }
  int best = 0;
  for (int k = 1; k < steps; ++k) {
    const double ck = along_a ? r.grid.a(k) : r.grid.eps0(k);
    const double cb = along_a ? r.grid.a(best) : r.grid.eps0(best);
    if (std::abs(ck - value) < std::abs(cb - value)) best = k;
  }
  Curve c;
  c.axis = fixed_axis;
  c.requested = value;
  c.selected = along_a ? r.grid.a(best) : r.grid.eps0(best);
  if (along_a) {
    for (int j = 0; j < r.grid.eps0_steps; ++j) {
      c.coords.push_back(r.grid.eps0(j));
      c.values.push_back(r.at(best, j));
    }
  } else {
    for (int i = 0; i < r.grid.a_steps; ++i) {
      c.coords.push_back(r.grid.a(i));
      c.values.push_back(r.at(i, best));
    }
  }
  return c;
}

void emit_overlay(const ResonanceRegions& regions, const SweepResult& r, const std::filesystem::path& out) {
  if (r.values.empty() || r.grid.size() == 0) throw InputError("cannot build an overlay for an empty grid");
  const Rect g = r.grid.rect();
  const auto close = [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x)); };
  if (!close(g.a_min, regions.rect.a_min) || !close(g.a_max, regions.rect.a_max) ||
      !close(g.eps0_min, regions.rect.eps0_min) || !close(g.eps0_max, regions.rect.eps0_max)) {
    throw InputError("overlay rectangle does not match the sweep grid");
  }
  json j;
  j["units"] = "omega";
  j["omega_r"] = regions.omega_r;
  j["rect"] = {{"A_min", g.a_min}, {"A_max", g.a_max}, {"eps0_min", g.eps0_min}, {"eps0_max", g.eps0_max}};
  json lines = json::array();
  for (const auto& pl : regions.boundaries) {
    json pts = json::array();
    for (const auto& [a, e] : pl.points) pts.push_back({a, e});
    lines.push_back({{"label", pl.label}, {"points", pts}});
  }
  j["boundaries"] = lines;
  json present = json::array();
  for (Region reg : regions.present) present.push_back(to_string(reg));
  j["regions"] = present;
  json cells = json::array();
  for (int i = 0; i < r.grid.a_steps; ++i) {
    json row = json::array();
    for (int k = 0; k < r.grid.eps0_steps; ++k) row.push_back(to_string(regions.classify(r.grid.a(i), r.grid.eps0(k))));
    cells.push_back(row);
  }
  j["cells"] = cells;
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot write " + out.string());
  f << j.dump(1) << '\n';
  if (!f) throw std::runtime_error("write failed for " + out.string());
}

namespace {

struct Rgb {
  unsigned char r, g, b;
};

Rgb palette_color(Palette p, double v) {
  if (std::isnan(v)) return {0, 0, 0};
  v = std::clamp(v, 0.0, 1.0);
  if (p == Palette::kGray) {
    const auto c = static_cast<unsigned char>(std::lround(255.0 * v));
    return {c, c, c};
  }
  static const double anchors[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  const double x = v * 4.0;
  const int k = std::min(3, static_cast<int>(x));
  const double f = x - k;
  auto mix = [&](int c) {
    return static_cast<unsigned char>(std::lround(anchors[k][c] + f * (anchors[k + 1][c] - anchors[k][c])));
  };
  return {mix(0), mix(1), mix(2)};
}

}  // namespace

void emit_plot(const SweepResult& r, const std::filesystem::path& out, const PlotOptions& opts) {
  if (r.values.empty()) throw InputError("cannot plot an empty result");
  const int nx = r.grid.eps0_steps;
  const int ny = r.grid.a_steps;
  const int cell = opts.cell_pixels > 0 ? opts.cell_pixels : std::clamp(800 / std::max(nx, ny), 1, 32);
  const int map_w = nx * cell;
  const int map_h = ny * cell;
  const int bar_gap = opts.colorbar ? 6 : 0;
  const int bar_w = opts.colorbar ? 20 : 0;
  const int width = map_w + bar_gap + bar_w;
  const int height = map_h;

  std::vector<unsigned char> image(static_cast<std::size_t>(width) * height * 3, 255);
  auto put = [&](int x, int y, Rgb c) {
    const std::size_t o = (static_cast<std::size_t>(y) * width + x) * 3;
    image[o] = c.r;
    image[o + 1] = c.g;
    image[o + 2] = c.b;
  };
  for (int y = 0; y < map_h; ++y) {
    const int i = ny - 1 - y / cell;  // A increases upwards
    for (int x = 0; x < map_w; ++x) put(x, y, palette_color(opts.palette, r.at(i, x / cell)));
  }
  if (opts.colorbar) {
    for (int y = 0; y < height; ++y) {
      const double v = height == 1 ? 0.5 : 1.0 - static_cast<double>(y) / (height - 1);
      for (int x = map_w + bar_gap; x < width; ++x) put(x, y, palette_color(opts.palette, v));
    }
  }

  std::FILE* fp = std::fopen(out.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + out.string() + ": " + std::strerror(errno));
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    std::fclose(fp);
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("libpng error while writing " + out.string());
  }
  png_init_io(png, fp);
  png_set_compression_level(png, 9);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  char xaxis[96], yaxis[96];
  std::snprintf(xaxis, sizeof xaxis, "eps0/omega from %.6g to %.6g (left to right)", r.grid.eps0_min, r.grid.eps0_max);
  std::snprintf(yaxis, sizeof yaxis, "A/omega from %.6g to %.6g (bottom to top)", r.grid.a_min, r.grid.a_max);
  png_text text[3] = {};
  char k0[] = "x-axis", k1[] = "y-axis", k2[] = "colorbar", v2[] = "probability 0 (bottom) to 1 (top)";
  text[0].compression = PNG_TEXT_COMPRESSION_NONE;
  text[0].key = k0;
  text[0].text = xaxis;
  text[1].compression = PNG_TEXT_COMPRESSION_NONE;
  text[1].key = k1;
  text[1].text = yaxis;
  text[2].compression = PNG_TEXT_COMPRESSION_NONE;
  text[2].key = k2;
  text[2].text = v2;
  png_set_text(png, info, text, opts.colorbar ? 3 : 2);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) png_write_row(png, image.data() + static_cast<std::size_t>(y) * width * 3);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw std::runtime_error("cannot close " + out.string());
}

}  // namespace lzs
