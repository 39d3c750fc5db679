#include "lzs/unitary_dynamics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <sstream>

namespace lzs {

void ProbabilityTrace::write_csv(std::ostream& out) const {
  out << "t_over_tau,P\n";
  char buf[64];
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.10g,%.17g\n", times[i], values[i]);
    out << buf;
  }
}

Vector basis_state(int dim, int index) {
  if (index < 0 || index >= dim) throw InputError("basis index out of range");
  Vector v = Vector::Zero(dim);
  v(index) = 1.0;
  return v;
}

int parse_basis_label(const std::string& label, int n_max) {
  std::string s;
  for (char c : label) {
    if (c != ' ' && c != '|' && c != '>') s.push_back(static_cast<char>(std::tolower(c)));
  }
  const auto comma = s.find(',');
  const std::string spin = s.substr(0, comma);
  bool up = false;
  if (spin == "up" || spin == "u") {
    up = true;
  } else if (spin != "down" && spin != "d") {
    throw InputError("unknown qubit label '" + label + "' (expected up/down)");
  }
  int n = 0;
  if (comma != std::string::npos) {
    try {
      std::size_t used = 0;
      n = std::stoi(s.substr(comma + 1), &used);
      if (used != s.size() - comma - 1) throw InputError("bad photon number");
    } catch (const std::logic_error&) {
      throw InputError("bad photon number in label '" + label + "'");
    }
  }
  if (n < 0 || n > std::max(n_max, 0)) throw InputError("photon number outside truncation in '" + label + "'");
  if (n_max < 0) return up ? 1 : 0;  // bare qubit
  return product_index(up, n, n_max);
}

std::string basis_label(int index, int n_max) {
  if (n_max < 0) return index == 1 ? "up" : "down";
  const int n = index % (n_max + 1);
  return std::string(index / (n_max + 1) == 1 ? "up" : "down") + "," + std::to_string(n);
}

std::vector<double> sample_times(int n_t, long count, long stride) {
  std::vector<double> t(static_cast<std::size_t>(count));
  for (long j = 0; j < count; ++j) t[static_cast<std::size_t>(j)] = static_cast<double>(j * stride) / n_t;
  return t;
}

namespace {

void check_state(const FloquetSolution& sol, const Vector& psi0) {
  if (psi0.size() != sol.dim()) throw InputError("state dimension does not match the Floquet solution");
  if (std::abs(psi0.norm() - 1.0) > 1e-9) throw InputError("initial state is not normalized");
}

void check_projector(const FloquetSolution& sol, const Matrix& proj) {
  if (proj.rows() != sol.dim() || proj.cols() != sol.dim()) {
    throw InputError("projector dimension does not match the Floquet solution");
  }
}

long grid_index(double t_over_tau, int n_t) {
  const double x = t_over_tau * n_t;
  const double j = std::round(x);
  if (std::abs(x - j) > 1e-9 * std::max(1.0, std::abs(x))) {
    throw InputError("time is not a multiple of tau/n_t");
  }
  return static_cast<long>(j);
}

// P at absolute sample index j (time j tau / n_t).
double probability_at(const FloquetSolution& sol, const Vector& c, const Matrix& proj, long j) {
  const long r = ((j % sol.n_t) + sol.n_t) % sol.n_t;
  const double t = sol.period() * static_cast<double>(j) / sol.n_t;
  Vector amp(c.size());
  for (Eigen::Index a = 0; a < c.size(); ++a) amp(a) = c(a) * std::polar(1.0, -sol.quasienergies(a) * t);
  const Vector psi = sol.mode_samples[static_cast<std::size_t>(r)] * amp;
  return psi.dot(proj * psi).real();
}

}  // namespace

ProbabilityTrace instantaneous_probability(const FloquetSolution& sol, const Vector& psi0,
                                           const Matrix& projector,
                                           const std::vector<double>& times) {
  check_state(sol, psi0);
  check_projector(sol, projector);
  const Vector c = sol.modes_at_zero().adjoint() * psi0;
  ProbabilityTrace out;
  out.times = times;
  out.values.reserve(times.size());
  for (double t : times) out.values.push_back(probability_at(sol, c, projector, grid_index(t, sol.n_t)));
  return out;
}

double time_averaged_probability(const FloquetSolution& sol, const Vector& psi0,
                                 const Matrix& projector) {
  check_state(sol, psi0);
  check_projector(sol, projector);
  const Vector c = sol.modes_at_zero().adjoint() * psi0;
  const Matrix avg = period_average(sol, projector);
  double p = 0.0;
  for (Eigen::Index a = 0; a < c.size(); ++a) p += std::norm(c(a)) * avg(a, a).real();

  // Degenerate pairs: e^{i(e_a - e_b)t} is periodic with e_a - e_b = m omega.
  for (const auto& block : sol.degenerate_blocks) {
    for (int a : block) {
      for (int b : block) {
        if (a == b) continue;
        const double m = std::round((sol.quasienergies(a) - sol.quasienergies(b)) / sol.omega);
        cplx acc = 0.0;
        for (int j = 0; j < sol.n_t; ++j) {
          const Matrix& s = sol.mode_samples[static_cast<std::size_t>(j)];
          acc += std::polar(1.0, m * kTwoPi * j / sol.n_t) * s.col(a).dot(projector * s.col(b));
        }
        p += (std::conj(c(a)) * c(b) * acc).real() / sol.n_t;
      }
    }
  }
  return p;
}

ProbabilityTrace running_average(const ProbabilityTrace& trace, double window) {
  ProbabilityTrace out = trace;
  const std::size_t n = trace.values.size();
  if (n < 2 || window <= 0.0) return out;
  const double dt = trace.times[1] - trace.times[0];
  const auto half = static_cast<long>(std::llround(0.5 * window / dt));
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + trace.values[i];
  for (std::size_t i = 0; i < n; ++i) {
    const long lo = std::max(0L, static_cast<long>(i) - half);
    const long hi = std::min(static_cast<long>(n) - 1, static_cast<long>(i) + half);
    out.values[i] = (prefix[static_cast<std::size_t>(hi + 1)] - prefix[static_cast<std::size_t>(lo)]) /
                    static_cast<double>(hi - lo + 1);
  }
  return out;
}

double period_averaged_probability(const FloquetSolution& sol, const Vector& psi0,
                                   const Matrix& projector, double t_over_tau) {
  check_state(sol, psi0);
  check_projector(sol, projector);
  const Vector c = sol.modes_at_zero().adjoint() * psi0;
  const long j0 = grid_index(t_over_tau, sol.n_t);
  double acc = 0.0;
  for (int j = 0; j < sol.n_t; ++j) acc += probability_at(sol, c, projector, j0 + j);
  return acc / sol.n_t;
}

namespace {

// Bessel values this small are treated as an exact zero (CDT convention).
constexpr double kBesselZero = 1e-12;

double bessel_j_signed(int m, double x) {
  const double v = std::cyl_bessel_j(static_cast<double>(std::abs(m)), x);
  if (std::abs(v) < kBesselZero) return 0.0;
  return (m < 0 && (std::abs(m) % 2 == 1)) ? -v : v;
}

}  // namespace

double rwa_probability(const DjcParams& d, int m) {
  d.validate();
  const double w = d.gap_n * bessel_j_signed(-m, d.amp / d.omega);
  if (w == 0.0) return 0.0;  // includes the CDT point on resonance
  const double x = d.delta0 - m * d.omega;
  return 0.5 * w * w / (x * x + w * w);
}

double rwa_probability_at(const DjcParams& d, int m, double t) {
  d.validate();
  const double w = d.gap_n * bessel_j_signed(-m, d.amp / d.omega);
  if (w == 0.0) return 0.0;
  const double x = d.delta0 - m * d.omega;
  const double r2 = w * w + x * x;
  const double s = std::sin(0.5 * std::sqrt(r2) * t);
  return w * w / r2 * s * s;
}

double p_up(const Vector& psi, int n_max) {
  if (psi.size() != 2 * (n_max + 1)) throw InputError("state dimension does not match n_max");
  if (std::abs(psi.squaredNorm() - 1.0) > 1e-6) throw InputError("state is not normalized");
  return psi.tail(n_max + 1).squaredNorm();
}

double p_up(const Matrix& rho, int n_max) {
  const Eigen::Index d = 2 * (n_max + 1);
  if (rho.rows() != d || rho.cols() != d) throw InputError("density matrix dimension does not match n_max");
  if (std::abs(rho.trace() - cplx(1.0)) > 1e-6) throw InputError("density matrix trace deviates from 1");
  return rho.diagonal().tail(n_max + 1).real().sum();
}

std::string to_string(Region r) {
  static const char* names[] = {"I", "II", "III", "IV", "V", "VI"};
  return names[static_cast<int>(r) - 1];
}

Region classify_region(double amp, double eps0, double omega_r) {
  const bool qubit = std::abs(eps0) < amp;
  const bool left = std::abs(eps0 + omega_r) < amp;
  const bool right = std::abs(eps0 - omega_r) < amp;
  if (left && right) return Region::kVI;
  if (left) return Region::kIV;
  if (right) return Region::kV;
  if (qubit) return Region::kIII;
  return eps0 < 0.0 ? Region::kI : Region::kII;
}

Region ResonanceRegions::classify(double amp, double eps0) const {
  return classify_region(amp, eps0, omega_r);
}

ResonanceRegions resonance_regions(double omega_r, const Rect& rect) {
  if (!std::isfinite(rect.a_min) || !std::isfinite(rect.a_max) || !std::isfinite(rect.eps0_min) ||
      !std::isfinite(rect.eps0_max)) {
    throw InputError("rectangle bounds must be finite");
  }
  if (rect.a_min > rect.a_max || rect.eps0_min > rect.eps0_max) throw InputError("empty rectangle");
  if (!(omega_r > 0.0)) throw InputError("omega_r must be positive");

  ResonanceRegions out;
  out.omega_r = omega_r;
  out.rect = rect;
  const std::pair<double, const char*> gaps[] = {{-omega_r, "left"}, {0.0, "qubit"}, {omega_r, "right"}};
  for (const auto& [e, name] : gaps) {
    for (int sign : {-1, 1}) {
      // eps0 = e + sign * A, clipped to the rectangle.
      double lo = std::max(rect.a_min, 0.0);
      double hi = rect.a_max;
      if (sign > 0) {
        lo = std::max(lo, rect.eps0_min - e);
        hi = std::min(hi, rect.eps0_max - e);
      } else {
        lo = std::max(lo, e - rect.eps0_max);
        hi = std::min(hi, e - rect.eps0_min);
      }
      if (lo > hi) continue;
      Polyline line;
      line.label = std::string(name) + (sign > 0 ? "+" : "-");
      line.points = {{lo, e + sign * lo}, {hi, e + sign * hi}};
      out.boundaries.push_back(std::move(line));
    }
  }

  std::set<int> seen;
  const int n = 400;
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; j <= n; ++j) {
      const double a = rect.a_min + (rect.a_max - rect.a_min) * i / n;
      const double e = rect.eps0_min + (rect.eps0_max - rect.eps0_min) * j / n;
      seen.insert(static_cast<int>(classify_region(a, e, omega_r)));
    }
  }
  for (int r : seen) out.present.push_back(static_cast<Region>(r));
  return out;
}

}  // namespace lzs
