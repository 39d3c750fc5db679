#pragma once

// Closed-system observables from a FloquetSolution: instantaneous and
// infinite-time-averaged transition probabilities, the RWA resonance
// lineshape of the driven Jaynes-Cummings doublet, and the resonance-region
// geometry of the (A, eps0) plane.

#include <iosfwd>
#include <string>
#include <vector>

#include "lzs/floquet.hpp"
#include "lzs/hilbert_ops.hpp"

namespace lzs {

struct ProbabilityTrace {
  std::vector<double> times;   // units of tau
  std::vector<double> values;
  std::string initial_label;
  std::string target_label;

  /// Two columns "t_over_tau,P" with a header line.
  void write_csv(std::ostream& out) const;
};

/// Unit vector e_index of length dim.
Vector basis_state(int dim, int index);

/// Parses "down,0", "up,2", "down" (qubit only) into a product-basis index.
int parse_basis_label(const std::string& label, int n_max);
std::string basis_label(int index, int n_max);

/// Times t_j = j * tau / n_t for j in [0, count), in units of tau.
std::vector<double> sample_times(int n_t, long count, long stride = 1);

/// P(t) = <psi(t)|proj|psi(t)>.  Times in units of tau must be multiples of
/// 1/n_t (within 1e-9).
ProbabilityTrace instantaneous_probability(const FloquetSolution& sol, const Vector& psi0,
                                           const Matrix& projector,
                                           const std::vector<double>& times);

/// Infinite-time average: Floquet-diagonal period averages weighted by
/// |c_a|^2, plus cross terms inside degenerate blocks.
double time_averaged_probability(const FloquetSolution& sol, const Vector& psi0,
                                 const Matrix& projector);

/// Centered moving average over `window` (units of tau) of a uniformly
/// sampled trace; edges use the available part of the window.
ProbabilityTrace running_average(const ProbabilityTrace& trace, double window);

/// Average P over [t, t + tau) for t a multiple of tau / n_t.
double period_averaged_probability(const FloquetSolution& sol, const Vector& psi0,
                                   const Matrix& projector, double t_over_tau);

/// RWA probability 1/2 W^2 / ((delta0 - m omega)^2 + W^2), W = gap_n J_{-m}(A/omega).
/// Returns 0 whenever |J_{-m}| < 1e-12, also exactly on resonance.
double rwa_probability(const DjcParams& d, int m);
/// RWA time course W^2/(W^2+x^2) sin^2(sqrt(W^2+x^2) t / 2), x = delta0 - m omega.
double rwa_probability_at(const DjcParams& d, int m, double t);

double p_up(const Vector& psi, int n_max);
double p_up(const Matrix& rho, int n_max);

enum class Region { kI = 1, kII, kIII, kIV, kV, kVI };

std::string to_string(Region r);

struct Rect {
  double a_min = 0.0, a_max = 0.0;
  double eps0_min = 0.0, eps0_max = 0.0;
  bool operator==(const Rect&) const = default;
};

struct Polyline {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (A, eps0)
};

struct ResonanceRegions {
  double omega_r = 1.0;
  Rect rect;
  std::vector<Polyline> boundaries;  // reachability lines clipped to rect
  std::vector<Region> present;       // regions with nonzero area in rect

  [[nodiscard]] Region classify(double amp, double eps0) const;
};

/// Region of (A, eps0): a gap at e is reachable when |eps0 - e| < A.
Region classify_region(double amp, double eps0, double omega_r);

/// Boundaries |eps0 - e| = A for e in {-omega_r, 0, omega_r}, clipped to rect.
ResonanceRegions resonance_regions(double omega_r, const Rect& rect);

}  // namespace lzs
