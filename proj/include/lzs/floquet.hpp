#pragma once

// Floquet quasienergies and modes of a time-periodic Hamiltonian via the
// one-period propagator, plus Fourier components of operators in the
// Floquet basis.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "lzs/hilbert_ops.hpp"

namespace lzs {

enum class Integrator {
  kMagnus,      // adaptive 6th-order Magnus with embedded 4th-order estimate
  kRungeKutta,  // adaptive Dormand-Prince 5(4)
};

struct PropagatorOptions {
  int n_t = 1024;     // samples per period
  double tol = 1e-10; // local error per step
  Integrator method = Integrator::kMagnus;
};

using HamiltonianFn = std::function<Matrix(double)>;

struct PeriodPropagation {
  double omega = 1.0;
  int n_t = 0;
  std::vector<Matrix> unitaries;  // U(t_j, 0) for j = 0..n_t-1
  Matrix monodromy;               // U(tau, 0)
  double unitarity_defect = 0.0;  // max |U^dag U - I| over stored unitaries
  long steps = 0;                 // accepted integrator steps
};

/// U(t1, t0) for i dU/dt = H(t) U.  Throws NumericalError on step underflow.
Matrix propagate(const HamiltonianFn& h, double t0, double t1, double tol,
                 Integrator method = Integrator::kMagnus, long* steps = nullptr);

PeriodPropagation propagate_period(const HamiltonianFn& h, double tau,
                                   const PropagatorOptions& opts = {});
PeriodPropagation propagate_period(const HarmonicHamiltonian& h,
                                   const PropagatorOptions& opts = {});

/// Folds a quasienergy into (-omega/2, omega/2].
double fold_quasienergy(double e, double omega);

struct FloquetSolution {
  RealVector quasienergies;         // ascending, folded
  Matrix monodromy;
  std::vector<Matrix> mode_samples; // columns = |alpha(t_j)>, t_j = j tau / n_t
  double omega = 1.0;
  int n_t = 0;
  bool degenerate = false;          // some pair closer than 1e-10 omega
  std::vector<std::vector<int>> degenerate_blocks;  // index groups (size >= 2)

  [[nodiscard]] int dim() const { return static_cast<int>(quasienergies.size()); }
  [[nodiscard]] double period() const { return kTwoPi / omega; }
  [[nodiscard]] double time(int j) const { return period() * j / n_t; }
  [[nodiscard]] const Matrix& modes_at_zero() const { return mode_samples.front(); }
};

inline constexpr double kDegeneracyTolerance = 1e-10;  // relative to omega

/// Groups of sorted, folded quasienergies closer than kDegeneracyTolerance *
/// omega, including the pair straddling the zone boundary.
std::vector<std::vector<int>> degenerate_clusters(const RealVector& quasienergies, double omega);

FloquetSolution floquet_modes(const PeriodPropagation& prop);

/// Convenience: propagate + diagonalize.
FloquetSolution solve_floquet(const HarmonicHamiltonian& h, const PropagatorOptions& opts = {});

struct FourierCoeffs {
  int k_max = 0;
  std::vector<Matrix> coeffs;  // coeffs[k + k_max](alpha, beta)
  double tail_fraction = 0.0;  // spectral mass with |k| > k_max - 2
  bool truncation_warning = false;

  [[nodiscard]] const Matrix& at(int k) const { return coeffs[static_cast<std::size_t>(k + k_max)]; }
  [[nodiscard]] cplx operator()(int alpha, int beta, int k) const { return at(k)(alpha, beta); }
};

inline constexpr double kLeakageThreshold = 1e-6;

/// X_{ab,k} = (1/tau) int_0^tau e^{-i k omega t} <a(t)|x|b(t)> dt on the
/// sample grid.  Requires k_max <= n_t/2 - 1.
FourierCoeffs fourier_coefficients(const FloquetSolution& sol, const Matrix& x, int k_max);

/// Period-averaged matrix elements (1/n_t) sum_j <a(t_j)|x|b(t_j)>.
Matrix period_average(const FloquetSolution& sol, const Matrix& x);

// Binary cache.  Layout (little-endian):
//   char[8] magic "LZSFLQ01", uint32 dim, uint32 n_t, float64 omega,
//   float64[dim] quasienergies, complex128[dim*dim] monodromy (row-major,
//   re then im), complex128[n_t*dim*dim] mode samples (sample-major, row-major).
std::uint64_t floquet_cache_key(const SystemParams& p, const std::string& model,
                                const PropagatorOptions& opts);
void save_floquet_cache(const std::filesystem::path& path, const FloquetSolution& sol);
FloquetSolution load_floquet_cache(const std::filesystem::path& path);

}  // namespace lzs
