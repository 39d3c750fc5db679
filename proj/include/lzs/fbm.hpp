#pragma once

// Floquet-Born-Markov master equation: generator on vectorized rho_{ab}
// (index a*D + b, Floquet basis), finite-time evolution, steady state and
// period-averaged observables.

#include <string>
#include <vector>

#include "lzs/bath.hpp"
#include "lzs/floquet.hpp"
#include "lzs/hilbert_ops.hpp"
#include "lzs/unitary_dynamics.hpp"

namespace lzs {

struct FbmGenerator {
  Matrix matrix;               // D^2 x D^2
  RealVector quasienergies;
  double omega = 1.0;
  int dim = 0;
  double rate_tail_mass = 0.0; // share of sum |X|^2 N carried by |k| > k_max - 2
  bool truncation_warning = false;
};

/// G = -i(e_a - e_b) + R with the moderate-rotating-wave relaxation tensor
/// R_{ab,a'b'} = sum_k (N_{aa',k} + N_{bb',k}) X_{aa',k} X_{b'b,-k}
///             - d_{bb'} sum_{h,k} N_{ha',k} X_{ah,-k} X_{ha',k}
///             - d_{aa'} sum_{h,k} N_{hb',k} X_{b'h,-k} X_{hb,k},
/// N_{ab,k} = rate_kernel(e_a - e_b + k omega).
FbmGenerator build_generator(const FloquetSolution& sol, const FourierCoeffs& x, const BathSpec& b);

/// Row-major vectorization rho(a, b) -> v[a*D + b].
Vector vectorize(const Matrix& rho);
Matrix unvectorize(const Vector& v, int dim);

/// rho_{ab}(0) = <a(0)|rho|b(0)> and back.
Matrix to_floquet_basis(const FloquetSolution& sol, const Matrix& rho_lab);
Matrix to_lab_basis(const FloquetSolution& sol, const Matrix& rho_floquet, int sample = 0);

/// exp(G t) via eigendecomposition of G, or scaling-and-squaring when the
/// eigenvector matrix is ill-conditioned.
class FbmPropagator {
 public:
  static constexpr double kMaxCondition = 1e10;

  explicit FbmPropagator(const FbmGenerator& gen);

  [[nodiscard]] Matrix evolve(const Matrix& rho0, double t) const;
  [[nodiscard]] Matrix transfer(double t) const;  // exp(G t)
  [[nodiscard]] const std::string& method() const { return method_; }
  [[nodiscard]] double condition() const { return condition_; }

 private:
  Matrix g_;
  int dim_ = 0;
  std::string method_;
  double condition_ = 0.0;
  Matrix v_, v_inv_;
  Vector lambda_;
};

/// rho(t) for each t (time units, not tau); rho0 Hermitian with unit trace.
std::vector<Matrix> evolve(const FbmGenerator& gen, const Matrix& rho0, const std::vector<double>& t_list);

struct SteadyState {
  Matrix rho;                      // Floquet basis, Hermitian, unit trace
  double null_residual = 0.0;      // |G vec(rho)| / |G|
  double sigma_ratio = 0.0;        // second-smallest singular value / |G|
  double positivity_deficit = 0.0; // max(0, -min eigenvalue)
  bool positivity_warning = false; // deficit above 1e-6
};

inline constexpr double kNullTolerance = 1e-10;

/// Unique null vector of G.  Throws NumericalError when the null space is
/// not one-dimensional at tolerance kNullTolerance * |G|.
SteadyState steady_state(const FbmGenerator& gen);

/// Floquet-diagonal period average sum_ab rho_ab <b|proj|a>-bar; exact for a
/// stationary rho.
double period_averaged_expectation(const Matrix& rho, const FloquetSolution& sol, const Matrix& proj);
/// (1/tau) int_0^tau tr[rho(t+s) proj(t+s)] ds with rho(t+s) = exp(G s) rho(t),
/// t = start_sample * tau / n_t (mod tau).
double period_averaged_expectation(const Matrix& rho, const FloquetSolution& sol, const Matrix& proj,
                                   const FbmPropagator& prop, int start_sample = 0);

double p_up_period_averaged(const Matrix& rho, const FloquetSolution& sol, int n_max);
double p_up_period_averaged(const Matrix& rho, const FloquetSolution& sol, int n_max,
                            const FbmPropagator& prop);

/// 1/2 |a - b|_1 for Hermitian arguments.
double trace_distance(const Matrix& a, const Matrix& b);

/// e^{-H/T}/Z; the ground-state projector (averaged over degeneracy) at T = 0.
Matrix gibbs_state(const Matrix& h, double temperature);

struct DissipativeOptions {
  PropagatorOptions numerics{512, 1e-10, Integrator::kMagnus};
  int k_max = 200;
  std::vector<double> times_over_tau;  // finite-time samples, multiples of 1/n_t
  bool steady = true;
};

struct DissipativeResult {
  ProbabilityTrace p_up_vs_time;  // period-averaged
  double steady_p_up = 0.0;
  Matrix rho_steady;              // Floquet basis
  // diagnostics
  double null_residual = 0.0;
  double positivity_deficit = 0.0;
  double fourier_tail = 0.0;
  double rate_tail_mass = 0.0;
  bool truncation_warning = false;
  std::string evolution_method;
};

/// Floquet -> Fourier -> generator -> (evolution, steady state) for the
/// Hamiltonian h with system-bath coupling operator `coupling`.
DissipativeResult dissipative_run(const HarmonicHamiltonian& h, const Matrix& coupling,
                                  const Matrix& projector, const BathSpec& b, const Vector& psi0,
                                  const DissipativeOptions& opts = {});

/// Qubit alone (D = 2), coupled through sigma_y to a structured bath.
DissipativeResult structured_bath_run(const SystemParams& p, const BathSpec& b, const Vector& psi0,
                                      const DissipativeOptions& opts = {});

}  // namespace lzs
