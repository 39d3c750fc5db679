#include <cmath>
#include <random>

#include "doctest.h"
#include "lzs/fbm.hpp"

using namespace lzs;

namespace {

const cplx I1{0.0, 1.0};

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Matrix resonator_x(int n_max) {
  return tensor(identity(2, BasisTag::qubit()), annihilation_op(n_max) + creation_op(n_max)).entries();
}

SystemParams sc_point(double a_over_omega, double eps0_over_omega, int n_max = 3) {
  SystemParams p;
  p.amp = a_over_omega * p.omega;
  p.eps0 = eps0_over_omega * p.omega;
  p.n_max = n_max;
  return p;
}

// Relaxation tensor written out index by index from its defining sum.
Matrix generator_by_hand(const FloquetSolution& sol, const FourierCoeffs& x, const BathSpec& b) {
  const int d = sol.dim();
  const int km = x.k_max;
  auto n = [&](int a, int c, int k) {
    return rate_kernel(b, sol.quasienergies(a) - sol.quasienergies(c) + k * sol.omega);
  };
  Matrix g = Matrix::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a) {
    for (int bb = 0; bb < d; ++bb) {
      const int row = a * d + bb;
      g(row, row) += -I1 * (sol.quasienergies(a) - sol.quasienergies(bb));
      for (int a2 = 0; a2 < d; ++a2) {
        for (int b2 = 0; b2 < d; ++b2) {
          cplx r = 0.0;
          for (int k = -km; k <= km; ++k) {
            r += (n(a, a2, k) + n(bb, b2, k)) * x(a, a2, k) * x(b2, bb, -k);
            if (bb == b2) {
              for (int h = 0; h < d; ++h) r -= n(h, a2, k) * x(a, h, -k) * x(h, a2, k);
            }
            if (a == a2) {
              for (int h = 0; h < d; ++h) r -= n(h, b2, k) * x(b2, h, -k) * x(h, bb, k);
            }
          }
          g(row, a2 * d + b2) += r;
        }
      }
    }
  }
  return g;
}

Matrix random_density(int d, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  Matrix m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = cplx(nd(rng), nd(rng));
  Matrix rho = m * m.adjoint();
  return rho / rho.trace();
}

}  // namespace

TEST_CASE("generator equals the index-by-index relaxation tensor") {
  const SystemParams p = sc_point(6.0, -2.0, 1);
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), {128, 1e-11, Integrator::kMagnus});
  const FourierCoeffs x = fourier_coefficients(sol, resonator_x(1), 30);
  const BathSpec b = BathSpec::ohmic(0.001, 12.5, 0.0175);
  const FbmGenerator gen = build_generator(sol, x, b);
  const Matrix ref = generator_by_hand(sol, x, b);
  CHECK(max_abs(gen.matrix - ref) < 1e-12 * std::max(1.0, max_abs(ref)));
}

TEST_CASE("generator preserves trace and hermiticity") {
  const SystemParams p = sc_point(20.0, -5.0);
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), {256, 1e-10, Integrator::kMagnus});
  const FbmGenerator gen = build_generator(sol, fourier_coefficients(sol, resonator_x(3), 120),
                                           BathSpec::ohmic(0.001, 12.5, 0.0175));
  const int d = gen.dim;
  Vector vec_id = vectorize(Matrix::Identity(d, d));
  CHECK((vec_id.transpose() * gen.matrix).cwiseAbs().maxCoeff() < 1e-10);
  const Matrix rho = random_density(d, 3);
  const Matrix drho = unvectorize(gen.matrix * vectorize(rho), d);
  CHECK(max_abs(drho - drho.adjoint()) < 1e-10);
  CHECK(std::abs(drho.trace()) < 1e-10);
}

TEST_CASE("no dissipation channel: relaxation vanishes") {
  SystemParams p = sc_point(0.0, 3.0, 1);
  p.g = 0.0;
  p.delta = 0.0;
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), {64, 1e-11, Integrator::kMagnus});
  const int d = sol.dim();
  Matrix coherent = Matrix::Zero(d * d, d * d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) coherent(a * d + b, a * d + b) = -I1 * (sol.quasienergies(a) - sol.quasienergies(b));

  // sz coupling commutes with H; at T = 0 there is no pure dephasing either.
  const Matrix sz = tensor(pauli(PauliAxis::kZ), identity(2, BasisTag::fock(1))).entries();
  const FbmGenerator g1 = build_generator(sol, fourier_coefficients(sol, sz, 10), BathSpec::ohmic(0.001, 12.5, 0.0));
  CHECK(max_abs(g1.matrix - coherent) < 1e-12);
  // Identity coupling: no effect at any temperature.
  const FbmGenerator g2 = build_generator(sol, fourier_coefficients(sol, Matrix::Identity(d, d), 10),
                                          BathSpec::ohmic(0.001, 12.5, 0.0175));
  CHECK(max_abs(g2.matrix - coherent) < 1e-12);
  // The null space is then degenerate: multiplicity error.
  CHECK_THROWS_AS(steady_state(g2), NumericalError);
}

TEST_CASE("undriven steady state is the Gibbs state") {
  for (double eps_over_omega : {0.0, 2.0, -3.0}) {
    const SystemParams p = sc_point(0.0, eps_over_omega);
    const HarmonicHamiltonian h = rabi_hamiltonian(p);
    const FloquetSolution sol = solve_floquet(h, {256, 1e-11, Integrator::kMagnus});
    const BathSpec b = BathSpec::ohmic(0.001, 12.5, 0.0175);
    const FbmGenerator gen = build_generator(sol, fourier_coefficients(sol, resonator_x(3), 100), b);
    const SteadyState ss = steady_state(gen);
    const Matrix rho_lab = to_lab_basis(sol, ss.rho);

    // Oracle: thermal state built directly from the static eigenbasis.
    Eigen::SelfAdjointEigenSolver<Matrix> es(h.h_static);
    RealVector w = (-(es.eigenvalues().array() - es.eigenvalues()(0)) / b.temperature).exp();
    w /= w.sum();
    const Matrix gibbs = es.eigenvectors() * w.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
    CHECK(trace_distance(rho_lab, gibbs) < 0.02);
    CHECK(trace_distance(gibbs, gibbs_state(h.h_static, b.temperature)) < 1e-12);

    // Detailed balance between the two lowest levels.
    const Vector e0 = es.eigenvectors().col(0), e1 = es.eigenvectors().col(1);
    const double p0 = (e0.adjoint() * rho_lab * e0)(0, 0).real();
    const double p1 = (e1.adjoint() * rho_lab * e1)(0, 0).real();
    const double de = es.eigenvalues()(1) - es.eigenvalues()(0);
    CHECK(p1 / p0 == doctest::Approx(std::exp(-de / b.temperature)).epsilon(0.02));
    CHECK(ss.null_residual < 1e-10);
  }
}

TEST_CASE("zero temperature relaxes to the ground state") {
  const SystemParams p = sc_point(0.0, 2.0);
  const HarmonicHamiltonian h = rabi_hamiltonian(p);
  const FloquetSolution sol = solve_floquet(h, {256, 1e-11, Integrator::kMagnus});
  const FbmGenerator gen =
      build_generator(sol, fourier_coefficients(sol, resonator_x(3), 50), BathSpec::ohmic(0.001, 12.5, 0.0));
  const Matrix rho = to_lab_basis(sol, steady_state(gen).rho);
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.h_static);
  const Vector g0 = es.eigenvectors().col(0);
  CHECK(max_abs(rho - g0 * g0.adjoint()) < 1e-3);
}

TEST_CASE("evolution: identity at t = 0, trace preservation, long-time limit") {
  const SystemParams p = sc_point(15.0, -8.0);
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), {256, 1e-10, Integrator::kMagnus});
  const FbmGenerator gen = build_generator(sol, fourier_coefficients(sol, resonator_x(3), 100),
                                           BathSpec::ohmic(0.001, 12.5, 0.0175));
  const Vector d0 = basis_state(8, product_index(false, 0, 3));
  const Vector u0 = basis_state(8, product_index(true, 0, 3));
  const Matrix r0 = to_floquet_basis(sol, d0 * d0.adjoint());
  const Matrix r1 = to_floquet_basis(sol, u0 * u0.adjoint());
  const double tau = sol.period();
  const auto traj = evolve(gen, r0, {0.0, 3.0 * tau, 100.0 * tau, 1e4 * tau});
  CHECK(max_abs(traj[0] - r0) == 0.0);
  for (const auto& r : traj) CHECK(std::abs(r.trace() - 1.0) < 1e-8);

  const SteadyState ss = steady_state(gen);
  const FbmPropagator prop(gen);
  CHECK(trace_distance(prop.evolve(r0, 1e6 * tau), ss.rho) < 1e-4);
  CHECK(trace_distance(prop.evolve(r1, 1e6 * tau), ss.rho) < 1e-4);
  CHECK(ss.positivity_deficit < 1e-6);
  CHECK(std::abs(ss.rho.trace() - 1.0) < 1e-12);
  CHECK(max_abs(ss.rho - ss.rho.adjoint()) < 1e-14);

  // The propagator reproduces a direct scaling-and-squaring exponential.
  const Matrix direct = unvectorize(FbmPropagator(gen).transfer(50.0 * tau) * vectorize(r0), gen.dim);
  CHECK(max_abs(direct - prop.evolve(r0, 50.0 * tau)) < 1e-10);

  CHECK_THROWS_AS(evolve(gen, 2.0 * r0, {1.0}), InputError);
}

TEST_CASE("weak-coupling limit reproduces the closed evolution") {
  const SystemParams p = sc_point(12.0, -6.0);
  const HarmonicHamiltonian h = rabi_hamiltonian(p);
  const Vector psi0 = basis_state(8, product_index(false, 0, 3));
  DissipativeOptions opts;
  opts.times_over_tau = {100.0};
  opts.steady = false;
  opts.numerics = {512, 1e-10, Integrator::kMagnus};
  const DissipativeResult res = dissipative_run(h, resonator_x(3), up_projector(3).entries(),
                                                BathSpec::ohmic(1e-9, 12.5, 0.0175), psi0, opts);
  const FloquetSolution sol = solve_floquet(h, opts.numerics);
  const double closed = period_averaged_probability(sol, psi0, up_projector(3).entries(), 100.0);
  CHECK(res.p_up_vs_time.values[0] == doctest::Approx(closed).epsilon(1e-3));
}

TEST_CASE("period-averaged observables") {
  const SystemParams p = sc_point(10.0, 4.0);
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), {256, 1e-10, Integrator::kMagnus});
  const Matrix mixed = Matrix::Identity(8, 8) / 8.0;
  CHECK(p_up_period_averaged(mixed, sol, 3) == doctest::Approx(0.5).epsilon(1e-12));

  // Floquet-diagonal form versus the direct period average of tr[rho Pi].
  const FbmGenerator gen = build_generator(sol, fourier_coefficients(sol, resonator_x(3), 100),
                                           BathSpec::ohmic(0.001, 12.5, 0.0175));
  const SteadyState ss = steady_state(gen);
  double direct = 0.0;
  for (int j = 0; j < sol.n_t; ++j) {
    const Matrix lab = to_lab_basis(sol, ss.rho, j);
    direct += (up_projector(3).entries() * lab).trace().real();
  }
  direct /= sol.n_t;
  CHECK(p_up_period_averaged(ss.rho, sol, 3) == doctest::Approx(direct).epsilon(1e-10));
  // Exact propagated average of a stationary state agrees as well.
  const FbmPropagator prop(gen);
  CHECK(p_up_period_averaged(ss.rho, sol, 3, prop) == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("off-diamond steady states sit in the static ground state") {
  DissipativeOptions opts;
  opts.numerics = {256, 1e-10, Integrator::kMagnus};
  opts.k_max = 100;
  const Vector psi0 = basis_state(8, 0);
  const BathSpec b = BathSpec::ohmic(0.001, 12.5, 0.0175);
  const SystemParams left = sc_point(2.0, -10.0);
  const SystemParams right = sc_point(2.0, 10.0);
  const double up_left =
      dissipative_run(rabi_hamiltonian(left), resonator_x(3), up_projector(3).entries(), b, psi0, opts).steady_p_up;
  const double up_right =
      dissipative_run(rabi_hamiltonian(right), resonator_x(3), up_projector(3).entries(), b, psi0, opts).steady_p_up;
  CHECK(up_left > 0.95);
  CHECK(up_right < 0.05);
}

TEST_CASE("gauge: random Floquet phases leave rates and observables unchanged") {
  const SystemParams p = sc_point(8.0, -3.0, 2);
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), {256, 1e-10, Integrator::kMagnus});
  FloquetSolution rot = sol;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> ph(0.0, kTwoPi);
  for (int a = 0; a < sol.dim(); ++a) {
    const cplx f = std::exp(I1 * ph(rng));
    for (auto& m : rot.mode_samples) m.col(a) *= f;
  }
  const BathSpec b = BathSpec::ohmic(0.001, 12.5, 0.0175);
  const Matrix x = resonator_x(2);
  const FbmGenerator g1 = build_generator(sol, fourier_coefficients(sol, x, 100), b);
  const FbmGenerator g2 = build_generator(rot, fourier_coefficients(rot, x, 100), b);
  CHECK((g1.matrix.cwiseAbs() - g2.matrix.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
  const double p1 = p_up_period_averaged(steady_state(g1).rho, sol, 2);
  const double p2 = p_up_period_averaged(steady_state(g2).rho, rot, 2);
  CHECK(p1 == doctest::Approx(p2).epsilon(1e-10));

  const Vector psi0 = basis_state(6, 0);
  CHECK(time_averaged_probability(sol, psi0, up_projector(2).entries()) ==
        doctest::Approx(time_averaged_probability(rot, psi0, up_projector(2).entries())).epsilon(1e-12));
}

TEST_CASE("ultrastrong coupling reaches stationarity within 1000 periods") {
  SystemParams p = sc_point(10.0, 5.0);
  p.g = 0.1125;
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), {512, 1e-10, Integrator::kMagnus});
  const FbmGenerator gen = build_generator(sol, fourier_coefficients(sol, resonator_x(3), 200),
                                           BathSpec::ohmic(0.001, 12.5, 0.0175));
  const Vector psi0 = basis_state(8, 0);
  const Matrix r0 = to_floquet_basis(sol, psi0 * psi0.adjoint());
  const FbmPropagator prop(gen);
  CHECK(trace_distance(prop.evolve(r0, 1000.0 * sol.period()), steady_state(gen).rho) < 1e-3);
}

TEST_CASE("structured bath qubit model") {
  SystemParams p;
  p.eps0 = 20.0 * p.omega;
  p.amp = 0.0;
  const BathSpec b = BathSpec::structured(0.001, p.g, 1.0, 0.0175);
  DissipativeOptions opts;
  opts.numerics = {256, 1e-10, Integrator::kMagnus};
  opts.k_max = 50;
  const DissipativeResult r = structured_bath_run(p, b, basis_state(2, 1), opts);
  CHECK(r.steady_p_up < 1e-3);
  CHECK_THROWS_AS(structured_bath_run(p, BathSpec::ohmic(0.001, 12.5, 0.0175), basis_state(2, 1), opts), InputError);
}

TEST_CASE("vectorization layout") {
  Matrix m(2, 2);
  m << 1.0, 2.0, 3.0, 4.0;
  const Vector v = vectorize(m);
  CHECK(v(1) == cplx(2.0));
  CHECK(v(2) == cplx(3.0));
  CHECK(max_abs(unvectorize(v, 2) - m) == 0.0);
}
