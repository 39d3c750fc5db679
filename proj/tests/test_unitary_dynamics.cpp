#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "lzs/unitary_dynamics.hpp"

using namespace lzs;

namespace {

const PropagatorOptions kOpts{256, 1e-11, Integrator::kMagnus};

Matrix projector_onto(const Vector& v) { return v * v.adjoint(); }

DjcParams djc_sc(double a_over_omega, double delta0_over_omega) {
  DjcParams d;
  d.n = 3;
  d.omega = 0.0375;
  d.gap_n = 2.0 * 0.0019 * 2.0;
  d.amp = a_over_omega * d.omega;
  d.delta0 = delta0_over_omega * d.omega;
  return d;
}

// Brute-force long-time average of P(t) sampled on the mode grid.
double brute_average(const FloquetSolution& sol, const Vector& psi0, const Matrix& proj, long periods) {
  const long stride = 1;
  const std::vector<double> t = sample_times(sol.n_t, periods * sol.n_t, stride);
  const ProbabilityTrace tr = instantaneous_probability(sol, psi0, proj, t);
  return std::accumulate(tr.values.begin(), tr.values.end(), 0.0) / tr.values.size();
}

}  // namespace

TEST_CASE("basis labels") {
  CHECK(parse_basis_label("down,0", 3) == 0);
  CHECK(parse_basis_label("up,2", 3) == 6);
  CHECK(parse_basis_label("|up,0>", 3) == 4);
  CHECK(parse_basis_label("up", -1) == 1);
  CHECK(parse_basis_label("down", -1) == 0);
  CHECK_THROWS_AS(parse_basis_label("sideways,0", 3), InputError);
  CHECK_THROWS_AS(parse_basis_label("up,4", 3), InputError);
  CHECK(basis_label(6, 3) == "up,2");
  CHECK(basis_label(1, -1) == "up");
}

TEST_CASE("instantaneous probability basics") {
  SystemParams p;
  p.amp = 10.0 * p.omega;
  p.eps0 = 3.0 * p.omega;
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), kOpts);
  const Vector psi0 = basis_state(8, 0);
  const auto tr = instantaneous_probability(sol, psi0, projector_onto(psi0), {0.0});
  CHECK(tr.values[0] == doctest::Approx(1.0).epsilon(1e-12));

  // Normalization precondition.
  CHECK_THROWS_AS(instantaneous_probability(sol, 2.0 * psi0, projector_onto(psi0), {0.0}), InputError);
  // Times off the sample grid are rejected.
  CHECK_THROWS_AS(instantaneous_probability(sol, psi0, projector_onto(psi0), {0.3 / 256}), InputError);

  // Conserved sz when delta = g = 0.
  p.delta = 0.0;
  p.g = 0.0;
  const FloquetSolution s0 = solve_floquet(rabi_hamiltonian(p), kOpts);
  const auto t0 = instantaneous_probability(s0, psi0, up_projector(3).entries(), sample_times(256, 2000, 7));
  for (double v : t0.values) CHECK(std::abs(v) < 1e-12);
  CHECK(time_averaged_probability(s0, psi0, up_projector(3).entries()) < 1e-12);
}

TEST_CASE("instantaneous probability matches direct propagation") {
  SystemParams p;
  p.delta = 0.2;
  p.eps0 = 0.13;
  p.amp = 0.7;
  p.omega = 0.4;
  p.g = 0.05;
  p.n_max = 2;
  const HarmonicHamiltonian h = rabi_hamiltonian(p);
  const FloquetSolution sol = solve_floquet(h, kOpts);
  const Vector psi0 = basis_state(6, 1);
  const Matrix proj = up_projector(2).entries();
  // t = 3 + 40/256 periods.
  const double t_over_tau = 3.0 + 40.0 / 256.0;
  const Matrix u = propagate([&h](double t) { return h.at(t); }, 0.0, t_over_tau * h.period(), 1e-11);
  const Vector psi = u * psi0;
  const double direct = (psi.adjoint() * proj * psi)(0, 0).real();
  const auto tr = instantaneous_probability(sol, psi0, proj, {t_over_tau});
  CHECK(tr.values[0] == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("time average: completeness and oracle") {
  SystemParams p;
  p.delta = 0.3;
  p.eps0 = 0.2;
  p.amp = 0.5;
  p.omega = 1.0;
  const FloquetSolution sol = solve_floquet(qubit_hamiltonian(p), {64, 1e-12, Integrator::kMagnus});
  const Vector psi0 = basis_state(2, 0);
  Matrix up = Matrix::Zero(2, 2);
  up(1, 1) = 1.0;
  Matrix down = Matrix::Zero(2, 2);
  down(0, 0) = 1.0;
  const double pu = time_averaged_probability(sol, psi0, up);
  CHECK(pu + time_averaged_probability(sol, psi0, down) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(time_averaged_probability(sol, psi0, Matrix::Identity(2, 2)) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(pu == doctest::Approx(brute_average(sol, psi0, up, 3000)).epsilon(2e-3));
}

TEST_CASE("time average with exactly degenerate quasienergies keeps cross terms") {
  // Driven qubit (x) spectator two-level system: every quasienergy is doubly
  // degenerate and the Schur basis inside each pair is arbitrary.
  SystemParams p;
  p.delta = 0.3;
  p.eps0 = 0.2;
  p.amp = 0.5;
  p.omega = 1.0;
  const HarmonicHamiltonian q = qubit_hamiltonian(p);
  HarmonicHamiltonian h;
  h.omega = q.omega;
  h.h_static = tensor(Operator(q.h_static, {}), identity(2)).entries();
  h.h_drive = tensor(Operator(q.h_drive, {}), identity(2)).entries();
  const FloquetSolution sol = solve_floquet(h, {64, 1e-12, Integrator::kMagnus});
  CHECK(sol.degenerate);
  CHECK(sol.degenerate_blocks.size() == 2);

  Vector chi = Vector::Zero(4);
  chi(0) = chi(1) = 1.0 / std::sqrt(2.0);  // |down> (x) (|0> + |1>)/sqrt2
  const Matrix proj = projector_onto(chi);
  // The spectator is static, so P(t) is the bare-qubit survival probability.
  const FloquetSolution bare = solve_floquet(q, {64, 1e-12, Integrator::kMagnus});
  Matrix down = Matrix::Zero(2, 2);
  down(0, 0) = 1.0;
  const double expect = time_averaged_probability(bare, basis_state(2, 0), down);
  const double avg = time_averaged_probability(sol, chi, proj);
  CHECK(avg == doctest::Approx(expect).epsilon(1e-9));
  CHECK(avg == doctest::Approx(brute_average(sol, chi, proj, 3000)).epsilon(3e-3));
}

TEST_CASE("djc: averaged resonance height 1/2 and agreement with the RWA formula") {
  for (int m : {0, 1, 2}) {
    const DjcParams d = djc_sc(1.0 + m, m);
    const FloquetSolution sol = solve_floquet(djc_hamiltonian(d), kOpts);
    Matrix target = Matrix::Zero(2, 2);
    target(0, 0) = 1.0;
    const double pbar = time_averaged_probability(sol, basis_state(2, 1), target);
    CHECK(pbar == doctest::Approx(0.5).epsilon(0.04));
    CHECK(rwa_probability(d, m) == doctest::Approx(0.5).epsilon(1e-14));
  }
  // Full width at half maximum of the m = 0 resonance: 2 |gap_n J_0(A/omega)|.
  const DjcParams d = djc_sc(2.0, 0.0);
  const double w = d.gap_n * std::abs(std::cyl_bessel_j(0.0, 2.0));
  auto pbar = [&](double delta0) {
    DjcParams e = d;
    e.delta0 = delta0;
    const FloquetSolution sol = solve_floquet(djc_hamiltonian(e), kOpts);
    Matrix target = Matrix::Zero(2, 2);
    target(0, 0) = 1.0;
    return time_averaged_probability(sol, basis_state(2, 1), target);
  };
  auto half_point = [&](double inner, double outer) {
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (inner + outer);
      (pbar(mid) > 0.25 ? inner : outer) = mid;
    }
    return 0.5 * (inner + outer);
  };
  const double fwhm = half_point(0.0, 5.0 * w) - half_point(0.0, -5.0 * w);
  CHECK(fwhm == doctest::Approx(2.0 * w).epsilon(0.2));
  DjcParams e = d;
  e.delta0 = w;
  CHECK(rwa_probability(e, 0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("djc: running average follows the RWA time course") {
  const DjcParams d = djc_sc(3.0, 0.0);
  const FloquetSolution sol = solve_floquet(djc_hamiltonian(d), kOpts);
  const double w = d.gap_n * std::abs(std::cyl_bessel_j(0.0, 3.0));
  const double slow_periods = 10.0 * (kTwoPi / w) / d.period();
  const long count = static_cast<long>(slow_periods * 64);
  Matrix target = Matrix::Zero(2, 2);
  target(0, 0) = 1.0;
  const ProbabilityTrace tr = instantaneous_probability(sol, basis_state(2, 1), target, sample_times(256, count, 4));
  const ProbabilityTrace avg = running_average(tr, 1.0);
  // The exact Rabi frequency is the quasienergy splitting, about 1% above the
  // RWA value; over two slow periods the literal RWA curve is still close.
  const double split = std::abs(fold_quasienergy(sol.quasienergies(1) - sol.quasienergies(0), d.omega));
  CHECK(split == doctest::Approx(w).epsilon(0.02));
  double worst = 0.0, worst_literal = 0.0;
  const double two_slow = 0.2 * slow_periods;
  for (std::size_t k = 64; k + 64 < avg.times.size(); k += 16) {
    const double t = avg.times[k] * d.period();
    const double rwa_dressed = std::pow(std::sin(0.5 * split * t), 2);
    worst = std::max(worst, std::abs(avg.values[k] - rwa_dressed));
    if (avg.times[k] < two_slow) {
      worst_literal = std::max(worst_literal, std::abs(avg.values[k] - rwa_probability_at(d, 0, t)));
    }
  }
  CHECK(worst < 0.1);
  CHECK(worst_literal < 0.1);
  // The instantaneous trace itself deviates (fast oscillations).
  double spread = 0.0;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    spread = std::max(spread, std::abs(tr.values[k] - rwa_probability_at(d, 0, tr.times[k] * d.period())));
  }
  CHECK(spread > worst);
}

TEST_CASE("running average and period average") {
  ProbabilityTrace flat;
  for (int k = 0; k < 100; ++k) {
    flat.times.push_back(k * 0.1);
    flat.values.push_back(0.3);
  }
  for (double v : running_average(flat, 2.0).values) CHECK(v == doctest::Approx(0.3));
  ProbabilityTrace line = flat;
  for (int k = 0; k < 100; ++k) line.values[k] = 0.01 * k;
  const ProbabilityTrace la = running_average(line, 1.0);
  CHECK(la.values[50] == doctest::Approx(0.5).epsilon(1e-12));

  SystemParams p;
  p.amp = 12.0 * p.omega;
  p.eps0 = -4.0 * p.omega;
  p.n_max = 2;
  const FloquetSolution sol = solve_floquet(rabi_hamiltonian(p), kOpts);
  const Vector psi0 = basis_state(6, 0);
  const Matrix proj = up_projector(2).entries();
  const double t0 = 7.0 + 32.0 / 256.0;
  const auto tr = instantaneous_probability(sol, psi0, proj, [&] {
    std::vector<double> t;
    for (int j = 0; j < 256; ++j) t.push_back(t0 + j / 256.0);
    return t;
  }());
  const double direct = std::accumulate(tr.values.begin(), tr.values.end(), 0.0) / 256.0;
  CHECK(period_averaged_probability(sol, psi0, proj, t0) == doctest::Approx(direct).epsilon(1e-12));
}

TEST_CASE("rwa formula") {
  DjcParams d = djc_sc(0.0, 0.7);
  // A = 0, m = 0: 1/2 gap^2 / (delta0^2 + gap^2).
  const double g2 = d.gap_n * d.gap_n;
  CHECK(rwa_probability(d, 0) == doctest::Approx(0.5 * g2 / (d.delta0 * d.delta0 + g2)).epsilon(1e-14));

  // At a zero of J_{-m}: zero, also exactly on resonance (limit convention).
  const double j0_zero = 2.404825557695773;
  d = djc_sc(j0_zero, 0.0);
  CHECK(rwa_probability(d, 0) == 0.0);
  d.delta0 = 0.3 * d.omega;
  CHECK(rwa_probability(d, 0) < 1e-20);
  // Negative m uses J_{-m} = (-1)^m J_m: same magnitude.
  d = djc_sc(2.0, -1.0);
  CHECK(rwa_probability(d, -1) == doctest::Approx(0.5));
  d.delta0 = -1.3 * d.omega;
  const DjcParams e = [&] {
    DjcParams x = d;
    x.delta0 = 1.3 * d.omega;
    return x;
  }();
  CHECK(rwa_probability(d, -1) == doctest::Approx(rwa_probability(e, 1)).epsilon(1e-14));
  // Time course: zero at t = 0, bounded by twice the average.
  CHECK(rwa_probability_at(d, -1, 0.0) == 0.0);
}

TEST_CASE("p_up") {
  CHECK(p_up(basis_state(8, product_index(true, 2, 3)), 3) == doctest::Approx(1.0));
  Vector s = Vector::Zero(8);
  s(product_index(true, 0, 3)) = 1.0 / std::sqrt(2.0);
  s(product_index(false, 1, 3)) = 1.0 / std::sqrt(2.0);
  CHECK(p_up(s, 3) == doctest::Approx(0.5));
  CHECK(p_up(Matrix(Matrix::Identity(8, 8) / 8.0), 3) == doctest::Approx(0.5));
  CHECK_THROWS_AS(p_up(Matrix(Matrix::Identity(8, 8)), 3), InputError);
  CHECK_THROWS_AS(p_up(Vector(2.0 * s), 3), InputError);
}

TEST_CASE("resonance regions") {
  const double wr = 1.0;
  CHECK(classify_region(0.5, 0.0, wr) == Region::kIII);
  CHECK(classify_region(1e-9, 0.5, wr) == Region::kII);
  CHECK(classify_region(1e-9, -0.5, wr) == Region::kI);
  CHECK(classify_region(1.5, 0.0, wr) == Region::kVI);
  CHECK(classify_region(1.2, -0.5, wr) == Region::kIV);
  CHECK(classify_region(1.2, 0.5, wr) == Region::kV);
  CHECK(to_string(Region::kVI) == "VI");

  const ResonanceRegions all = resonance_regions(wr, {0.0, 2.0, -2.0, 2.0});
  CHECK(all.present.size() == 6);
  CHECK(all.boundaries.size() == 6);
  for (const auto& pl : all.boundaries) {
    for (const auto& [a, e] : pl.points) {
      CHECK(a >= -1e-12);
      CHECK(a <= 2.0 + 1e-12);
      CHECK(e >= -2.0 - 1e-12);
      CHECK(e <= 2.0 + 1e-12);
    }
  }
  // Small rectangle well inside the first diamond.
  const ResonanceRegions one = resonance_regions(wr, {0.4, 0.6, -0.1, 0.1});
  REQUIRE(one.present.size() == 1);
  CHECK(one.present[0] == Region::kIII);
  CHECK_THROWS_AS(resonance_regions(wr, {0.0, std::nan(""), 0.0, 1.0}), InputError);
  CHECK_THROWS_AS(resonance_regions(wr, {1.0, 0.0, 0.0, 1.0}), InputError);
}

TEST_CASE("trace csv") {
  ProbabilityTrace t;
  t.times = {0.0, 0.5};
  t.values = {1.0, 0.25};
  std::ostringstream os;
  t.write_csv(os);
  CHECK(os.str().rfind("t_over_tau,P\n", 0) == 0);
}
