#include <cmath>
#include <sstream>

#include "doctest.h"
#include "lzs/hilbert_ops.hpp"

using namespace lzs;

namespace {

const cplx I1{0.0, 1.0};

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Reference Rabi Hamiltonian assembled element by element from the basis
// definition |s,n>, index s*(n_max+1)+n, sz|up> = +|up>.
Matrix rabi_by_hand(const SystemParams& p, double t) {
  const int nf = p.n_max + 1;
  Matrix h = Matrix::Zero(2 * nf, 2 * nf);
  const double eps = p.eps0 + p.amp * std::cos(p.omega * t);
  for (int s = 0; s < 2; ++s) {
    for (int n = 0; n < nf; ++n) {
      const int i = s * nf + n;
      h(i, i) = 0.5 * eps * (s == 1 ? 1.0 : -1.0) + p.omega_r * n;
      h(i, (1 - s) * nf + n) += 0.5 * p.delta;
      // g sy (a + a^dag): <s'|sy|s> with sy = [[0,-i],[i,0]] in (down, up)
      for (int m : {n - 1, n + 1}) {
        if (m < 0 || m >= nf) continue;
        const double amp = std::sqrt(static_cast<double>(std::max(n, m)));
        const cplx sy = s == 0 ? I1 : -I1;  // <up|sy|down> = i, <down|sy|up> = -i
        h((1 - s) * nf + m, i) += p.g * sy * amp;
      }
    }
  }
  return h;
}

}  // namespace

TEST_CASE("ladder operators") {
  Matrix a1(2, 2);
  a1 << 0, 1, 0, 0;
  CHECK(max_abs(annihilation_op(1).entries() - a1) == 0.0);

  const Matrix num = number_op(3).entries();
  for (int n = 0; n < 4; ++n) CHECK(num(n, n).real() == doctest::Approx(n));
  CHECK(max_abs(creation_op(3).entries() * annihilation_op(3).entries() - num) < 1e-15);

  const Matrix a = annihilation_op(3).entries();
  const Matrix comm = a * a.adjoint() - a.adjoint() * a;
  Matrix expect = Matrix::Identity(4, 4);
  expect(3, 3) = -3.0;
  CHECK(max_abs(comm - expect) < 1e-14);
}

TEST_CASE("pauli matrices") {
  Matrix sx(2, 2), sy(2, 2);
  sx << 0, 1, 1, 0;
  sy << 0, -I1, I1, 0;
  CHECK(max_abs(pauli(PauliAxis::kX).entries() - sx) == 0.0);
  CHECK(max_abs(pauli(PauliAxis::kY).entries() - sy) == 0.0);
  for (auto ax : {PauliAxis::kX, PauliAxis::kY, PauliAxis::kZ}) {
    const Matrix s = pauli(ax).entries();
    CHECK(max_abs(s * s - Matrix::Identity(2, 2)) == 0.0);
    CHECK(std::abs(s.trace()) == 0.0);
    CHECK(pauli(ax).hermiticity_defect() == 0.0);
  }
  // sz|up> = +|up> with up = index 1.
  CHECK(pauli(PauliAxis::kZ).entries()(1, 1).real() == 1.0);
}

TEST_CASE("tensor product") {
  const Operator id6 = tensor(identity(2, BasisTag::qubit()), identity(3, BasisTag::fock(2)));
  CHECK(id6.dim() == 6);
  CHECK(max_abs(id6.entries() - Matrix::Identity(6, 6)) == 0.0);
  CHECK(id6.basis() == BasisTag::product(2));

  const Matrix szi = tensor(pauli(PauliAxis::kZ), identity(4, BasisTag::fock(3))).entries();
  for (int n = 0; n < 4; ++n) {
    const int up = product_index(true, n, 3);
    CHECK(up == 4 + n);
    Vector e = Vector::Zero(8);
    e(up) = 1.0;
    CHECK(((szi * e) - e).norm() < 1e-15);
  }

  const Matrix a = Matrix::Random(3, 3), b = Matrix::Random(4, 4);
  const Operator ab = tensor(Operator(a, {}), Operator(b, {}));
  CHECK(ab.entries().norm() == doctest::Approx(a.norm() * b.norm()).epsilon(1e-13));
  // Kronecker ordering: (A (x) B)_{(i,k),(j,l)} = A_ij B_kl.
  CHECK(std::abs(ab.entries()(1 * 4 + 2, 2 * 4 + 3) - a(1, 2) * b(2, 3)) < 1e-15);
}

TEST_CASE("rabi hamiltonian matches element-wise construction") {
  SystemParams p;
  p.delta = 0.21;
  p.eps0 = -0.37;
  p.amp = 0.9;
  p.omega = 0.3;
  p.g = 0.11;
  p.n_max = 3;
  for (double t : {0.0, 0.7, 5.1}) {
    const Operator h = build_rabi_hamiltonian(p, t);
    CHECK(h.hermiticity_defect() < 1e-12);
    CHECK(max_abs(h.entries() - rabi_by_hand(p, t)) < 1e-14);
    CHECK(max_abs(rabi_hamiltonian(p).at(t) - h.entries()) < 1e-14);
    CHECK(max_abs(h.entries() - build_rabi_hamiltonian(p, t + p.period()).entries()) < 1e-12);
  }
  // t = 0: bias coefficient eps0 + A on sz.
  const Matrix h0 = build_rabi_hamiltonian(p, 0.0).entries();
  CHECK((h0(4, 4) - h0(0, 0)).real() == doctest::Approx(p.eps0 + p.amp));
}

TEST_CASE("rabi hamiltonian diagonal and decoupled limits") {
  SystemParams p;
  p.delta = 0.0;
  p.g = 0.0;
  p.amp = 0.0;
  p.eps0 = 0.3;
  p.n_max = 3;
  const StaticSpectrum sp = static_spectrum(p, p.eps0);
  std::vector<double> expect;
  for (int n = 0; n < 4; ++n) {
    expect.push_back(-0.15 + n);
    expect.push_back(0.15 + n);
  }
  std::sort(expect.begin(), expect.end());
  for (int k = 0; k < 8; ++k) CHECK(sp.energies(k) == doctest::Approx(expect[k]).epsilon(1e-15));

  // g = 0 with delta: only couplings inside each n block.
  p.delta = 0.2;
  const Matrix h = build_rabi_hamiltonian(p, 0.4).entries();
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      if (i % 4 != j % 4) CHECK(std::abs(h(i, j)) == 0.0);
    }
  }
}

TEST_CASE("static spectrum") {
  SystemParams p;
  p.g = 0.0;
  const StaticSpectrum sp = static_spectrum(p, 0.0);
  CHECK(sp.energies(1) - sp.energies(0) == doctest::Approx(p.delta).epsilon(1e-12));

  p = SystemParams{};
  for (double eps : {-1.7, -0.5, 0.4, 1.3}) {
    const StaticSpectrum s = static_spectrum(p, eps);
    const Matrix h = build_rabi_hamiltonian([&] {
                       SystemParams q = p;
                       q.eps0 = eps;
                       q.amp = 0.0;
                       return q;
                     }(), 0.0)
                         .entries();
    CHECK(max_abs(h * s.states - s.states * s.energies.cast<cplx>().asDiagonal()) < 1e-12);
    CHECK(max_abs(s.states.adjoint() * s.states - Matrix::Identity(8, 8)) < 1e-12);
    // Away from crossings the levels follow +-eps/2 + n omega_r.
    std::vector<double> bare;
    for (int n = 0; n <= p.n_max; ++n) {
      bare.push_back(-0.5 * eps + n);
      bare.push_back(0.5 * eps + n);
    }
    std::sort(bare.begin(), bare.end());
    for (int k = 0; k < 8; ++k) CHECK(std::abs(s.energies(k) - bare[k]) < 2.0 * (p.g + p.delta));
  }
}

TEST_CASE("gap scan") {
  SystemParams q;
  q.g = 0.0;
  const auto r0 = gap_scan(q, {0, 1}, {-q.delta, q.delta}, q.delta / 50);
  CHECK(std::abs(r0.eps_min) < 1e-8);
  CHECK(r0.gap == doctest::Approx(q.delta).epsilon(1e-10));
  CHECK_FALSE(r0.boundary_minimum);

  SystemParams p;  // strong coupling defaults
  const auto r1 = gap_scan(p, {1, 2}, {-1.5, -0.5}, 1e-3);
  CHECK(std::abs(r1.eps_min + 1.0) < 1e-3);
  CHECK(r1.gap == doctest::Approx(2.0 * p.g).epsilon(0.05));

  // Monotone level distance on the range: minimum sits on the boundary.
  const auto r2 = gap_scan(q, {0, 1}, {0.1, 0.3}, 1e-3);
  CHECK(r2.boundary_minimum);
  CHECK(r2.eps_min == doctest::Approx(0.1));

  CHECK_THROWS_AS(gap_scan(p, {2, 1}, {-1.5, -0.5}, 1e-3), InputError);
  CHECK_THROWS_AS(gap_scan(p, {0, 8}, {-1.5, -0.5}, 1e-3), InputError);
}

TEST_CASE("djc hamiltonian") {
  DjcParams d;
  d.n = 3;
  d.gap_n = 2.0 * 0.0019 * 2.0;
  d.delta0 = 0.013;
  d.amp = 0.09;
  d.omega = 0.0375;
  for (double t : {0.0, 11.0, 40.0}) {
    const Matrix h = build_djc_hamiltonian(d, t).entries();
    CHECK(std::abs(h(0, 1) - cplx(0.0, -0.5 * d.gap_n)) < 1e-16);
    CHECK(std::abs(h(1, 0) - cplx(0.0, 0.5 * d.gap_n)) < 1e-16);
    CHECK(h.trace().real() == doctest::Approx((2 * d.n + 1) * d.omega_r));
    const double dt = d.delta0 + d.amp * std::cos(d.omega * t);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues();
    const double mid = (d.n + 0.5) * d.omega_r;
    const double half = 0.5 * std::hypot(dt, d.gap_n);
    CHECK(ev(0) == doctest::Approx(mid - half).epsilon(1e-14));
    CHECK(ev(1) == doctest::Approx(mid + half).epsilon(1e-14));
    // Conjugated off-diagonal sign: same spectrum.
    const Eigen::VectorXd evc = Eigen::SelfAdjointEigenSolver<Matrix>(h.conjugate()).eigenvalues();
    CHECK((ev - evc).cwiseAbs().maxCoeff() < 1e-14);
  }
  // Splitting at delta(t) = 0 equals gap_n.
  d.amp = 0.0;
  d.delta0 = 0.0;
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Matrix>(build_djc_hamiltonian(d, 0.0).entries()).eigenvalues();
  CHECK(ev(1) - ev(0) == doctest::Approx(d.gap_n).epsilon(1e-14));

  SystemParams p;
  p.g = 0.0019;
  const DjcParams e = DjcParams::from_system(p, 3);
  CHECK(e.gap_n == 2.0 * p.g * std::sqrt(4.0));
}

TEST_CASE("parameter validation") {
  SystemParams p;
  p.omega = 0.0;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = SystemParams{};
  p.n_max = -1;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = SystemParams{};
  p.delta = -0.1;
  CHECK_THROWS_AS(p.validate(), InputError);
  CHECK_NOTHROW(SystemParams{}.validate());
}

TEST_CASE("operator dump round trip") {
  SystemParams p;
  p.eps0 = 0.123456789012345;
  p.amp = 0.4;
  const Operator h = build_rabi_hamiltonian(p, 0.3);
  std::stringstream ss;
  dump_operator(ss, h);
  const std::string text = ss.str();
  CHECK(text.rfind("dim 8 basis ", 0) == 0);
  const Operator back = read_operator_dump(ss);
  CHECK(back.dim() == 8);
  CHECK(back.basis() == h.basis());
  CHECK(max_abs(back.entries() - h.entries()) == 0.0);
}
