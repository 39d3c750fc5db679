#include "lzs/hilbert_ops.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <vector>

namespace lzs {

int BasisTag::expected_dim() const {
  switch (kind) {
    case BasisKind::kQubit:
      return 2;
    case BasisKind::kFock:
      return n_max + 1;
    case BasisKind::kProduct:
      return 2 * (n_max + 1);
    case BasisKind::kGeneric:
      break;
  }
  return -1;
}

std::string BasisTag::to_string() const {
  switch (kind) {
    case BasisKind::kQubit:
      return "qubit";
    case BasisKind::kFock:
      return "fock(" + std::to_string(n_max) + ")";
    case BasisKind::kProduct:
      return "product(" + std::to_string(n_max) + ")";
    case BasisKind::kGeneric:
      break;
  }
  return "generic";
}

namespace {

BasisTag parse_basis_tag(const std::string& s) {
  if (s == "qubit") return BasisTag::qubit();
  if (s == "generic") return {};
  auto open = s.find('(');
  auto close = s.find(')');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw InputError("unrecognized basis tag '" + s + "'");
  }
  const int n = std::stoi(s.substr(open + 1, close - open - 1));
  const auto head = s.substr(0, open);
  if (head == "fock") return BasisTag::fock(n);
  if (head == "product") return BasisTag::product(n);
  throw InputError("unrecognized basis tag '" + s + "'");
}

BasisTag combine_tags(const BasisTag& a, const BasisTag& b) {
  if (a == b) return a;
  return {};
}

}  // namespace

Operator::Operator(Matrix entries, BasisTag basis)
    : entries_(std::move(entries)), basis_(basis) {
  if (entries_.rows() != entries_.cols() || entries_.rows() == 0) {
    throw InputError("operator entries must be a non-empty square matrix");
  }
  const int expected = basis_.expected_dim();
  if (expected > 0 && expected != entries_.rows()) {
    throw InputError("operator dimension " + std::to_string(entries_.rows()) +
                     " does not match basis " + basis_.to_string());
  }
}

Operator Operator::adjoint() const { return {entries_.adjoint(), basis_}; }

double Operator::hermiticity_defect() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

Operator operator+(const Operator& a, const Operator& b) {
  return {a.entries_ + b.entries_, combine_tags(a.basis_, b.basis_)};
}

Operator operator-(const Operator& a, const Operator& b) {
  return {a.entries_ - b.entries_, combine_tags(a.basis_, b.basis_)};
}

Operator operator*(const Operator& a, const Operator& b) {
  return {a.entries_ * b.entries_, combine_tags(a.basis_, b.basis_)};
}

Operator operator*(cplx s, const Operator& a) { return {s * a.entries_, a.basis_}; }

void SystemParams::validate() const {
  if (!(delta >= 0.0)) throw InputError("delta must be >= 0");
  if (!(omega > 0.0)) throw InputError("omega must be > 0");
  if (!(omega_r > 0.0)) throw InputError("omega_r must be > 0");
  if (!(g >= 0.0)) throw InputError("g must be >= 0");
  if (!(amp >= 0.0)) throw InputError("amp must be >= 0");
  if (n_max < 0) throw InputError("n_max must be >= 0");
  if (!std::isfinite(eps0)) throw InputError("eps0 must be finite");
}

double SystemParams::qubit_splitting() const { return std::hypot(eps0, delta); }

DjcParams DjcParams::from_system(const SystemParams& p, int n) {
  DjcParams d;
  d.n = n;
  d.delta0 = p.eps0 - p.omega_r;
  d.amp = p.amp;
  d.omega = p.omega;
  d.gap_n = 2.0 * p.g * std::sqrt(static_cast<double>(n) + 1.0);
  d.omega_r = p.omega_r;
  return d;
}

void DjcParams::validate() const {
  if (n < 0) throw InputError("photon index n must be >= 0");
  if (!(omega > 0.0)) throw InputError("omega must be > 0");
  if (!(amp >= 0.0)) throw InputError("amp must be >= 0");
  if (!(gap_n >= 0.0)) throw InputError("gap_n must be >= 0");
}

Matrix HarmonicHamiltonian::at(double t) const {
  return h_static + std::cos(omega * t) * h_drive;
}

Operator identity(int dim, BasisTag basis) {
  return {Matrix::Identity(dim, dim), basis};
}

Operator annihilation_op(int n_max) {
  if (n_max < 0) throw InputError("n_max must be >= 0");
  Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return {a, BasisTag::fock(n_max)};
}

Operator creation_op(int n_max) { return annihilation_op(n_max).adjoint(); }

Operator number_op(int n_max) {
  if (n_max < 0) throw InputError("n_max must be >= 0");
  Matrix n = Matrix::Zero(n_max + 1, n_max + 1);
  for (int k = 0; k <= n_max; ++k) n(k, k) = static_cast<double>(k);
  return {n, BasisTag::fock(n_max)};
}

Operator pauli(PauliAxis axis) {
  Matrix s = Matrix::Zero(2, 2);
  switch (axis) {
    case PauliAxis::kX:
      s(0, 1) = 1.0;
      s(1, 0) = 1.0;
      break;
    case PauliAxis::kY:
      s(0, 1) = cplx(0.0, -1.0);
      s(1, 0) = cplx(0.0, 1.0);
      break;
    case PauliAxis::kZ:
      // index 0 is |down>, so sz|up> = +|up> puts -1 first.
      s(0, 0) = -1.0;
      s(1, 1) = 1.0;
      break;
  }
  return {s, BasisTag::qubit()};
}

Operator tensor(const Operator& a, const Operator& b) {
  const auto& ea = a.entries();
  const auto& eb = b.entries();
  const Eigen::Index da = ea.rows();
  const Eigen::Index db = eb.rows();
  Matrix out(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i) {
    for (Eigen::Index j = 0; j < da; ++j) {
      out.block(i * db, j * db, db, db) = ea(i, j) * eb;
    }
  }
  BasisTag tag;
  if (a.basis().kind == BasisKind::kQubit && b.basis().kind == BasisKind::kFock) {
    tag = BasisTag::product(b.basis().n_max);
  }
  return {std::move(out), tag};
}

int product_index(bool up, int n, int n_max) { return (up ? 1 : 0) * (n_max + 1) + n; }

namespace {

Matrix qubit_sz() { return pauli(PauliAxis::kZ).entries(); }
Matrix qubit_sx() { return pauli(PauliAxis::kX).entries(); }
Matrix qubit_sy() { return pauli(PauliAxis::kY).entries(); }

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace

Operator up_projector(int n_max) {
  Matrix p = Matrix::Zero(2, 2);
  p(1, 1) = 1.0;
  return {kron(p, Matrix::Identity(n_max + 1, n_max + 1)), BasisTag::product(n_max)};
}

HarmonicHamiltonian rabi_hamiltonian(const SystemParams& p) {
  p.validate();
  const int nf = p.n_max + 1;
  const Matrix id_f = Matrix::Identity(nf, nf);
  const Matrix a = annihilation_op(p.n_max).entries();
  const Matrix x = a + a.adjoint();
  const Matrix num = number_op(p.n_max).entries();

  HarmonicHamiltonian h;
  h.omega = p.omega;
  h.h_static = 0.5 * kron(p.eps0 * qubit_sz() + p.delta * qubit_sx(), id_f) +
               p.omega_r * kron(Matrix::Identity(2, 2), num) + p.g * kron(qubit_sy(), x);
  h.h_drive = 0.5 * p.amp * kron(qubit_sz(), id_f);
  return h;
}

Operator build_rabi_hamiltonian(const SystemParams& p, double t) {
  return {rabi_hamiltonian(p).at(t), BasisTag::product(p.n_max)};
}

HarmonicHamiltonian djc_hamiltonian(const DjcParams& d) {
  d.validate();
  HarmonicHamiltonian h;
  h.omega = d.omega;
  Matrix s = Matrix::Zero(2, 2);
  s(0, 0) = 0.5 * d.delta0;
  s(1, 1) = -0.5 * d.delta0;
  s(0, 1) = cplx(0.0, -0.5 * d.gap_n);
  s(1, 0) = cplx(0.0, 0.5 * d.gap_n);
  h.h_static = (static_cast<double>(d.n) + 0.5) * d.omega_r * Matrix::Identity(2, 2) + s;
  h.h_drive = Matrix::Zero(2, 2);
  h.h_drive(0, 0) = 0.5 * d.amp;
  h.h_drive(1, 1) = -0.5 * d.amp;
  return h;
}

Operator build_djc_hamiltonian(const DjcParams& d, double t) {
  return {djc_hamiltonian(d).at(t), {}};
}

HarmonicHamiltonian qubit_hamiltonian(const SystemParams& p) {
  p.validate();
  HarmonicHamiltonian h;
  h.omega = p.omega;
  h.h_static = 0.5 * (p.eps0 * qubit_sz() + p.delta * qubit_sx());
  h.h_drive = 0.5 * p.amp * qubit_sz();
  return h;
}

StaticSpectrum hermitian_eigensystem(const Matrix& h) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "Hermitian eigensolver did not converge (dim " << h.rows()
        << ", max |h_ij| = " << h.cwiseAbs().maxCoeff()
        << ", hermiticity defect = " << (h - h.adjoint()).cwiseAbs().maxCoeff() << ")";
    throw NumericalError(msg.str());
  }
  StaticSpectrum out{solver.eigenvalues(), solver.eigenvectors()};
  // Eigen returns ascending eigenvalues; re-orthonormalize degenerate clusters.
  const double scale = std::max(1.0, out.energies.cwiseAbs().maxCoeff());
  const double tol = 1e-10 * scale;
  const Eigen::Index n = out.energies.size();
  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && out.energies(end) - out.energies(end - 1) < tol) ++end;
    if (end - start > 1) {
      Eigen::HouseholderQR<Matrix> qr(out.states.middleCols(start, end - start));
      const Matrix q = qr.householderQ() * Matrix::Identity(n, end - start);
      out.states.middleCols(start, end - start) = q;
    }
    start = end;
  }
  return out;
}

StaticSpectrum static_spectrum(const SystemParams& p, double eps) {
  SystemParams q = p;
  q.eps0 = eps;
  q.amp = 0.0;
  return hermitian_eigensystem(rabi_hamiltonian(q).h_static);
}

namespace {

double level_distance(const SystemParams& p, int i, int j, double eps) {
  const auto spec = static_spectrum(p, eps);
  return spec.energies(j) - spec.energies(i);
}

}  // namespace

GapScanResult gap_scan(const SystemParams& p, std::pair<int, int> levels,
                       std::pair<double, double> eps_range, double resolution) {
  const auto [i, j] = levels;
  const auto [lo, hi] = eps_range;
  if (!(i >= 0 && i < j && j < p.dim())) throw InputError("gap_scan requires 0 <= i < j < dim");
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo)) {
    throw InputError("gap_scan requires a finite range with hi > lo");
  }
  if (!(resolution > 0.0)) throw InputError("gap_scan resolution must be > 0");

  const auto steps = static_cast<long>(std::ceil((hi - lo) / resolution));
  const long n = std::max<long>(steps, 2);
  const double h = (hi - lo) / static_cast<double>(n);
  long best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (long k = 0; k <= n; ++k) {
    const double gap = level_distance(p, i, j, lo + h * static_cast<double>(k));
    if (gap < best_gap) {
      best_gap = gap;
      best = k;
    }
  }

  GapScanResult out;
  if (best == 0 || best == n) {
    out.boundary_minimum = true;
    out.eps_min = lo + h * static_cast<double>(best);
    out.gap = best_gap;
    return out;
  }

  // Golden-section refinement on the bracketing interval.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo + h * static_cast<double>(best - 1);
  double b = lo + h * static_cast<double>(best + 1);
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = level_distance(p, i, j, c);
  double fd = level_distance(p, i, j, d);
  for (int iter = 0; iter < 200; ++iter) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = level_distance(p, i, j, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = level_distance(p, i, j, d);
    }
    const double f = std::min(fc, fd);
    if (std::abs(fc - fd) <= 1e-12 * f && (b - a) <= 1e-9 * std::max(1.0, std::abs(a))) break;
    if ((b - a) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(a))) break;
  }
  out.eps_min = 0.5 * (a + b);
  out.gap = level_distance(p, i, j, out.eps_min);
  return out;
}

void dump_operator(std::ostream& out, const Operator& op) {
  const auto& m = op.entries();
  out << "dim " << m.rows() << " basis " << op.basis().to_string() << '\n';
  out << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ' ';
      out << m(r, c).real() << ',' << m(r, c).imag();
    }
    out << '\n';
  }
}

Operator read_operator_dump(std::istream& in) {
  std::string word;
  int dim = 0;
  std::string tag;
  if (!(in >> word) || word != "dim" || !(in >> dim) || !(in >> word) || word != "basis" ||
      !(in >> tag) || dim <= 0) {
    throw InputError("malformed operator dump header");
  }
  Matrix m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      std::string cell;
      if (!(in >> cell)) throw InputError("operator dump truncated");
      const auto comma = cell.find(',');
      if (comma == std::string::npos) throw InputError("malformed entry '" + cell + "'");
      m(r, c) = cplx(std::stod(cell.substr(0, comma)), std::stod(cell.substr(comma + 1)));
    }
  }
  return {m, parse_basis_tag(tag)};
}

}  // namespace lzs
