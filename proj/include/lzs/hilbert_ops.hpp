#pragma once

// Operators and Hamiltonians of a driven qubit coupled to a single resonator
// mode, on the truncated space qubit (x) Fock(n_max).
//
// Basis ordering: |s> (x) |n> with s in {down=0, up=1}, flattened as
// index = s * (n_max + 1) + n.  Units: hbar = 1, k_B = 1.

#include <complex>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace lzs {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Raised when inputs violate a documented precondition.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical routine cannot deliver a result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BasisKind { kQubit, kFock, kProduct, kGeneric };

struct BasisTag {
  BasisKind kind = BasisKind::kGeneric;
  int n_max = -1;  // meaningful for kFock and kProduct

  static BasisTag qubit() { return {BasisKind::kQubit, -1}; }
  static BasisTag fock(int n_max) { return {BasisKind::kFock, n_max}; }
  static BasisTag product(int n_max) { return {BasisKind::kProduct, n_max}; }

  [[nodiscard]] int expected_dim() const;
  [[nodiscard]] std::string to_string() const;
  bool operator==(const BasisTag&) const = default;
};

/// Dense square operator with basis metadata.
class Operator {
 public:
  Operator() = default;
  Operator(Matrix entries, BasisTag basis);

  [[nodiscard]] int dim() const { return static_cast<int>(entries_.rows()); }
  [[nodiscard]] const Matrix& entries() const { return entries_; }
  [[nodiscard]] const BasisTag& basis() const { return basis_; }

  [[nodiscard]] Operator adjoint() const;
  [[nodiscard]] double hermiticity_defect() const;

  friend Operator operator+(const Operator& a, const Operator& b);
  friend Operator operator-(const Operator& a, const Operator& b);
  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator*(cplx s, const Operator& a);

 private:
  Matrix entries_;
  BasisTag basis_;
};

struct SystemParams {
  double delta = 0.0038;   // qubit gap
  double eps0 = 0.0;       // dc bias
  double amp = 0.0;        // drive amplitude A
  double omega = 0.0375;   // drive angular frequency
  double omega_r = 1.0;    // resonator frequency
  double g = 0.0019;       // qubit-resonator coupling
  int n_max = 3;           // Fock truncation

  void validate() const;
  [[nodiscard]] int dim() const { return 2 * (n_max + 1); }
  [[nodiscard]] double qubit_splitting() const;
  [[nodiscard]] double period() const { return kTwoPi / omega; }
};

/// Parameters of the driven Jaynes-Cummings doublet {|up,n>, |down,n+1>}.
struct DjcParams {
  int n = 0;
  double delta0 = 0.0;   // eps0 - omega_r
  double amp = 0.0;
  double omega = 0.0375;
  double gap_n = 0.0;    // 2 g sqrt(n+1)
  double omega_r = 1.0;

  static DjcParams from_system(const SystemParams& p, int n);
  void validate() const;
  [[nodiscard]] double period() const { return kTwoPi / omega; }
};

struct StaticSpectrum {
  RealVector energies;  // ascending
  Matrix states;        // eigenvectors as columns
};

/// H(t) = h_static + cos(omega t) * h_drive.
struct HarmonicHamiltonian {
  Matrix h_static;
  Matrix h_drive;
  double omega = 1.0;

  [[nodiscard]] Matrix at(double t) const;
  [[nodiscard]] int dim() const { return static_cast<int>(h_static.rows()); }
  [[nodiscard]] double period() const { return kTwoPi / omega; }
};

enum class PauliAxis { kX, kY, kZ };

Operator identity(int dim, BasisTag basis = {});
Operator annihilation_op(int n_max);
Operator creation_op(int n_max);
Operator number_op(int n_max);
Operator pauli(PauliAxis axis);
Operator tensor(const Operator& a, const Operator& b);

/// Projector |up><up| (x) I on the product space.
Operator up_projector(int n_max);
/// Product basis index of |s, n>.
int product_index(bool up, int n, int n_max);

Operator build_rabi_hamiltonian(const SystemParams& p, double t);
HarmonicHamiltonian rabi_hamiltonian(const SystemParams& p);

/// 2x2 matrix in the ordered basis {|up,n>, |down,n+1>}; off-diagonal -i*gap_n/2
/// in the upper-right corner.
Operator build_djc_hamiltonian(const DjcParams& d, double t);
HarmonicHamiltonian djc_hamiltonian(const DjcParams& d);

/// Bare driven qubit 1/2[(eps0 + A cos wt) sz + delta sx].
HarmonicHamiltonian qubit_hamiltonian(const SystemParams& p);

/// Ascending eigendecomposition of a Hermitian matrix; degenerate clusters are
/// re-orthonormalized.
StaticSpectrum hermitian_eigensystem(const Matrix& h);

/// Spectrum of the undriven Rabi Hamiltonian with static bias `eps`.
StaticSpectrum static_spectrum(const SystemParams& p, double eps);

struct GapScanResult {
  double eps_min = 0.0;
  double gap = 0.0;
  bool boundary_minimum = false;
};

/// Minimal distance between levels i < j over [eps_lo, eps_hi]: dense scan at
/// `resolution` followed by golden-section refinement.
GapScanResult gap_scan(const SystemParams& p, std::pair<int, int> levels,
                       std::pair<double, double> eps_range, double resolution);

/// Row-major text dump, one row per line, "re,im" pairs with 17 significant
/// digits separated by single spaces.  First line: "dim <d> basis <tag>".
void dump_operator(std::ostream& out, const Operator& op);
Operator read_operator_dump(std::istream& in);

}  // namespace lzs
