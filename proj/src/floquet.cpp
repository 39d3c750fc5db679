#include "lzs/floquet.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/FFT>

namespace lzs {

namespace {

Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// exp(omega) for anti-Hermitian omega by scaling and squaring around a
// degree-16 Taylor polynomial (Paterson-Stockmeyer, 7 products).  With the
// scaled norm at most 1/2 the truncation error is below 1e-19.
Matrix expm_skew(const Matrix& omega) {
  static const std::array<double, 17> c = [] {
    std::array<double, 17> v{};
    v[0] = 1.0;
    for (int k = 1; k < 17; ++k) v[static_cast<std::size_t>(k)] = v[static_cast<std::size_t>(k - 1)] / k;
    return v;
  }();
  const Eigen::Index n = omega.rows();
  const double norm = omega.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Matrix x = omega / std::ldexp(1.0, squarings);
  const Matrix x2 = x * x;
  const Matrix x3 = x2 * x;
  const Matrix x4 = x2 * x2;
  const Matrix id = Matrix::Identity(n, n);
  auto block = [&](int j) -> Matrix {
    const auto k = static_cast<std::size_t>(4 * j);
    return c[k] * id + c[k + 1] * x + c[k + 2] * x2 + c[k + 3] * x3;
  };
  Matrix r = c[16] * x4 + block(3);
  for (int j = 2; j >= 0; --j) r = r * x4 + block(j);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

// One Newton-Schulz iteration towards the polar (unitary) factor.
void reunitarize(Matrix& u) {
  const Eigen::Index n = u.rows();
  const Matrix gram = u.adjoint() * u;
  if (max_abs(gram - Matrix::Identity(n, n)) < 1e-15) return;
  u = 0.5 * u * (3.0 * Matrix::Identity(n, n) - gram);
}

struct MagnusStep {
  Matrix omega6;
  double error = 0.0;
};

// Sixth-order Magnus exponent on [t, t+h] from three Gauss-Legendre nodes,
// with the difference to the fourth-order truncation as the error estimate.
MagnusStep magnus_exponent(const HamiltonianFn& h, double t, double dt) {
  static const double s15 = std::sqrt(15.0);
  const cplx mi(0.0, -1.0);
  const Matrix a1 = mi * h(t + (0.5 - s15 / 10.0) * dt);
  const Matrix a2 = mi * h(t + 0.5 * dt);
  const Matrix a3 = mi * h(t + (0.5 + s15 / 10.0) * dt);

  const Matrix b1 = dt * a2;
  const Matrix b2 = (s15 * dt / 3.0) * (a3 - a1);
  const Matrix b3 = (10.0 * dt / 3.0) * (a3 - 2.0 * a2 + a1);
  const Matrix c1 = commutator(b1, b2);
  const Matrix c2 = (-1.0 / 60.0) * commutator(b1, 2.0 * b3 + c1);
  const Matrix tail = (1.0 / 240.0) * commutator(-20.0 * b1 - b3 + c1, b2 + c2);

  MagnusStep out;
  out.omega6 = b1 + b3 / 12.0 + tail;
  // omega4 = b1 + b3/12 - c1/12
  out.error = max_abs(tail + c1 / 12.0);
  return out;
}

// Magnus stepper specialised to A(t) = P + cos(omega t) Q with P = -i S and
// Q = -i D.  Every commutator in the sixth-order exponent is a fixed
// combination of a handful of matrices, precomputed once.
class HarmonicMagnus {
 public:
  HarmonicMagnus(const Matrix& h_static, const Matrix& h_drive, double omega) : omega_(omega) {
    const cplx mi(0.0, -1.0);
    p_ = mi * h_static;
    q_ = mi * h_drive;
    k_ = commutator(p_, q_);
    l1_ = commutator(p_, k_);
    l2_ = commutator(q_, k_);
    p_l1_ = commutator(p_, l1_);
    p_l2_ = commutator(p_, l2_);
    q_l1_ = commutator(q_, l1_);
    q_l2_ = commutator(q_, l2_);
    k_l1_ = commutator(k_, l1_);
    k_l2_ = commutator(k_, l2_);
  }

  // Writes the sixth-order exponent for [t, t+dt] and returns |omega6 - omega4|.
  double exponent(double t, double dt, Matrix& out) const {
    static const double s15 = std::sqrt(15.0);
    const double f1 = std::cos(omega_ * (t + (0.5 - s15 / 10.0) * dt));
    const double f2 = std::cos(omega_ * (t + 0.5 * dt));
    const double f3 = std::cos(omega_ * (t + (0.5 + s15 / 10.0) * dt));
    const double beta2 = s15 * dt / 3.0 * (f3 - f1);
    const double beta3 = 10.0 * dt / 3.0 * (f3 - 2.0 * f2 + f1);
    const double gamma = dt * beta2;  // C1 = gamma K
    // C2 = cK K + cL1 L1 + cL2 L2
    const double c_k = -2.0 * beta3 * dt / 60.0;
    const double c_l1 = -gamma * dt / 60.0;
    const double c_l2 = -gamma * dt * f2 / 60.0;
    // F = -20 b1 - b3 + C1 = fP P + fQ Q + fK K
    const double f_p = -20.0 * dt;
    const double f_q = -20.0 * dt * f2 - beta3;
    const double f_k = gamma;
    // S = b2 + C2 = beta2 Q + cK K + cL1 L1 + cL2 L2; tail = [F, S] / 240
    const double w = 1.0 / 240.0;
    // [P,Q]=K [P,K]=L1 [Q,K]=L2 [K,Q]=-L2
    const double a_k = w * f_p * beta2;
    const double a_l1 = w * f_p * c_k;
    const double a_l2 = w * (f_q * c_k - f_k * beta2);
    const double a_pl1 = w * f_p * c_l1;
    const double a_pl2 = w * f_p * c_l2;
    const double a_ql1 = w * f_q * c_l1;
    const double a_ql2 = w * f_q * c_l2;
    const double a_kl1 = w * f_k * c_l1;
    const double a_kl2 = w * f_k * c_l2;

    // tail + C1/12
    err_.noalias() = (a_k + gamma / 12.0) * k_ + a_l1 * l1_ + a_l2 * l2_ + a_pl1 * p_l1_ +
                     a_pl2 * p_l2_ + a_ql1 * q_l1_ + a_ql2 * q_l2_ + a_kl1 * k_l1_ +
                     a_kl2 * k_l2_;
    out.noalias() = dt * p_ + (dt * f2 + beta3 / 12.0) * q_ + a_k * k_ + a_l1 * l1_ + a_l2 * l2_ +
                    a_pl1 * p_l1_ + a_pl2 * p_l2_ + a_ql1 * q_l1_ + a_ql2 * q_l2_ +
                    a_kl1 * k_l1_ + a_kl2 * k_l2_;
    return max_abs(err_);
  }

  [[nodiscard]] Eigen::Index dim() const { return p_.rows(); }

 private:
  double omega_;
  Matrix p_, q_, k_, l1_, l2_, p_l1_, p_l2_, q_l1_, q_l2_, k_l1_, k_l2_;
  mutable Matrix err_;
};

template <typename ExponentFn>
Matrix propagate_adaptive(ExponentFn&& exponent, Eigen::Index n, double t0, double t1, double tol,
                          double& dt_hint, long& steps) {
  Matrix u = Matrix::Identity(n, n);
  const double span = t1 - t0;
  if (span == 0.0) return u;
  const double min_dt = 1e-13 * std::abs(span);
  double t = t0;
  double dt = std::min(dt_hint > 0.0 ? dt_hint : span, span);
  Matrix omega6(n, n);
  while (t < t1) {
    const bool last = t + dt >= t1 - 1e-14 * std::abs(span);
    const double step = last ? t1 - t : dt;
    const double error = exponent(t, step, omega6);
    const double factor =
        error > 0.0 ? std::clamp(0.9 * std::pow(tol / error, 0.2), 0.2, 5.0) : 5.0;
    if (error <= tol) {
      u = expm_skew(omega6) * u;
      t = last ? t1 : t + step;
      ++steps;
      if (!last) {
        dt = step * factor;
      } else {
        dt_hint = std::max(dt, step);
      }
    } else {
      dt = step * factor;
      if (dt < min_dt) {
        std::ostringstream msg;
        msg << "Magnus step size underflow at t = " << t << " (error estimate " << error << ")";
        throw NumericalError(msg.str());
      }
    }
  }
  return u;
}

Matrix propagate_magnus(const HamiltonianFn& h, double t0, double t1, double tol, double& dt_hint,
                        long& steps) {
  auto exponent = [&h](double t, double dt, Matrix& out) {
    auto m = magnus_exponent(h, t, dt);
    out = std::move(m.omega6);
    return m.error;
  };
  return propagate_adaptive(exponent, h(t0).rows(), t0, t1, tol, dt_hint, steps);
}

Matrix propagate_magnus(const HarmonicMagnus& stepper, double t0, double t1, double tol,
                        double& dt_hint, long& steps) {
  auto exponent = [&stepper](double t, double dt, Matrix& out) {
    return stepper.exponent(t, dt, out);
  };
  return propagate_adaptive(exponent, stepper.dim(), t0, t1, tol, dt_hint, steps);
}

using OdeState = std::vector<cplx>;

Matrix propagate_rk(const HamiltonianFn& h, double t0, double t1, double tol, double& dt_hint,
                    long& steps) {
  namespace odeint = boost::numeric::odeint;
  const Eigen::Index n = h(t0).rows();
  OdeState state(static_cast<std::size_t>(n * n), cplx(0.0));
  for (Eigen::Index i = 0; i < n; ++i) state[static_cast<std::size_t>(i * n + i)] = 1.0;
  const double span = t1 - t0;
  if (span == 0.0) return Matrix::Identity(n, n);

  auto rhs = [&h, n](const OdeState& x, OdeState& dxdt, double t) {
    Eigen::Map<const Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> u(
        x.data(), n, n);
    Eigen::Map<Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> du(
        dxdt.data(), n, n);
    du.noalias() = cplx(0.0, -1.0) * (h(t) * u);
  };

  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<OdeState>());
  double t = t0;
  double dt = std::min(dt_hint > 0.0 ? dt_hint : span / 100.0, span);
  const double min_dt = 1e-13 * std::abs(span);
  while (t < t1) {
    if (t + dt > t1) dt = t1 - t;
    const auto result = stepper.try_step(rhs, state, t, dt);
    if (result == odeint::success) {
      ++steps;
    } else if (dt < min_dt) {
      std::ostringstream msg;
      msg << "Runge-Kutta step size underflow at t = " << t;
      throw NumericalError(msg.str());
    }
  }
  dt_hint = dt;
  Matrix u(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) u(i, j) = state[static_cast<std::size_t>(i * n + j)];
  }
  return u;
}

Matrix propagate_segment(const HamiltonianFn& h, double t0, double t1, double tol,
                         Integrator method, double& dt_hint, long& steps) {
  if (method == Integrator::kMagnus) return propagate_magnus(h, t0, t1, tol, dt_hint, steps);
  return propagate_rk(h, t0, t1, tol, dt_hint, steps);
}

void check_tolerance(double tol) {
  if (!(tol > 0.0 && tol <= 1e-4)) throw InputError("integrator tolerance must lie in (0, 1e-4]");
}

}  // namespace

Matrix propagate(const HamiltonianFn& h, double t0, double t1, double tol, Integrator method,
                 long* steps) {
  check_tolerance(tol);
  double hint = -1.0;
  long count = 0;
  Matrix u = propagate_segment(h, t0, t1, tol, method, hint, count);
  if (steps != nullptr) *steps = count;
  return u;
}

PeriodPropagation propagate_period(const HamiltonianFn& h, double tau,
                                   const PropagatorOptions& opts) {
  check_tolerance(opts.tol);
  if (opts.n_t < 4) throw InputError("n_t must be >= 4");
  if (!(tau > 0.0)) throw InputError("period must be > 0");

  PeriodPropagation out;
  out.omega = kTwoPi / tau;
  out.n_t = opts.n_t;
  out.unitaries.reserve(static_cast<std::size_t>(opts.n_t));
  const Eigen::Index n = h(0.0).rows();
  Matrix u = Matrix::Identity(n, n);
  out.unitaries.push_back(u);
  double hint = -1.0;
  for (int j = 0; j < opts.n_t; ++j) {
    const double ta = tau * j / opts.n_t;
    const double tb = tau * (j + 1) / opts.n_t;
    u = propagate_segment(h, ta, tb, opts.tol, opts.method, hint, out.steps) * u;
    reunitarize(u);
    if (j + 1 < opts.n_t) out.unitaries.push_back(u);
  }
  out.monodromy = u;
  for (const auto& m : out.unitaries) {
    out.unitarity_defect =
        std::max(out.unitarity_defect, max_abs(m.adjoint() * m - Matrix::Identity(n, n)));
  }
  out.unitarity_defect = std::max(
      out.unitarity_defect, max_abs(out.monodromy.adjoint() * out.monodromy - Matrix::Identity(n, n)));
  return out;
}

namespace {

double unitarity_defect(const std::vector<Matrix>& us, const Matrix& monodromy) {
  const Eigen::Index n = monodromy.rows();
  const Matrix id = Matrix::Identity(n, n);
  double defect = max_abs(monodromy.adjoint() * monodromy - id);
  for (const auto& m : us) defect = std::max(defect, max_abs(m.adjoint() * m - id));
  return defect;
}

// Diagonal unitary W with W^dag M W real for every M, found by propagating
// phases along the nonzero pattern.  Empty when no such gauge exists.
std::optional<Vector> real_gauge(const std::vector<const Matrix*>& ms) {
  const Eigen::Index n = ms.front()->rows();
  double scale = 0.0;
  for (const auto* m : ms) scale = std::max(scale, max_abs(*m));
  const double eps = 1e-14 * std::max(scale, 1.0);
  Vector w = Vector::Zero(n);
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (Eigen::Index root = 0; root < n; ++root) {
    if (seen[static_cast<std::size_t>(root)]) continue;
    seen[static_cast<std::size_t>(root)] = true;
    w(root) = 1.0;
    std::vector<Eigen::Index> stack{root};
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      for (const auto* m : ms) {
        for (Eigen::Index j = 0; j < n; ++j) {
          const cplx mij = (*m)(i, j);
          if (j == i || std::abs(mij) <= eps || seen[static_cast<std::size_t>(j)]) continue;
          // conj(w_i) m_ij w_j = |m_ij|
          w(j) = w(i) * std::conj(mij) / std::abs(mij);
          seen[static_cast<std::size_t>(j)] = true;
          stack.push_back(j);
        }
      }
    }
  }
  for (const auto* m : ms) {
    const Matrix g = w.asDiagonal().toDenseMatrix().adjoint() * (*m) * w.asDiagonal();
    if (g.imag().cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) return std::nullopt;
  }
  return w;
}

}  // namespace

PeriodPropagation propagate_period(const HarmonicHamiltonian& h, const PropagatorOptions& opts) {
  if (opts.method != Integrator::kMagnus) {
    const HamiltonianFn fn = [&h](double t) { return h.at(t); };
    return propagate_period(fn, h.period(), opts);
  }
  check_tolerance(opts.tol);
  if (opts.n_t < 4) throw InputError("n_t must be >= 4");

  const double tau = h.period();
  const Eigen::Index n = h.dim();
  PeriodPropagation out;
  out.omega = h.omega;
  out.n_t = opts.n_t;
  out.unitaries.reserve(static_cast<std::size_t>(opts.n_t));

  const auto gauge = opts.n_t % 2 == 0 ? real_gauge({&h.h_static, &h.h_drive}) : std::nullopt;
  if (!gauge) {
    const HarmonicMagnus stepper(h.h_static, h.h_drive, h.omega);
    Matrix u = Matrix::Identity(n, n);
    out.unitaries.push_back(u);
    double hint = -1.0;
    for (int j = 0; j < opts.n_t; ++j) {
      const double ta = tau * j / opts.n_t;
      const double tb = tau * (j + 1) / opts.n_t;
      u = propagate_magnus(stepper, ta, tb, opts.tol, hint, out.steps) * u;
      reunitarize(u);
      if (j + 1 < opts.n_t) out.unitaries.push_back(u);
    }
    out.monodromy = u;
    out.unitarity_defect = unitarity_defect(out.unitaries, out.monodromy);
    return out;
  }

  // In the real gauge H(t) is real symmetric and H(tau - t) = H(t), so
  //   U(tau - t, 0) = conj(U(t, 0)) U(tau/2, 0)^T U(tau/2, 0)
  // and only the first half period is integrated.
  const auto& w = *gauge;
  const Matrix wd = w.asDiagonal();
  const Matrix s_real = (wd.adjoint() * h.h_static * wd).real().cast<cplx>();
  const Matrix d_real = (wd.adjoint() * h.h_drive * wd).real().cast<cplx>();
  const HarmonicMagnus stepper(0.5 * (s_real + s_real.transpose()),
                               0.5 * (d_real + d_real.transpose()), h.omega);
  const int half = opts.n_t / 2;
  std::vector<Matrix> real_frame;
  real_frame.reserve(static_cast<std::size_t>(half + 1));
  Matrix u = Matrix::Identity(n, n);
  real_frame.push_back(u);
  double hint = -1.0;
  for (int j = 0; j < half; ++j) {
    const double ta = tau * j / opts.n_t;
    const double tb = tau * (j + 1) / opts.n_t;
    u = propagate_magnus(stepper, ta, tb, opts.tol, hint, out.steps) * u;
    reunitarize(u);
    real_frame.push_back(u);
  }
  Matrix mono = u.transpose() * u;
  reunitarize(mono);
  auto to_lab = [&wd](const Matrix& m) -> Matrix { return wd * m * wd.adjoint(); };
  for (int j = 0; j <= half; ++j) out.unitaries.push_back(to_lab(real_frame[static_cast<std::size_t>(j)]));
  for (int j = half + 1; j < opts.n_t; ++j) {
    Matrix uj = real_frame[static_cast<std::size_t>(opts.n_t - j)].conjugate() * mono;
    reunitarize(uj);
    out.unitaries.push_back(to_lab(uj));
  }
  out.monodromy = to_lab(mono);
  out.unitarity_defect = unitarity_defect(out.unitaries, out.monodromy);
  return out;
}

double fold_quasienergy(double e, double omega) {
  double x = std::remainder(e, omega);  // [-omega/2, omega/2]
  if (x <= -0.5 * omega) x += omega;
  return x;
}

std::vector<std::vector<int>> degenerate_clusters(const RealVector& eps, double omega) {
  const auto n = static_cast<int>(eps.size());
  const double tol = kDegeneracyTolerance * omega;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int i) {
    while (parent[static_cast<std::size_t>(i)] != i) i = parent[static_cast<std::size_t>(i)];
    return i;
  };
  // eps is sorted; neighbours are adjacent entries plus the wrap-around pair.
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    if (i == j) continue;
    double gap = eps(j) - eps(i);
    if (j == 0) gap += omega;
    if (gap < tol) parent[static_cast<std::size_t>(find(j))] = find(i);
  }
  std::vector<std::vector<int>> blocks;
  for (int root = 0; root < n; ++root) {
    std::vector<int> block;
    for (int k = 0; k < n; ++k) {
      if (find(k) == root) block.push_back(k);
    }
    if (block.size() > 1) blocks.push_back(std::move(block));
  }
  return blocks;
}

FloquetSolution floquet_modes(const PeriodPropagation& prop) {
  const Eigen::Index n = prop.monodromy.rows();
  if (prop.unitarity_defect > 1e-8) {
    std::ostringstream msg;
    msg << "monodromy is not unitary within tolerance (defect " << prop.unitarity_defect << ")";
    throw NumericalError(msg.str());
  }
  const double tau = kTwoPi / prop.omega;

  Eigen::ComplexSchur<Matrix> schur(prop.monodromy);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition of monodromy failed");
  const Matrix& q = schur.matrixU();
  const Matrix& tri = schur.matrixT();

  std::vector<double> eps(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    eps[static_cast<std::size_t>(i)] = fold_quasienergy(-std::arg(tri(i, i)) / tau, prop.omega);
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&eps](int a, int b) {
    return eps[static_cast<std::size_t>(a)] < eps[static_cast<std::size_t>(b)];
  });

  FloquetSolution sol;
  sol.omega = prop.omega;
  sol.n_t = prop.n_t;
  sol.monodromy = prop.monodromy;
  sol.quasienergies.resize(n);
  Matrix modes0(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int src = order[static_cast<std::size_t>(i)];
    sol.quasienergies(i) = eps[static_cast<std::size_t>(src)];
    modes0.col(i) = q.col(src);
  }
  // For a normal matrix the Schur vectors are eigenvectors; clean up rounding.
  Eigen::HouseholderQR<Matrix> qr(modes0);
  Matrix qq = qr.householderQ() * Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const cplx overlap = qq.col(i).dot(modes0.col(i));
    if (std::abs(overlap) > 0.0) qq.col(i) *= overlap / std::abs(overlap);
  }
  modes0 = qq;

  sol.degenerate_blocks = degenerate_clusters(sol.quasienergies, prop.omega);
  sol.degenerate = !sol.degenerate_blocks.empty();

  sol.mode_samples.reserve(prop.unitaries.size());
  for (int j = 0; j < prop.n_t; ++j) {
    const double t = tau * j / prop.n_t;
    Vector phase(n);
    for (Eigen::Index a = 0; a < n; ++a) phase(a) = std::polar(1.0, sol.quasienergies(a) * t);
    sol.mode_samples.push_back(prop.unitaries[static_cast<std::size_t>(j)] * modes0 *
                               phase.asDiagonal());
  }
  return sol;
}

FloquetSolution solve_floquet(const HarmonicHamiltonian& h, const PropagatorOptions& opts) {
  return floquet_modes(propagate_period(h, opts));
}

FourierCoeffs fourier_coefficients(const FloquetSolution& sol, const Matrix& x, int k_max) {
  const int n_t = sol.n_t;
  if (k_max < 0 || k_max > n_t / 2 - 1) throw InputError("k_max must lie in [0, n_t/2 - 1]");
  const Eigen::Index d = sol.dim();
  if (x.rows() != d || x.cols() != d) throw InputError("operator dimension mismatch");

  // series[(a*d + b)][j] = <a(t_j)|x|b(t_j)>
  std::vector<std::vector<cplx>> series(static_cast<std::size_t>(d * d),
                                        std::vector<cplx>(static_cast<std::size_t>(n_t)));
  for (int j = 0; j < n_t; ++j) {
    const Matrix& s = sol.mode_samples[static_cast<std::size_t>(j)];
    const Matrix m = s.adjoint() * x * s;
    for (Eigen::Index a = 0; a < d; ++a) {
      for (Eigen::Index b = 0; b < d; ++b) {
        series[static_cast<std::size_t>(a * d + b)][static_cast<std::size_t>(j)] = m(a, b);
      }
    }
  }

  FourierCoeffs out;
  out.k_max = k_max;
  out.coeffs.assign(static_cast<std::size_t>(2 * k_max + 1), Matrix::Zero(d, d));
  Eigen::FFT<double> fft;
  std::vector<cplx> spectrum;
  double total = 0.0;
  double tail = 0.0;
  const double inv_n = 1.0 / n_t;
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      fft.fwd(spectrum, series[static_cast<std::size_t>(a * d + b)]);
      for (int bin = 0; bin < n_t; ++bin) {
        const int k = bin <= n_t / 2 ? bin : bin - n_t;
        const cplx c = spectrum[static_cast<std::size_t>(bin)] * inv_n;
        const double w = std::norm(c);
        total += w;
        if (std::abs(k) > k_max - 2) tail += w;
        if (std::abs(k) <= k_max) out.coeffs[static_cast<std::size_t>(k + k_max)](a, b) = c;
      }
    }
  }
  out.tail_fraction = total > 0.0 ? tail / total : 0.0;
  out.truncation_warning = out.tail_fraction > kLeakageThreshold;
  return out;
}

Matrix period_average(const FloquetSolution& sol, const Matrix& x) {
  const Eigen::Index d = sol.dim();
  Matrix acc = Matrix::Zero(d, d);
  for (const auto& s : sol.mode_samples) acc.noalias() += s.adjoint() * x * s;
  return acc / static_cast<double>(sol.n_t);
}

namespace {

constexpr char kMagic[8] = {'L', 'Z', 'S', 'F', 'L', 'Q', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "binary cache writer assumes a little-endian host");

void write_doubles(std::ofstream& out, const double* p, std::size_t count) {
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}

void read_doubles(std::ifstream& in, double* p, std::size_t count) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw InputError("Floquet cache truncated");
}

void write_matrix(std::ofstream& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double v[2] = {m(r, c).real(), m(r, c).imag()};
      write_doubles(out, v, 2);
    }
  }
}

Matrix read_matrix(std::ifstream& in, Eigen::Index d) {
  Matrix m(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      double v[2];
      read_doubles(in, v, 2);
      m(r, c) = cplx(v[0], v[1]);
    }
  }
  return m;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::uint64_t floquet_cache_key(const SystemParams& p, const std::string& model,
                                const PropagatorOptions& opts) {
  std::uint64_t h = 14695981039346656037ULL;
  const double vals[] = {p.delta, p.eps0, p.amp, p.omega, p.omega_r, p.g, opts.tol};
  h = fnv1a(h, vals, sizeof(vals));
  const std::int32_t ints[] = {p.n_max, opts.n_t, static_cast<std::int32_t>(opts.method)};
  h = fnv1a(h, ints, sizeof(ints));
  return fnv1a(h, model.data(), model.size());
}

void save_floquet_cache(const std::filesystem::path& path, const FloquetSolution& sol) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t header[2] = {static_cast<std::uint32_t>(sol.dim()),
                                   static_cast<std::uint32_t>(sol.n_t)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  write_doubles(out, &sol.omega, 1);
  write_doubles(out, sol.quasienergies.data(), static_cast<std::size_t>(sol.dim()));
  write_matrix(out, sol.monodromy);
  for (const auto& m : sol.mode_samples) write_matrix(out, m);
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

FloquetSolution load_floquet_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open Floquet cache " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InputError("not a Floquet cache file: " + path.string());
  }
  std::uint32_t header[2];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in || header[0] == 0 || header[1] < 4) throw InputError("corrupt Floquet cache header");
  const auto d = static_cast<Eigen::Index>(header[0]);
  FloquetSolution sol;
  sol.n_t = static_cast<int>(header[1]);
  read_doubles(in, &sol.omega, 1);
  sol.quasienergies.resize(d);
  read_doubles(in, sol.quasienergies.data(), static_cast<std::size_t>(d));
  sol.monodromy = read_matrix(in, d);
  sol.mode_samples.reserve(header[1]);
  for (std::uint32_t j = 0; j < header[1]; ++j) sol.mode_samples.push_back(read_matrix(in, d));
  sol.degenerate_blocks = degenerate_clusters(sol.quasienergies, sol.omega);
  sol.degenerate = !sol.degenerate_blocks.empty();
  return sol;
}

}  // namespace lzs
