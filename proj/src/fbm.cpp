#include "lzs/fbm.hpp"

#include <cmath>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace lzs {

namespace {

constexpr double kRateTailThreshold = 1e-8;

}  // namespace

Vector vectorize(const Matrix& rho) {
  const Eigen::Index d = rho.rows();
  Vector v(d * d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) v(a * d + b) = rho(a, b);
  }
  return v;
}

Matrix unvectorize(const Vector& v, int dim) {
  if (v.size() != static_cast<Eigen::Index>(dim) * dim) throw InputError("vector length is not dim^2");
  Matrix rho(dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) rho(a, b) = v(a * dim + b);
  }
  return rho;
}

Matrix to_floquet_basis(const FloquetSolution& sol, const Matrix& rho_lab) {
  const Matrix& phi = sol.modes_at_zero();
  return phi.adjoint() * rho_lab * phi;
}

Matrix to_lab_basis(const FloquetSolution& sol, const Matrix& rho_floquet, int sample) {
  const Matrix& phi = sol.mode_samples.at(static_cast<std::size_t>(sample));
  return phi * rho_floquet * phi.adjoint();
}

FbmGenerator build_generator(const FloquetSolution& sol, const FourierCoeffs& x, const BathSpec& b) {
  b.validate();
  const int d = sol.dim();
  const int d2 = d * d;
  if (x.coeffs.empty() || x.at(0).rows() != d) throw InputError("Fourier coefficients do not match the solution");
  const int kmax = x.k_max;

  FbmGenerator gen;
  gen.dim = d;
  gen.omega = sol.omega;
  gen.quasienergies = sol.quasienergies;

  // Keep only harmonics that carry weight; both k and -k are needed together.
  double xscale = 0.0;
  for (const auto& c : x.coeffs) xscale = std::max(xscale, c.cwiseAbs().maxCoeff());
  std::vector<int> ks;
  for (int k = -kmax; k <= kmax; ++k) {
    const double w = std::max(x.at(k).cwiseAbs().maxCoeff(), x.at(-k).cwiseAbs().maxCoeff());
    if (w > 1e-14 * xscale) ks.push_back(k);
  }
  const auto nk = static_cast<Eigen::Index>(ks.size());

  // Rates N_k(a, b) = N(e_a - e_b + k omega).
  std::vector<Matrix> nk_mats;
  nk_mats.reserve(ks.size());
  double total_mass = 0.0, tail_mass = 0.0;
  for (int k : ks) {
    Matrix n(d, d);
    for (int a = 0; a < d; ++a) {
      for (int c = 0; c < d; ++c) {
        const double r = rate_kernel(b, sol.quasienergies(a) - sol.quasienergies(c) + k * sol.omega);
        if (!std::isfinite(r)) throw NumericalError("non-finite rate in generator");
        n(a, c) = r;
      }
    }
    const double mass = (x.at(k).cwiseAbs2().cwiseProduct(n.real())).sum();
    total_mass += mass;
    if (std::abs(k) > kmax - 2) tail_mass += mass;
    nk_mats.push_back(std::move(n));
  }
  gen.rate_tail_mass = total_mass > 0.0 ? tail_mass / total_mass : 0.0;
  gen.truncation_warning = x.truncation_warning || gen.rate_tail_mass > kRateTailThreshold;

  // First term as one product: sum_k P_k(a, a') Q_k(b', b) with the pairs
  // (N_k o X_k, X_{-k}) and (X_k, N_k^T o X_{-k}).
  Matrix pm(d2, 2 * nk);
  Matrix qm(2 * nk, d2);
  Matrix gamma = Matrix::Zero(d, d);       // sum_k X_{-k} (N_k o X_k)
  Matrix gamma_bar = Matrix::Zero(d, d);   // sum_k (X_{-k} o N_k^T) X_k
  for (Eigen::Index i = 0; i < nk; ++i) {
    const int k = ks[static_cast<std::size_t>(i)];
    const Matrix& xk = x.at(k);
    const Matrix& xmk = x.at(-k);
    const Matrix& n = nk_mats[static_cast<std::size_t>(i)];
    const Matrix nx = n.cwiseProduct(xk);
    const Matrix xn = xmk.cwiseProduct(n.transpose());
    for (int a = 0; a < d; ++a) {
      for (int c = 0; c < d; ++c) {
        pm(a * d + c, i) = nx(a, c);
        pm(a * d + c, nk + i) = xk(a, c);
        qm(i, a * d + c) = xmk(a, c);
        qm(nk + i, a * d + c) = xn(a, c);
      }
    }
    gamma.noalias() += xmk * nx;
    gamma_bar.noalias() += xn * xk;
  }
  const Matrix m1 = pm * qm;  // m1(a*d + a', b'*d + b)

  Matrix& g = gen.matrix;
  g.setZero(d2, d2);
  for (int a = 0; a < d; ++a) {
    for (int bb = 0; bb < d; ++bb) {
      const int row = a * d + bb;
      for (int a2 = 0; a2 < d; ++a2) {
        for (int b2 = 0; b2 < d; ++b2) g(row, a2 * d + b2) = m1(a * d + a2, b2 * d + bb);
      }
      for (int a2 = 0; a2 < d; ++a2) g(row, a2 * d + bb) -= gamma(a, a2);
      for (int b2 = 0; b2 < d; ++b2) g(row, a * d + b2) -= gamma_bar(b2, bb);
      g(row, row) += cplx(0.0, -(sol.quasienergies(a) - sol.quasienergies(bb)));
    }
  }
  return gen;
}

FbmPropagator::FbmPropagator(const FbmGenerator& gen) : g_(gen.matrix), dim_(gen.dim) {
  Eigen::ComplexEigenSolver<Matrix> es(g_);
  if (es.info() == Eigen::Success) {
    v_ = es.eigenvectors();
    Eigen::PartialPivLU<Matrix> lu(v_);
    v_inv_ = lu.inverse();
    condition_ = v_.cwiseAbs().colwise().sum().maxCoeff() * v_inv_.cwiseAbs().colwise().sum().maxCoeff();
    lambda_ = es.eigenvalues();
    if (std::isfinite(condition_) && condition_ < kMaxCondition) {
      method_ = "eigendecomposition";
      return;
    }
  } else {
    condition_ = std::numeric_limits<double>::infinity();
  }
  method_ = "scaling_and_squaring";
  v_.resize(0, 0);
  v_inv_.resize(0, 0);
}

Matrix FbmPropagator::transfer(double t) const {
  if (method_ == "eigendecomposition") {
    Vector e(lambda_.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = std::exp(lambda_(i) * t);
    return v_ * e.asDiagonal() * v_inv_;
  }
  const Matrix gt = g_ * t;
  return gt.exp();
}

Matrix FbmPropagator::evolve(const Matrix& rho0, double t) const {
  if (t == 0.0) return rho0;
  if (method_ == "eigendecomposition") {
    Vector c = v_inv_ * vectorize(rho0);
    for (Eigen::Index i = 0; i < c.size(); ++i) c(i) *= std::exp(lambda_(i) * t);
    return unvectorize(v_ * c, dim_);
  }
  return unvectorize(transfer(t) * vectorize(rho0), dim_);
}

std::vector<Matrix> evolve(const FbmGenerator& gen, const Matrix& rho0, const std::vector<double>& t_list) {
  if (rho0.rows() != gen.dim || rho0.cols() != gen.dim) throw InputError("rho0 dimension mismatch");
  if ((rho0 - rho0.adjoint()).cwiseAbs().maxCoeff() > 1e-9) throw InputError("rho0 is not Hermitian");
  if (std::abs(rho0.trace() - cplx(1.0)) > 1e-9) throw InputError("rho0 does not have unit trace");
  const FbmPropagator prop(gen);
  std::vector<Matrix> out;
  out.reserve(t_list.size());
  for (double t : t_list) out.push_back(prop.evolve(rho0, t));
  return out;
}

SteadyState steady_state(const FbmGenerator& gen) {
  const Matrix& g = gen.matrix;
  Eigen::JacobiSVD<Matrix> svd(g, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();  // descending
  const Eigen::Index n = s.size();
  const double norm = s(0);
  const double tol = kNullTolerance * norm;
  const int nullity = static_cast<int>((s.array() <= tol).count());
  if (nullity != 1) {
    std::ostringstream msg;
    msg << "generator null space has dimension " << nullity << " (smallest singular values "
        << s(n - 1) / norm << ", " << (n > 1 ? s(n - 2) / norm : 0.0) << " relative)";
    throw NumericalError(msg.str());
  }
  const Vector v = svd.matrixV().col(n - 1);
  Matrix rho = unvectorize(v, gen.dim);
  rho /= rho.trace();
  rho = 0.5 * (rho + rho.adjoint()).eval();

  SteadyState out;
  out.null_residual = (g * vectorize(rho)).norm() / norm;
  out.sigma_ratio = n > 1 ? s(n - 2) / norm : 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  out.positivity_deficit = std::max(0.0, -es.eigenvalues()(0));
  out.positivity_warning = out.positivity_deficit > 1e-6;
  out.rho = std::move(rho);
  return out;
}

double period_averaged_expectation(const Matrix& rho, const FloquetSolution& sol, const Matrix& proj) {
  const Matrix avg = period_average(sol, proj);  // avg(b, a) = <b|proj|a>-bar
  return (rho * avg).trace().real();
}

double period_averaged_expectation(const Matrix& rho, const FloquetSolution& sol, const Matrix& proj,
                                   const FbmPropagator& prop, int start_sample) {
  const Matrix step = prop.transfer(sol.period() / sol.n_t);
  Vector v = vectorize(rho);
  const int d = sol.dim();
  double acc = 0.0;
  for (int j = 0; j < sol.n_t; ++j) {
    const Matrix& phi = sol.mode_samples[static_cast<std::size_t>((start_sample + j) % sol.n_t)];
    const Matrix pf = phi.adjoint() * proj * phi;
    acc += (unvectorize(v, d) * pf).trace().real();
    v = step * v;
  }
  return acc / sol.n_t;
}

double p_up_period_averaged(const Matrix& rho, const FloquetSolution& sol, int n_max) {
  return period_averaged_expectation(rho, sol, up_projector(n_max).entries());
}

double p_up_period_averaged(const Matrix& rho, const FloquetSolution& sol, int n_max,
                            const FbmPropagator& prop) {
  return period_averaged_expectation(rho, sol, up_projector(n_max).entries(), prop, 0);
}

double trace_distance(const Matrix& a, const Matrix& b) {
  const Matrix diff = a - b;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

Matrix gibbs_state(const Matrix& h, double temperature) {
  const StaticSpectrum sp = hermitian_eigensystem(h);
  const Eigen::Index n = sp.energies.size();
  RealVector w(n);
  if (temperature > 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) w(i) = std::exp(-(sp.energies(i) - sp.energies(0)) / temperature);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) w(i) = sp.energies(i) - sp.energies(0) < 1e-12 ? 1.0 : 0.0;
  }
  w /= w.sum();
  return sp.states * w.cast<cplx>().asDiagonal() * sp.states.adjoint();
}

DissipativeResult dissipative_run(const HarmonicHamiltonian& h, const Matrix& coupling,
                                  const Matrix& projector, const BathSpec& b, const Vector& psi0,
                                  const DissipativeOptions& opts) {
  const FloquetSolution sol = solve_floquet(h, opts.numerics);
  const FourierCoeffs x = fourier_coefficients(sol, coupling, opts.k_max);
  const FbmGenerator gen = build_generator(sol, x, b);

  DissipativeResult out;
  out.fourier_tail = x.tail_fraction;
  out.rate_tail_mass = gen.rate_tail_mass;
  out.truncation_warning = gen.truncation_warning;

  if (!opts.times_over_tau.empty()) {
    if (std::abs(psi0.norm() - 1.0) > 1e-9) throw InputError("initial state is not normalized");
    const FbmPropagator prop(gen);
    out.evolution_method = prop.method();
    const Matrix rho0 = to_floquet_basis(sol, psi0 * psi0.adjoint());
    out.p_up_vs_time.times = opts.times_over_tau;
    for (double t : opts.times_over_tau) {
      if (t < 0.0) throw InputError("times must be >= 0");
      const double x = t * sol.n_t;
      if (std::abs(x - std::round(x)) > 1e-9 * std::max(1.0, x)) {
        throw InputError("times must be multiples of tau/n_t");
      }
      const auto start = static_cast<int>(std::fmod(std::round(x), static_cast<double>(sol.n_t)));
      const Matrix rho = prop.evolve(rho0, t * sol.period());
      out.p_up_vs_time.values.push_back(period_averaged_expectation(rho, sol, projector, prop, start));
    }
  }
  if (opts.steady) {
    const SteadyState ss = steady_state(gen);
    out.rho_steady = ss.rho;
    out.null_residual = ss.null_residual;
    out.positivity_deficit = ss.positivity_deficit;
    out.steady_p_up = period_averaged_expectation(ss.rho, sol, projector);
  }
  return out;
}

DissipativeResult structured_bath_run(const SystemParams& p, const BathSpec& b, const Vector& psi0,
                                      const DissipativeOptions& opts) {
  if (b.model != BathModel::kStructured) throw InputError("structured_bath_run needs a structured bath");
  if (psi0.size() != 2) throw InputError("structured-bath model acts on the bare qubit (D = 2)");
  Matrix up = Matrix::Zero(2, 2);
  up(1, 1) = 1.0;
  return dissipative_run(qubit_hamiltonian(p), pauli(PauliAxis::kY).entries(), up, b, psi0, opts);
}

}  // namespace lzs
