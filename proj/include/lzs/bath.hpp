#pragma once

// Bosonic reservoirs: spectral densities, Bose factors and the golden-rule
// kernel N(e) entering the Floquet-Born-Markov rates.  k_B = 1.

#include <string>

namespace lzs {

enum class BathModel { kOhmic, kStructured };

struct BathSpec {
  BathModel model = BathModel::kOhmic;
  double kappa = 0.001;
  double omega_d = 12.5;   // ohmic cutoff
  double g = 0.0019;       // structured: qubit-resonator coupling
  double omega_r = 1.0;    // structured: resonator frequency
  double temperature = 0.0175;

  static BathSpec ohmic(double kappa, double omega_d, double temperature);
  static BathSpec structured(double kappa, double g, double omega_r, double temperature);

  void validate() const;
  [[nodiscard]] std::string model_name() const;
};

/// J(w) for w >= 0.  ohmic: kappa w e^{-w/omega_d};
/// structured: 16 kappa g^2 omega_r^2 w / ((omega_r^2 - w^2)^2 + (kappa omega_r w)^2).
double spectral_density(const BathSpec& b, double w);

/// lim_{w->0} J(w)/w.
double ohmic_slope(const BathSpec& b);

/// 1/(e^{w/T} - 1); zero for T = 0.  Throws InputError for w = 0.
double bose_occupation(double w, double temperature);

/// N(e) = pi J(|e|) [n_B(|e|) + theta(-e)], N(0) = pi T lim J(w)/w.
double rate_kernel(const BathSpec& b, double eps);

}  // namespace lzs
