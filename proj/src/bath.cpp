#include "lzs/bath.hpp"

#include <cmath>

#include "lzs/hilbert_ops.hpp"

namespace lzs {

BathSpec BathSpec::ohmic(double kappa, double omega_d, double temperature) {
  BathSpec b;
  b.model = BathModel::kOhmic;
  b.kappa = kappa;
  b.omega_d = omega_d;
  b.temperature = temperature;
  return b;
}

BathSpec BathSpec::structured(double kappa, double g, double omega_r, double temperature) {
  BathSpec b;
  b.model = BathModel::kStructured;
  b.kappa = kappa;
  b.g = g;
  b.omega_r = omega_r;
  b.temperature = temperature;
  return b;
}

void BathSpec::validate() const {
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InputError("bath: kappa must be > 0");
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw InputError("bath: temperature must be >= 0");
  if (model == BathModel::kOhmic) {
    if (!(omega_d > 0.0) || !std::isfinite(omega_d)) throw InputError("bath: omega_d must be > 0");
  } else {
    if (!(g >= 0.0) || !std::isfinite(g)) throw InputError("bath: g must be >= 0");
    if (!(omega_r > 0.0) || !std::isfinite(omega_r)) throw InputError("bath: omega_r must be > 0");
  }
}

std::string BathSpec::model_name() const { return model == BathModel::kOhmic ? "ohmic" : "structured"; }

double spectral_density(const BathSpec& b, double w) {
  if (w < 0.0) throw InputError("spectral density needs w >= 0");
  if (b.model == BathModel::kOhmic) return b.kappa * w * std::exp(-w / b.omega_d);
  const double wr2 = b.omega_r * b.omega_r;
  const double detune = wr2 - w * w;
  const double damp = b.kappa * b.omega_r * w;
  return 16.0 * b.kappa * b.g * b.g * wr2 * w / (detune * detune + damp * damp);
}

double ohmic_slope(const BathSpec& b) {
  if (b.model == BathModel::kOhmic) return b.kappa;
  return 16.0 * b.kappa * b.g * b.g / (b.omega_r * b.omega_r);
}

double bose_occupation(double w, double temperature) {
  if (w == 0.0) throw InputError("Bose occupation is singular at w = 0");
  if (temperature == 0.0) return w > 0.0 ? 0.0 : -1.0;
  return 1.0 / std::expm1(w / temperature);
}

double rate_kernel(const BathSpec& b, double eps) {
  if (eps == 0.0) return kPi * b.temperature * ohmic_slope(b);
  const double w = std::abs(eps);
  const double occ = bose_occupation(w, b.temperature) + (eps < 0.0 ? 1.0 : 0.0);
  return kPi * spectral_density(b, w) * occ;
}

}  // namespace lzs
