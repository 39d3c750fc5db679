#include <cmath>

#include "doctest.h"
#include "lzs/bath.hpp"
#include "lzs/hilbert_ops.hpp"

using namespace lzs;

TEST_CASE("spectral densities") {
  const BathSpec o = BathSpec::ohmic(0.001, 12.5, 0.0175);
  CHECK(spectral_density(o, 0.0) == 0.0);
  CHECK(spectral_density(o, 12.5) == doctest::Approx(0.001 * 12.5 * std::exp(-1.0)).epsilon(1e-15));
  CHECK_THROWS_AS(spectral_density(o, -1e-3), InputError);

  const BathSpec s = BathSpec::structured(0.001, 0.0019, 1.0, 0.0175);
  CHECK(spectral_density(s, 1.0) == doctest::Approx(16.0 * 0.0019 * 0.0019 / 0.001).epsilon(1e-13));
  // Ohmic at low frequency with slope 16 kappa g^2 / omega_r^2.
  const double slope = 16.0 * 0.001 * 0.0019 * 0.0019;
  CHECK(ohmic_slope(s) == doctest::Approx(slope).epsilon(1e-15));
  CHECK(spectral_density(s, 1e-6) / 1e-6 == doctest::Approx(slope).epsilon(1e-3));
  CHECK(ohmic_slope(o) == 0.001);

  // Lorentzian peak within kappa omega_r / 2 of omega_r.
  double best_w = 0.0, best = 0.0;
  for (int k = 0; k < 200001; ++k) {
    const double w = 0.99 + 0.02 * k / 200000.0;
    const double j = spectral_density(s, w);
    if (j > best) {
      best = j;
      best_w = w;
    }
  }
  CHECK(std::abs(best_w - 1.0) < 0.5 * 0.001);
}

TEST_CASE("bose occupation") {
  const double t = 0.0175;
  CHECK(bose_occupation(t * std::log(2.0), t) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(bose_occupation(0.3, 0.0) == 0.0);
  CHECK_THROWS_AS(bose_occupation(0.0, t), InputError);
  // Regression: omega_r at T = 0.0175 omega_r.
  CHECK(bose_occupation(1.0, t) == doctest::Approx(1.52465809053459e-25).epsilon(1e-12));
}

TEST_CASE("rate kernel") {
  const BathSpec o = BathSpec::ohmic(0.001, 12.5, 0.0175);
  const double t = o.temperature;
  for (double e : {0.002, 0.03, 0.4}) {
    CHECK(rate_kernel(o, e) / rate_kernel(o, -e) == doctest::Approx(std::exp(-e / t)).epsilon(1e-12));
  }
  CHECK(rate_kernel(o, 0.0) == doctest::Approx(kPi * 0.001 * t).epsilon(1e-15));
  CHECK(rate_kernel(o, -1.0) == doctest::Approx(0.002900055532216906).epsilon(1e-13));
  // Continuity at zero for both models.
  const BathSpec s = BathSpec::structured(0.001, 0.0019, 1.0, 0.0175);
  for (const BathSpec& b : {o, s}) {
    const double n0 = rate_kernel(b, 0.0);
    CHECK(rate_kernel(b, 1e-9) == doctest::Approx(n0).epsilon(1e-7));
    CHECK(rate_kernel(b, -1e-9) == doctest::Approx(n0).epsilon(1e-7));
  }
  // Zero temperature: only emission.
  const BathSpec cold = BathSpec::ohmic(0.001, 12.5, 0.0);
  CHECK(rate_kernel(cold, 0.2) == 0.0);
  CHECK(rate_kernel(cold, 0.0) == 0.0);
  CHECK(rate_kernel(cold, -0.2) == doctest::Approx(kPi * spectral_density(cold, 0.2)));
}

TEST_CASE("bath validation") {
  CHECK_THROWS_AS(BathSpec::ohmic(0.0, 12.5, 0.01).validate(), InputError);
  CHECK_THROWS_AS(BathSpec::ohmic(0.001, -1.0, 0.01).validate(), InputError);
  CHECK_THROWS_AS(BathSpec::ohmic(0.001, 12.5, -0.01).validate(), InputError);
  CHECK_NOTHROW(BathSpec::structured(0.001, 0.0019, 1.0, 0.0).validate());
  CHECK(BathSpec::structured(0.001, 0.0019, 1.0, 0.0).model_name() == "structured");
}
