#include <doctest.h>

#include <cmath>

#include "cffl/quantization.hpp"

using namespace cffl;

TEST_CASE("converter gain matches the closed form") {
  // Frozen from high-precision evaluation of rho = (pi sqrt(3)/2) 2^(-2b).
  CHECK(aqnm_gain(1) == doctest::Approx(0.319825238412168).epsilon(1e-12));
  CHECK(aqnm_gain(10) == doctest::Approx(0.999997405339197).epsilon(1e-12));
  CHECK(aqnm_gain(30) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(aqnm_distortion_factor(30) > 0.0);
  CHECK_THROWS_AS(aqnm_gain(0), Error);
}

TEST_CASE("gain is strictly increasing in the bit depth") {
  // 1 - rho saturates in double precision near b = 28, so strict growth of
  // the gain is checked where resolvable and on the distortion factor (an
  // exact quartering per bit) over the whole range.
  for (int b = 1; b < 26; ++b) CHECK(aqnm_gain(b + 1) > aqnm_gain(b));
  for (int b = 1; b < 30; ++b) {
    CHECK(aqnm_gain(b + 1) >= aqnm_gain(b));
    CHECK(aqnm_distortion_factor(b + 1) < aqnm_distortion_factor(b));
  }
}

TEST_CASE("tabulated Lloyd-Max factors are used when enabled") {
  CHECK(aqnm_gain(1, true) == doctest::Approx(1.0 - 0.3634));
  CHECK(aqnm_gain(5, true) == doctest::Approx(1.0 - 0.002499));
  CHECK(aqnm_gain(6, true) == aqnm_gain(6, false));  // table ends at b = 5
  for (int b = 1; b < 8; ++b) CHECK(aqnm_gain(b + 1, true) > aqnm_gain(b, true));
}

TEST_CASE("ADC distortion covariance") {
  Vec p0 = Vec::Zero(1), beta1 = Vec::Ones(1);
  CHECK(adc_distortion_cov(1.0, p0, beta1, 1.0) == 0.0);
  CHECK(adc_distortion_cov(0.5, p0, beta1, 1.0) == doctest::Approx(0.25));
  Vec p(1);
  p << 4.0;
  CHECK(adc_distortion_cov(0.5, p, beta1, 1.0) == doctest::Approx(1.25));

  // Linear in each power and in the thermal floor.
  Vec p2(2), b2(2);
  p2 << 1.0, 2.0;
  b2 << 0.5, 0.25;
  const double base = adc_distortion_cov(0.5, p2, b2, 1.0);
  Vec p3 = p2;
  p3(0) += 1.0;
  CHECK(adc_distortion_cov(0.5, p3, b2, 1.0) - base ==
        doctest::Approx(0.25 * 0.5));
  CHECK(adc_distortion_cov(0.5, p2, b2, 2.0) - base == doctest::Approx(0.25));
}

TEST_CASE("DAC distortion variance") {
  CHECK(dac_distortion_var(1.0, 5.0) == 0.0);
  CHECK(dac_distortion_var(0.5, 1.0) == doctest::Approx(0.25));
  // Frozen direct evaluation at the b = 1 gain.
  CHECK(dac_distortion_var(aqnm_gain(1), 0.2) ==
        doctest::Approx(0.0435074110573536).epsilon(1e-12));
}

TEST_CASE("apply_quantizer is the identity for a perfect converter") {
  Rng rng(1);
  CVec signal(3);
  signal << Complex(1, 2), Complex(-3, 0), Complex(0, 4);
  const QuantizerModel perfect{32, 1.0, 0.0};
  const CVec out = apply_quantizer(signal, perfect, 0.0, rng);
  CHECK((out - signal).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("apply_quantizer noise has the requested variance") {
  const QuantizerModel q = make_quantizer(2);
  const double target_var = 0.37;
  const int n = 100000;
  Rng rng(9);
  CVec zero = CVec::Zero(n);
  const CVec out = apply_quantizer(zero, q, target_var, rng);
  double power = 0.0;
  for (int i = 0; i < n; ++i) power += std::norm(out(i));
  CHECK(power / n == doctest::Approx(target_var).epsilon(0.02));
}

TEST_CASE("apply_quantizer second moment combines gain and distortion") {
  const QuantizerModel q = make_quantizer(1);
  const double dist_var = 0.1;
  const int d = 100000;
  CVec signal(d);
  Rng srng(3);
  for (int i = 0; i < d; ++i) signal(i) = srng.cgaussian();
  Rng rng(4);
  const CVec out = apply_quantizer(signal, q, dist_var, rng);
  double power = 0.0;
  for (int i = 0; i < d; ++i) power += std::norm(out(i));
  const double expected = q.gain * q.gain * signal.squaredNorm() / d + dist_var;
  CHECK(power / d == doctest::Approx(expected).epsilon(0.02));

  Rng rng2(4);
  const CVec out2 = apply_quantizer(signal, q, dist_var, rng2);
  CHECK((out - out2).cwiseAbs().maxCoeff() == 0.0);
}
