#include "cffl/quantization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cffl {

double aqnm_distortion_factor(int bits, bool lloyd_max_table) {
  require(bits >= 1, "invalid-argument", "quantizer bit depth must be >= 1");
  if (lloyd_max_table && bits <= 5) {
    // Exact Lloyd-Max distortion of a unit-variance Gaussian input.
    static constexpr double kTable[5] = {0.3634, 0.1175, 0.03454, 0.009497,
                                         0.002499};
    return kTable[bits - 1];
  }
  return std::numbers::pi * std::sqrt(3.0) / 2.0 *
         std::exp2(-2.0 * static_cast<double>(bits));
}

double aqnm_gain(int bits, bool lloyd_max_table) {
  return 1.0 - std::min(1.0, aqnm_distortion_factor(bits, lloyd_max_table));
}

QuantizerModel make_quantizer(int bits, bool lloyd_max_table) {
  const double rho = std::min(1.0, aqnm_distortion_factor(bits, lloyd_max_table));
  return {bits, 1.0 - rho, rho};
}

double adc_distortion_cov(double alpha, const Vec& powers, const Vec& beta_col,
                          double noise_power_w) {
  require(alpha > 0.0 && alpha <= 1.0, "invalid-argument",
          "ADC gain must lie in (0, 1]");
  require(powers.size() == beta_col.size(), "invalid-argument",
          "power and gain vectors must have matching length");
  require(powers.minCoeff() >= 0.0, "invalid-argument",
          "transmit powers must be nonnegative");
  return alpha * (1.0 - alpha) * (powers.dot(beta_col) + noise_power_w);
}

double dac_distortion_var(double zeta, double power_w) {
  require(zeta > 0.0 && zeta <= 1.0, "invalid-argument",
          "DAC gain must lie in (0, 1]");
  require(power_w >= 0.0, "invalid-argument", "power must be nonnegative");
  return zeta * (1.0 - zeta) * power_w;
}

CVec apply_quantizer(const CVec& signal, const QuantizerModel& q,
                     double distortion_var, Rng& rng) {
  require(distortion_var >= 0.0, "invalid-argument",
          "distortion variance must be nonnegative");
  CVec out = q.gain * signal;
  if (distortion_var > 0.0) {
    const double scale = std::sqrt(distortion_var);
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) += scale * rng.cgaussian();
  }
  return out;
}

}  // namespace cffl
