#pragma once

#include "cffl/common.hpp"
#include "cffl/rng.hpp"

namespace cffl {

/// Linear additive-noise model of a b-bit converter: the quantizer output is
/// gain * input + distortion, with distortion uncorrelated with the input.
struct QuantizerModel {
  int bits = 10;
  double gain = 1.0;               // alpha for ADCs, zeta for DACs
  double distortion_factor = 0.0;  // rho = 1 - gain

  bool near_perfect() const { return distortion_factor < 1e-5; }
};

/// Distortion factor rho(b). The closed form (pi*sqrt(3)/2) * 2^(-2b) is the
/// default; the tabulated mode uses exact Lloyd-Max values for b <= 5.
double aqnm_distortion_factor(int bits, bool lloyd_max_table = false);

/// Converter gain 1 - min(1, rho(b)); strictly increasing in b, -> 1 as
/// b -> infinity. Throws invalid-argument for b <= 0.
double aqnm_gain(int bits, bool lloyd_max_table = false);

QuantizerModel make_quantizer(int bits, bool lloyd_max_table = false);

/// Per-coordinate variance alpha*(1-alpha)*(sum_i p_i beta_il + sigma^2) of
/// the ADC distortion at one AP. beta_col is that AP's column of gains.
double adc_distortion_cov(double alpha, const Vec& powers, const Vec& beta_col,
                          double noise_power_w);

/// Per-coordinate DAC distortion variance zeta*(1-zeta)*p_i at one UE.
double dac_distortion_var(double zeta, double power_w);

/// gain * signal + n with n i.i.d. circularly-symmetric complex,
/// per-coordinate variance distortion_var.
CVec apply_quantizer(const CVec& signal, const QuantizerModel& q,
                     double distortion_var, Rng& rng);

}  // namespace cffl
