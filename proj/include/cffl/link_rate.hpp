#pragma once

#include <vector>

#include "cffl/common.hpp"
#include "cffl/topology.hpp"

namespace cffl {

/// SINR_k(p) = p_k * A(k) / (W.row(k) . p + c(k)) covers both signal chains:
/// only the coefficient construction differs.
struct SinrTerms {
  Vec A;  // K: numerator coefficients
  Mat W;  // K x K: denominator power couplings (own-power column included)
  Vec c;  // K: power-independent denominator terms
};

struct PowerAllocation {
  Vec p;  // K transmit powers, watts

  void validate(double p_max) const;
};

struct RateVector {
  Vec bits_per_s;  // K
};

/// Timing of one uplink schedule. For the synchronous chain,
/// total = max_k(per_ue) + fronthaul; for the asynchronous chain the fields
/// hold sums of per-round terms and per_ue_s holds per-UE access totals.
struct TimingReport {
  Vec per_ue_s;
  double access_s = 0.0;
  double fronthaul_s = 0.0;
  double total_s = 0.0;
};

/// Coefficients of the quantized-ADC uplink SINR: numerator alpha^2 |sum_l
/// beta_kl|^2, interference alpha^2 sum_l beta_kl beta_il (i != k), thermal
/// and distortion terms including the gradient-length factor d.
SinrTerms adc_sinr_terms(const Mat& beta, double alpha, double noise_power_w,
                         int grad_dim);

/// Coefficients of the quantized-DAC masked uplink SINR. The interference sum
/// runs over all i (own term included) through UE k's serving APs; the
/// distortion term uses UE i's mask, both as printed in the closed form.
SinrTerms dac_sinr_terms(const Mat& beta, double zeta, const MaskMat& mask,
                         double noise_power_w, int grad_dim);

double sinr_from_terms(const SinrTerms& terms, const Vec& p, int k);

double sinr_adc(int k, const Vec& p, const Mat& beta, double alpha,
                double noise_power_w, int grad_dim);

double sinr_dac(int k, const Vec& p, const Mat& beta, double zeta,
                const MaskMat& mask, double noise_power_w, int grad_dim);

/// (1 - tau_p/tau_c) * B * log2(1 + sinr), bits/s.
double rate_from_sinr(double sinr, const SystemConfig& cfg);

Vec rates_from_terms(const SinrTerms& terms, const Vec& p,
                     const SystemConfig& cfg);

/// Synchronous schedule: access = max_k S*T/R_k, fronthaul = K*S*T/sum R.
/// Throws unserved-ue when any rate is zero.
TimingReport uplink_time_sync(const Vec& rates_bps, double update_bits,
                              int rounds);

/// Asynchronous schedule: per round t, access = max over served UEs of
/// S/R_k^t and fronthaul = |K^t| * S / sum of served rates; totals are summed
/// over rounds. Active sets come from the masks. Throws protocol-error on an
/// empty active set and unserved-ue on a zero-rate served UE.
TimingReport uplink_time_async(const std::vector<Vec>& per_round_rates_bps,
                               const std::vector<MaskMat>& masks,
                               double update_bits);

/// Per-UE energy p_k * S / R_k spent on one update, joules.
Vec transmit_energy(const Vec& powers, const Vec& rates_bps,
                    double update_bits);

}  // namespace cffl
