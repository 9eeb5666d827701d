#include "cffl/link_rate.hpp"

#include <algorithm>
#include <cmath>

#include "cffl/scheduler.hpp"

namespace cffl {

void PowerAllocation::validate(double p_max) const {
  require(p.size() > 0, "invalid-argument", "empty power allocation");
  require(p.minCoeff() >= 0.0 && p.maxCoeff() <= p_max + 1e-12,
          "invalid-argument", "powers must lie in [0, p_max]");
}

SinrTerms adc_sinr_terms(const Mat& beta, double alpha, double noise_power_w,
                         int grad_dim) {
  require(alpha > 0.0 && alpha <= 1.0, "invalid-argument",
          "ADC gain must lie in (0, 1]");
  const auto K = beta.cols();
  const double a2 = alpha * alpha;
  const double dist = static_cast<double>(grad_dim) * alpha * (1.0 - alpha);

  SinrTerms t;
  t.A.resize(K);
  t.W = Mat::Zero(K, K);
  t.c.resize(K);
  const Vec beta_sum = beta.colwise().sum();  // sum_l beta_(.,k)
  for (Eigen::Index k = 0; k < K; ++k) {
    t.A(k) = a2 * beta_sum(k) * beta_sum(k);
    t.c(k) = a2 * noise_power_w * beta_sum(k) + dist * noise_power_w * beta_sum(k);
    for (Eigen::Index i = 0; i < K; ++i) {
      const double cross = beta.col(k).dot(beta.col(i));  // sum_l b_kl b_il
      const double interference = (i == k) ? 0.0 : a2 * cross;
      t.W(k, i) = interference + dist * cross;
    }
  }
  return t;
}

SinrTerms dac_sinr_terms(const Mat& beta, double zeta, const MaskMat& mask,
                         double noise_power_w, int grad_dim) {
  require(zeta > 0.0 && zeta <= 1.0, "invalid-argument",
          "DAC gain must lie in (0, 1]");
  require(mask.rows() == beta.rows() && mask.cols() == beta.cols(),
          "invalid-argument", "mask shape must match beta");
  require(mask.minCoeff() >= 0 && mask.maxCoeff() <= 1, "invalid-argument",
          "mask entries must be 0 or 1");
  const auto L = beta.rows();
  const auto K = beta.cols();
  const double z2 = zeta * zeta;
  const double dist = static_cast<double>(grad_dim) * zeta * (1.0 - zeta);

  SinrTerms t;
  t.A.resize(K);
  t.W = Mat::Zero(K, K);
  t.c.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    double served_sum = 0.0;  // sum_l d_kl beta_kl
    for (Eigen::Index l = 0; l < L; ++l)
      if (mask(l, k)) served_sum += beta(l, k);
    t.A(k) = z2 * served_sum * served_sum;
    t.c(k) = static_cast<double>(grad_dim) * served_sum * noise_power_w;
    for (Eigen::Index i = 0; i < K; ++i) {
      // Both the interference and the distortion terms are gated by UE k's
      // serving set: a transmitting UE's signal and DAC distortion reach
      // every AP that combines for k, wherever UE i itself is served.
      double masked_k = 0.0;  // sum_l d_kl beta_kl beta_il
      for (Eigen::Index l = 0; l < L; ++l)
        if (mask(l, k)) masked_k += beta(l, k) * beta(l, i);
      t.W(k, i) = (z2 + dist) * masked_k;
    }
  }
  return t;
}

double sinr_from_terms(const SinrTerms& terms, const Vec& p, int k) {
  require(k >= 0 && k < terms.A.size(), "invalid-argument",
          "UE index out of range");
  const double num = p(k) * terms.A(k);
  if (num == 0.0) return 0.0;
  const double den = terms.W.row(k).dot(p) + terms.c(k);
  require(den > 0.0, "invalid-argument", "SINR denominator must be positive");
  return num / den;
}

double sinr_adc(int k, const Vec& p, const Mat& beta, double alpha,
                double noise_power_w, int grad_dim) {
  return sinr_from_terms(adc_sinr_terms(beta, alpha, noise_power_w, grad_dim),
                         p, k);
}

double sinr_dac(int k, const Vec& p, const Mat& beta, double zeta,
                const MaskMat& mask, double noise_power_w, int grad_dim) {
  return sinr_from_terms(
      dac_sinr_terms(beta, zeta, mask, noise_power_w, grad_dim), p, k);
}

double rate_from_sinr(double sinr, const SystemConfig& cfg) {
  require(sinr >= 0.0, "invalid-argument", "SINR must be nonnegative");
  return cfg.prelog() * cfg.bandwidth_hz * std::log2(1.0 + sinr);
}

Vec rates_from_terms(const SinrTerms& terms, const Vec& p,
                     const SystemConfig& cfg) {
  Vec rates(terms.A.size());
  for (Eigen::Index k = 0; k < terms.A.size(); ++k)
    rates(k) = rate_from_sinr(sinr_from_terms(terms, p, static_cast<int>(k)), cfg);
  return rates;
}

TimingReport uplink_time_sync(const Vec& rates_bps, double update_bits,
                              int rounds) {
  const auto K = rates_bps.size();
  require(K > 0, "invalid-argument", "empty rate vector");
  require(rates_bps.minCoeff() > 0.0, "unserved-ue",
          "a UE with zero rate makes the uplink time undefined");
  const double payload = update_bits * static_cast<double>(rounds);
  TimingReport report;
  report.per_ue_s = payload / rates_bps.array();
  report.access_s = report.per_ue_s.maxCoeff();
  report.fronthaul_s = static_cast<double>(K) * payload / rates_bps.sum();
  report.total_s = report.access_s + report.fronthaul_s;
  return report;
}

Vec transmit_energy(const Vec& powers, const Vec& rates_bps,
                    double update_bits) {
  require(powers.size() == rates_bps.size(), "invalid-argument",
          "powers and rates must have matching length");
  require(rates_bps.minCoeff() > 0.0, "unserved-ue",
          "a UE with zero rate makes the transmit energy undefined");
  return update_bits * (powers.array() / rates_bps.array());
}

TimingReport uplink_time_async(const std::vector<Vec>& per_round_rates_bps,
                               const std::vector<MaskMat>& masks,
                               double update_bits) {
  require(per_round_rates_bps.size() == masks.size(), "invalid-argument",
          "one rate vector per round is required");
  require(!masks.empty(), "invalid-argument", "no rounds given");
  const auto K = per_round_rates_bps.front().size();

  TimingReport report;
  report.per_ue_s = Vec::Zero(K);
  for (std::size_t t = 0; t < masks.size(); ++t) {
    const Vec& rates = per_round_rates_bps[t];
    require(rates.size() == K, "invalid-argument",
            "rate vectors must have constant length across rounds");
    const std::vector<int> active = active_set(masks[t]);
    double round_max = 0.0;
    double rate_sum = 0.0;
    for (int k : active) {
      require(rates(k) > 0.0, "unserved-ue",
              "served UE has zero rate in round " + std::to_string(t));
      const double ue_time = update_bits / rates(k);
      report.per_ue_s(k) += ue_time;
      round_max = std::max(round_max, ue_time);
      rate_sum += rates(k);
    }
    report.access_s += round_max;
    report.fronthaul_s +=
        static_cast<double>(active.size()) * update_bits / rate_sum;
  }
  report.total_s = report.access_s + report.fronthaul_s;
  return report;
}

}  // namespace cffl
