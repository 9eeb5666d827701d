#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cffl/common.hpp"

namespace cffl {

struct DpBudget {
  double epsilon = 3.0;  // > 0
  double delta = 0.05;   // in [0, 1)

  void validate() const;
};

/// Running record of per-round sensitivity / noise pairs and the accumulated
/// squared sensitivity-to-noise ratio Lambda.
struct DpLedger {
  std::vector<double> sensitivities;
  std::vector<double> noise_stds;
  double lambda = 0.0;
};

enum class ApAggregation {
  kSumOverAps,  // sensitivity amplitude summed over APs (default)
  kPerAp,       // literal single-AP form
};

/// Amplitude matrix |h| for instantaneous-channel sensitivities.
Mat channel_amplitudes(const CMat& h);
/// Amplitude surrogate sqrt(beta) for statistics-mode sensitivities.
Mat stats_amplitudes(const Mat& beta);

/// Worst-case change of UE k's noiseless combined signal across adjacent
/// datasets: max_i 2*alpha*sqrt(p_i)*G_ki with G_ki the AP-aggregated
/// amplitude product. amps is L x K (|h| or sqrt(beta)); ap selects the AP
/// for the per-AP mode and is ignored otherwise.
double sensitivity_adc(const Vec& powers, double alpha, const Mat& amps, int k,
                       ApAggregation agg = ApAggregation::kSumOverAps,
                       int ap = 0);

/// m_k = sqrt(alpha^2 sum_l beta_kl sigma^2
///            + alpha(1-alpha) sum_l beta_kl (sum_i p_i beta_il + sigma^2)).
double effective_noise_std_adc(const Vec& powers, double alpha, const Mat& beta,
                               double noise_power_w, int k);

/// DAC-side per-AP sensitivity 2 * max_i sqrt(p_i) * amp_il.
double sensitivity_dac(const Vec& powers, const Vec& amps_col);

/// DAC-side effective noise at AP l:
/// sqrt(sum_i d_il amp_il^2 zeta(1-zeta) p_i + sigma^2); amps_col squared
/// recovers beta in statistics mode.
double effective_noise_std_dac(const Vec& powers, double zeta,
                               const Vec& amps_col,
                               const Eigen::VectorXi& mask_col,
                               double noise_power_w);

/// Lambda' = Lambda + (delta_t / m_t)^2. Throws zero-noise when m_t = 0 with
/// delta_t > 0.
DpLedger accumulate_lambda(DpLedger ledger, double sensitivity,
                           double noise_std);

/// Closed-form violation bound sqrt(2 Lambda) / (sqrt(pi) (eps - Lambda)) *
/// exp(-(eps - Lambda)^2 / (2 Lambda)). Requires eps > Lambda when
/// Lambda > 0 (margin-violation otherwise); returns 0 for Lambda = 0.
double dp_violation_bound(double lambda, double epsilon);

/// DAC-chain condition: nu = sum_t (delta_t / sigma_eff_t)^2 fed through the
/// same tail bound.
double dp_condition_dac(const std::vector<double>& sensitivities,
                        const std::vector<double>& sigma_effs, double epsilon);

/// Empirical violation frequency of the privacy-loss sum
/// sum_t (2 w_t^T v_t + |v_t|^2) / (2 m_t^2) with |v_t| at the sensitivity
/// (adversary-optimal), Gaussian noise. Shards deterministically.
double monte_carlo_violation(const std::vector<double>& sensitivities,
                             const std::vector<double>& noise_stds,
                             double epsilon, std::int64_t n_samples,
                             std::uint64_t seed, int workers = 1);

/// Static single-scenario description for bit-depth search: Lambda(b) =
/// rounds * (Delta(b)/m(b))^2 with shared powers and amplitudes.
struct DpScenario {
  Mat beta;   // L x K
  Mat amps;   // L x K amplitudes for the sensitivity
  Vec powers; // K
  int ue = 0;
  int rounds = 1;
  ApAggregation agg = ApAggregation::kSumOverAps;
  int ap = 0;
  double noise_power_w = 1.0;
  bool lloyd_max_table = false;

  double lambda_for_bits(int bits) const;
};

/// Smallest bit depth in [lo, hi] whose induced Lambda certifies the budget;
/// nullopt when none does.
std::optional<int> min_bits_for_budget(const DpBudget& budget,
                                       const DpScenario& scenario, int lo,
                                       int hi);

}  // namespace cffl
