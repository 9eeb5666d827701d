#include "cffl/dp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include "cffl/quantization.hpp"
#include "cffl/rng.hpp"

namespace cffl {

void DpBudget::validate() const {
  require(epsilon > 0.0, "invalid-argument", "epsilon must be positive");
  require(delta >= 0.0 && delta < 1.0, "invalid-argument",
          "delta must lie in [0, 1)");
}

Mat channel_amplitudes(const CMat& h) { return h.cwiseAbs(); }

Mat stats_amplitudes(const Mat& beta) { return beta.array().sqrt(); }

double sensitivity_adc(const Vec& powers, double alpha, const Mat& amps, int k,
                       ApAggregation agg, int ap) {
  require(alpha > 0.0 && alpha <= 1.0, "invalid-argument",
          "ADC gain must lie in (0, 1]");
  require(powers.size() == amps.cols(), "invalid-argument",
          "one power per UE is required");
  require(k >= 0 && k < amps.cols(), "invalid-argument", "UE index out of range");
  if (agg == ApAggregation::kPerAp)
    require(ap >= 0 && ap < amps.rows(), "invalid-argument",
            "AP index out of range");

  double worst = 0.0;
  for (Eigen::Index i = 0; i < amps.cols(); ++i) {
    const double pair_amp = (agg == ApAggregation::kSumOverAps)
                                ? amps.col(k).dot(amps.col(i))
                                : amps(ap, k) * amps(ap, i);
    worst = std::max(worst, 2.0 * alpha * std::sqrt(powers(i)) * pair_amp);
  }
  return worst;
}

double effective_noise_std_adc(const Vec& powers, double alpha, const Mat& beta,
                               double noise_power_w, int k) {
  require(alpha > 0.0 && alpha <= 1.0, "invalid-argument",
          "ADC gain must lie in (0, 1]");
  require(k >= 0 && k < beta.cols(), "invalid-argument", "UE index out of range");
  double var = 0.0;
  for (Eigen::Index l = 0; l < beta.rows(); ++l) {
    const double received = powers.dot(beta.row(l).transpose());
    var += alpha * alpha * beta(l, k) * noise_power_w +
           alpha * (1.0 - alpha) * beta(l, k) * (received + noise_power_w);
  }
  return std::sqrt(var);
}

double sensitivity_dac(const Vec& powers, const Vec& amps_col) {
  require(powers.size() == amps_col.size(), "invalid-argument",
          "one power per UE is required");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < powers.size(); ++i)
    worst = std::max(worst, 2.0 * std::sqrt(powers(i)) * amps_col(i));
  return worst;
}

double effective_noise_std_dac(const Vec& powers, double zeta,
                               const Vec& amps_col,
                               const Eigen::VectorXi& mask_col,
                               double noise_power_w) {
  require(zeta > 0.0 && zeta <= 1.0, "invalid-argument",
          "DAC gain must lie in (0, 1]");
  double var = noise_power_w;
  for (Eigen::Index i = 0; i < powers.size(); ++i)
    if (mask_col(i))
      var += amps_col(i) * amps_col(i) * zeta * (1.0 - zeta) * powers(i);
  return std::sqrt(var);
}

DpLedger accumulate_lambda(DpLedger ledger, double sensitivity,
                           double noise_std) {
  require(sensitivity >= 0.0, "invalid-argument",
          "sensitivity must be nonnegative");
  if (noise_std <= 0.0) {
    if (sensitivity == 0.0) {
      ledger.sensitivities.push_back(sensitivity);
      ledger.noise_stds.push_back(noise_std);
      return ledger;
    }
    fail("zero-noise", "positive sensitivity with zero noise has no privacy");
  }
  ledger.sensitivities.push_back(sensitivity);
  ledger.noise_stds.push_back(noise_std);
  const double ratio = sensitivity / noise_std;
  ledger.lambda += ratio * ratio;
  return ledger;
}

double dp_violation_bound(double lambda, double epsilon) {
  require(lambda >= 0.0, "invalid-argument", "Lambda must be nonnegative");
  require(epsilon > 0.0, "invalid-argument", "epsilon must be positive");
  if (lambda == 0.0) return 0.0;
  require(epsilon > lambda, "margin-violation",
          "the bound requires epsilon > Lambda");
  const double margin = epsilon - lambda;
  return std::sqrt(2.0 * lambda) / (std::sqrt(std::numbers::pi) * margin) *
         std::exp(-margin * margin / (2.0 * lambda));
}

double dp_condition_dac(const std::vector<double>& sensitivities,
                        const std::vector<double>& sigma_effs, double epsilon) {
  require(sensitivities.size() == sigma_effs.size(), "invalid-argument",
          "one noise level per round is required");
  double nu = 0.0;
  for (std::size_t t = 0; t < sensitivities.size(); ++t) {
    if (sensitivities[t] == 0.0) continue;
    require(sigma_effs[t] > 0.0, "zero-noise",
            "positive sensitivity with zero noise has no privacy");
    const double ratio = sensitivities[t] / sigma_effs[t];
    nu += ratio * ratio;
  }
  return dp_violation_bound(nu, epsilon);
}

double monte_carlo_violation(const std::vector<double>& sensitivities,
                             const std::vector<double>& noise_stds,
                             double epsilon, std::int64_t n_samples,
                             std::uint64_t seed, int workers) {
  require(sensitivities.size() == noise_stds.size(), "invalid-argument",
          "one noise level per round is required");
  require(n_samples >= 10000, "invalid-argument",
          "at least 1e4 samples are required");
  const auto rounds = sensitivities.size();
  std::vector<double> ratio(rounds), offset(rounds);
  for (std::size_t t = 0; t < rounds; ++t) {
    if (sensitivities[t] == 0.0) {
      ratio[t] = offset[t] = 0.0;
      continue;
    }
    require(noise_stds[t] > 0.0, "zero-noise",
            "positive sensitivity with zero noise has no privacy");
    // Per round: (2 w^T v + |v|^2) / (2 m^2) with w^T v ~ N(0, m^2 |v|^2).
    ratio[t] = sensitivities[t] / noise_stds[t];
    offset[t] = ratio[t] * ratio[t] / 2.0;
  }

  // Fixed shard layout: the estimate is independent of the worker count.
  constexpr int kShards = 64;
  const std::int64_t per_shard = (n_samples + kShards - 1) / kShards;
  const Rng root(seed);
  std::vector<std::int64_t> shard_hits(kShards, 0);
  std::vector<std::int64_t> shard_draws(kShards, 0);

  const auto run_shard = [&](int shard) {
    Rng rng = root.fork(streams::kDpMonteCarlo, static_cast<std::uint64_t>(shard));
    const std::int64_t lo = shard * per_shard;
    const std::int64_t hi = std::min<std::int64_t>(n_samples, lo + per_shard);
    std::int64_t hits = 0;
    for (std::int64_t s = lo; s < hi; ++s) {
      double loss = 0.0;
      for (std::size_t t = 0; t < rounds; ++t)
        if (ratio[t] != 0.0) loss += ratio[t] * rng.gaussian() + offset[t];
      if (std::abs(loss) > epsilon) ++hits;
    }
    shard_hits[shard] = hits;
    shard_draws[shard] = hi > lo ? hi - lo : 0;
  };

  const int nthreads = std::max(1, std::min(workers, kShards));
  if (nthreads == 1) {
    for (int s = 0; s < kShards; ++s) run_shard(s);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&, w] {
        for (int s = w; s < kShards; s += nthreads) run_shard(s);
      });
    for (auto& th : pool) th.join();
  }

  std::int64_t hits = 0, draws = 0;
  for (int s = 0; s < kShards; ++s) {
    hits += shard_hits[s];
    draws += shard_draws[s];
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

double DpScenario::lambda_for_bits(int bits) const {
  const double alpha = aqnm_gain(bits, lloyd_max_table);
  const double delta = sensitivity_adc(powers, alpha, amps, ue, agg, ap);
  const double m = effective_noise_std_adc(powers, alpha, beta, noise_power_w, ue);
  if (delta == 0.0) return 0.0;
  require(m > 0.0, "zero-noise", "scenario yields zero effective noise");
  return static_cast<double>(rounds) * (delta / m) * (delta / m);
}

std::optional<int> min_bits_for_budget(const DpBudget& budget,
                                       const DpScenario& scenario, int lo,
                                       int hi) {
  budget.validate();
  require(lo >= 1 && hi >= lo, "invalid-argument", "empty bit-depth range");
  for (int b = lo; b <= hi; ++b) {
    const double lambda = scenario.lambda_for_bits(b);
    if (lambda >= budget.epsilon) continue;  // no margin, cannot certify
    if (dp_violation_bound(lambda, budget.epsilon) < budget.delta) return b;
  }
  return std::nullopt;
}

}  // namespace cffl
