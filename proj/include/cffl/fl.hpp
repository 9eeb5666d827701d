#pragma once

#include <cstdint>
#include <vector>

#include "cffl/common.hpp"
#include "cffl/dp.hpp"
#include "cffl/quantization.hpp"
#include "cffl/rng.hpp"
#include "cffl/scheduler.hpp"
#include "cffl/topology.hpp"

namespace cffl {

/// One UE's samples for the quadratic loss f(w; x, y) = 1/2 (w.x - y)^2.
struct LocalDataset {
  Mat features;  // B_k x d
  Vec labels;    // B_k

  Eigen::Index size() const { return labels.size(); }
};

struct FlDataset {
  std::vector<LocalDataset> locals;

  double total_samples() const;
  int dim() const;
  Mat hessian() const;    // (1/B_tot) sum_n x_n x_n^T
  Vec minimizer() const;  // least-squares solution over the pooled samples
  double optimal_loss() const;
};

double local_loss(const Vec& w, const LocalDataset& data);
Vec local_gradient(const Vec& w, const LocalDataset& data);
double global_loss(const Vec& w, const FlDataset& data);
Vec global_gradient(const Vec& w, const FlDataset& data);

/// Random full-rank quadratic instance (Gaussian features, exact labels).
FlDataset make_quadratic_dataset(int num_ues, int samples_per_ue, int dim,
                                 Rng& rng);

/// Instance whose global Hessian is exactly diag(eigenvalues): axis-aligned
/// samples, copies_per_dim per coordinate, spread over UEs round-robin.
/// Labels come from the all-ones model, so the optimal loss is zero.
FlDataset make_spectrum_dataset(const Vec& eigenvalues, int copies_per_dim,
                                int num_ues);

struct OtaOptions {
  bool noise = true;                   // draw thermal + distortion noise
  bool descale_quantizer_gain = true;  // CPU divides the converter gain out
  bool statistical_descaler = false;   // beta-based divisor instead of |h|^2
};

struct OtaResult {
  Vec global_estimate;             // \hat g, real d-vector
  double interference_norm = 0.0;  // |I_t| in the gap bound's convention
  double noise_power_sum = 0.0;    // sum_k per-coordinate variance of the
                                   // descaled effective noise
};

/// Simulates the per-UE MRC uplink (converter gain, distortion, thermal
/// noise), descales each combined signal by its known diagonal coefficient
/// and averages into the global gradient estimate. updates[k] must hold
/// s_k = B_k * grad F_k. A null mask serves every UE through every AP.
/// Throws cannot-descale for a zero-power UE with a nonzero update.
OtaResult ota_aggregate(const std::vector<Vec>& updates, const CMat& h,
                        const Mat& beta, const Vec& powers,
                        const QuantizerModel& adc, double noise_power_w,
                        double total_samples, const MaskMat* mask, Rng& rng,
                        const OtaOptions& opts);

Vec global_update(const Vec& w, const Vec& gradient_estimate,
                  double learning_rate);

struct TrainScenario {
  SystemConfig cfg;
  FlDataset data;
  Mat beta;  // L x K
  Vec powers;
  QuantizerModel adc;
  OtaOptions ota;
  bool async = false;          // scheduler-driven masks when true
  ScheduleState schedule;      // initial state, async mode only
  bool drop_stale = false;     // discard outdated gradients at forced sync
  bool redraw_small_scale = true;  // fresh fading block per round
  DpBudget dp;
  ApAggregation dp_agg = ApAggregation::kSumOverAps;
  bool dp_stats_mode = true;   // sqrt(beta) amplitudes instead of |h|
  int rounds = 10;
  double learning_rate = 0.0;  // 0 selects 1/M
  Vec w_init;                  // empty selects the zero vector
};

struct TraceRow {
  int round = 0;         // 0 is the initial point
  double loss = 0.0;     // F(w)
  double gap = 0.0;      // F(w) - F*
  double bound = 0.0;    // closed-form gap bound (NaN when eta != 1/M)
  double lambda = 0.0;   // max over UEs of the accumulated DP statistic
  int served = 0;
};

std::vector<TraceRow> run_training(const TrainScenario& scenario,
                                   std::uint64_t seed);

}  // namespace cffl
