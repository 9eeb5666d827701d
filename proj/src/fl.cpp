#include "cffl/fl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cffl/convergence.hpp"

namespace cffl {

double FlDataset::total_samples() const {
  double total = 0.0;
  for (const auto& local : locals) total += static_cast<double>(local.size());
  return total;
}

int FlDataset::dim() const {
  require(!locals.empty() && locals.front().features.cols() > 0,
          "invalid-argument", "empty dataset");
  return static_cast<int>(locals.front().features.cols());
}

Mat FlDataset::hessian() const {
  const int d = dim();
  Mat h = Mat::Zero(d, d);
  for (const auto& local : locals)
    h += local.features.transpose() * local.features;
  return h / total_samples();
}

Vec FlDataset::minimizer() const {
  const int d = dim();
  Mat gram = Mat::Zero(d, d);
  Vec moment = Vec::Zero(d);
  for (const auto& local : locals) {
    gram += local.features.transpose() * local.features;
    moment += local.features.transpose() * local.labels;
  }
  Eigen::LDLT<Mat> ldlt(gram);
  require(ldlt.info() == Eigen::Success, "solver-failure",
          "singular pooled Gram matrix");
  return ldlt.solve(moment);
}

double FlDataset::optimal_loss() const {
  const Vec w_star = minimizer();
  double loss = 0.0;
  for (const auto& local : locals)
    loss += (local.features * w_star - local.labels).squaredNorm();
  return 0.5 * loss / total_samples();
}

double local_loss(const Vec& w, const LocalDataset& data) {
  require(data.size() > 0, "invalid-argument", "empty local dataset");
  return 0.5 * (data.features * w - data.labels).squaredNorm() /
         static_cast<double>(data.size());
}

Vec local_gradient(const Vec& w, const LocalDataset& data) {
  require(data.size() > 0, "invalid-argument", "empty local dataset");
  return data.features.transpose() * (data.features * w - data.labels) /
         static_cast<double>(data.size());
}

double global_loss(const Vec& w, const FlDataset& data) {
  double loss = 0.0;
  for (const auto& local : data.locals)
    loss += (local.features * w - local.labels).squaredNorm();
  return 0.5 * loss / data.total_samples();
}

Vec global_gradient(const Vec& w, const FlDataset& data) {
  Vec g = Vec::Zero(data.dim());
  for (const auto& local : data.locals)
    g += static_cast<double>(local.size()) * local_gradient(w, local);
  return g / data.total_samples();
}

FlDataset make_quadratic_dataset(int num_ues, int samples_per_ue, int dim,
                                 Rng& rng) {
  require(num_ues >= 1 && samples_per_ue >= 1 && dim >= 1, "invalid-argument",
          "dataset sizes must be positive");
  Vec w_true(dim);
  for (int j = 0; j < dim; ++j) w_true(j) = rng.gaussian();
  FlDataset out;
  out.locals.resize(num_ues);
  for (auto& local : out.locals) {
    local.features.resize(samples_per_ue, dim);
    for (int n = 0; n < samples_per_ue; ++n)
      for (int j = 0; j < dim; ++j) local.features(n, j) = rng.gaussian();
    local.labels = local.features * w_true;
  }
  return out;
}

FlDataset make_spectrum_dataset(const Vec& eigenvalues, int copies_per_dim,
                                int num_ues) {
  const auto d = eigenvalues.size();
  require(d >= 1 && copies_per_dim >= 1 && num_ues >= 1, "invalid-argument",
          "dataset sizes must be positive");
  require(eigenvalues.minCoeff() > 0.0, "invalid-argument",
          "spectrum must be strictly positive");
  const Vec w_true = Vec::Ones(d);
  std::vector<std::vector<Eigen::Index>> rows(num_ues);
  std::vector<Eigen::Index> dims;
  for (int c = 0; c < copies_per_dim; ++c)
    for (Eigen::Index j = 0; j < d; ++j) dims.push_back(j);
  FlDataset out;
  out.locals.resize(num_ues);
  for (std::size_t n = 0; n < dims.size(); ++n)
    rows[n % num_ues].push_back(dims[n]);
  for (int k = 0; k < num_ues; ++k) {
    auto& local = out.locals[k];
    local.features = Mat::Zero(static_cast<Eigen::Index>(rows[k].size()), d);
    for (std::size_t n = 0; n < rows[k].size(); ++n) {
      const Eigen::Index j = rows[k][n];
      local.features(static_cast<Eigen::Index>(n), j) =
          std::sqrt(static_cast<double>(d) * eigenvalues(j));
    }
    local.labels = local.features * w_true;
  }
  return out;
}

OtaResult ota_aggregate(const std::vector<Vec>& updates, const CMat& h,
                        const Mat& beta, const Vec& powers,
                        const QuantizerModel& adc, double noise_power_w,
                        double total_samples, const MaskMat* mask, Rng& rng,
                        const OtaOptions& opts) {
  const auto K = static_cast<Eigen::Index>(updates.size());
  const auto L = h.rows();
  require(K > 0 && h.cols() == K && powers.size() == K, "invalid-argument",
          "updates/channel/power shapes are inconsistent");
  require(total_samples > 0.0, "invalid-argument",
          "total sample count must be positive");
  const auto d = updates.front().size();
  const double alpha = adc.gain;

  // Which UEs transmit this round (served, nonzero update, nonzero power).
  std::vector<bool> transmits(K, false);
  Vec norms(K), scale = Vec::Zero(K), p_tx = Vec::Zero(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    require(updates[k].size() == d, "invalid-argument",
            "all updates must share one dimension");
    const bool served = mask == nullptr || mask->col(k).any();
    norms(k) = updates[k].norm();
    if (!served || norms(k) == 0.0) continue;
    require(powers(k) > 0.0, "cannot-descale",
            "zero-power UE with a nonzero update cannot be descaled");
    transmits[k] = true;
    scale(k) = std::sqrt(powers(k)) / norms(k);
    p_tx(k) = powers(k);
  }

  // Combined channel products G(k, i) = sum over UE k's serving APs of
  // conj(h_kl) h_il; the diagonal drives the descaler.
  CMat channel_products = CMat::Zero(K, K);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index l = 0; l < L; ++l) {
      if (mask != nullptr && (*mask)(l, k) == 0) continue;
      for (Eigen::Index i = 0; i < K; ++i)
        channel_products(k, i) += std::conj(h(l, k)) * h(l, i);
    }

  // Shared per-AP noise realizations; the same n_l reaches every UE's
  // combined signal.
  CMat thermal, distortion;
  Vec distortion_var = Vec::Zero(L);
  if (opts.noise) {
    thermal.resize(L, d);
    distortion.resize(L, d);
    const double tstd = std::sqrt(noise_power_w);
    for (Eigen::Index l = 0; l < L; ++l) {
      distortion_var(l) =
          adc_distortion_cov(alpha, p_tx, beta.row(l).transpose(), noise_power_w);
      const double dstd = std::sqrt(distortion_var(l));
      for (Eigen::Index j = 0; j < d; ++j) {
        thermal(l, j) = tstd * rng.cgaussian();
        distortion(l, j) = dstd * rng.cgaussian();
      }
    }
  }

  OtaResult out;
  out.global_estimate = Vec::Zero(d);
  CVec interference_sum = CVec::Zero(d);
  const double gain_divisor = opts.descale_quantizer_gain ? alpha : 1.0;

  for (Eigen::Index k = 0; k < K; ++k) {
    if (!transmits[k]) continue;
    const double diag = channel_products(k, k).real();  // sum |h_kl|^2
    double divisor_base =
        opts.statistical_descaler
            ? [&] {
                double b = 0.0;
                for (Eigen::Index l = 0; l < L; ++l)
                  if (mask == nullptr || (*mask)(l, k)) b += beta(l, k);
                return b;
              }()
            : diag;
    const double divisor = gain_divisor * scale(k) * divisor_base;
    require(divisor > 0.0, "cannot-descale",
            "vanishing descaling coefficient");

    // Own-signal and cross-signal components of r_k.
    CVec cross = CVec::Zero(d);
    for (Eigen::Index i = 0; i < K; ++i) {
      if (!transmits[i] || i == k) continue;
      cross += alpha * scale(i) * channel_products(k, i) *
               updates[i].cast<Complex>();
    }
    CVec own = alpha * scale(k) * diag * updates[k].cast<Complex>();

    CVec noise = CVec::Zero(d);
    double noise_var = 0.0;
    if (opts.noise) {
      for (Eigen::Index l = 0; l < L; ++l) {
        if (mask != nullptr && (*mask)(l, k) == 0) continue;
        const Complex w_conj = std::conj(h(l, k));
        noise += w_conj * (alpha * thermal.row(l).transpose() +
                           distortion.row(l).transpose());
        noise_var += std::norm(h(l, k)) *
                     (alpha * alpha * noise_power_w + distortion_var(l));
      }
    }

    out.global_estimate += ((own + cross + noise) / divisor).real() /
                           total_samples;
    interference_sum += cross / divisor;
    out.noise_power_sum += noise_var / (divisor * divisor);
  }

  const double alpha_dyn = opts.descale_quantizer_gain ? 1.0 : alpha;
  out.interference_norm = interference_sum.norm() / alpha_dyn;
  return out;
}

Vec global_update(const Vec& w, const Vec& gradient_estimate,
                  double learning_rate) {
  require(learning_rate > 0.0, "invalid-argument",
          "learning rate must be positive");
  return w - learning_rate * gradient_estimate;
}

std::vector<TraceRow> run_training(const TrainScenario& scenario,
                                   std::uint64_t seed) {
  const auto& cfg = scenario.cfg;
  const int K = static_cast<int>(scenario.data.locals.size());
  require(K == cfg.num_ues, "invalid-argument",
          "dataset UE count must match the system config");
  require(scenario.beta.rows() == cfg.num_aps &&
              scenario.beta.cols() == cfg.num_ues,
          "invalid-argument", "beta shape must match the system config");
  require(scenario.rounds >= 0, "invalid-argument",
          "round count must be nonnegative");

  const int d = scenario.data.dim();
  const double b_tot = scenario.data.total_samples();
  const auto [mu, big_m] = quadratic_constants(scenario.data.hessian());
  const double eta =
      scenario.learning_rate > 0.0 ? scenario.learning_rate : 1.0 / big_m;
  const bool bound_valid = std::abs(eta * big_m - 1.0) < 1e-12;
  const double f_star = scenario.data.optimal_loss();

  ConvergenceParams params;
  params.smoothness = big_m;
  params.strong_convexity = mu;
  params.alpha = scenario.ota.descale_quantizer_gain ? 1.0 : scenario.adc.gain;
  params.total_samples = b_tot;
  params.grad_dim = d;

  Vec w = scenario.w_init.size() > 0 ? scenario.w_init : Vec::Zero(d);
  std::vector<Vec> ue_models(K, w);  // model each UE last synchronized to
  ScheduleState schedule = scenario.schedule;
  if (scenario.async) schedule.validate();

  const Rng root(seed);
  std::vector<double> interference_norms, noise_powers;
  std::vector<DpLedger> ledgers(K);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<TraceRow> trace;
  const auto gap_of = [&](const Vec& model) {
    return global_loss(model, scenario.data) - f_star;
  };
  params.initial_gap = gap_of(w);
  trace.push_back({0, global_loss(w, scenario.data), params.initial_gap,
                   bound_valid ? params.initial_gap : nan, 0.0, K});

  CMat h = scenario.beta.array().sqrt() *
           draw_small_scale(cfg, mix64(seed ^ 0x5ca1e0ULL)).array();

  for (int t = 1; t <= scenario.rounds; ++t) {
    if (scenario.redraw_small_scale)
      h = scenario.beta.array().sqrt() *
          draw_small_scale(cfg, root.fork(streams::kSmallScale, t).origin())
              .array();

    MaskMat mask;
    const MaskMat* mask_ptr = nullptr;
    if (scenario.async) {
      mask = advance_schedule(schedule, scenario.beta).mask;
      mask_ptr = &mask;
    }

    // Served UEs upload B_k * grad F_k at the model they last synced to.
    std::vector<Vec> updates(K, Vec::Zero(d));
    int served = 0;
    for (int k = 0; k < K; ++k) {
      const bool is_served = mask_ptr == nullptr || mask.col(k).any();
      if (!is_served) continue;
      ++served;
      const bool stale = (ue_models[k] - w).norm() > 0.0;
      if (stale && scenario.drop_stale) continue;  // resync without contributing
      updates[k] = static_cast<double>(scenario.data.locals[k].size()) *
                   local_gradient(ue_models[k], scenario.data.locals[k]);
    }

    Rng round_rng = root.fork(streams::kTraining, t);
    const OtaResult ota =
        ota_aggregate(updates, h, scenario.beta, scenario.powers, scenario.adc,
                      cfg.noise_power_w, b_tot, mask_ptr, round_rng,
                      scenario.ota);
    w = global_update(w, ota.global_estimate, eta);
    for (int k = 0; k < K; ++k)
      if (mask_ptr == nullptr || mask.col(k).any()) ue_models[k] = w;

    interference_norms.push_back(ota.interference_norm);
    noise_powers.push_back(ota.noise_power_sum);

    // DP ledger: per-round sensitivity over the actually transmitted powers.
    Vec p_tx = scenario.powers;
    for (int k = 0; k < K; ++k)
      if ((mask_ptr != nullptr && !mask.col(k).any()) || updates[k].norm() == 0.0)
        p_tx(k) = 0.0;
    const Mat amps = scenario.dp_stats_mode ? stats_amplitudes(scenario.beta)
                                            : channel_amplitudes(h);
    double lambda_max = 0.0;
    for (int k = 0; k < K; ++k) {
      const double delta =
          sensitivity_adc(p_tx, scenario.adc.gain, amps, k, scenario.dp_agg);
      const double m_k = effective_noise_std_adc(
          p_tx, scenario.adc.gain, scenario.beta, cfg.noise_power_w, k);
      ledgers[k] = accumulate_lambda(std::move(ledgers[k]), delta, m_k);
      lambda_max = std::max(lambda_max, ledgers[k].lambda);
    }

    const double bound =
        bound_valid
            ? optimality_gap_bound(params, interference_norms, noise_powers, t)
            : nan;
    trace.push_back(
        {t, global_loss(w, scenario.data), gap_of(w), bound, lambda_max, served});
  }
  return trace;
}

}  // namespace cffl
