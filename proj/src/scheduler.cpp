#include "cffl/scheduler.hpp"

#include <algorithm>
#include <numeric>

namespace cffl {

ScheduleState ScheduleState::initial(int num_ues, int lag_tolerance,
                                     double lag_percent) {
  ScheduleState s;
  s.staleness = Eigen::VectorXi::Zero(num_ues);
  s.lag_tolerance = lag_tolerance;
  s.lag_percent = lag_percent;
  s.validate();
  return s;
}

void ScheduleState::validate() const {
  require(staleness.size() > 0, "invalid-argument", "empty schedule state");
  require(staleness.minCoeff() >= 0, "invalid-argument",
          "staleness counters must be nonnegative");
  require(lag_tolerance >= 1, "invalid-argument", "lag tolerance must be >= 1");
  require(lag_percent > 0.0 && lag_percent <= 100.0, "invalid-argument",
          "lag percent must lie in (0, 100]");
}

std::vector<int> select_ues(const Vec& beta_col, double lag_percent) {
  require(beta_col.size() > 0, "invalid-argument", "empty beta column");
  require(beta_col.minCoeff() > 0.0, "invalid-argument",
          "selection needs strictly positive channel gains");
  require(lag_percent > 0.0 && lag_percent <= 100.0, "invalid-argument",
          "lag percent must lie in (0, 100]");

  const auto K = beta_col.size();
  std::vector<int> order(K);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return beta_col(a) > beta_col(b); });

  const double total = beta_col.sum();
  const double target = lag_percent / 100.0;
  std::vector<int> served;
  double mass = 0.0;
  for (int k : order) {
    served.push_back(k);
    mass += beta_col(k) / total;
    if (mass >= target - 1e-12) break;
  }
  return served;
}

MaskMat propose_masks(const Mat& beta, double lag_percent) {
  MaskMat mask = MaskMat::Zero(beta.rows(), beta.cols());
  for (Eigen::Index l = 0; l < beta.rows(); ++l)
    for (int k : select_ues(beta.row(l).transpose(), lag_percent)) mask(l, k) = 1;
  return mask;
}

std::pair<MaskMat, ScheduleState> enforce_lag_tolerance(
    const ScheduleState& state, MaskMat proposed, const Mat& beta) {
  state.validate();
  const auto K = state.staleness.size();
  require(proposed.cols() == K && proposed.rows() == beta.rows() &&
              beta.cols() == K,
          "invalid-argument", "mask/beta shape mismatch");

  ScheduleState next = state;
  for (Eigen::Index k = 0; k < K; ++k) {
    const bool served = proposed.col(k).any();
    if (!served && state.staleness(k) + 1 >= state.lag_tolerance) {
      // Forced synchronization: the round treats this UE as synchronous,
      // i.e. every AP serves it, as in the full-service mode.
      proposed.col(k).setOnes();
    }
  }
  for (Eigen::Index k = 0; k < K; ++k)
    next.staleness(k) = proposed.col(k).any() ? 0 : state.staleness(k) + 1;
  return {std::move(proposed), std::move(next)};
}

std::vector<UeCategory> classify_ues(const ScheduleState& state,
                                     const MaskMat& proposed) {
  state.validate();
  std::vector<UeCategory> categories(state.staleness.size());
  for (Eigen::Index k = 0; k < state.staleness.size(); ++k) {
    if (proposed.col(k).any())
      categories[k] = UeCategory::kSynchronous;
    else if (state.staleness(k) + 1 >= state.lag_tolerance)
      categories[k] = UeCategory::kNeedSync;
    else
      categories[k] = UeCategory::kAsynchronous;
  }
  return categories;
}

std::vector<int> active_set(const MaskMat& mask) {
  std::vector<int> active;
  for (Eigen::Index k = 0; k < mask.cols(); ++k)
    if (mask.col(k).any()) active.push_back(static_cast<int>(k));
  require(!active.empty(), "protocol-error", "no UE is served by any AP");
  return active;
}

ScheduleStep advance_schedule(ScheduleState& state, const Mat& beta) {
  const MaskMat proposed = propose_masks(beta, state.lag_percent);
  ScheduleStep step;
  step.categories = classify_ues(state, proposed);
  auto [mask, next] = enforce_lag_tolerance(state, proposed, beta);
  step.mask = std::move(mask);
  state = std::move(next);
  return step;
}

}  // namespace cffl
