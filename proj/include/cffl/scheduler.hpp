#pragma once

#include <utility>
#include <vector>

#include "cffl/common.hpp"

namespace cffl {

enum class UeCategory { kSynchronous, kAsynchronous, kNeedSync };

/// Round-to-round state of the lag-tolerant protocol. staleness(k) counts
/// rounds since UE k was last served; it never reaches lag_tolerance because
/// the transition forces service one round earlier.
struct ScheduleState {
  Eigen::VectorXi staleness;  // K
  int lag_tolerance = 4;      // T_tol, blocks
  double lag_percent = 85.0;  // nu, in (0, 100]

  static ScheduleState initial(int num_ues, int lag_tolerance,
                               double lag_percent);
  void validate() const;
};

/// UE indices one AP serves: the shortest prefix of the beta-descending
/// order whose share of the AP's total channel mass reaches nu percent.
/// Ties break toward the lower UE index. Never empty.
std::vector<int> select_ues(const Vec& beta_col, double lag_percent);

/// Per-AP selection for all APs; L x K 0/1 matrix.
MaskMat propose_masks(const Mat& beta, double lag_percent);

/// Adds every UE whose staleness would hit the tolerance to its strongest-AP
/// serving set, then updates the counters (served -> 0, else +1). Returns the
/// final mask and the advanced state.
std::pair<MaskMat, ScheduleState> enforce_lag_tolerance(
    const ScheduleState& state, MaskMat proposed, const Mat& beta);

/// Category per UE for the round about to run, given the proposal and the
/// pre-update staleness counters.
std::vector<UeCategory> classify_ues(const ScheduleState& state,
                                     const MaskMat& proposed);

/// K^t: union of all APs' serving sets, ascending. Throws protocol-error if
/// no UE is served anywhere.
std::vector<int> active_set(const MaskMat& mask);

struct ScheduleStep {
  MaskMat mask;
  std::vector<UeCategory> categories;
};

/// One protocol round: propose by channel mass, classify, force lagging UEs,
/// advance counters.
ScheduleStep advance_schedule(ScheduleState& state, const Mat& beta);

}  // namespace cffl
