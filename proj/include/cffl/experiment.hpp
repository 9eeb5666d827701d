#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cffl/dp.hpp"
#include "cffl/kvconfig.hpp"
#include "cffl/power_control.hpp"
#include "cffl/topology.hpp"

namespace cffl {

enum class SweepAxis { kBits, kNumAps, kNumUes, kLagTolerance, kLagPercent };
enum class ChainMode { kSyncAdc, kAsyncDac };
enum class PowerMode { kSca, kFull };

std::string to_string(SweepAxis axis);
std::string to_string(ChainMode mode);
std::string to_string(PowerMode mode);

struct ExperimentConfig {
  SystemConfig system;
  PathLossParams pathloss;
  int adc_bits = 10;
  int dac_bits = 10;
  bool lloyd_max_table = false;
  double lag_percent = 85.0;
  int lag_tolerance = 4;
  DpBudget dp;
  ApAggregation dp_agg = ApAggregation::kSumOverAps;
  SweepAxis axis = SweepAxis::kBits;
  std::vector<double> axis_values{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int drops = 50;
  ChainMode mode = ChainMode::kSyncAdc;
  PowerMode power = PowerMode::kSca;
  std::uint64_t seed = 1;
  SolverOptions solver;
  std::uint64_t config_hash = 0;

  static ExperimentConfig from_kv(const KvConfig& kv);
  void validate() const;
  /// Copy with the sweep axis pinned to one value.
  ExperimentConfig at_axis_value(double value) const;
};

/// One (axis value, drop) evaluation.
struct SweepRow {
  std::string scenario_id;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string axis;
  double axis_value = 0.0;
  int drop = 0;
  int bits = 0;
  int num_aps = 0;
  int num_ues = 0;
  std::string mode;
  std::string power;
  bool ok = false;
  std::string error;
  double total_time_s = 0.0;
  double mean_rate_bps = 0.0;
  double min_rate_bps = 0.0;
  double lambda = 0.0;
  double dp_bound = 0.0;  // NaN when the margin condition fails
};

struct SweepTable {
  std::vector<SweepRow> rows;
};

/// Single scenario evaluation (no axis override): topology draw, power
/// control or full power, timing and the DP ledger.
SweepRow run_point(const ExperimentConfig& cfg, int axis_index, int drop);

/// Full sweep; embarrassingly parallel over (axis value, drop) with a
/// deterministic merge. Per-point failures are recorded in the row; throws
/// sweep-error only when every point failed.
SweepTable run_sweep(const ExperimentConfig& cfg, int workers);

/// CSV always; optional SVG line plot of mean time vs. axis value.
/// Returns the written file paths.
std::vector<std::string> emit_results(const SweepTable& table,
                                      const std::string& out_dir,
                                      const std::string& format,
                                      const std::string& stem);

/// Deterministic parallel-for used by the sweep driver and Monte Carlo.
void parallel_for(int count, int workers, const std::function<void(int)>& fn);

double mean_time_at(const SweepTable& table, double axis_value);

}  // namespace cffl
