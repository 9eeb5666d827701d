#pragma once

#include <vector>

#include "cffl/common.hpp"
#include "cffl/link_rate.hpp"

namespace cffl {

struct SolverOptions {
  double tolerance_s = 1e-6;     // outer stop on |x - x_prev|
  int max_outer_iters = 40;
  double barrier_growth = 10.0;  // barrier parameter multiplier per stage
  double inner_tol = 1e-8;       // inner solver accuracy scale
  int max_newton_iters = 4000;    // guard across all stages of one subproblem
};

/// One convex-restriction scenario: SINR coefficients for the active UEs plus
/// the rate prefactor (1 - tau_p/tau_c) * B and the power cap.
struct RateModel {
  SinrTerms terms;
  double rate_prefactor_bps = 1.0;
  double p_max = 1.0;
};

/// Epigraph constants: access x1 >= access_bits / R_k for every active UE,
/// fronthaul x2 >= fronthaul_bits / sum R.
struct TimeObjective {
  double access_bits = 1.0;
  double fronthaul_bits = 1.0;
};

struct ScaState {
  Vec u;      // sqrt of transmit powers
  Vec rates;  // bits/s
  double x = 0.0;  // epigraph objective, seconds
  int iteration = 0;
};

struct ScaResult {
  Vec powers;
  Vec rates;
  double total_time_s = 0.0;            // true time at the returned powers
  std::vector<double> objective_trace;  // x per outer iteration (entry 0 is
                                        // the true time at the start point)
  bool converged = false;
};

/// Concave minorant of every UE's rate around the expansion point, bits/s.
/// Tight at u = u_exp; never exceeds the true rate. Throws invalid-argument
/// when an expansion denominator is not strictly positive.
Vec rate_lower_bound(const Vec& u, const Vec& u_exp, const RateModel& model);

/// True rates at powers p, bits/s.
Vec true_rates(const RateModel& model, const Vec& p);

/// access + fronthaul time at powers p. Throws unserved-ue on a zero rate.
double true_total_time(const RateModel& model, const TimeObjective& objective,
                       const Vec& p);

/// Minimizes x over the convex restriction around state.u via a log-barrier
/// interior-point method with analytic derivatives and damped Newton steps.
ScaState solve_subproblem(const ScaState& state, const RateModel& model,
                          const TimeObjective& objective,
                          const SolverOptions& options);

/// Successive convex restriction: re-expands at each subproblem optimum until
/// the objective change drops below tolerance. The objective trace is
/// non-increasing; a regression beyond numerical slack raises internal-error.
ScaResult sca_solve(const RateModel& model, const TimeObjective& objective,
                    const SolverOptions& options);

double full_power_time(const RateModel& model, const TimeObjective& objective);

// Quantized-ADC synchronous chain.
RateModel adc_rate_model(const Mat& beta, double alpha,
                         const SystemConfig& cfg);
TimeObjective sync_time_objective(const SystemConfig& cfg);
ScaResult sca_solve_adc(const Mat& beta, double alpha, const SystemConfig& cfg,
                        const SolverOptions& options);
double full_power_baseline_adc(const Mat& beta, double alpha,
                               const SystemConfig& cfg);

// Quantized-DAC asynchronous chain, one independent solve per round behind
// fixed masks; identical masks share a solve.
struct DacRound {
  MaskMat mask;
  Vec powers;  // full K, zero for unserved UEs
  Vec rates;   // full K, zero for unserved UEs
  double round_time_s = 0.0;
};

struct DacScaResult {
  std::vector<DacRound> rounds;
  double total_time_s = 0.0;
};

DacScaResult sca_solve_dac(const Mat& beta, double zeta,
                           const std::vector<MaskMat>& masks,
                           const SystemConfig& cfg,
                           const SolverOptions& options);

DacScaResult full_power_dac(const Mat& beta, double zeta,
                            const std::vector<MaskMat>& masks,
                            const SystemConfig& cfg);

}  // namespace cffl
