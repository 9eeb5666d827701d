#include <doctest.h>

#include <cmath>
#include <limits>

#include "cffl/power_control.hpp"
#include "cffl/rng.hpp"
#include "cffl/scheduler.hpp"

using namespace cffl;

namespace {

RateModel single_link_model(double alpha, int grad_dim) {
  RateModel model;
  model.terms = adc_sinr_terms(Mat::Ones(1, 1), alpha, 1.0, grad_dim);
  model.rate_prefactor_bps = 1.0;
  model.p_max = 1.0;
  return model;
}

RateModel random_model(Rng& rng, int L, int K, double alpha, double p_max) {
  Mat beta(L, K);
  for (int i = 0; i < L * K; ++i) beta(i) = rng.uniform(0.05, 1.5);
  RateModel model;
  model.terms = adc_sinr_terms(beta, alpha, 0.2, 8);
  model.rate_prefactor_bps = 1.0;
  model.p_max = p_max;
  return model;
}

double grid_search_time(const RateModel& model, const TimeObjective& objective,
                        int resolution) {
  double best = std::numeric_limits<double>::infinity();
  Vec p(2);
  for (int i = 1; i <= resolution; ++i)
    for (int j = 1; j <= resolution; ++j) {
      p << model.p_max * i / resolution, model.p_max * j / resolution;
      best = std::min(best, true_total_time(model, objective, p));
    }
  return best;
}

}  // namespace

TEST_CASE("surrogate is tight at the expansion point") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const RateModel model = random_model(rng, 3, 3, rng.uniform(0.3, 1.0), 1.0);
    Vec u_exp(3);
    for (int k = 0; k < 3; ++k) u_exp(k) = rng.uniform(0.05, 1.0);
    const Vec bound = rate_lower_bound(u_exp, u_exp, model);
    const Vec truth = true_rates(model, u_exp.array().square());
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(bound(k) - truth(k)) <= 1e-9 * (1.0 + truth(k)));
  }
}

TEST_CASE("surrogate never exceeds the true rate") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const RateModel model = random_model(rng, 2, 3, rng.uniform(0.3, 1.0), 1.0);
    Vec u_exp(3);
    for (int k = 0; k < 3; ++k) u_exp(k) = rng.uniform(0.1, 0.9);
    for (int sample = 0; sample < 2000; ++sample) {
      Vec u(3);
      for (int k = 0; k < 3; ++k) u(k) = rng.uniform(0.0, 1.0);
      const Vec bound = rate_lower_bound(u, u_exp, model);
      const Vec truth = true_rates(model, u.array().square());
      for (int k = 0; k < 3; ++k) CHECK(bound(k) <= truth(k) + 1e-9);
    }
  }
}

TEST_CASE("surrogate at zero power is finite") {
  Rng rng(5);
  const RateModel model = random_model(rng, 2, 2, 0.6, 1.0);
  Vec u_exp = Vec::Constant(2, 0.5);
  const Vec bound = rate_lower_bound(Vec::Zero(2), u_exp, model);
  CHECK(std::isfinite(bound(0)));
  CHECK(std::isfinite(bound(1)));
}

TEST_CASE("degenerate expansion denominator is rejected") {
  RateModel model;
  model.terms.A = Vec::Ones(1);
  model.terms.W = Mat::Zero(1, 1);
  model.terms.c = Vec::Zero(1);  // no thermal floor at all
  model.rate_prefactor_bps = 1.0;
  model.p_max = 1.0;
  CHECK_THROWS_AS(rate_lower_bound(Vec::Ones(1), Vec::Zero(1), model), Error);
}

TEST_CASE("single-UE subproblem pushes to full power") {
  const RateModel model = single_link_model(1.0, 4);
  const TimeObjective objective{1.0, 1.0};
  ScaState state;
  state.u = Vec::Constant(1, std::sqrt(0.5));
  state.x = true_total_time(model, objective, state.u.array().square());
  const ScaState mid = solve_subproblem(state, model, objective, {});
  CHECK(mid.u(0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(mid.x < state.x);

  // Expanded at the optimum the surrogate is tight: SINR(1) = 1, rate = 1,
  // x = 1/R + 1/R = 2.
  ScaState at_opt;
  at_opt.u = Vec::Ones(1);
  at_opt.x = true_total_time(model, objective, at_opt.u.array().square());
  const ScaState next = solve_subproblem(at_opt, model, objective, {});
  CHECK(next.u(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(next.rates(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(next.x == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("symmetric instance has a symmetric optimum") {
  Mat beta(2, 2);
  beta << 0.7, 0.7, 0.4, 0.4;  // equal columns
  RateModel model;
  model.terms = adc_sinr_terms(beta, 0.5, 0.1, 6);
  model.rate_prefactor_bps = 1.0;
  model.p_max = 1.0;
  const ScaResult result = sca_solve(model, {1.0, 2.0}, {});
  CHECK(result.powers(0) == doctest::Approx(result.powers(1)).epsilon(1e-5));
}

TEST_CASE("single-UE solve converges to full power quickly") {
  const RateModel model = single_link_model(1.0, 4);
  SolverOptions options;
  const ScaResult result = sca_solve(model, {1.0, 1.0}, options);
  CHECK(result.converged);
  CHECK(result.powers(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(result.total_time_s == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(result.objective_trace.size() <= 4);  // monotone, near-immediate
}

TEST_CASE("huge tolerance stops after the first subproblem") {
  Rng rng(6);
  const RateModel model = random_model(rng, 3, 2, 0.5, 1.0);
  SolverOptions options;
  options.tolerance_s = 1e9;
  const ScaResult result = sca_solve(model, {1.0, 2.0}, options);
  CHECK(result.converged);
  CHECK(result.objective_trace.size() == 2);  // start point + one solve
}

TEST_CASE("objective trace is non-increasing") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 2 + static_cast<int>(rng.uniform() * 4);
    const int L = 2 + static_cast<int>(rng.uniform() * 6);
    const RateModel model = random_model(rng, L, K, rng.uniform(0.3, 1.0), 0.5);
    const ScaResult result =
        sca_solve(model, {1.0, static_cast<double>(K)}, {});
    for (std::size_t i = 1; i < result.objective_trace.size(); ++i)
      CHECK(result.objective_trace[i] <=
            result.objective_trace[i - 1] +
                1e-8 * std::max(1.0, result.objective_trace[i - 1]));
  }
}

TEST_CASE("solution is feasible and beats full power") {
  Rng rng(8);
  int improved = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int K = 2 + static_cast<int>(rng.uniform() * 3);
    const RateModel model = random_model(rng, 4, K, rng.uniform(0.3, 0.9), 0.7);
    const TimeObjective objective{2.0, 2.0 * K};
    const ScaResult result = sca_solve(model, objective, {});
    CHECK(result.powers.minCoeff() >= 0.0);
    CHECK(result.powers.maxCoeff() <= model.p_max + 1e-9);
    const double full = full_power_time(model, objective);
    CHECK(result.total_time_s <= full * (1.0 + 1e-6));
    if (result.total_time_s < full * (1.0 - 1e-6)) ++improved;
  }
  CHECK(improved >= 15);  // strict improvement is the common case
}

TEST_CASE("K=2 optimum matches an exhaustive grid") {
  Rng rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    const RateModel model = random_model(rng, 3, 2, rng.uniform(0.3, 0.8), 0.6);
    const TimeObjective objective{1.0, 2.0};
    const ScaResult result = sca_solve(model, objective, {});
    const double grid = grid_search_time(model, objective, 100);
    CHECK(std::abs(result.total_time_s - grid) / grid <= 0.02);
  }
}

TEST_CASE("full power baseline equals the solver for one UE") {
  const RateModel model = single_link_model(0.7, 5);
  const TimeObjective objective{1.0, 1.0};
  const ScaResult solved = sca_solve(model, objective, {});
  CHECK(full_power_time(model, objective) ==
        doctest::Approx(solved.total_time_s).epsilon(1e-6));
}

TEST_CASE("stronger channels never slow the full-power baseline") {
  Rng rng(10);
  Mat beta(3, 2);
  for (int i = 0; i < 6; ++i) beta(i) = rng.uniform(0.1, 1.0);
  SystemConfig cfg;
  cfg.num_aps = 3;
  cfg.num_ues = 2;
  cfg.noise_power_w = 0.3;
  cfg.bandwidth_hz = 1.0;
  cfg.pilot_len = 1;
  cfg.block_len = 2;
  cfg.grad_dim = 6;
  cfg.max_power_w = 0.5;
  cfg.update_bits = 1.0;
  cfg.rounds = 1;
  double prev = std::numeric_limits<double>::infinity();
  for (double scale : {1.0, 1.5, 2.5, 4.0}) {
    const double t = full_power_baseline_adc(beta * scale, 0.6, cfg);
    CHECK(t <= prev + 1e-12);
    prev = t;
  }
}

TEST_CASE("zero channel row fails loudly") {
  Mat beta = Mat::Zero(2, 2);
  beta(0, 0) = beta(1, 0) = 0.5;  // UE 1 unreachable
  SystemConfig cfg;
  cfg.num_aps = 2;
  cfg.num_ues = 2;
  cfg.bandwidth_hz = 1.0;
  cfg.pilot_len = 1;
  cfg.block_len = 2;
  CHECK_THROWS_AS(full_power_baseline_adc(beta, 0.5, cfg), Error);
  CHECK_THROWS_AS(sca_solve_adc(beta, 0.5, cfg, {}), Error);
}

TEST_CASE("DAC solve matches the generic machinery on a full mask") {
  Rng rng(11);
  Mat beta(3, 3);
  for (int i = 0; i < 9; ++i) beta(i) = rng.uniform(0.1, 1.0);
  SystemConfig cfg;
  cfg.num_aps = 3;
  cfg.num_ues = 3;
  cfg.noise_power_w = 0.2;
  cfg.bandwidth_hz = 1.0;
  cfg.pilot_len = 1;
  cfg.block_len = 101;
  cfg.grad_dim = 4;
  cfg.max_power_w = 0.8;
  cfg.update_bits = 1.0;
  cfg.rounds = 1;
  const double zeta = 0.5;
  const MaskMat full = MaskMat::Ones(3, 3);

  const DacScaResult via_dac = sca_solve_dac(beta, zeta, {full}, cfg, {});

  RateModel model;
  model.terms = dac_sinr_terms(beta, zeta, full, cfg.noise_power_w, cfg.grad_dim);
  model.rate_prefactor_bps = cfg.prelog() * cfg.bandwidth_hz;
  model.p_max = cfg.max_power_w;
  const ScaResult generic = sca_solve(model, {1.0, 3.0}, {});

  CHECK(via_dac.total_time_s ==
        doctest::Approx(generic.total_time_s).epsilon(1e-9));

  // Repeated masks reuse a single solve and sum linearly.
  const DacScaResult twice = sca_solve_dac(beta, zeta, {full, full}, cfg, {});
  CHECK(twice.total_time_s ==
        doctest::Approx(2.0 * via_dac.total_time_s).epsilon(1e-12));
}

TEST_CASE("single served UE reduces to the single-link closed form") {
  Mat beta = Mat::Ones(1, 2);
  SystemConfig cfg;
  cfg.num_aps = 1;
  cfg.num_ues = 2;
  cfg.noise_power_w = 1.0;
  cfg.bandwidth_hz = 1.0;
  cfg.pilot_len = 1;
  cfg.block_len = 100000000;
  cfg.grad_dim = 1;
  cfg.max_power_w = 1.0;
  cfg.update_bits = 1.0;
  cfg.rounds = 1;
  MaskMat mask = MaskMat::Zero(1, 2);
  mask(0, 0) = 1;  // only UE 0 served
  const DacScaResult result = sca_solve_dac(beta, 1.0, {mask}, cfg, {});
  // Rate is monotone in the single served power, so full power is optimal
  // and the time is 2 / R(p_max) in closed form.
  RateModel model;
  model.terms = dac_sinr_terms(beta, 1.0, mask, 1.0, 1);
  model.rate_prefactor_bps = cfg.prelog() * cfg.bandwidth_hz;
  model.p_max = 1.0;
  Vec p_full(2);
  p_full << 1.0, 0.0;
  const double sinr = sinr_from_terms(model.terms, p_full, 0);
  const double rate = model.rate_prefactor_bps * std::log2(1.0 + sinr);
  CHECK(result.rounds.front().powers(0) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(result.rounds.front().powers(1) == 0.0);
  CHECK(result.total_time_s == doctest::Approx(2.0 / rate).epsilon(1e-4));

  CHECK_THROWS_AS(sca_solve_dac(beta, 1.0, {MaskMat::Zero(1, 2)}, cfg, {}),
                  Error);
}
