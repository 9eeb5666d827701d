#include "cffl/power_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "cffl/scheduler.hpp"

namespace cffl {

namespace {

constexpr double kLn2 = std::numbers::ln2;

/// Surrogate rate in prefactor-normalized units (spectral efficiency):
/// s_k(u) = kon(k) + lin(k) u_k - sum_i quad(k,i) u_i^2.
struct Surrogate {
  Vec kon;
  Vec lin;
  Mat quad;

  double value(const Vec& u, Eigen::Index k) const {
    return kon(k) + lin(k) * u(k) - quad.row(k).dot(u.array().square().matrix());
  }
};

Surrogate build_surrogate(const Vec& u_exp, const SinrTerms& terms) {
  const auto K = terms.A.size();
  require(u_exp.size() == K, "invalid-argument",
          "expansion point size mismatch");
  Surrogate s;
  s.kon.resize(K);
  s.lin.resize(K);
  s.quad.resize(K, K);
  const Vec p_exp = u_exp.array().square();
  for (Eigen::Index k = 0; k < K; ++k) {
    const double pi_exp = terms.W.row(k).dot(p_exp) + terms.c(k);
    require(pi_exp > 0.0, "invalid-argument",
            "invalid expansion point: nonpositive denominator");
    const double ups_exp = u_exp(k) * std::sqrt(terms.A(k));
    const double a = ups_exp * ups_exp / pi_exp;
    const double q = a / (ups_exp * ups_exp + pi_exp);
    s.kon(k) = (std::log1p(a) - a - q * terms.c(k)) / kLn2;
    s.lin(k) = 2.0 * ups_exp * std::sqrt(terms.A(k)) / (pi_exp * kLn2);
    for (Eigen::Index i = 0; i < K; ++i)
      s.quad(k, i) =
          q * (terms.W(k, i) + (i == k ? terms.A(k) : 0.0)) / kLn2;
  }
  return s;
}

/// Barrier subproblem state over z = [u(0..m-1), R(0..m-1), x1, x2] with
/// rates in normalized units.
struct BarrierProblem {
  const Surrogate& srg;
  double p_max;
  double c1;  // normalized access numerator, seconds
  double c2;  // normalized fronthaul numerator, seconds
  Eigen::Index m;

  Eigen::Index n() const { return 2 * m + 2; }
  int constraint_count() const { return static_cast<int>(4 * m + 1); }

  bool feasible(const Vec& z) const {
    for (Eigen::Index k = 0; k < m; ++k) {
      const double u = z(k);
      const double r = z(m + k);
      if (!(u > 0.0) || !(u * u < p_max)) return false;
      if (!(r > 0.0) || !(r < srg.value(z.head(m), k))) return false;
    }
    const double x1 = z(2 * m);
    const double x2 = z(2 * m + 1);
    double rate_sum = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      if (!(c1 / z(m + k) < x1)) return false;
      rate_sum += z(m + k);
    }
    return c2 / rate_sum < x2;
  }

  double objective(const Vec& z) const { return z(2 * m) + z(2 * m + 1); }

  /// phi = (x1+x2) - (1/t) sum log(-g_i): the barrier is scaled down rather
  /// than the objective up, so phi stays at the objective's magnitude for
  /// every stage (same Newton direction, far better conditioning).
  double eval(const Vec& z, double inv_t, Vec& grad, Mat& hess) const {
    const auto nn = n();
    grad = Vec::Zero(nn);
    hess = Mat::Zero(nn, nn);
    grad(2 * m) = 1.0;
    grad(2 * m + 1) = 1.0;
    double phi = objective(z);

    const Vec u = z.head(m);
    const Vec u2 = u.array().square();

    for (Eigen::Index k = 0; k < m; ++k) {
      // R_k - s_k(u) < 0
      const double slack = srg.value(u, k) - z(m + k);
      phi -= inv_t * std::log(slack);
      Vec gc = Vec::Zero(nn);
      gc(m + k) = 1.0;
      for (Eigen::Index i = 0; i < m; ++i)
        gc(i) = -((i == k ? srg.lin(k) : 0.0) - 2.0 * srg.quad(k, i) * u(i));
      grad += inv_t * gc / slack;
      hess += inv_t * gc * gc.transpose() / (slack * slack);
      for (Eigen::Index i = 0; i < m; ++i)
        hess(i, i) += inv_t * 2.0 * srg.quad(k, i) / slack;

      // c1 / R_k - x1 < 0
      const double r = z(m + k);
      const double sa = z(2 * m) - c1 / r;
      phi -= inv_t * std::log(sa);
      Vec ga = Vec::Zero(nn);
      ga(m + k) = -c1 / (r * r);
      ga(2 * m) = -1.0;
      grad += inv_t * ga / sa;
      hess += inv_t * ga * ga.transpose() / (sa * sa);
      hess(m + k, m + k) += inv_t * 2.0 * c1 / (r * r * r) / sa;

      // u_k^2 - p_max < 0
      const double sp = p_max - u2(k);
      phi -= inv_t * std::log(sp);
      grad(k) += inv_t * 2.0 * u(k) / sp;
      hess(k, k) += inv_t * (4.0 * u2(k) / (sp * sp) + 2.0 / sp);

      // -u_k < 0
      phi -= inv_t * std::log(u(k));
      grad(k) += -inv_t / u(k);
      hess(k, k) += inv_t / u2(k);
    }

    // c2 / sum R - x2 < 0
    const double rate_sum = z.segment(m, m).sum();
    const double sf = z(2 * m + 1) - c2 / rate_sum;
    phi -= inv_t * std::log(sf);
    Vec gf = Vec::Zero(nn);
    for (Eigen::Index k = 0; k < m; ++k)
      gf(m + k) = -c2 / (rate_sum * rate_sum);
    gf(2 * m + 1) = -1.0;
    grad += inv_t * gf / sf;
    hess += inv_t * gf * gf.transpose() / (sf * sf);
    const double curv = inv_t * 2.0 * c2 / (rate_sum * rate_sum * rate_sum) / sf;
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = 0; k < m; ++k) hess(m + j, m + k) += curv;

    return phi;
  }

  double phi_only(const Vec& z, double inv_t) const {
    double barrier = 0.0;
    const Vec u = z.head(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      barrier -= std::log(srg.value(u, k) - z(m + k));
      barrier -= std::log(z(2 * m) - c1 / z(m + k));
      barrier -= std::log(p_max - u(k) * u(k));
      barrier -= std::log(u(k));
    }
    barrier -= std::log(z(2 * m + 1) - c2 / z.segment(m, m).sum());
    return objective(z) + inv_t * barrier;
  }
};

/// Damped-Newton minimization of the barrier objective for fixed t.
void newton_minimize(const BarrierProblem& prob, Vec& z, double inv_t,
                     double decrement_tol, int& iter_budget) {
  Vec grad;
  Mat hess;
  while (iter_budget-- > 0) {
    const double phi = prob.eval(z, inv_t, grad, hess);
#ifdef CFFL_SOLVER_TRACE
    std::fprintf(stderr, "inv_t=%g phi=%.12g obj=%.12g z=", inv_t, phi,
                 prob.objective(z));
    for (Eigen::Index i = 0; i < z.size(); ++i)
      std::fprintf(stderr, "%.3g ", z(i));
    std::fprintf(stderr, "\n");
#endif
    // Jacobi-preconditioned solve: the diagonal spans many orders of
    // magnitude when UE rates do, and plain LDLT loses the direction.
    const Vec scale =
        hess.diagonal().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
    Mat hs = scale.asDiagonal() * hess * scale.asDiagonal();
    const Vec gs = scale.asDiagonal() * grad;
    Eigen::LDLT<Mat> ldlt(hs);
    Vec step = -(scale.asDiagonal() * ldlt.solve(gs)).eval();
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      hs.diagonal().array() += 1e-10 * (1.0 + hs.diagonal().maxCoeff());
      step = -(scale.asDiagonal() * Mat(hs).ldlt().solve(gs)).eval();
      require(step.allFinite(), "solver-failure",
              "Newton step failed to factorize");
    }
    const double decrement2 = -grad.dot(step);
    if (decrement2 / 2.0 <= decrement_tol) return;

    double stride = 1.0;
    while (stride > 1e-14 && !prob.feasible(z + stride * step)) stride *= 0.5;
    require(stride > 1e-14, "solver-failure",
            "line search could not restore feasibility");
    // Armijo backtracking; a stall at the floating-point floor counts as
    // converged for this stage.
    const double slope = grad.dot(step);
    while (stride > 1e-14 && prob.phi_only(z + stride * step, inv_t) >
                                 phi + 0.25 * stride * slope)
      stride *= 0.5;
    if (stride <= 1e-14) return;
    const double phi_next = prob.phi_only(z + stride * step, inv_t);
    z += stride * step;
    if (phi - phi_next <= 1e-14 * (1.0 + std::abs(phi))) return;
  }
  fail("solver-failure", "Newton iteration budget exhausted");
}

struct ActiveModel {
  RateModel model;          // reduced to active UEs
  std::vector<int> active;  // active UE indices in the full problem
};

ActiveModel reduce_model(const RateModel& full, const std::vector<int>& active) {
  ActiveModel out;
  out.active = active;
  const auto m = static_cast<Eigen::Index>(active.size());
  out.model.rate_prefactor_bps = full.rate_prefactor_bps;
  out.model.p_max = full.p_max;
  out.model.terms.A.resize(m);
  out.model.terms.c.resize(m);
  out.model.terms.W.resize(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    out.model.terms.A(a) = full.terms.A(active[a]);
    out.model.terms.c(a) = full.terms.c(active[a]);
    for (Eigen::Index b = 0; b < m; ++b)
      out.model.terms.W(a, b) = full.terms.W(active[a], active[b]);
  }
  return out;
}

}  // namespace

Vec true_rates(const RateModel& model, const Vec& p) {
  const auto K = model.terms.A.size();
  Vec rates(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double sinr = sinr_from_terms(model.terms, p, static_cast<int>(k));
    rates(k) = model.rate_prefactor_bps * std::log2(1.0 + sinr);
  }
  return rates;
}

double true_total_time(const RateModel& model, const TimeObjective& objective,
                       const Vec& p) {
  const Vec rates = true_rates(model, p);
  require(rates.minCoeff() > 0.0, "unserved-ue",
          "a UE with zero rate makes the uplink time undefined");
  return (objective.access_bits / rates.array()).maxCoeff() +
         objective.fronthaul_bits / rates.sum();
}

Vec rate_lower_bound(const Vec& u, const Vec& u_exp, const RateModel& model) {
  const Surrogate srg = build_surrogate(u_exp, model.terms);
  Vec out(u.size());
  for (Eigen::Index k = 0; k < u.size(); ++k)
    out(k) = model.rate_prefactor_bps * srg.value(u, k);
  return out;
}

ScaState solve_subproblem(const ScaState& state, const RateModel& model,
                          const TimeObjective& objective,
                          const SolverOptions& options) {
  const auto m = model.terms.A.size();
  require(state.u.size() == m, "invalid-argument", "state size mismatch");
  require(model.terms.A.minCoeff() > 0.0, "unserved-ue",
          "a UE with zero numerator coefficient can never be served");

  const Surrogate srg = build_surrogate(state.u, model.terms);
  BarrierProblem prob{srg, model.p_max,
                      objective.access_bits / model.rate_prefactor_bps,
                      objective.fronthaul_bits / model.rate_prefactor_bps, m};

  // Strictly feasible start near the expansion point.
  const double u_hi = std::sqrt(model.p_max);
  Vec z = Vec::Zero(prob.n());
  for (Eigen::Index k = 0; k < m; ++k)
    z(k) = std::clamp(state.u(k), 1e-4 * u_hi, (1.0 - 1e-4) * u_hi);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double s = srg.value(z.head(m), k);
    require(s > 0.0, "solver-failure",
            "surrogate is nonpositive at the start point");
    z(m + k) = (1.0 - 1e-4) * s;
  }
  double x1 = 0.0, rate_sum = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    x1 = std::max(x1, prob.c1 / z(m + k));
    rate_sum += z(m + k);
  }
  z(2 * m) = x1 * (1.0 + 1e-3) + 1e-300;
  z(2 * m + 1) = prob.c2 / rate_sum * (1.0 + 1e-3);
  require(prob.feasible(z), "solver-failure",
          "could not construct a strictly feasible start");

  const int n_con = prob.constraint_count();
  const double decrement_tol = options.inner_tol * 1e-4;
  int budget = options.max_newton_iters;
  // Start with the barrier at the objective's own scale so the first
  // centering is a short trek; each stage then follows the central path.
  double t = n_con / std::max(prob.objective(z), 1e-12);
  while (true) {
    newton_minimize(prob, z, 1.0 / t, decrement_tol, budget);
    const double gap = n_con / t;
    if (gap <= 1e-9 * std::max(1.0, prob.objective(z))) break;
    t *= options.barrier_growth;
  }

  ScaState next;
  next.u = z.head(m);
  next.rates = model.rate_prefactor_bps * z.segment(m, m);
  next.x = prob.objective(z);
  next.iteration = state.iteration + 1;
  return next;
}

namespace {

ScaResult sca_run(const RateModel& model, const TimeObjective& objective,
                  const SolverOptions& options, const Vec& start_u) {
  ScaState state;
  state.u = start_u;
  state.x = true_total_time(model, objective, state.u.array().square());
  ScaResult result;
  result.objective_trace.push_back(state.x);

  for (int n = 0; n < options.max_outer_iters; ++n) {
    ScaState next = solve_subproblem(state, model, objective, options);
    const double slack = 1e-8 * std::max(1.0, std::abs(state.x));
    require(next.x <= state.x + slack, "internal-error",
            "SCA objective increased beyond numerical slack");
    result.objective_trace.push_back(next.x);
    // Stop at the requested tolerance or at the subproblem precision floor.
    const bool done =
        std::abs(next.x - state.x) <=
        std::max(options.tolerance_s, 1e-8 * std::max(1.0, state.x));
    state = next;
    if (done) {
      result.converged = true;
      break;
    }
  }

  result.powers = state.u.array().square();
  result.rates = state.rates;
  result.total_time_s = true_total_time(model, objective, result.powers);
  return result;
}

}  // namespace

ScaResult sca_solve(const RateModel& model, const TimeObjective& objective,
                    const SolverOptions& options) {
  const auto m = model.terms.A.size();
  require(m > 0, "invalid-argument", "no UEs to optimize");
  require(model.terms.A.minCoeff() > 0.0, "unserved-ue",
          "a UE with zero numerator coefficient can never be served");

  ScaResult result = sca_run(model, objective, options,
                             Vec::Constant(m, std::sqrt(model.p_max / 2.0)));
  // The half-power start can land on a restriction path that ends above the
  // plain full-power point. Re-expanding at full power starts the monotone
  // descent there, so the final answer never loses to the baseline.
  const double full_time = full_power_time(model, objective);
  if (result.total_time_s > full_time) {
    ScaResult retry =
        sca_run(model, objective, options, Vec::Constant(m, std::sqrt(model.p_max)));
    if (retry.total_time_s <= result.total_time_s) result = std::move(retry);
  }
  return result;
}

double full_power_time(const RateModel& model, const TimeObjective& objective) {
  return true_total_time(model, objective,
                         Vec::Constant(model.terms.A.size(), model.p_max));
}

RateModel adc_rate_model(const Mat& beta, double alpha,
                         const SystemConfig& cfg) {
  RateModel model;
  model.terms = adc_sinr_terms(beta, alpha, cfg.noise_power_w, cfg.grad_dim);
  model.rate_prefactor_bps = cfg.prelog() * cfg.bandwidth_hz;
  model.p_max = cfg.max_power_w;
  return model;
}

TimeObjective sync_time_objective(const SystemConfig& cfg) {
  const double payload = cfg.update_bits * cfg.rounds;
  return {payload, static_cast<double>(cfg.num_ues) * payload};
}

ScaResult sca_solve_adc(const Mat& beta, double alpha, const SystemConfig& cfg,
                        const SolverOptions& options) {
  return sca_solve(adc_rate_model(beta, alpha, cfg), sync_time_objective(cfg),
                   options);
}

double full_power_baseline_adc(const Mat& beta, double alpha,
                               const SystemConfig& cfg) {
  return full_power_time(adc_rate_model(beta, alpha, cfg),
                         sync_time_objective(cfg));
}

namespace {

DacScaResult dac_rounds(const Mat& beta, double zeta,
                        const std::vector<MaskMat>& masks,
                        const SystemConfig& cfg, const SolverOptions* options) {
  require(!masks.empty(), "invalid-argument", "no rounds given");
  const auto K = beta.cols();
  DacScaResult out;
  // Identical masks repeat under the cyclic lag-tolerance schedule; solve
  // each distinct mask once.
  std::map<std::vector<int>, DacRound> cache;
  for (const MaskMat& mask : masks) {
    std::vector<int> key(mask.data(), mask.data() + mask.size());
    auto it = cache.find(key);
    if (it == cache.end()) {
      const std::vector<int> active = active_set(mask);
      RateModel full;
      full.terms = dac_sinr_terms(beta, zeta, mask, cfg.noise_power_w,
                                  cfg.grad_dim);
      full.rate_prefactor_bps = cfg.prelog() * cfg.bandwidth_hz;
      full.p_max = cfg.max_power_w;
      const ActiveModel reduced = reduce_model(full, active);
      const TimeObjective objective{
          cfg.update_bits,
          static_cast<double>(active.size()) * cfg.update_bits};

      DacRound round;
      round.mask = mask;
      round.powers = Vec::Zero(K);
      round.rates = Vec::Zero(K);
      if (options != nullptr) {
        const ScaResult sol = sca_solve(reduced.model, objective, *options);
        for (std::size_t a = 0; a < active.size(); ++a) {
          round.powers(active[a]) = sol.powers(a);
          round.rates(active[a]) = sol.rates(a);
        }
        round.round_time_s = sol.total_time_s;
      } else {
        const Vec p = Vec::Constant(reduced.model.terms.A.size(), cfg.max_power_w);
        const Vec rates = true_rates(reduced.model, p);
        require(rates.minCoeff() > 0.0, "unserved-ue",
                "a served UE has zero rate at full power");
        for (std::size_t a = 0; a < active.size(); ++a) {
          round.powers(active[a]) = p(a);
          round.rates(active[a]) = rates(a);
        }
        round.round_time_s = true_total_time(reduced.model, objective, p);
      }
      it = cache.emplace(std::move(key), std::move(round)).first;
    }
    out.rounds.push_back(it->second);
    out.total_time_s += it->second.round_time_s;
  }
  return out;
}

}  // namespace

DacScaResult sca_solve_dac(const Mat& beta, double zeta,
                           const std::vector<MaskMat>& masks,
                           const SystemConfig& cfg,
                           const SolverOptions& options) {
  return dac_rounds(beta, zeta, masks, cfg, &options);
}

DacScaResult full_power_dac(const Mat& beta, double zeta,
                            const std::vector<MaskMat>& masks,
                            const SystemConfig& cfg) {
  return dac_rounds(beta, zeta, masks, cfg, nullptr);
}

}  // namespace cffl
