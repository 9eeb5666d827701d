#include "cffl/convergence.hpp"

#include <cmath>

namespace cffl {

void ConvergenceParams::validate() const {
  require(smoothness > 0.0 && strong_convexity > 0.0 &&
              strong_convexity <= smoothness,
          "invalid-params", "need 0 < mu <= M");
  require(alpha > 0.0 && alpha <= 1.0, "invalid-params",
          "alpha must lie in (0, 1]");
  require(initial_gap >= 0.0, "invalid-params", "initial gap must be >= 0");
  require(total_samples > 0.0, "invalid-params", "B_tot must be positive");
  require(grad_dim >= 1, "invalid-params", "gradient dimension must be >= 1");
  const double kappa = contraction();
  require(kappa > 0.0 && kappa <= 1.0, "invalid-params",
          "contraction factor must lie in (0, 1]");
}

double optimality_gap_bound(const ConvergenceParams& params,
                            const std::vector<double>& interference_norms,
                            const std::vector<double>& noise_powers,
                            int rounds) {
  params.validate();
  require(rounds >= 1, "invalid-params", "round count must be >= 1");
  require(interference_norms.size() >= static_cast<std::size_t>(rounds) &&
              noise_powers.size() >= static_cast<std::size_t>(rounds),
          "invalid-argument", "need one interference norm and noise power per round");

  const double kappa = params.contraction();
  const double decay = 1.0 - kappa;
  const double big_m = params.smoothness;
  const double b_tot = params.total_samples;
  const double a2 = params.alpha * params.alpha;

  double bound = std::pow(decay, rounds) * params.initial_gap;
  for (int t = 1; t <= rounds; ++t) {
    const double weight = std::pow(decay, rounds - t);
    const double scaled_int =
        params.alpha / b_tot * interference_norms[t - 1];
    bound += a2 / (2.0 * big_m * b_tot * b_tot) * weight * scaled_int * scaled_int;
    bound += static_cast<double>(params.grad_dim) /
             (2.0 * big_m * b_tot * b_tot) * weight * noise_powers[t - 1];
  }
  return bound;
}

std::pair<double, double> quadratic_constants(const Mat& hessian) {
  require(hessian.rows() == hessian.cols() && hessian.rows() > 0,
          "invalid-argument", "Hessian must be square");
  require((hessian - hessian.transpose()).cwiseAbs().maxCoeff() <
              1e-9 * (1.0 + hessian.cwiseAbs().maxCoeff()),
          "unsupported", "Hessian must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(hessian);
  require(es.info() == Eigen::Success, "solver-failure",
          "eigen-decomposition failed");
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace cffl
