#pragma once

#include <vector>

#include "cffl/common.hpp"

namespace cffl {

/// Constants of the optimality-gap bound. contraction() is
/// kappa = alpha (2 - alpha) mu / M, required to lie in (0, 1].
struct ConvergenceParams {
  double smoothness = 1.0;        // M
  double strong_convexity = 1.0;  // mu
  double initial_gap = 0.0;       // G_1 = F(w^1) - F*
  double alpha = 1.0;             // gradient attenuation in (0, 1]
  double total_samples = 1.0;     // B_tot
  int grad_dim = 1;               // d

  double contraction() const {
    return alpha * (2.0 - alpha) * strong_convexity / smoothness;
  }
  void validate() const;
};

/// Closed-form bound on the average optimality gap after `rounds` updates:
///   (1-k)^T G_1
///   + alpha^2/(2 M B^2) * sum_t (1-k)^(T-t) |alpha/B * I_t|^2
///   + d/(2 M B^2)       * sum_t (1-k)^(T-t) sum_j m_j(t)^2.
/// interference_norms holds |I_t|, noise_powers holds sum_j m_j(t)^2; both
/// must have at least `rounds` leading entries.
double optimality_gap_bound(const ConvergenceParams& params,
                            const std::vector<double>& interference_norms,
                            const std::vector<double>& noise_powers,
                            int rounds);

/// mu and M of a quadratic objective with the given (symmetric PSD) Hessian,
/// via exact eigen-decomposition.
std::pair<double, double> quadratic_constants(const Mat& hessian);

}  // namespace cffl
