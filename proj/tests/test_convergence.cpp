#include <doctest.h>

#include <cmath>

#include "cffl/convergence.hpp"
#include "cffl/rng.hpp"

using namespace cffl;

namespace {
ConvergenceParams base_params() {
  ConvergenceParams p;
  p.smoothness = 2.0;
  p.strong_convexity = 1.0;  // mu/M = 0.5
  p.initial_gap = 8.0;
  p.alpha = 1.0;
  p.total_samples = 10.0;
  p.grad_dim = 4;
  return p;
}
}  // namespace

TEST_CASE("noiseless bound is geometric") {
  ConvergenceParams p = base_params();
  const std::vector<double> zeros(16, 0.0);
  // kappa = 1 * 1 * 0.5 = 0.5; 8 * 0.125 = 1.
  CHECK(optimality_gap_bound(p, zeros, zeros, 3) == doctest::Approx(1.0));
  const double b5 = optimality_gap_bound(p, zeros, zeros, 5);
  const double b6 = optimality_gap_bound(p, zeros, zeros, 6);
  CHECK(b6 / b5 == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("one-step contraction when mu equals M") {
  ConvergenceParams p = base_params();
  p.strong_convexity = p.smoothness;
  const std::vector<double> zeros(4, 0.0);
  for (int rounds = 1; rounds <= 4; ++rounds)
    CHECK(optimality_gap_bound(p, zeros, zeros, rounds) == 0.0);
}

TEST_CASE("late noise weighs more than early noise") {
  ConvergenceParams p = base_params();
  p.initial_gap = 0.0;
  const int rounds = 6;
  std::vector<double> zeros(rounds, 0.0);
  double prev = 0.0;
  for (int hot = 0; hot < rounds; ++hot) {
    std::vector<double> noise(rounds, 0.0);
    noise[hot] = 1.0;
    const double bound = optimality_gap_bound(p, zeros, noise, rounds);
    CHECK(bound > prev);
    prev = bound;
  }
  // The final round enters with unit weight.
  std::vector<double> last_only(rounds, 0.0);
  last_only[rounds - 1] = 1.0;
  const double expected =
      p.grad_dim / (2.0 * p.smoothness * p.total_samples * p.total_samples);
  CHECK(optimality_gap_bound(p, zeros, last_only, rounds) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bound is monotone in interference and noise") {
  Rng rng(6);
  ConvergenceParams p = base_params();
  p.alpha = 0.7;
  const int rounds = 5;
  std::vector<double> ints(rounds), noise(rounds);
  for (int t = 0; t < rounds; ++t) {
    ints[t] = rng.uniform(0.0, 2.0);
    noise[t] = rng.uniform(0.0, 2.0);
  }
  const double base = optimality_gap_bound(p, ints, noise, rounds);
  for (int t = 0; t < rounds; ++t) {
    auto ints_up = ints;
    ints_up[t] += 0.5;
    CHECK(optimality_gap_bound(p, ints_up, noise, rounds) >= base);
    auto noise_up = noise;
    noise_up[t] += 0.5;
    CHECK(optimality_gap_bound(p, ints, noise_up, rounds) > base);
  }
}

TEST_CASE("invalid contraction is rejected") {
  ConvergenceParams p = base_params();
  p.strong_convexity = 3.0;  // mu > M
  CHECK_THROWS_AS(p.validate(), Error);
  p = base_params();
  p.alpha = 0.0;
  CHECK_THROWS_AS(optimality_gap_bound(p, {0.0}, {0.0}, 1), Error);
}

TEST_CASE("quadratic constants come from the exact spectrum") {
  const auto [mu_i, m_i] = quadratic_constants(Mat::Identity(3, 3));
  CHECK(mu_i == doctest::Approx(1.0));
  CHECK(m_i == doctest::Approx(1.0));

  Mat diag = Mat::Zero(2, 2);
  diag(0, 0) = 1.0;
  diag(1, 1) = 4.0;
  const auto [mu_d, m_d] = quadratic_constants(diag);
  CHECK(mu_d == doctest::Approx(1.0));
  CHECK(m_d == doctest::Approx(4.0));

  // Random symmetric PSD matrix vs. a direct eigenvalue computation.
  Rng rng(2);
  Mat a(5, 5);
  for (int i = 0; i < 25; ++i) a(i) = rng.gaussian();
  const Mat gram = a.transpose() * a + 0.1 * Mat::Identity(5, 5);
  const auto [mu, m] = quadratic_constants(gram);
  Eigen::SelfAdjointEigenSolver<Mat> es(gram);
  CHECK(mu == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-9));
  CHECK(m == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-9));

  Mat asym(2, 2);
  asym << 1.0, 2.0, 0.0, 1.0;
  CHECK_THROWS_AS(quadratic_constants(asym), Error);
}
