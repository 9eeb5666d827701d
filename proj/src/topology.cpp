#include "cffl/topology.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace cffl {

void SystemConfig::validate() const {
  require(num_aps >= 1, "invalid-argument", "num_aps must be >= 1");
  require(num_ues >= 1, "invalid-argument", "num_ues must be >= 1");
  require(area_km > 0.0, "invalid-argument", "area side must be positive");
  require(noise_power_w > 0.0, "invalid-argument", "noise power must be positive");
  require(bandwidth_hz > 0.0, "invalid-argument", "bandwidth must be positive");
  require(pilot_len > 0 && pilot_len < block_len, "invalid-argument",
          "pilot length must satisfy 0 < tau_p < tau_c");
  require(grad_dim >= 1, "invalid-argument", "gradient dimension must be >= 1");
  require(max_power_w > 0.0, "invalid-argument", "max power must be positive");
  require(update_bits > 0.0, "invalid-argument", "update size must be positive");
  require(rounds >= 1, "invalid-argument", "round count must be >= 1");
}

double PathLossParams::constant_db() const {
  const double lf = std::log10(freq_mhz);
  return 46.3 + 33.9 * lf - 13.82 * std::log10(ap_height_m) -
         (1.1 * lf - 0.7) * ue_height_m + (1.56 * lf - 0.8);
}

double PathLossParams::path_loss_db(double distance_km) const {
  const double d0 = inner_break_km;
  const double d1 = outer_break_km;
  const double base = -constant_db();
  if (distance_km > d1) return base - 35.0 * std::log10(distance_km);
  if (distance_km > d0)
    return base - 15.0 * std::log10(d1) - 20.0 * std::log10(distance_km);
  return base - 15.0 * std::log10(d1) - 20.0 * std::log10(d0);
}

std::pair<std::vector<Position>, std::vector<Position>> place_nodes(
    const SystemConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const Rng root(seed);
  std::vector<Position> aps(cfg.num_aps);
  std::vector<Position> ues(cfg.num_ues);
  for (int l = 0; l < cfg.num_aps; ++l) {
    Rng r = root.fork(streams::kApPlacement, static_cast<std::uint64_t>(l));
    aps[l] = {r.uniform(0.0, cfg.area_km), r.uniform(0.0, cfg.area_km)};
  }
  for (int k = 0; k < cfg.num_ues; ++k) {
    Rng r = root.fork(streams::kUePlacement, static_cast<std::uint64_t>(k));
    ues[k] = {r.uniform(0.0, cfg.area_km), r.uniform(0.0, cfg.area_km)};
  }
  return {std::move(aps), std::move(ues)};
}

Mat large_scale_fading(const std::vector<Position>& ap_positions,
                       const std::vector<Position>& ue_positions,
                       const PathLossParams& params, std::uint64_t seed) {
  const auto num_aps = static_cast<Eigen::Index>(ap_positions.size());
  const auto num_ues = static_cast<Eigen::Index>(ue_positions.size());
  require(num_aps > 0 && num_ues > 0, "invalid-argument",
          "large_scale_fading needs at least one AP and one UE");
  const Rng root(seed);
  Mat beta(num_aps, num_ues);
  for (Eigen::Index l = 0; l < num_aps; ++l) {
    for (Eigen::Index k = 0; k < num_ues; ++k) {
      const double dx = ap_positions[l].x_km - ue_positions[k].x_km;
      const double dy = ap_positions[l].y_km - ue_positions[k].y_km;
      const double dist = std::hypot(dx, dy);
      double loss_db = params.path_loss_db(dist);
      // Log-normal shadowing applies beyond the outer breakpoint only;
      // closer links are dominated by the deterministic slope.
      if (params.shadowing && dist > params.outer_break_km) {
        Rng r = root.fork(streams::kShadowing, static_cast<std::uint64_t>(l),
                          static_cast<std::uint64_t>(k));
        loss_db += params.shadow_std_db * r.gaussian();
      }
      beta(l, k) = std::pow(10.0, loss_db / 10.0);
    }
  }
  return beta;
}

CMat draw_small_scale(const SystemConfig& cfg, std::uint64_t seed) {
  const Rng root(seed);
  CMat g(cfg.num_aps, cfg.num_ues);
  for (int l = 0; l < cfg.num_aps; ++l) {
    for (int k = 0; k < cfg.num_ues; ++k) {
      Rng r = root.fork(streams::kSmallScale, static_cast<std::uint64_t>(l),
                        static_cast<std::uint64_t>(k));
      g(l, k) = r.cgaussian();
    }
  }
  return g;
}

ChannelRealization draw_channel(const SystemConfig& cfg,
                                const PathLossParams& params,
                                std::uint64_t seed) {
  const auto [aps, ues] = place_nodes(cfg, seed);
  ChannelRealization ch;
  ch.beta = large_scale_fading(aps, ues, params, seed);
  ch.g = draw_small_scale(cfg, seed);
  ch.h = ch.beta.array().sqrt() * ch.g.array();
  return ch;
}

void write_beta_csv(const Mat& beta, std::ostream& os) {
  for (Eigen::Index l = 0; l < beta.rows(); ++l) {
    for (Eigen::Index k = 0; k < beta.cols(); ++k) {
      if (k > 0) os << ',';
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", beta(l, k));
      os << buf;
    }
    os << '\n';
  }
}

}  // namespace cffl
