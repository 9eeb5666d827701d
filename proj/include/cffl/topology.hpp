#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "cffl/common.hpp"
#include "cffl/rng.hpp"

namespace cffl {

/// Scalar system parameters shared by every module.
struct SystemConfig {
  int num_aps = 10;                   // L
  int num_ues = 3;                    // K
  double area_km = 1.0;               // D: side of the square deployment area
  double noise_power_w = 6.30957e-13; // sigma^2 (20 MHz, 9 dB noise figure)
  double bandwidth_hz = 20e6;         // B
  int pilot_len = 20;                 // tau_p, channel uses per block for CSI
  int block_len = 200;                // tau_c, channel uses per block
  int grad_dim = 1000;                // d: length of one model update
  double max_power_w = 0.2;           // p_max per UE
  double update_bits = 3.2e4;         // S: payload bits per update
  int rounds = 20;                    // T: communication rounds
  double learning_rate = 0.0;         // eta; 0 selects 1/M automatically

  double prelog() const { return 1.0 - static_cast<double>(pilot_len) / block_len; }
  void validate() const;
};

struct Position {
  double x_km = 0.0;
  double y_km = 0.0;
};

/// Three-slope path-loss model with a Hata-COST constant term. Every
/// constant is overridable so tests can pin exact values.
struct PathLossParams {
  double freq_mhz = 1900.0;
  double ap_height_m = 15.0;
  double ue_height_m = 1.65;
  double inner_break_km = 0.010;
  double outer_break_km = 0.050;
  double shadow_std_db = 8.0;
  bool shadowing = true;

  /// Fixed attenuation (dB) of the model, from the carrier and antenna
  /// heights; 140.715 dB with the defaults.
  double constant_db() const;
  /// Path loss in dB (negative) at a planar distance, shadowing excluded.
  double path_loss_db(double distance_km) const;
};

struct ChannelRealization {
  Mat beta;  // L x K large-scale gains, linear scale
  CMat g;    // L x K unit-variance small-scale coefficients
  CMat h;    // h(l,k) = sqrt(beta(l,k)) * g(l,k)
};

/// Uniform i.i.d. placements on the D x D square. AP and UE coordinates come
/// from per-entity substreams, so the UE layout is invariant under changes
/// of L (and vice versa) for a fixed seed.
std::pair<std::vector<Position>, std::vector<Position>> place_nodes(
    const SystemConfig& cfg, std::uint64_t seed);

/// Large-scale fading matrix; beta(l,k) from AP l to UE k, linear scale.
/// The seed feeds the shadowing substream only.
Mat large_scale_fading(const std::vector<Position>& ap_positions,
                       const std::vector<Position>& ue_positions,
                       const PathLossParams& params, std::uint64_t seed);

/// L x K i.i.d. CN(0,1) small-scale coefficients for one fading block.
CMat draw_small_scale(const SystemConfig& cfg, std::uint64_t seed);

/// Placement + fading + small scale combined for one drop.
ChannelRealization draw_channel(const SystemConfig& cfg,
                                const PathLossParams& params,
                                std::uint64_t seed);

/// CSV export, row = AP, column = UE, linear scale.
void write_beta_csv(const Mat& beta, std::ostream& os);

}  // namespace cffl
