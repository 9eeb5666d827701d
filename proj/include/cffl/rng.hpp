#pragma once

#include <complex>
#include <cstdint>

namespace cffl {

/// splitmix64 finalizer, used both for seeding and substream derivation.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Named substream tags so that (seed, module, entity) always maps to the
/// same draws regardless of what other modules consume.
namespace streams {
constexpr std::uint64_t kApPlacement = 0x11;
constexpr std::uint64_t kUePlacement = 0x12;
constexpr std::uint64_t kShadowing = 0x13;
constexpr std::uint64_t kSmallScale = 0x14;
constexpr std::uint64_t kThermalNoise = 0x21;
constexpr std::uint64_t kAdcDistortion = 0x22;
constexpr std::uint64_t kDacDistortion = 0x23;
constexpr std::uint64_t kQuantizer = 0x24;
constexpr std::uint64_t kDpMonteCarlo = 0x31;
constexpr std::uint64_t kDataset = 0x41;
constexpr std::uint64_t kTraining = 0x42;
constexpr std::uint64_t kSweep = 0x51;
}  // namespace streams

/// Deterministic xoshiro256++ generator with hierarchical forking.
/// Distributions are implemented here (not std::) so that a fixed seed
/// yields bit-identical streams on every build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Independent substream for (tag) or (tag, a) or (tag, a, b).
  Rng fork(std::uint64_t tag) const;
  Rng fork(std::uint64_t tag, std::uint64_t a) const;
  Rng fork(std::uint64_t tag, std::uint64_t a, std::uint64_t b) const;

  std::uint64_t next_u64();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
  double gaussian();                 // N(0, 1)
  std::complex<double> cgaussian();  // CN(0, 1): Re, Im ~ N(0, 1/2)

  std::uint64_t origin() const noexcept { return origin_; }

 private:
  std::uint64_t s_[4];
  std::uint64_t origin_;
};

}  // namespace cffl
