#include "cffl/rng.hpp"

#include <cmath>
#include <numbers>

namespace cffl {

namespace {
constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace

Rng::Rng(std::uint64_t seed) : origin_(seed) {
  std::uint64_t z = seed;
  for (auto& s : s_) s = z = mix64(z);
}

namespace {
constexpr std::uint64_t kLevel0 = 0xa5a5a5a5a5a5a5a5ULL;
constexpr std::uint64_t kLevel1 = 0xc3c3c3c3c3c3c3c3ULL;
constexpr std::uint64_t kLevel2 = 0x7878787878787878ULL;
}  // namespace

Rng Rng::fork(std::uint64_t tag) const {
  return Rng(mix64(origin_ ^ mix64(tag ^ kLevel0)));
}

Rng Rng::fork(std::uint64_t tag, std::uint64_t a) const {
  return Rng(mix64(mix64(origin_ ^ mix64(tag ^ kLevel0)) ^ mix64(a ^ kLevel1)));
}

Rng Rng::fork(std::uint64_t tag, std::uint64_t a, std::uint64_t b) const {
  return Rng(mix64(mix64(mix64(origin_ ^ mix64(tag ^ kLevel0)) ^
                         mix64(a ^ kLevel1)) ^
                   mix64(b ^ kLevel2)));
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 uniformly distributed mantissa bits.
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::gaussian() {
  // Box-Muller; the spare is discarded so every call consumes a fixed
  // number of raw draws (keeps forked streams self-contained).
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::complex<double> Rng::cgaussian() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-std::log(u1));  // per-component var 1/2
  const double phi = 2.0 * std::numbers::pi * u2;
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace cffl
