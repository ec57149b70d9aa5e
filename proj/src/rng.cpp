#include "ik/rng.hpp"

#include <cmath>

namespace ik {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& x, std::uint32_t k0, std::uint32_t k1) {
  const std::uint64_t p0 = std::uint64_t(kPhiloxM0) * x[0];
  const std::uint64_t p1 = std::uint64_t(kPhiloxM1) * x[2];
  const std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
  const std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
  x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
}

inline std::array<std::uint32_t, 4> philox_block(const std::uint32_t key[2], std::uint64_t stream,
                                                 std::uint64_t counter) {
  std::array<std::uint32_t, 4> x = {
      std::uint32_t(counter), std::uint32_t(counter >> 32),
      std::uint32_t(stream), std::uint32_t(stream >> 32)};
  std::uint32_t k0 = key[0], k1 = key[1];
  for (int r = 0; r < 10; ++r) {
    philox_round(x, k0, k1);
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return x;
}

}  // namespace

std::uint64_t substream(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x2545F4914F6CDD1Dull;
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream) : stream_(stream) {
  const std::uint64_t k = splitmix64(seed);
  key_[0] = std::uint32_t(k);
  key_[1] = std::uint32_t(k >> 32);
}

void RngStream::refill() {
  buf_ = philox_block(key_, stream_, counter_++);
  pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform01() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double a, double b) { return a + (b - a) * uniform01(); }

double RngStream::normal() {
  if (have_cached_normal_) {
    have_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0,1] so the log is finite.
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(t);
  have_cached_normal_ = true;
  return r * std::cos(t);
}

std::uint64_t RngStream::below(std::uint64_t bound) {
  const std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % bound);
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % bound;
}

}  // namespace ik
