// Counter-based random number generation (Philox4x32-10).
//
// Every random draw in this project is addressed by (seed, stream, position).
// Streams are cheap to derive, so each Monte Carlo replicate and each sample
// within a replicate gets its own stream. Output is then independent of how
// work is scheduled across threads.
#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace ik {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derives a stream id from a list of integer parts (experiment tag,
// replicate index, sample index, ...). Order-sensitive.
std::uint64_t substream(std::initializer_list<std::uint64_t> parts);

// Fixed tags so unrelated experiments never share a stream.
enum StreamTag : std::uint64_t {
  kStreamPositions = 0x706F73u,  // dataset positions
  kStreamNoise = 0x6E7A65u,      // observation noise
  kStreamTail = 0x74616Cu,       // tail-frequency replicates
  kStreamFano = 0x66616Eu,       // hypothesis-test replicates
  kStreamRate = 0x726174u,       // rate-sweep trials
  kStreamMoment = 0x6D6F6Du,     // moment-scaling replicates
  kStreamCodebook = 0x636F64u,   // codeword search
  kStreamMisc = 0x6D7363u,
};

// One logical stream of the keyed Philox4x32-10 generator.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0,1) with 53 random bits.
  double uniform01();
  double uniform(double a, double b);
  // Standard normal via Box-Muller (second value cached).
  double normal();
  // Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  std::uint32_t key_[2];
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int pos_ = 4;
  bool have_cached_normal_ = false;
  double cached_normal_ = 0.0;
};

}  // namespace ik
