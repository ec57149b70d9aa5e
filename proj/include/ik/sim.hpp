// Statistical model Y = R_phi[X] + eta: exchangeable position laws, noise
// laws, and the forward interaction operator.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ik/kernels.hpp"
#include "ik/rng.hpp"

namespace ik {

struct Array3 {
  std::int64_t M = 0;
  int N = 0, d = 0;
  std::vector<double> v;  // row-major: m, then particle, then coordinate

  Array3() = default;
  Array3(std::int64_t M_, int N_, int d_)
      : M(M_), N(N_), d(d_), v(static_cast<std::size_t>(M_) * N_ * d_, 0.0) {}
  double* sample(std::int64_t m) { return v.data() + static_cast<std::size_t>(m) * N * d; }
  const double* sample(std::int64_t m) const { return v.data() + static_cast<std::size_t>(m) * N * d; }
};

struct IidUniform {};

struct UniformBox {
  double lo = 0.0, hi = 1.0;  // per coordinate
};

// Draw a component index by weight, then all coordinates iid on that box.
struct ConditionalIidMixture {
  std::vector<UniformBox> components;
  std::vector<double> weights;  // sum to 1
};

// One Euler-Maruyama step from an iid-uniform draw:
//   X = X0 + R_phi[X0] dt + sigma sqrt(dt) xi, clamped to [0,1]^d.
struct EulerMaruyamaStep {
  RadialKernel drift = RadialKernel::zero();
  double dt = 0.01;
  double sigma = 1.0;
};

using PositionLaw = std::variant<IidUniform, EulerMaruyamaStep, ConditionalIidMixture>;

struct NoiseNone {};
struct NoiseGaussian {
  double sigma_eta = 0.1;
};
struct NoiseCenteredUniform {
  double half_range = 0.1;
};
using NoiseLaw = std::variant<NoiseNone, NoiseGaussian, NoiseCenteredUniform>;

struct SystemConfig {
  int N = 3;
  int d = 1;
  std::int64_t M = 1;
  PositionLaw position_law = IidUniform{};
  NoiseLaw noise = NoiseGaussian{};
  std::uint64_t seed = 0;

  void validate() const;  // N >= 3, sigma >= 0, weights sum to 1
  double noise_sigma() const;
};

struct Dataset {
  Array3 X, Y;
  SystemConfig config;
  std::string truth_id;  // kernel record of the generating truth, if any
};

// Kernels act on distances in [0,1]. In d >= 2 the unit box admits pairs
// farther apart; those contribute nothing, consistent with kernels being
// supported on the learning interval.
inline double kernel_on_distance(const RadialKernel& phi, double r) {
  return r <= 1.0 ? phi(r) : 0.0;
}

// out_i = (1/N) sum_{j != i} phi(|X_i-X_j|) (X_i-X_j)/|X_i-X_j|.
// Pairs closer than 1e-12 contribute nothing (unit vector taken as 0).
void forward(const RadialKernel& phi, const double* X, int N, int d, double* out);
std::vector<double> forward(const RadialKernel& phi, std::span<const double> X, int N, int d);

// Positions for sample m of the configured law, written to x (N*d).
// Deterministic in (config.seed, m) regardless of scheduling.
void sample_positions_one(const SystemConfig& config, std::int64_t m, double* x);
// All M samples; parallel over m.
Array3 sample_positions(const SystemConfig& config);

// Draws noise for sample m into eta (N*d).
void sample_noise_one(const SystemConfig& config, std::int64_t m, double* eta);

// Y^m = forward(phi, X^m) + eta^m. Parallel over samples.
Dataset generate(const SystemConfig& config, const RadialKernel& phi);
// Serial reference walking the identical plan; bit-identical output.
Dataset generate_serial(const SystemConfig& config, const RadialKernel& phi);

}  // namespace ik
