#include "ik/sim.hpp"

#include <cmath>
#include <stdexcept>

#include "ik/parallel.hpp"

namespace ik {

void SystemConfig::validate() const {
  if (N < 3) throw std::invalid_argument("system config: N >= 3 required");
  if (d < 1) throw std::invalid_argument("system config: d >= 1 required");
  if (M < 1) throw std::invalid_argument("system config: M >= 1 required");
  if (const auto* g = std::get_if<NoiseGaussian>(&noise); g && g->sigma_eta < 0.0)
    throw std::invalid_argument("system config: sigma_eta >= 0 required");
  if (const auto* mix = std::get_if<ConditionalIidMixture>(&position_law)) {
    if (mix->components.empty() || mix->components.size() != mix->weights.size())
      throw std::invalid_argument("mixture law: components/weights mismatch");
    double s = 0.0;
    for (double w : mix->weights) {
      if (w < 0.0) throw std::invalid_argument("mixture law: negative weight");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("mixture law: weights must sum to 1");
  }
  if (const auto* em = std::get_if<EulerMaruyamaStep>(&position_law); em && em->sigma < 0.0)
    throw std::invalid_argument("euler-maruyama law: sigma >= 0 required");
}

double SystemConfig::noise_sigma() const {
  if (const auto* g = std::get_if<NoiseGaussian>(&noise)) return g->sigma_eta;
  if (const auto* u = std::get_if<NoiseCenteredUniform>(&noise))
    return u->half_range / std::sqrt(3.0);
  return 0.0;
}

void forward(const RadialKernel& phi, const double* X, int N, int d, double* out) {
  for (int i = 0; i < N * d; ++i) out[i] = 0.0;
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double t = X[i * d + k] - X[j * d + k];
        r2 += t * t;
      }
      const double r = std::sqrt(r2);
      if (r < 1e-12) continue;  // coincident pair: unit vector taken as 0
      const double w = kernel_on_distance(phi, r) / r;
      for (int k = 0; k < d; ++k) out[i * d + k] += w * (X[i * d + k] - X[j * d + k]);
    }
    for (int k = 0; k < d; ++k) out[i * d + k] /= N;
  }
}

std::vector<double> forward(const RadialKernel& phi, std::span<const double> X, int N, int d) {
  if (static_cast<int>(X.size()) != N * d) throw std::invalid_argument("forward: X size != N*d");
  std::vector<double> out(static_cast<std::size_t>(N) * d);
  forward(phi, X.data(), N, d, out.data());
  return out;
}

void sample_positions_one(const SystemConfig& config, std::int64_t m, double* x) {
  RngStream rng(config.seed, substream({kStreamPositions, static_cast<std::uint64_t>(m)}));
  const int nd = config.N * config.d;
  if (std::holds_alternative<IidUniform>(config.position_law)) {
    for (int i = 0; i < nd; ++i) x[i] = rng.uniform01();
    return;
  }
  if (const auto* mix = std::get_if<ConditionalIidMixture>(&config.position_law)) {
    const double u = rng.uniform01();
    std::size_t z = 0;
    double acc = 0.0;
    for (; z + 1 < mix->weights.size(); ++z) {
      acc += mix->weights[z];
      if (u < acc) break;
    }
    const UniformBox& box = mix->components[z];
    for (int i = 0; i < nd; ++i) x[i] = rng.uniform(box.lo, box.hi);
    return;
  }
  const auto& em = std::get<EulerMaruyamaStep>(config.position_law);
  std::vector<double> x0(static_cast<std::size_t>(nd)), drift(static_cast<std::size_t>(nd));
  for (int i = 0; i < nd; ++i) x0[static_cast<std::size_t>(i)] = rng.uniform01();
  forward(em.drift, x0.data(), config.N, config.d, drift.data());
  const double sdt = em.sigma * std::sqrt(em.dt);
  for (int i = 0; i < nd; ++i) {
    double xi = x0[static_cast<std::size_t>(i)] + drift[static_cast<std::size_t>(i)] * em.dt;
    if (sdt > 0.0) xi += sdt * rng.normal();
    x[i] = std::min(1.0, std::max(0.0, xi));
  }
}

Array3 sample_positions(const SystemConfig& config) {
  config.validate();
  Array3 X(config.M, config.N, config.d);
  parallel_for_index(config.M, [&](std::int64_t m) { sample_positions_one(config, m, X.sample(m)); });
  return X;
}

void sample_noise_one(const SystemConfig& config, std::int64_t m, double* eta) {
  const int nd = config.N * config.d;
  if (std::holds_alternative<NoiseNone>(config.noise)) {
    for (int i = 0; i < nd; ++i) eta[i] = 0.0;
    return;
  }
  RngStream rng(config.seed, substream({kStreamNoise, static_cast<std::uint64_t>(m)}));
  if (const auto* g = std::get_if<NoiseGaussian>(&config.noise)) {
    for (int i = 0; i < nd; ++i) eta[i] = g->sigma_eta * rng.normal();
    return;
  }
  const auto& u = std::get<NoiseCenteredUniform>(config.noise);
  for (int i = 0; i < nd; ++i) eta[i] = rng.uniform(-u.half_range, u.half_range);
}

namespace {

Dataset generate_impl(const SystemConfig& config, const RadialKernel& phi, bool parallel) {
  config.validate();
  Dataset data;
  data.config = config;
  data.truth_id = phi.to_record();
  data.X = Array3(config.M, config.N, config.d);
  data.Y = Array3(config.M, config.N, config.d);
  const int nd = config.N * config.d;
  parallel_for_index(
      config.M,
      [&](std::int64_t m) {
        double* x = data.X.sample(m);
        double* y = data.Y.sample(m);
        sample_positions_one(config, m, x);
        forward(phi, x, config.N, config.d, y);
        std::vector<double> eta(static_cast<std::size_t>(nd));
        sample_noise_one(config, m, eta.data());
        for (int i = 0; i < nd; ++i) y[i] += eta[static_cast<std::size_t>(i)];
      },
      parallel);
  return data;
}

}  // namespace

Dataset generate(const SystemConfig& config, const RadialKernel& phi) {
  return generate_impl(config, phi, true);
}

Dataset generate_serial(const SystemConfig& config, const RadialKernel& phi) {
  return generate_impl(config, phi, false);
}

}  // namespace ik
