// Radial interaction kernels: closed forms, basis expansions, piecewise
// constants, and bump sums, plus Sobolev-class membership checks.
#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ik/basis.hpp"

namespace ik {

// e * exp(-1/(1-(2u)^2)) for |u| < 1/2, else 0; peak value 1 at u = 0.
double bump(double u);

struct BumpTerm {
  double center = 0.0;
  double halfwidth = 0.0;
  double amplitude = 0.0;
};

class RadialKernel {
 public:
  enum class Variant { Zero, Power, Indicator, GaussianBump, BasisExpansion, PiecewiseConstant, BumpSum };

  static RadialKernel zero();
  static RadialKernel power(double p);
  static RadialKernel indicator(double a, double b, double amplitude);
  static RadialKernel gaussian_bump(double center, double width, double amplitude);
  static RadialKernel basis_expansion(std::vector<double> theta,
                                      std::shared_ptr<const BasisFamily> basis);
  static RadialKernel piecewise_constant(std::vector<double> breakpoints,
                                         std::vector<double> values);
  static RadialKernel bump_sum(std::vector<BumpTerm> terms);

  // r in [0,1]; throws std::domain_error outside.
  double operator()(double r) const;

  Variant variant() const { return variant_; }
  const std::vector<double>& coefficients() const { return theta_; }
  std::shared_ptr<const BasisFamily> basis() const { return basis_; }
  const std::vector<BumpTerm>& bump_terms() const { return terms_; }

  // Potential discontinuity locations in (0,1); quadrature against this
  // kernel should split panels there.
  std::vector<double> breakpoints() const;

  // Compact one-line record (variant tag + parameters) for configs.
  std::string to_record() const;
  // Parses everything except basis expansions (those need a family).
  static RadialKernel parse_record(const std::string& record);

 private:
  RadialKernel() = default;
  Variant variant_ = Variant::Zero;
  double p0_ = 0.0, p1_ = 0.0, p2_ = 0.0;
  std::vector<double> theta_;
  std::shared_ptr<const BasisFamily> basis_;
  std::vector<double> breaks_, values_;
  std::vector<BumpTerm> terms_;
};

struct SobolevSpec {
  double beta = 1.0;  // smoothness exponent, > 0
  double L = 1.0;     // ellipsoid radius, > 0
};

struct EllipsoidCheck {
  bool member = false;
  double sum = 0.0;  // sum_k k^{2 beta} theta_k^2 (k 1-based)
};
EllipsoidCheck ellipsoid_check(std::span<const double> theta, const SobolevSpec& spec);

struct SobolevTail {
  double tail = 0.0;   // sum_{k > n} theta_k^2
  double bound = 0.0;  // L n^{-2 beta}
};
// Requires ellipsoid membership and n >= 1; verifies tail <= bound.
SobolevTail sobolev_tail(std::span<const double> theta, int n, const SobolevSpec& spec);

// theta_k = k^{-decay}, k = 1..count.
std::vector<double> power_decay_coefficients(double decay, int count);

}  // namespace ik
