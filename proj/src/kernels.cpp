#include "ik/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace ik {

double bump(double u) {
  const double t = 1.0 - 4.0 * u * u;
  // Underflow guard near the support edge; matches the limit.
  if (t < 1e-12) return 0.0;
  return std::exp(1.0 - 1.0 / t);
}

RadialKernel RadialKernel::zero() { return RadialKernel{}; }

RadialKernel RadialKernel::power(double p) {
  RadialKernel k;
  k.variant_ = Variant::Power;
  k.p0_ = p;
  return k;
}

RadialKernel RadialKernel::indicator(double a, double b, double amplitude) {
  if (!(a <= b)) throw std::invalid_argument("indicator kernel: a <= b required");
  RadialKernel k;
  k.variant_ = Variant::Indicator;
  k.p0_ = a;
  k.p1_ = b;
  k.p2_ = amplitude;
  return k;
}

RadialKernel RadialKernel::gaussian_bump(double center, double width, double amplitude) {
  if (!(width > 0.0)) throw std::invalid_argument("gaussian kernel: width > 0 required");
  RadialKernel k;
  k.variant_ = Variant::GaussianBump;
  k.p0_ = center;
  k.p1_ = width;
  k.p2_ = amplitude;
  return k;
}

RadialKernel RadialKernel::basis_expansion(std::vector<double> theta,
                                           std::shared_ptr<const BasisFamily> basis) {
  if (!basis) throw std::runtime_error("basis expansion: unknown basis");
  if (static_cast<int>(theta.size()) > basis->size())
    throw std::runtime_error("basis expansion: more coefficients than basis functions");
  RadialKernel k;
  k.variant_ = Variant::BasisExpansion;
  k.theta_ = std::move(theta);
  k.basis_ = std::move(basis);
  return k;
}

RadialKernel RadialKernel::piecewise_constant(std::vector<double> breakpoints,
                                              std::vector<double> values) {
  if (breakpoints.size() != values.size() + 1 || values.empty())
    throw std::invalid_argument("piecewise kernel: need k+1 breakpoints for k values");
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!(breakpoints[i] < breakpoints[i + 1]))
      throw std::invalid_argument("piecewise kernel: breakpoints must strictly increase");
  if (breakpoints.front() < 0.0 || breakpoints.back() > 1.0)
    throw std::invalid_argument("piecewise kernel: breakpoints must lie in [0,1]");
  RadialKernel k;
  k.variant_ = Variant::PiecewiseConstant;
  k.breaks_ = std::move(breakpoints);
  k.values_ = std::move(values);
  return k;
}

RadialKernel RadialKernel::bump_sum(std::vector<BumpTerm> terms) {
  RadialKernel k;
  k.variant_ = Variant::BumpSum;
  k.terms_ = std::move(terms);
  return k;
}

double RadialKernel::operator()(double r) const {
  if (r < 0.0 || r > 1.0) throw std::domain_error("kernel eval: r outside [0,1]");
  switch (variant_) {
    case Variant::Zero:
      return 0.0;
    case Variant::Power:
      return std::pow(r, p0_);
    case Variant::Indicator:
      return (r >= p0_ && r <= p1_) ? p2_ : 0.0;
    case Variant::GaussianBump: {
      const double t = (r - p0_) / p1_;
      return p2_ * std::exp(-0.5 * t * t);
    }
    case Variant::BasisExpansion:
      return basis_->expansion_eval(theta_, r);
    case Variant::PiecewiseConstant: {
      if (r < breaks_.front() || r > breaks_.back()) return 0.0;
      auto it = std::upper_bound(breaks_.begin(), breaks_.end(), r);
      std::size_t j = static_cast<std::size_t>(it - breaks_.begin());
      if (j == 0) return 0.0;
      if (j >= breaks_.size()) j = breaks_.size() - 1;
      return values_[j - 1];
    }
    case Variant::BumpSum: {
      double s = 0.0;
      for (const auto& t : terms_)
        if (std::abs(r - t.center) < 0.5 * t.halfwidth)
          s += t.amplitude * bump((r - t.center) / t.halfwidth);
      return s;
    }
  }
  return 0.0;
}

std::vector<double> RadialKernel::breakpoints() const {
  switch (variant_) {
    case Variant::Indicator:
      return {p0_, p1_};
    case Variant::PiecewiseConstant:
      return breaks_;
    case Variant::BasisExpansion:
      return {basis_->interval().lo, basis_->interval().hi};
    default:
      return {};
  }
}

std::string RadialKernel::to_record() const {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  switch (variant_) {
    case Variant::Zero:
      return "zero";
    case Variant::Power:
      return "power p=" + num(p0_);
    case Variant::Indicator:
      return "indicator a=" + num(p0_) + " b=" + num(p1_) + " amp=" + num(p2_);
    case Variant::GaussianBump:
      return "gauss center=" + num(p0_) + " width=" + num(p1_) + " amp=" + num(p2_);
    case Variant::BasisExpansion: {
      std::string s = "expansion basis=" + basis_->id() + " theta=";
      for (std::size_t i = 0; i < theta_.size(); ++i) s += (i ? "," : "") + num(theta_[i]);
      return s;
    }
    case Variant::PiecewiseConstant: {
      std::string s = "pcw breaks=";
      for (std::size_t i = 0; i < breaks_.size(); ++i) s += (i ? "," : "") + num(breaks_[i]);
      s += " values=";
      for (std::size_t i = 0; i < values_.size(); ++i) s += (i ? "," : "") + num(values_[i]);
      return s;
    }
    case Variant::BumpSum: {
      std::string s = "bumps terms=";
      for (std::size_t i = 0; i < terms_.size(); ++i)
        s += (i ? ";" : "") + num(terms_[i].center) + ":" + num(terms_[i].halfwidth) + ":" +
             num(terms_[i].amplitude);
      return s;
    }
  }
  return "zero";
}

namespace {

std::vector<double> parse_list(const std::string& s, char sep) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

double get_param(const std::string& record, const std::string& key) {
  const auto pos = record.find(key + "=");
  if (pos == std::string::npos)
    throw std::runtime_error("kernel record missing parameter '" + key + "': " + record);
  return std::stod(record.substr(pos + key.size() + 1));
}

std::string get_str_param(const std::string& record, const std::string& key) {
  const auto pos = record.find(key + "=");
  if (pos == std::string::npos)
    throw std::runtime_error("kernel record missing parameter '" + key + "': " + record);
  const auto start = pos + key.size() + 1;
  const auto end = record.find(' ', start);
  return record.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

RadialKernel RadialKernel::parse_record(const std::string& record) {
  std::istringstream ss(record);
  std::string tag;
  ss >> tag;
  if (tag == "zero") return zero();
  if (tag == "power") return power(get_param(record, "p"));
  if (tag == "indicator")
    return indicator(get_param(record, "a"), get_param(record, "b"), get_param(record, "amp"));
  if (tag == "gauss")
    return gaussian_bump(get_param(record, "center"), get_param(record, "width"),
                         get_param(record, "amp"));
  if (tag == "pcw")
    return piecewise_constant(parse_list(get_str_param(record, "breaks"), ','),
                              parse_list(get_str_param(record, "values"), ','));
  if (tag == "bumps") {
    std::vector<BumpTerm> terms;
    std::stringstream ts(get_str_param(record, "terms"));
    std::string t;
    while (std::getline(ts, t, ';')) {
      const auto v = parse_list(t, ':');
      if (v.size() != 3) throw std::runtime_error("bad bump term: " + t);
      terms.push_back({v[0], v[1], v[2]});
    }
    return bump_sum(std::move(terms));
  }
  throw std::runtime_error("unknown kernel record: " + record);
}

EllipsoidCheck ellipsoid_check(std::span<const double> theta, const SobolevSpec& spec) {
  if (!(spec.beta > 0.0) || !(spec.L > 0.0))
    throw std::invalid_argument("sobolev spec: beta > 0 and L > 0 required");
  double sum = 0.0;
  for (std::size_t k = 0; k < theta.size(); ++k)
    sum += std::pow(double(k + 1), 2.0 * spec.beta) * theta[k] * theta[k];
  return {sum <= spec.L, sum};
}

SobolevTail sobolev_tail(std::span<const double> theta, int n, const SobolevSpec& spec) {
  if (n < 1) throw std::invalid_argument("sobolev_tail: n >= 1 required");
  const auto chk = ellipsoid_check(theta, spec);
  if (!chk.member)
    throw std::invalid_argument("sobolev_tail: coefficients outside the ellipsoid (sum " +
                                std::to_string(chk.sum) + ")");
  SobolevTail out;
  for (std::size_t k = static_cast<std::size_t>(n); k < theta.size(); ++k)
    out.tail += theta[k] * theta[k];
  out.bound = spec.L * std::pow(double(n), -2.0 * spec.beta);
  if (out.tail > out.bound + 1e-15)
    throw std::logic_error("sobolev_tail: tail exceeds the coefficient-decay bound");
  return out;
}

std::vector<double> power_decay_coefficients(double decay, int count) {
  std::vector<double> theta(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) theta[static_cast<std::size_t>(k)] = std::pow(double(k + 1), -decay);
  return theta;
}

}  // namespace ik
