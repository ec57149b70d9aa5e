// Exploration measure: densities of the pairwise-distance law on [0,1],
// composite Gauss-Legendre quadrature, and the weighted L2 geometry.
#pragma once

#include <functional>
#include <string>
#include <vector>

namespace ik {

struct Dataset;  // sim.hpp

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
  bool contains(double r) const { return r >= lo && r <= hi; }
};

struct QuadratureGrid {
  std::vector<double> nodes;    // strictly increasing
  std::vector<double> weights;  // positive, sum to hi - lo
  Interval interval;
  int panels = 0;

  // Composite Gauss-Legendre rule: `panels` panels of `nodes_per_panel`
  // points each. Open nodes: panel endpoints are never sampled.
  static QuadratureGrid gauss_legendre(Interval iv, int panels = 64, int nodes_per_panel = 8);
  // Same rule but with panel boundaries forced at the given breakpoints.
  static QuadratureGrid gauss_legendre_split(Interval iv, const std::vector<double>& breaks,
                                             int panels_per_piece, int nodes_per_panel = 8);
  QuadratureGrid refined() const;  // doubled panel count
};

// Gauss-Legendre nodes/weights on [-1,1] for an arbitrary point count.
void gauss_legendre_rule(int n, std::vector<double>& nodes, std::vector<double>& weights);

class DensityModel {
 public:
  enum class Kind { AnalyticUniformPair, Tabulated, Empirical };

  // rho'(r) = 2(1-r) on [0,1]: pairwise-distance density of iid U[0,1].
  static DensityModel analytic_uniform_pair(double floor_a0 = 0.1);
  static DensityModel tabulated(std::vector<double> nodes, std::vector<double> values,
                                double floor_a0 = 0.1);
  // `sample` is sorted ascending; histogram density with
  // ceil(sqrt(sample size)) bins.
  static DensityModel empirical(std::vector<double> sample, double floor_a0 = 0.1);

  Kind kind() const { return kind_; }
  double floor() const { return floor_a0_; }

  // Density at r in [0,1]; throws std::domain_error outside.
  double density(double r) const;

  // Maximal interval where the density exceeds the floor.
  Interval support() const { return support_; }
  // All maximal runs where density > floor (the lower-bound construction
  // requires a single run).
  std::vector<Interval> high_density_runs() const { return runs_; }

  const std::vector<double>& sample() const { return sample_; }

  std::string id() const;

 private:
  DensityModel() = default;
  void compute_support();
  void validate_mass() const;

  Kind kind_ = Kind::AnalyticUniformPair;
  double floor_a0_ = 0.1;
  Interval support_{0.0, 1.0};
  std::vector<Interval> runs_;
  // tabulated
  std::vector<double> grid_nodes_, grid_values_;
  // empirical
  std::vector<double> sample_;
  std::vector<double> hist_density_;  // per bin
  double hist_lo_ = 0.0, hist_width_ = 0.0;
};

// All ordered pairwise distances |X_i - X_j|, i != j, across samples; sorted.
DensityModel empirical_measure(const Dataset& data, double floor_a0 = 0.1);

using ScalarFn = std::function<double(double)>;

// sum_q w_q f(x_q) g(x_q) rho'(x_q)
double l2rho_inner(const ScalarFn& f, const ScalarFn& g, const DensityModel& model,
                   const QuadratureGrid& grid);
double l2rho_norm2(const ScalarFn& f, const DensityModel& model, const QuadratureGrid& grid);

// Kolmogorov-Smirnov distance between the empirical CDF of a sorted sample
// and a reference CDF.
double ks_distance(const std::vector<double>& sorted_sample, const ScalarFn& cdf);

DensityModel load_tabulated_csv(const std::string& path, double floor_a0 = 0.1);
void save_sample_csv(const std::string& path, const std::vector<double>& sample);

}  // namespace ik
