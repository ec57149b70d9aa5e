// Orthonormal basis families of the weighted L2 space on the learning
// interval, with recorded sup-norm bounds and orthonormality residuals.
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ik/measure.hpp"

namespace ik {

class BasisFamily {
 public:
  enum class Kind { WeightedTrig, GramSchmidtPoly, NormalizedHaar, Custom };

  int size() const { return n_; }
  Kind kind() const { return kind_; }
  Interval interval() const { return interval_; }
  const DensityModel& measure() const { return *measure_; }
  std::shared_ptr<const DensityModel> measure_ptr() const { return measure_; }
  // Quadrature grid the family was validated on (cell-aligned for Haar).
  const QuadratureGrid& grid() const { return grid_; }

  // Grid supremum of |psi_k| over k < n and >= 4096 nodes.
  double cmax() const { return cmax_; }
  double cmax_first(int n) const;
  // max_{j,k} |<psi_j, psi_k> - delta_jk| over the validation grid.
  double orthonormality_residual() const { return ortho_residual_; }

  std::string id() const { return id_; }

  // k is 0-based; r outside the interval evaluates to 0.
  double eval(int k, double r) const;
  // Fills out[0..n) with psi_0(r)..psi_{n-1}(r); n <= size().
  void eval_first(double r, int n, std::span<double> out) const;
  // sum_k theta[k] psi_k(r); exploits sparsity where the family has it.
  double expansion_eval(std::span<const double> theta, double r) const;

  friend BasisFamily weighted_trig(int n, const DensityModel& model, Interval iv, int panels,
                                   int nodes_per_panel);
  friend BasisFamily poly_basis(int n, const DensityModel& model, Interval iv, int panels,
                                int nodes_per_panel);
  friend BasisFamily haar_basis(int n, const DensityModel& model, Interval iv,
                                int nodes_per_cell);
  friend BasisFamily indicator_partition_basis(const std::vector<double>& breakpoints,
                                               const DensityModel& model, int nodes_per_cell);
  friend BasisFamily gram_schmidt_basis(const std::vector<ScalarFn>& seeds,
                                        const DensityModel& model, const QuadratureGrid& grid,
                                        BasisFamily::Kind kind);

 private:
  BasisFamily() = default;
  enum class Rep { Trig, PolyRec, HaarTree, Partition, SeedGS };
  void finalize(const std::string& id);  // cmax + residual

  Rep rep_ = Rep::SeedGS;
  Kind kind_ = Kind::Custom;
  int n_ = 0;
  Interval interval_{0.0, 1.0};
  std::shared_ptr<const DensityModel> measure_;
  QuadratureGrid grid_;
  double cmax_ = 0.0;
  std::vector<double> cmax_prefix_;
  double ortho_residual_ = 0.0;
  std::string id_;

  // Trig: per-mode normalization.
  std::vector<double> trig_norm_;
  // PolyRec: orthonormal-polynomial recurrence
  //   p_{k+1}(x) = ((x - a_k) p_k(x) - b_k p_{k-1}(x)) / b_{k+1}.
  std::vector<double> rec_a_, rec_b_;
  // HaarTree: heap-ordered cells; function k>=1 is the wavelet on cell k-1.
  std::vector<double> haar_alpha_, haar_beta_;
  double haar_c0_ = 1.0;
  // Partition: normalized indicators of consecutive cells.
  std::vector<double> part_breaks_, part_values_;
  // SeedGS: psi_k = sum_j coef_[k][j] seed_j.
  std::vector<ScalarFn> seeds_;
  std::vector<std::vector<double>> coef_;
};

// psi_k(x) = sqrt(2/len) sin((k+1) pi (x-lo)/len) / sqrt(rho'(x)), unit
// normalized. Requires the density to stay above the model floor on the
// interval; otherwise throws (the family would be unbounded).
BasisFamily weighted_trig(int n, const DensityModel& model, Interval iv, int panels = 64,
                          int nodes_per_panel = 8);

// Orthonormal polynomials under the weighted inner product, generated by the
// Stieltjes three-term recurrence. Identical family to Gram-Schmidt over
// monomial seeds, stable to large n.
BasisFamily poly_basis(int n, const DensityModel& model, Interval iv, int panels = 64,
                       int nodes_per_panel = 8);

// Weighted Haar system: normalized constant plus one two-valued wavelet per
// dyadic cell in breadth-first order. Piecewise constant and nested.
BasisFamily haar_basis(int n, const DensityModel& model, Interval iv, int nodes_per_cell = 16);

// Normalized indicators 1_[a,b) / sqrt(rho([a,b))) of consecutive cells.
BasisFamily indicator_partition_basis(const std::vector<double>& breakpoints,
                                      const DensityModel& model, int nodes_per_cell = 32);

// Modified Gram-Schmidt (with reorthogonalization) of arbitrary seed
// functions under the weighted inner product on the given grid. Throws a
// dependent-seeds error when a residual norm falls below 1e-10.
BasisFamily gram_schmidt_basis(const std::vector<ScalarFn>& seeds, const DensityModel& model,
                               const QuadratureGrid& grid,
                               BasisFamily::Kind kind = BasisFamily::Kind::Custom);

inline double cmax(const BasisFamily& b) { return b.cmax(); }

}  // namespace ik
