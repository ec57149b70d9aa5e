// Regression normal system and the tamed least-squares estimator, plus the
// baseline estimators, the dimension rule, and the weighted L2 risk.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "ik/basis.hpp"
#include "ik/sim.hpp"

namespace ik {

struct NormalSystem {
  Eigen::MatrixXd A;  // n x n, symmetric PSD
  Eigen::VectorXd b;
  int n = 0;
  std::int64_t M = 0;
  int N = 0;
  double lambda_min = 0.0;
  std::string basis_id;
  std::uint64_t checksum = 0;  // FNV-1a over the raw bytes of A and b
};

// A(k,l) = (1/(MN)) sum_m <R_{psi_k}[X^m], R_{psi_l}[X^m]>,
// b(k)   = (1/(MN)) sum_m <R_{psi_k}[X^m], Y^m>, for the first n family
// members. Parallel over samples with a fixed-chunk pairwise-tree reduction,
// so the result is bit-identical for any thread count.
NormalSystem assemble(const Dataset& data, const BasisFamily& basis, int n);
// Serial reference walking the identical reduction plan.
NormalSystem assemble_serial(const Dataset& data, const BasisFamily& basis, int n);

// Gram part only, with positions drawn on the fly from (config, stream_tag,
// replicate); used by the tail-frequency experiments.
Eigen::MatrixXd assemble_gram_streaming(const SystemConfig& config, const BasisFamily& basis, int n,
                                        std::uint64_t stream_tag, std::uint64_t replicate);

// Minimum eigenvalue via symmetric eigendecomposition; input must be
// symmetric within 1e-10.
double smallest_eigenvalue(const Eigen::MatrixXd& A);

struct EstimateResult {
  Eigen::VectorXd theta;
  bool gated = false;  // gated => theta is exactly 0
  std::string kind;
  double lambda_min = 0.0;
  double solve_residual = 0.0;  // ||A theta - b||
  double hyperparameter = 0.0;  // threshold / rank_tol / lambda_reg / cut
};

// Returns 0 (gated) when lambda_min <= threshold; otherwise solves
// A theta = b by LDLT with one refinement step. An ungated solve whose
// residual exceeds 1e-8 ||b|| throws rather than gating silently.
EstimateResult tlse(const NormalSystem& system, double threshold);
// Default gating threshold c / 4 with c = (N-1)/N^2.
double default_tlse_threshold(int N);

// Moore-Penrose solve; singular values below rank_tol * sigma_max dropped.
EstimateResult lse(const NormalSystem& system, double rank_tol = 1e-10);
EstimateResult tikhonov(const NormalSystem& system, double lambda_reg);
EstimateResult tsvd(const NormalSystem& system, double cut);

// n = max(1, floor(gamma * M^{1/(2beta+1)})).
int choose_dimension(std::int64_t M, double beta, double gamma);

// Projection coefficients <phi, psi_k> for k < count via the family's
// quadrature grid; exact pass-through when phi is an expansion in the same
// family.
std::vector<double> project_coefficients(const RadialKernel& phi, const BasisFamily& basis,
                                         int count);

// ||theta_hat - theta*_{1:n}||^2 + sum_{k>n} theta*_k^2 with theta* the
// projection coefficients of the truth over the full family.
double l2rho_risk(const EstimateResult& result, const RadialKernel& truth,
                  const BasisFamily& basis);

}  // namespace ik
