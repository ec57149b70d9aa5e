// Numerical counterparts of the operator-level and probabilistic results:
// the analytic integral kernel for iid-uniform positions, the coercivity
// constant, eigenvalue left-tail bound formulas with their Monte Carlo
// frequencies, and the moment lemmas with exact enumeration oracles.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ik/basis.hpp"
#include "ik/estimator.hpp"
#include "ik/sim.hpp"

namespace ik {
namespace theory {

// (N-1)/N^2; the sharp coercivity constant for iid-uniform positions.
double coercivity_constant(int N);

// Integral kernel G(r,s) = Gtilde(r,s) / (rho'(r) rho'(s)) with
// Gtilde = [2-(|r-s|+|r+s|)] - [2-2|r+s|] 1_{r+s<=1}; iid-uniform d=1 law.
double analytic_G(double r, double s);
double analytic_G_tilde(double r, double s);

// int int G(r,s)^2 rho'(r) rho'(s) dr ds by tensor Gauss-Legendre with the
// given panel count per axis.
double hs_norm_G(int panels_per_axis = 128, int nodes_per_panel = 8);

struct OperatorDiscretization {
  Eigen::MatrixXd L_G;   // <L_G psi_k, psi_l>
  Eigen::MatrixXd Lbar;  // ((N-1)(N-2)/N^2) L_G + ((N-1)/N^2) I
  int n = 0;
  int N = 0;
  std::string basis_id;
};
// Galerkin matrices of the normal operator under the uniform-pair measure.
OperatorDiscretization discretized_normal_operator(const BasisFamily& basis, int N);

struct AsymptoticSystem {
  Eigen::MatrixXd A;  // <Lbar psi_k, psi_l>
  Eigen::VectorXd b;  // <Lbar psi_k, phi*>
  double lambda_min = 0.0;
  double extra_bias = 0.0;        // ||theta*_n - A^{-1} b||^2
  double extra_bias_bound = 0.0;  // c^{-2} sum_{l>n} theta*_l^2
};
// Large-sample normal system for the first n family members; verifies the
// extra-bias bound up to quadrature tolerance.
AsymptoticSystem asymptotic_normal_system(const BasisFamily& basis, int N,
                                          const RadialKernel& truth, int n,
                                          double quad_tol = 1e-6);

// | (1/N)||R_phi[X]||^2 - (1/N^3)(sum_i sum_{j!=i} phi(r_ij)^2
//   + sum_i sum_{j!=j', j,j'!=i} phi(r_ij) phi(r_ij') <rhat_ij, rhat_ij'>) |.
double per_sample_identity(const double* X, int N, int d, const RadialKernel& phi);

struct TailBoundParams {
  int n = 1;
  std::int64_t M = 1;
  double eps = 0.5;    // in (0,1)
  double c = 2.0 / 9;  // coercivity constant
  double C_max = 1.0;  // basis sup-norm bound
  double kappa = 1.0;  // fourth-moment ratio
  int N = 3;
  void validate() const;
};

struct TailBound {
  double raw = 0.0;      // formula value, may exceed 1
  double clamped = 0.0;  // min(raw, 1)
  bool vacuous = false;  // raw >= 1
};

// P{lambda_min <= (1-eps) c} <=
//   2n exp(-(M eps^2 c^2 / 4) / ((n C^2)^2 + n C^2 eps c / 3)).
TailBound bernstein_tail_bound(const TailBoundParams& p);

// P{lambda_min <= (1-eps) c / 2} <= exp(n log(5C^2/c) - eps^2 M c^2/(16 kappa N^2));
// valid for M >= pacbayes_min_M(p) and n >= 2, else throws.
TailBound pacbayes_tail_bound(const TailBoundParams& p);
double pacbayes_min_M(const TailBoundParams& p);

struct FrequencyResult {
  double frequency = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // Wilson 95%
  std::int64_t hits = 0;
  int reps = 0;
};
// Fraction of independent replicates with lambda_min(assembled A) <= threshold.
FrequencyResult empirical_tail_frequency(const SystemConfig& config, const BasisFamily& basis,
                                         int n, double threshold, int reps);

// kappa_hat = mean ||R_phi[X]||^4 / (mean ||R_phi[X]||^2)^2 over M_mc draws.
// The kernel must have unit norm in the weighted L2 of `rho` (checked to
// 1e-6); rho is the exploration measure of the configured position law.
double fourth_moment_ratio(const RadialKernel& phi, const SystemConfig& config, std::int64_t M_mc,
                           const DensityModel& rho, std::uint64_t stream = 0);

struct DiscreteAtom {
  std::vector<double> value;  // R^n
  double prob = 0.0;
};
struct MomentOracleResult {
  double exact = 0.0;  // E |mean_m (Z_m - EZ)|^4 by full enumeration
  double bound = 0.0;  // (6n/M^2) sum_k E|Z(k)-EZ(k)|^4
};
// Exact enumeration over atoms^M tuples; M <= 6 and <= 4 atoms.
MomentOracleResult empirical_mean_fourth_moment_oracle(const std::vector<DiscreteAtom>& atoms,
                                                       int M, int n);

struct MomentScalingRow {
  int n = 0;
  std::int64_t M = 0;
  double a_moment = 0.0;  // (E ||(A - Ainf) theta*_n||^4)^{1/2}
  double b_moment = 0.0;  // (E ||b - binf||^4)^{1/2}
  double a_ratio = 0.0;   // a_moment * M / n
  double b_ratio = 0.0;
};
// Monte Carlo fourth-moment scaling of the normal system over an (n, M)
// sweep; `reps` independent assemblies per cell.
std::vector<MomentScalingRow> normal_vector_moment_scaling(
    const SystemConfig& config, const BasisFamily& basis, const RadialKernel& truth,
    const std::vector<int>& n_list, const std::vector<std::int64_t>& M_list, int reps);

// Mean and standard error of each normal-operator entry over M samples;
// test support for the decomposition identity.
struct EntryStats {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd se;
};
EntryStats mc_operator_entry_stats(const SystemConfig& config, const BasisFamily& basis, int n);

struct LambdaMinStat {
  double lambda_min = 0.0;
  double se = 0.0;  // of the Rayleigh quotient in the minimizing direction
};
// Assembles A from config.M fresh samples, then estimates the standard
// error of v' A v along the minimizing eigenvector from the per-sample
// quadratic forms.
LambdaMinStat mc_lambda_min_stat(const SystemConfig& config, const BasisFamily& basis, int n,
                                 std::uint64_t replicate = 0);

struct WilsonInterval {
  double lo = 0.0, hi = 0.0;
};
WilsonInterval wilson95(std::int64_t hits, std::int64_t total);

}  // namespace theory
}  // namespace ik
