// Hypothesis construction for the minimax lower bound: disjoint intervals in
// the high-density region, a Varshamov-Gilbert codebook, bump-sum hypothesis
// kernels with separation and KL-budget certificates, and the
// minimum-distance-test experiment.
#pragma once

#include <cstdint>
#include <vector>

#include "ik/basis.hpp"
#include "ik/estimator.hpp"
#include "ik/kernels.hpp"
#include "ik/measure.hpp"
#include "ik/sim.hpp"

namespace ik {
namespace lowerbound {

struct IntervalPack {
  std::vector<double> centers;
  double halfwidth = 0.0;  // h: intervals are (center - h, center + h)
  int Kbar = 0;
  double a0 = 0.0;
  Interval region;  // usable high-density region
};

// Kbar equidistant disjoint intervals of halfwidth h = |region| / (4 Kbar)
// packed from the left edge of {density > a0}. Throws when the region has
// multiple components or is too short, reporting the maximal feasible Kbar.
IntervalPack build_intervals(const DensityModel& model, int Kbar, double a0);

struct Codebook {
  std::vector<std::vector<std::uint8_t>> words;  // words[0] is the zero word
  int Kbar = 0;
  int K = 0;             // codewords excluding the zero word
  int min_distance = 0;  // verified pairwise Hamming minimum
};

// Randomized greedy retaining candidates at Hamming distance >= Kbar/8 from
// every retained word until K >= ceil(2^{Kbar/8}); requires Kbar >= 8.
Codebook varshamov_gilbert(int Kbar, std::uint64_t seed, std::int64_t max_tries = 1000000);

// Exhaustive pairwise re-verification; returns the minimum distance.
int verify_codebook(const Codebook& book);

struct HypothesisSet {
  std::vector<RadialKernel> kernels;  // index 0 is the zero hypothesis
  double beta = 1.0, L = 1.0;
  double amplitude_scale = 1.0;  // multiplies L h^beta
  double separation_s = 0.0;     // min pairwise weighted-L2 distance / 2
  double alpha_uniform = 0.0;    // dataset-free KL certificate / log K
  double c_eta = 0.0;            // N d / (2 sigma_eta^2) for Gaussian noise
  double sigma_eta = 0.0;
  IntervalPack pack;
  Codebook book;
  QuadratureGrid grid;  // bump-aligned grid for distances
};

// Hypotheses phi_k = sum_l w_l^{(k)} (scale L h^beta) bump((r - r_l)/h).
// Certifies separation numerically and the KL budget by the uniform bound
//   avg KL <= c_eta (scale L h^beta)^2 N M.
HypothesisSet build_hypotheses(const IntervalPack& pack, const Codebook& book, double beta,
                               double L, double amplitude_scale, double sigma_eta, int N, int d,
                               std::int64_t M, const DensityModel& model);

// Largest amplitude scale with alpha_uniform <= alpha_target, by binary
// search; the budget is exactly quadratic in the scale.
double auto_scale_amplitude(const IntervalPack& pack, const Codebook& book, double beta, double L,
                            double sigma_eta, int N, int d, std::int64_t M,
                            const DensityModel& model, double alpha_target = 1.0 / 9.0);

struct KlBudget {
  double average_kl = 0.0;  // avg over k of c_eta sum_m ||R_{phi_k}[X^m]||^2
  double alpha = 0.0;       // average_kl / log K
};
// Conditional (per-dataset) KL upper bound; requires K >= 2 and Gaussian noise.
KlBudget kl_budget(const HypothesisSet& set, const Array3& X);

// Weighted-L2 distance between two kernels over [0,1] on the given grid.
double l2rho_distance(const RadialKernel& f, const RadialKernel& g, const DensityModel& model,
                      const QuadratureGrid& grid);

// argmin_k ||estimate - phi_k||; ties broken by smallest index.
int min_distance_test(const RadialKernel& estimate, const HypothesisSet& set,
                      const DensityModel& model);

struct EstimatorSpec {
  std::string kind = "tlse";  // tlse | lse | tikhonov | tsvd
  double threshold = 0.0;     // 0 = default c/4
  double rank_tol = 1e-10;
  double lambda_reg = 1e-6;
  double cut = 1e-10;
};

struct FanoReplica {
  int truth_k = 0;
  int chosen_k = 0;
  bool error = false;
};

struct FanoResult {
  double p_err = 0.0;
  double fano_floor = 0.0;  // (log(K+1) - log 2)/log K - alpha
  double binom_se = 0.0;
  std::int64_t errors = 0;
  int reps = 0;
  std::vector<FanoReplica> replicas;
};

// Per replicate: draw k uniformly over {0..K}, generate data under phi_k,
// estimate on the given basis, classify by minimum distance.
FanoResult fano_experiment(const HypothesisSet& set, const SystemConfig& config,
                           const EstimatorSpec& est, const BasisFamily& est_basis, int est_n,
                           int reps);

}  // namespace lowerbound
}  // namespace ik
