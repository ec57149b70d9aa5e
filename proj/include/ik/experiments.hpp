// Experiment runners: seeded parallel sweeps, result tables, slope fitting,
// and SVG plot emission.
#pragma once

#include <string>
#include <vector>

#include "ik/config.hpp"
#include "ik/lowerbound.hpp"
#include "ik/theory.hpp"

namespace ik {

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
// OLS on (log x, log y); requires >= 3 points, all positive.
LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

struct RatePoint {
  std::int64_t M = 0;
  int n = 0;
  double mean_risk = 0.0;
  double se = 0.0;
  int replicates = 0;
  int failed = 0;
  int gated = 0;
};

struct RateFitResult {
  std::vector<RatePoint> points;
  LogLogFit fit;
  double reference_slope = 0.0;  // -2 beta / (2 beta + 1)
  bool fit_skipped = false;
  std::string note;
};
RateFitResult run_rate_sweep(const ExperimentConfig& cfg);

struct TailRow {
  int n = 0;
  std::int64_t M = 0;
  double eps = 0.0;
  double threshold = 0.0;
  double frequency = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;
  double bernstein_raw = 0.0;
  double pacbayes_raw = 0.0;  // NaN when the validity condition fails
  bool bernstein_vacuous = false;
  bool pacbayes_vacuous = false;
};
struct TailSweepResult {
  std::vector<TailRow> rows;
  double kappa_used = 0.0;
  double c = 0.0;
};
TailSweepResult run_tail_sweep(const ExperimentConfig& cfg);

struct CoercivityReport {
  std::vector<std::pair<int, double>> lambda_min_by_n;  // discretized normal operator
  double target = 0.0;                                  // (N-1)/N^2
  double hs_norm = 0.0;
  double max_identity_residual = 0.0;
  double mc_lambda_min = 0.0;  // assembled at (config.M, est_n)
  double mc_lambda_se = 0.0;
};
CoercivityReport run_coercivity(const ExperimentConfig& cfg);

struct LowerboundSetReport {
  int Kbar = 0;
  int K = 0;
  int min_hamming = 0;
  double halfwidth = 0.0;
  double separation_s = 0.0;
  double alpha_uniform = 0.0;
  double alpha_empirical = 0.0;
  double amplitude_scale = 0.0;
  double p_err = 0.0;
  double fano_floor = 0.0;
  double binom_se = 0.0;
  bool certified = false;
  std::string failure;  // named failing condition, when not certified
};
struct LowerboundReport {
  std::vector<LowerboundSetReport> sets;
};
LowerboundReport run_lowerbound(const ExperimentConfig& cfg);

struct IdentityReport {
  double max_identity_residual = 0.0;
  double max_momentum_residual = 0.0;
  double max_linearity_residual = 0.0;
  double max_exchange_residual = 0.0;
  int cases = 0;
};
IdentityReport run_identity_suite(const ExperimentConfig& cfg, int cases = 1000);

void run_simulate(const ExperimentConfig& cfg);
void run_estimate(const ExperimentConfig& cfg);

// Dispatches on cfg.kind, writes tables/plots/summaries under cfg.out_dir,
// prints a short report; returns a process exit code.
int run_experiment(const ExperimentConfig& cfg);

// Log-log scatter with fitted line and a dashed reference-slope guide.
void write_loglog_svg(const std::string& path, const std::vector<RatePoint>& points,
                      const LogLogFit& fit, double reference_slope, const std::string& title);

}  // namespace ik
