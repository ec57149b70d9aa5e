#include <cmath>
#include <functional>

#include "doctest.h"
#include "ik/rng.hpp"
#include "ik/theory.hpp"

using namespace ik;
namespace th = ik::theory;

TEST_CASE("coercivity constant") {
  CHECK(th::coercivity_constant(3) == doctest::Approx(2.0 / 9).epsilon(1e-15));
  CHECK(th::coercivity_constant(4) == doctest::Approx(3.0 / 16).epsilon(1e-15));
  CHECK(th::coercivity_constant(10) == doctest::Approx(0.09).epsilon(1e-15));
  CHECK_THROWS_AS(th::coercivity_constant(2), std::domain_error);
}

TEST_CASE("analytic G kernel values and symmetry") {
  CHECK(th::analytic_G(0.2, 0.3) == doctest::Approx(0.17857142857142858).epsilon(1e-13));
  CHECK(th::analytic_G(0.6, 0.7) == doctest::Approx(1.25).epsilon(1e-13));
  RngStream rng(2, 0);
  for (int i = 0; i < 200; ++i) {
    const double r = rng.uniform(0.01, 0.99), s = rng.uniform(0.01, 0.99);
    CHECK(th::analytic_G(r, s) == doctest::Approx(th::analytic_G(s, r)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(th::analytic_G(1.0 - 1e-14, 0.5), std::domain_error);
  CHECK_THROWS_AS(th::analytic_G(0.0, 0.5), std::domain_error);
}

TEST_CASE("Hilbert-Schmidt norm of G stays below one half") {
  // The paper's bound chain stops at 1/2; the integral itself evaluates to
  // ~0.2586 (cross-checked with an independent quadrature).
  const double v = th::hs_norm_G(128, 8);
  CHECK(v <= 0.5 + 1e-3);
  CHECK(v == doctest::Approx(0.258640).epsilon(1e-3));
  const double v2 = th::hs_norm_G(256, 8);
  CHECK(std::abs(v - v2) <= 1e-4);
  // integrand spot value at r = s = 1/4
  const double g = th::analytic_G(0.25, 0.25);
  CHECK(g * g * 1.5 * 1.5 == doctest::Approx(0.25 / 2.25).epsilon(1e-12));
}

TEST_CASE("discretized normal operator is coercive at the sharp constant") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(12, m, {0.0, 0.95}, 128, 8);
  const th::OperatorDiscretization disc = th::discretized_normal_operator(fam, 3);
  const double lmin_LG = smallest_eigenvalue(disc.L_G);
  CHECK(lmin_LG >= -1e-8);  // L_G is a positive operator
  const double lmin = smallest_eigenvalue(disc.Lbar);
  CHECK(lmin >= 2.0 / 9 - 1e-3);
  CHECK(lmin <= 2.0 / 9 + 0.05);
  // operator norm of Lbar is at most 1
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(disc.Lbar, Eigen::EigenvaluesOnly);
  CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-3);
}

TEST_CASE("asymptotic system recovers truths inside the span") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const auto fam = std::make_shared<const BasisFamily>(poly_basis(8, m, {0.0, 0.95}, 128, 8));
  std::vector<double> star = {0.5, -0.25, 0.125, 0.0625};
  const RadialKernel truth = RadialKernel::basis_expansion(star, fam);
  const th::AsymptoticSystem sys = th::asymptotic_normal_system(*fam, 3, truth, 4);
  CHECK(sys.extra_bias <= 1e-6);  // zero tail, solve equals theta*
  CHECK(sys.lambda_min >= 2.0 / 9 - 1e-3);
}

TEST_CASE("asymptotic system matches a Monte Carlo assembly within 5 SE") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(4, m, {0.0, 0.95}, 128, 8);
  const th::OperatorDiscretization disc = th::discretized_normal_operator(fam, 3);
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.M = 100000;
  cfg.seed = 77;
  const th::EntryStats stats = th::mc_operator_entry_stats(cfg, fam, 4);
  for (int k = 0; k < 4; ++k)
    for (int l = 0; l < 4; ++l) {
      const double se = std::max(stats.se(k, l), 1e-12);
      CHECK(std::abs(stats.mean(k, l) - disc.Lbar(k, l)) <= 5.0 * se);
    }
}

TEST_CASE("operator decomposition identity against independent Monte Carlo") {
  // <Lbar psi_k, psi_l> = ((N-1)/N^2) delta_kl
  //   + ((N-1)(N-2)/N^2) E[psi_k(r12) psi_l(r13) <rhat12, rhat13>]
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(3, m, {0.0, 0.95}, 128, 8);
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.M = 60000;
  cfg.seed = 5150;
  const th::EntryStats full = th::mc_operator_entry_stats(cfg, fam, 3);

  RngStream rng(909, 0);
  const int Mmc = 200000;
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      double sum = 0.0, sum2 = 0.0;
      for (int t = 0; t < Mmc; ++t) {
        const double x1 = rng.uniform01(), x2 = rng.uniform01(), x3 = rng.uniform01();
        const double r12 = std::abs(x1 - x2), r13 = std::abs(x1 - x3);
        if (r12 < 1e-12 || r13 < 1e-12) continue;
        const double dot = ((x1 - x2) / r12) * ((x1 - x3) / r13);
        const double v = fam.eval(k, r12) * fam.eval(l, r13) * dot;
        sum += v;
        sum2 += v * v;
      }
      const double lg = sum / Mmc;
      const double se_lg = std::sqrt(std::max(0.0, sum2 / Mmc - lg * lg) / Mmc);
      const double rhs = (2.0 / 9) * (k == l ? 1.0 : 0.0) + (2.0 / 9) * lg;
      const double se = 5.0 * (se_lg * (2.0 / 9) + full.se(k, l));
      CHECK(std::abs(full.mean(k, l) - rhs) <= se);
    }
}

TEST_CASE("per-sample identity: hand example and random sweep") {
  const std::vector<double> X = {0.0, 0.5, 1.0};
  const RadialKernel phi = RadialKernel::power(1.0);
  CHECK(th::per_sample_identity(X.data(), 3, 1, phi) <= 1e-15);
  const auto R = forward(phi, X, 3, 1);
  double lhs = 0.0;
  for (double v : R) lhs += v * v;
  CHECK(lhs / 3.0 == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(th::per_sample_identity(X.data(), 3, 1, RadialKernel::zero()) == 0.0);

  RngStream rng(31, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    const int N = 3 + static_cast<int>(rng.below(3));
    const int d = 1 + static_cast<int>(rng.below(3));
    std::vector<double> Xr(static_cast<std::size_t>(N) * d);
    for (double& x : Xr) x = rng.uniform01();
    worst = std::max(worst, th::per_sample_identity(Xr.data(), N, d,
                                                    RadialKernel::gaussian_bump(0.4, 0.2, 1.3)));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("bernstein tail bound: frozen value and monotonicity") {
  th::TailBoundParams p;
  p.n = 4;
  p.C_max = 2.0;
  p.c = 2.0 / 9;
  p.eps = 0.75;
  p.N = 3;
  p.M = 1000000;
  const th::TailBound b = th::bernstein_tail_bound(p);
  CHECK(b.raw == doctest::Approx(1.45499955138362e-11).epsilon(1e-10));
  CHECK_FALSE(b.vacuous);

  p.M = 0;
  CHECK(th::bernstein_tail_bound(p).raw == doctest::Approx(8.0).epsilon(1e-14));  // 2n

  double prev = std::numeric_limits<double>::infinity();
  for (std::int64_t M : {100, 1000, 10000, 100000, 1000000}) {
    p.M = M;
    const double raw = th::bernstein_tail_bound(p).raw;
    CHECK(raw < prev);
    prev = raw;
  }
  // increasing in n (raw value)
  p.M = 10000;
  double prev_n = 0.0;
  for (int n : {2, 4, 8, 16}) {
    p.n = n;
    const double raw = th::bernstein_tail_bound(p).raw;
    CHECK(raw > prev_n);
    prev_n = raw;
  }
}

TEST_CASE("pacbayes tail bound: frozen value, validity, and linear log decay") {
  th::TailBoundParams p;
  p.n = 4;
  p.C_max = 2.0;
  p.c = 2.0 / 9;
  p.kappa = 50.0;
  p.N = 3;
  p.eps = 0.5;
  p.M = 20000000;
  CHECK(th::pacbayes_min_M(p) == doctest::Approx(10497155.999).epsilon(1e-6));
  const th::TailBound b = th::pacbayes_tail_bound(p);
  CHECK(b.raw == doctest::Approx(8.38434782268143e-8).epsilon(1e-10));

  // log-bound decreases linearly in M
  th::TailBoundParams p2 = p;
  p2.M = 2 * p.M;
  const double l1 = std::log(th::pacbayes_tail_bound(p).raw);
  const double l2 = std::log(th::pacbayes_tail_bound(p2).raw);
  const double slope = (l2 - l1) / double(p.M);
  CHECK(slope == doctest::Approx(-p.eps * p.eps * p.c * p.c / (16 * p.kappa * p.N * p.N)).epsilon(1e-9));

  // raw value increases in n
  double prev_raw = 0.0;
  for (int n : {2, 4, 6}) {
    p.n = n;
    const double raw = th::pacbayes_tail_bound(p).raw;
    CHECK(raw > prev_raw);
    prev_raw = raw;
  }

  p.n = 4;
  p.M = 1000;  // below validity
  CHECK_THROWS_WITH_AS(th::pacbayes_tail_bound(p), doctest::Contains("need M >="),
                       std::invalid_argument);
  p.M = 20000000;
  p.n = 1;
  CHECK_THROWS(th::pacbayes_tail_bound(p));
}

TEST_CASE("wilson interval is sane") {
  const th::WilsonInterval w = th::wilson95(0, 500);
  CHECK(w.lo == 0.0);
  CHECK(w.hi > 0.0);
  CHECK(w.hi < 0.01);
  const th::WilsonInterval mid = th::wilson95(250, 500);
  CHECK(mid.lo < 0.5);
  CHECK(mid.hi > 0.5);
}

TEST_CASE("tail frequency is zero far below the bulk") {
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.M = 500;
  cfg.seed = 404;
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(2, m, {0.0, 0.95});
  const th::FrequencyResult f = th::empirical_tail_frequency(cfg, fam, 2, 0.0, 100);
  CHECK(f.frequency == 0.0);
  CHECK_THROWS(th::empirical_tail_frequency(cfg, fam, 2, 0.0, 50));
}

TEST_CASE("fourth-moment ratio of the singular-construction indicator") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const RadialKernel phi = RadialKernel::indicator(0.5, 1.0, 2.0);
  // closed form: int |phi|^4 rho = 16 * rho([1/2,1]) = 4
  const QuadratureGrid g = QuadratureGrid::gauss_legendre({0.0, 1.0}, 64, 8);
  const double l4 = l2rho_inner([&](double r) { return phi(r) * phi(r); },
                                [&](double r) { return phi(r) * phi(r); }, m, g);
  CHECK(l4 == doctest::Approx(4.0).epsilon(1e-10));

  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.seed = 11;
  const double k1 = th::fourth_moment_ratio(phi, cfg, 100000, m, 1);
  const double k2 = th::fourth_moment_ratio(phi, cfg, 100000, m, 2);
  CHECK(k1 >= 1.0);  // Jensen
  CHECK(std::abs(k1 - k2) / k1 <= 0.10);
  CHECK_THROWS(th::fourth_moment_ratio(RadialKernel::power(1.0), cfg, 1000, m));
}

namespace {

// Independent enumeration of E|mean(Z - EZ)|^4 by recursion over samples.
double recursive_fourth_moment(const std::vector<th::DiscreteAtom>& atoms, int M) {
  const int n = static_cast<int>(atoms[0].value.size());
  std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
  for (const auto& a : atoms)
    for (int k = 0; k < n; ++k) mean[static_cast<std::size_t>(k)] += a.prob * a.value[static_cast<std::size_t>(k)];
  double total = 0.0;
  std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
  std::function<void(int, double)> rec = [&](int depth, double p) {
    if (depth == M) {
      double norm2 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double t = acc[static_cast<std::size_t>(k)] / M;
        norm2 += t * t;
      }
      total += p * norm2 * norm2;
      return;
    }
    for (const auto& a : atoms) {
      for (int k = 0; k < n; ++k) acc[static_cast<std::size_t>(k)] += a.value[static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)];
      rec(depth + 1, p * a.prob);
      for (int k = 0; k < n; ++k) acc[static_cast<std::size_t>(k)] -= a.value[static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)];
    }
  };
  rec(0, 1.0);
  return total;
}

}  // namespace

TEST_CASE("fourth-moment oracle: hand cases") {
  // degenerate single atom
  const std::vector<th::DiscreteAtom> degen = {{{0.7}, 1.0}};
  const th::MomentOracleResult d = th::empirical_mean_fourth_moment_oracle(degen, 3, 1);
  CHECK(d.exact == 0.0);
  CHECK(d.bound == 0.0);

  // symmetric +-1, M = 2: E|(Z1+Z2)/2|^4 = 1/2; bound (6/4)*1 = 1.5
  const std::vector<th::DiscreteAtom> pm = {{{1.0}, 0.5}, {{-1.0}, 0.5}};
  const th::MomentOracleResult r = th::empirical_mean_fourth_moment_oracle(pm, 2, 1);
  CHECK(r.exact == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.bound == doctest::Approx(1.5).epsilon(1e-15));

  CHECK_THROWS(th::empirical_mean_fourth_moment_oracle(pm, 7, 1));
  const std::vector<th::DiscreteAtom> badp = {{{1.0}, 0.7}, {{-1.0}, 0.7}};
  CHECK_THROWS(th::empirical_mean_fourth_moment_oracle(badp, 2, 1));
}

TEST_CASE("fourth-moment oracle: random cases against independent recursion") {
  RngStream rng(606, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(2));
    const int M = 1 + static_cast<int>(rng.below(3));
    const int n_atoms = 2 + static_cast<int>(rng.below(3));
    std::vector<th::DiscreteAtom> atoms(static_cast<std::size_t>(n_atoms));
    double psum = 0.0;
    for (auto& a : atoms) {
      a.value.resize(static_cast<std::size_t>(n));
      for (double& v : a.value) v = rng.uniform(-2.0, 2.0);
      a.prob = 0.05 + rng.uniform01();
      psum += a.prob;
    }
    for (auto& a : atoms) a.prob /= psum;
    // renormalize exactly enough for the 1e-12 gate
    double s2 = 0.0;
    for (auto& a : atoms) s2 += a.prob;
    atoms.back().prob += 1.0 - s2;

    const th::MomentOracleResult res = th::empirical_mean_fourth_moment_oracle(atoms, M, n);
    CHECK(res.exact <= res.bound + 1e-15);
    CHECK(res.exact == doctest::Approx(recursive_fourth_moment(atoms, M)).epsilon(1e-12));
  }
}

TEST_CASE("moment scaling: zero truth has an exactly zero A-moment") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(6, m, {0.0, 0.95}, 128, 8);
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.seed = 5;
  cfg.noise = NoiseGaussian{0.1};
  const auto rows =
      th::normal_vector_moment_scaling(cfg, fam, RadialKernel::zero(), {4}, {200}, 8);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].a_moment == 0.0);
  CHECK(rows[0].b_moment > 0.0);
}

TEST_CASE("moment scaling: doubling M roughly halves the fourth-root moments") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(8, m, {0.0, 0.95}, 128, 8);
  const auto shared = std::make_shared<const BasisFamily>(fam);
  const RadialKernel truth =
      RadialKernel::basis_expansion(power_decay_coefficients(1.75, 8), shared);
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.seed = 6;
  cfg.noise = NoiseGaussian{0.1};
  const auto rows = th::normal_vector_moment_scaling(cfg, fam, truth, {4}, {500, 1000}, 400);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].a_moment / rows[1].a_moment == doctest::Approx(2.0).epsilon(0.3));
  CHECK(rows[0].b_moment / rows[1].b_moment == doctest::Approx(2.0).epsilon(0.3));
}
