#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "ik/estimator.hpp"
#include "ik/rng.hpp"
#include "ik/theory.hpp"

using namespace ik;

namespace {

// Independent oracle for the smallest eigenvalue: inverse power iteration
// with a hand-rolled Gaussian elimination (no Eigen solve path).
std::vector<double> solve_gauss(std::vector<std::vector<double>> A, std::vector<double> b) {
  const int n = static_cast<int>(b.size());
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < n; ++r) {
      const double f = A[r][col] / A[col][col];
      for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int r = n - 1; r >= 0; --r) {
    double s = b[static_cast<std::size_t>(r)];
    for (int c = r + 1; c < n; ++c) s -= A[r][c] * x[static_cast<std::size_t>(c)];
    x[static_cast<std::size_t>(r)] = s / A[r][r];
  }
  return x;
}

double lambda_min_oracle(const Eigen::MatrixXd& M) {
  const int n = static_cast<int>(M.rows());
  auto rayleigh = [&](const std::vector<double>& v) {
    double ray = 0.0;
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int c = 0; c < n; ++c) s += M(r, c) * v[static_cast<std::size_t>(c)];
      ray += v[static_cast<std::size_t>(r)] * s;
    }
    return ray;
  };
  auto iterate = [&](std::vector<double>& v, double shift, int steps) {
    std::vector<std::vector<double>> A(static_cast<std::size_t>(n),
                                       std::vector<double>(static_cast<std::size_t>(n)));
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        A[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = M(r, c) - (r == c ? shift : 0.0);
    for (int it = 0; it < steps; ++it) {
      std::vector<double> w = solve_gauss(A, v);
      double norm = 0.0;
      for (double t : w) norm += t * t;
      norm = std::sqrt(norm);
      for (double& t : w) t /= norm;
      v = w;
    }
  };
  // Gershgorin lower bound keeps the shifted matrix positive definite.
  double shift = 0.0;
  for (int r = 0; r < n; ++r) {
    double off = 0.0;
    for (int c = 0; c < n; ++c)
      if (c != r) off += std::abs(M(r, c));
    shift = std::min(shift, M(r, r) - off);
  }
  shift -= 1.0;
  std::vector<double> v(static_cast<std::size_t>(n), 1.0 / std::sqrt(double(n)));
  iterate(v, shift, 100);
  // Shift refinement: stay strictly below the current estimate so inverse
  // iteration keeps targeting the smallest eigenvalue.
  for (int round = 0; round < 6; ++round) {
    const double lam = rayleigh(v);
    iterate(v, lam - 1e-5 * (1.0 + std::abs(lam)), 4);
  }
  return rayleigh(v);
}

Dataset line_dataset() {
  Dataset data;
  data.X = Array3(1, 3, 1);
  data.X.v = {0.0, 0.5, 1.0};
  data.Y = Array3(1, 3, 1);
  data.config.N = 3;
  data.config.d = 1;
  data.config.M = 1;
  return data;
}

NormalSystem system_from(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, int N = 3) {
  NormalSystem sys;
  sys.A = A;
  sys.b = b;
  sys.n = static_cast<int>(A.rows());
  sys.M = 1;
  sys.N = N;
  sys.lambda_min = smallest_eigenvalue(A);
  return sys;
}

}  // namespace

TEST_CASE("assemble hand example with the constant basis") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = indicator_partition_basis({0.0, 1.0}, m);  // psi = 1
  const NormalSystem sys = assemble(line_dataset(), fam, 1);
  // R_1[X] = (-2/3, 0, 2/3): A = (1/3)(4/9 + 4/9) = 8/27
  CHECK(sys.A(0, 0) == doctest::Approx(8.0 / 27).epsilon(1e-12));
  CHECK(sys.b(0) == 0.0);  // Y = 0
  CHECK(sys.lambda_min == doctest::Approx(8.0 / 27).epsilon(1e-12));
}

TEST_CASE("zero truth with no noise gives a zero normal vector") {
  SystemConfig cfg;
  cfg.N = 4;
  cfg.d = 2;
  cfg.M = 64;
  cfg.noise = NoiseNone{};
  cfg.seed = 5;
  const Dataset data = generate(cfg, RadialKernel::zero());
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(4, m, {0.0, 0.95});
  const NormalSystem sys = assemble(data, fam, 4);
  for (int k = 0; k < 4; ++k) CHECK(sys.b(k) == 0.0);
}

TEST_CASE("assembled systems are symmetric and PSD") {
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.M = 256;
  cfg.seed = 8;
  const Dataset data = generate(cfg, RadialKernel::power(1.0));
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(6, m, {0.0, 0.95});
  const NormalSystem sys = assemble(data, fam, 6);
  CHECK((sys.A - sys.A.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(sys.lambda_min >= -1e-10);
}

TEST_CASE("assembly is linear in Y") {
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.M = 32;
  cfg.seed = 10;
  Dataset data = generate(cfg, RadialKernel::power(1.0));
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(4, m, {0.0, 0.95});
  const NormalSystem s1 = assemble(data, fam, 4);
  for (double& y : data.Y.v) y *= 2.0;
  const NormalSystem s2 = assemble(data, fam, 4);
  CHECK(s1.A == s2.A);
  for (int k = 0; k < 4; ++k) CHECK(s2.b(k) == 2.0 * s1.b(k));
}

TEST_CASE("smallest_eigenvalue basics and contract") {
  CHECK(smallest_eigenvalue(Eigen::MatrixXd::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-14));
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 2.0;
  D(1, 1) = 0.5;
  CHECK(smallest_eigenvalue(D) == doctest::Approx(0.5).epsilon(1e-14));
  Eigen::MatrixXd bad(2, 2);
  bad << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(smallest_eigenvalue(bad), std::invalid_argument);
}

TEST_CASE("smallest_eigenvalue matches the inverse-iteration oracle") {
  RngStream rng(33, 0);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd G(8, 12);
    for (int r = 0; r < 8; ++r)
      for (int c = 0; c < 12; ++c) G(r, c) = rng.normal();
    const Eigen::MatrixXd A = G * G.transpose() / 12.0;
    const double fast = smallest_eigenvalue(A);
    const double slow = lambda_min_oracle(A);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-8));
  }
}

TEST_CASE("tlse gates on singular systems and solves otherwise") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 1.0;
  Eigen::VectorXd b(2);
  b << 1.0, 1.0;
  const EstimateResult gated = tlse(system_from(D, b), 0.05);
  CHECK(gated.gated);
  CHECK(gated.theta(0) == 0.0);
  CHECK(gated.theta(1) == 0.0);

  const EstimateResult solved = tlse(system_from(Eigen::MatrixXd::Identity(2, 2), b), 0.05);
  CHECK_FALSE(solved.gated);
  CHECK(solved.theta(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS(tlse(system_from(D, b), -1.0));
}

TEST_CASE("tlse equals lse on well-conditioned systems") {
  RngStream rng(12, 0);
  Eigen::MatrixXd G(5, 9);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 9; ++c) G(r, c) = rng.normal();
  const Eigen::MatrixXd A = G * G.transpose() / 9.0 + Eigen::MatrixXd::Identity(5, 5);
  Eigen::VectorXd b(5);
  for (int i = 0; i < 5; ++i) b(i) = rng.normal();
  const NormalSystem sys = system_from(A, b);
  const EstimateResult t = tlse(sys, 0.05);
  const EstimateResult l = lse(sys);
  CHECK((t.theta - l.theta).norm() <= 1e-10);
}

TEST_CASE("lse handles rank deficiency via the pseudo-inverse") {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(2, 2);
  D(0, 0) = 1.0;
  Eigen::VectorXd b(2);
  b << 1.0, 1.0;
  const EstimateResult res = lse(system_from(D, b));
  CHECK(res.theta(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(res.theta(1) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS(lse(system_from(D, b), 2.0));
}

TEST_CASE("tikhonov and tsvd behave as documented") {
  Eigen::VectorXd b(3);
  b << 1.0, -2.0, 0.5;
  const NormalSystem sys = system_from(Eigen::MatrixXd::Identity(3, 3), b);
  const EstimateResult tk = tikhonov(sys, 1.0);
  for (int i = 0; i < 3; ++i) CHECK(tk.theta(i) == doctest::Approx(0.5 * b(i)).epsilon(1e-12));
  // lambda -> 0 converges to the direct solve
  const EstimateResult tk2 = tikhonov(sys, 1e-12);
  CHECK((tk2.theta - b).norm() <= 1e-9);
  // tsvd with a cut below all singular values equals lse
  const EstimateResult ts = tsvd(sys, 1e-12);
  const EstimateResult l = lse(sys);
  CHECK((ts.theta - l.theta).norm() <= 1e-12);
  CHECK_THROWS(tikhonov(sys, 0.0));
  CHECK_THROWS(tsvd(sys, 1.5));
}

TEST_CASE("choose_dimension rule") {
  CHECK(choose_dimension(1000, 1.0, 1.0) == 10);
  CHECK(choose_dimension(1, 2.0, 1.0) == 1);
  CHECK(choose_dimension(1 << 20, 1e9, 3.7) == 3);
  CHECK(choose_dimension(512, 1.0, 1.0) == 8);
  CHECK_THROWS(choose_dimension(0, 1.0, 1.0));
}

TEST_CASE("risk: zero for truth inside the span, full norm when gated") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const auto fam = std::make_shared<const BasisFamily>(poly_basis(12, m, {0.0, 0.95}));
  std::vector<double> star = {0.4, -0.2, 0.1, 0.05};
  const RadialKernel truth = RadialKernel::basis_expansion(star, fam);

  EstimateResult exact;
  exact.theta = Eigen::Map<const Eigen::VectorXd>(star.data(), 4);
  CHECK(l2rho_risk(exact, truth, *fam) == doctest::Approx(0.0).epsilon(1e-14));

  EstimateResult gated;
  gated.theta = Eigen::VectorXd::Zero(4);
  gated.gated = true;
  double norm2 = 0.0;
  for (double t : star) norm2 += t * t;
  CHECK(l2rho_risk(gated, truth, *fam) == doctest::Approx(norm2).epsilon(1e-12));
}

TEST_CASE("risk agrees with direct weighted quadrature on smooth truths") {
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const auto fam = std::make_shared<const BasisFamily>(poly_basis(16, m, {0.0, 0.95}, 128, 8));
  const RadialKernel truth = RadialKernel::gaussian_bump(0.4, 0.2, 1.0);
  EstimateResult res;
  res.theta = Eigen::VectorXd::Zero(6);
  res.theta << 0.3, -0.1, 0.2, 0.0, 0.05, -0.02;
  const double risk = l2rho_risk(res, truth, *fam);

  // direct quadrature of |phi_hat - projection of truth|^2 rho + tail
  const std::vector<double> star = project_coefficients(truth, *fam, fam->size());
  const QuadratureGrid& g = fam->grid();
  double direct = 0.0;
  std::vector<double> vals(static_cast<std::size_t>(fam->size()));
  for (std::size_t q = 0; q < g.nodes.size(); ++q) {
    fam->eval_first(g.nodes[q], fam->size(), vals);
    double diff = 0.0;
    for (int k = 0; k < fam->size(); ++k) {
      const double hat = k < 6 ? res.theta(k) : 0.0;
      diff += (hat - star[static_cast<std::size_t>(k)]) * vals[static_cast<std::size_t>(k)];
    }
    direct += g.weights[q] * m.density(g.nodes[q]) * diff * diff;
  }
  CHECK(risk == doctest::Approx(direct).epsilon(1e-6));
}

TEST_CASE("gating dichotomy on assembled systems") {
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.M = 128;
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(5, m, {0.0, 0.95});
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    cfg.seed = seed;
    const Dataset data = generate(cfg, RadialKernel::power(1.0));
    const NormalSystem sys = assemble(data, fam, 5);
    const EstimateResult res = tlse(sys, default_tlse_threshold(3));
    if (res.gated) {
      CHECK(res.theta.norm() == 0.0);
    } else {
      CHECK((sys.A * res.theta - sys.b).norm() <= 1e-8 * sys.b.norm());
    }
  }
}

TEST_CASE("singular construction gates the tLSE") {
  // All particles in [0,1/8]: every pairwise distance < 1/2, so the
  // normalized indicator of [1/2,1] never activates and A is singular.
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = indicator_partition_basis({0.0, 0.5, 1.0}, m);
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.M = 50;
  cfg.seed = 3;
  cfg.position_law = ConditionalIidMixture{{{0.0, 0.125}}, {1.0}};
  const Dataset data = generate(cfg, RadialKernel::indicator(0.5, 1.0, 2.0));
  const NormalSystem sys = assemble(data, fam, 2);
  CHECK(sys.lambda_min <= 1e-12);
  const EstimateResult res = tlse(sys, default_tlse_threshold(3));
  CHECK(res.gated);
  CHECK(res.theta(0) == 0.0);
  CHECK(res.theta(1) == 0.0);
  // the pseudo-inverse side still returns a finite estimate with a zero
  // component on the dead direction
  const EstimateResult pinv = lse(sys);
  CHECK(std::isfinite(pinv.theta(0)));
  CHECK(pinv.theta(1) == doctest::Approx(0.0).epsilon(1e-12));
}
