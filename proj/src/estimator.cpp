#include "ik/estimator.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "ik/parallel.hpp"

namespace ik {
namespace {

struct GramAcc {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
};

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

// Fills Phi (n x N*d) with R_{psi_k}[X] rows for one sample.
void fill_forward_rows(const BasisFamily& basis, int n, const double* X, int N, int d,
                       Eigen::MatrixXd& Phi, std::vector<double>& psi_vals) {
  Phi.setZero();
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double t = X[i * d + k] - X[j * d + k];
        r2 += t * t;
      }
      const double r = std::sqrt(r2);
      if (r < 1e-12) continue;
      basis.eval_first(r, n, psi_vals);
      for (int c = 0; c < n; ++c) {
        const double w = psi_vals[static_cast<std::size_t>(c)] / r;
        if (w == 0.0) continue;
        for (int k = 0; k < d; ++k) {
          const double u = w * (X[i * d + k] - X[j * d + k]);
          Phi(c, i * d + k) += u;
          Phi(c, j * d + k) -= u;
        }
      }
    }
  }
  Phi /= double(N);
}

NormalSystem assemble_impl(const Dataset& data, const BasisFamily& basis, int n, bool parallel) {
  if (n < 1 || n > basis.size()) throw std::invalid_argument("assemble: n out of range for basis");
  if (data.X.M < 1) throw std::invalid_argument("assemble: empty dataset");
  const int N = data.X.N, d = data.X.d;
  const std::int64_t M = data.X.M;

  GramAcc zero{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  GramAcc total = deterministic_reduce<GramAcc>(
      M, kDefaultChunk,
      [&](std::int64_t lo, std::int64_t hi) {
        GramAcc acc{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
        Eigen::MatrixXd Phi(n, N * d);
        std::vector<double> psi_vals(static_cast<std::size_t>(n));
        for (std::int64_t m = lo; m < hi; ++m) {
          fill_forward_rows(basis, n, data.X.sample(m), N, d, Phi, psi_vals);
          acc.A.selfadjointView<Eigen::Lower>().rankUpdate(Phi, 1.0 / N);
          Eigen::Map<const Eigen::VectorXd> y(data.Y.sample(m), N * d);
          acc.b.noalias() += Phi * y / double(N);
        }
        return acc;
      },
      [](GramAcc& a, const GramAcc& c) {
        a.A += c.A;
        a.b += c.b;
      },
      zero, parallel);

  NormalSystem sys;
  sys.n = n;
  sys.M = M;
  sys.N = N;
  sys.basis_id = basis.id();
  sys.A = total.A / double(M);
  sys.A.triangularView<Eigen::StrictlyUpper>() = sys.A.transpose();
  sys.b = total.b / double(M);
  if (!sys.A.allFinite() || !sys.b.allFinite())
    throw std::runtime_error("assemble: non-finite entries (NaN in basis evaluation?)");
  sys.lambda_min = smallest_eigenvalue(sys.A);
  sys.checksum = fnv1a(sys.b.data(), sizeof(double) * static_cast<std::size_t>(n),
                       fnv1a(sys.A.data(), sizeof(double) * static_cast<std::size_t>(n) * n));
  return sys;
}

}  // namespace

NormalSystem assemble(const Dataset& data, const BasisFamily& basis, int n) {
  return assemble_impl(data, basis, n, true);
}

NormalSystem assemble_serial(const Dataset& data, const BasisFamily& basis, int n) {
  return assemble_impl(data, basis, n, false);
}

Eigen::MatrixXd assemble_gram_streaming(const SystemConfig& config, const BasisFamily& basis, int n,
                                        std::uint64_t stream_tag, std::uint64_t replicate) {
  const int N = config.N, d = config.d;
  SystemConfig local = config;
  // Fold the replicate into the seed so each replicate is an independent
  // stream family, still addressed only by (seed, tag, replicate, m).
  local.seed = substream({config.seed, stream_tag, replicate});
  Eigen::MatrixXd total = deterministic_reduce<Eigen::MatrixXd>(
      config.M, kDefaultChunk,
      [&](std::int64_t lo, std::int64_t hi) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXd Phi(n, N * d);
        std::vector<double> psi_vals(static_cast<std::size_t>(n));
        std::vector<double> x(static_cast<std::size_t>(N) * d);
        for (std::int64_t m = lo; m < hi; ++m) {
          sample_positions_one(local, m, x.data());
          fill_forward_rows(basis, n, x.data(), N, d, Phi, psi_vals);
          acc.selfadjointView<Eigen::Lower>().rankUpdate(Phi, 1.0 / N);
        }
        return acc;
      },
      [](Eigen::MatrixXd& a, const Eigen::MatrixXd& c) { a += c; },
      Eigen::MatrixXd::Zero(n, n).eval(),
      /*parallel=*/false);  // callers parallelize over replicates
  total /= double(config.M);
  total.triangularView<Eigen::StrictlyUpper>() = total.transpose();
  return total;
}

double smallest_eigenvalue(const Eigen::MatrixXd& A) {
  if (A.rows() != A.cols()) throw std::invalid_argument("smallest_eigenvalue: square matrix required");
  const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10)
    throw std::invalid_argument("smallest_eigenvalue: matrix not symmetric (max asymmetry " +
                                std::to_string(asym) + ")");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double default_tlse_threshold(int N) {
  if (N < 3) throw std::domain_error("coercivity threshold: N >= 3 required");
  return 0.25 * double(N - 1) / (double(N) * N);
}

EstimateResult tlse(const NormalSystem& system, double threshold) {
  if (!(threshold > 0.0)) throw std::invalid_argument("tlse: threshold > 0 required");
  EstimateResult res;
  res.kind = "tlse";
  res.hyperparameter = threshold;
  res.lambda_min = system.lambda_min;
  if (system.lambda_min <= threshold) {
    res.theta = Eigen::VectorXd::Zero(system.n);
    res.gated = true;
    res.solve_residual = system.b.norm();
    return res;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(system.A);
  Eigen::VectorXd theta = ldlt.solve(system.b);
  theta += ldlt.solve(system.b - system.A * theta);  // one refinement step
  res.theta = theta;
  res.solve_residual = (system.A * theta - system.b).norm();
  if (res.solve_residual > 1e-8 * std::max(system.b.norm(), 1e-300))
    throw std::runtime_error("tlse: factorization failed above the gate (residual " +
                             std::to_string(res.solve_residual) + ")");
  return res;
}

namespace {

EstimateResult svd_solve(const NormalSystem& system, double rel_cut, const char* kind) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(system.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cut = rel_cut * sv(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  EstimateResult res;
  res.kind = kind;
  res.hyperparameter = rel_cut;
  res.lambda_min = system.lambda_min;
  res.theta = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * system.b;
  res.solve_residual = (system.A * res.theta - system.b).norm();
  return res;
}

}  // namespace

EstimateResult lse(const NormalSystem& system, double rank_tol) {
  if (!(rank_tol > 0.0 && rank_tol < 1.0)) throw std::invalid_argument("lse: rank_tol in (0,1)");
  return svd_solve(system, rank_tol, "lse");
}

EstimateResult tikhonov(const NormalSystem& system, double lambda_reg) {
  if (!(lambda_reg > 0.0)) throw std::invalid_argument("tikhonov: lambda_reg > 0 required");
  EstimateResult res;
  res.kind = "tikhonov";
  res.hyperparameter = lambda_reg;
  res.lambda_min = system.lambda_min;
  Eigen::MatrixXd Areg = system.A;
  Areg.diagonal().array() += lambda_reg;
  res.theta = Eigen::LDLT<Eigen::MatrixXd>(Areg).solve(system.b);
  res.solve_residual = (system.A * res.theta - system.b).norm();
  return res;
}

EstimateResult tsvd(const NormalSystem& system, double cut) {
  if (!(cut > 0.0 && cut < 1.0)) throw std::invalid_argument("tsvd: cut in (0,1)");
  EstimateResult res = svd_solve(system, cut, "tsvd");
  return res;
}

int choose_dimension(std::int64_t M, double beta, double gamma) {
  if (M < 1 || !(beta > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("choose_dimension: M >= 1, beta > 0, gamma > 0 required");
  const double x = gamma * std::pow(double(M), 1.0 / (2.0 * beta + 1.0));
  // Guard against 9.999... artifacts of pow before flooring.
  return std::max(1, static_cast<int>(std::floor(x + 1e-9)));
}

std::vector<double> project_coefficients(const RadialKernel& phi, const BasisFamily& basis,
                                         int count) {
  if (count < 0 || count > basis.size())
    throw std::invalid_argument("project_coefficients: count out of range");
  if (phi.variant() == RadialKernel::Variant::BasisExpansion && phi.basis() &&
      phi.basis()->id() == basis.id()) {
    std::vector<double> theta(phi.coefficients());
    theta.resize(static_cast<std::size_t>(count), 0.0);
    return theta;
  }
  const QuadratureGrid& g = basis.grid();
  std::vector<double> theta(static_cast<std::size_t>(count), 0.0);
  std::vector<double> vals(static_cast<std::size_t>(count));
  for (std::size_t q = 0; q < g.nodes.size(); ++q) {
    const double r = g.nodes[q];
    const double wf = g.weights[q] * basis.measure().density(r) * phi(r);
    if (wf == 0.0) continue;
    basis.eval_first(r, count, vals);
    for (int k = 0; k < count; ++k) theta[static_cast<std::size_t>(k)] += wf * vals[static_cast<std::size_t>(k)];
  }
  return theta;
}

double l2rho_risk(const EstimateResult& result, const RadialKernel& truth,
                  const BasisFamily& basis) {
  const int n = static_cast<int>(result.theta.size());
  const std::vector<double> star = project_coefficients(truth, basis, basis.size());
  double risk = 0.0;
  for (int k = 0; k < n; ++k) {
    const double dkk = result.theta(k) - star[static_cast<std::size_t>(k)];
    risk += dkk * dkk;
  }
  for (std::size_t k = static_cast<std::size_t>(n); k < star.size(); ++k) risk += star[k] * star[k];
  return risk;
}

}  // namespace ik
