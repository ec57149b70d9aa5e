#include "ik/theory.hpp"

#include <cmath>
#include <stdexcept>

#include "ik/parallel.hpp"
#include "ik/rng.hpp"

namespace ik {
namespace theory {

double coercivity_constant(int N) {
  if (N < 3) throw std::domain_error("coercivity_constant: N >= 3 required");
  return double(N - 1) / (double(N) * N);
}

double analytic_G_tilde(double r, double s) {
  const double a = std::abs(r - s) + std::abs(r + s);
  double g = 2.0 - a;
  if (r + s <= 1.0) g -= 2.0 - 2.0 * std::abs(r + s);
  return g;
}

double analytic_G(double r, double s) {
  if (!(r > 0.0 && r < 1.0 && s > 0.0 && s < 1.0))
    throw std::domain_error("analytic_G: r, s in (0,1) required");
  const double dr = 2.0 * (1.0 - r), ds = 2.0 * (1.0 - s);
  if (dr * ds < 1e-12) throw std::domain_error("analytic_G: density vanishes at the evaluation point");
  return analytic_G_tilde(r, s) / (dr * ds);
}

double hs_norm_G(int panels_per_axis, int nodes_per_panel) {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre({0.0, 1.0}, panels_per_axis, nodes_per_panel);
  const std::int64_t Q = static_cast<std::int64_t>(g.nodes.size());
  // Integrand G^2 rho' rho' = Gtilde^2 / (rho' rho'): open nodes keep the
  // denominator positive.
  const double total = deterministic_reduce<double>(
      Q, 64,
      [&](std::int64_t lo, std::int64_t hi) {
        double acc = 0.0;
        for (std::int64_t i = lo; i < hi; ++i) {
          const double r = g.nodes[static_cast<std::size_t>(i)];
          const double dr = 2.0 * (1.0 - r);
          double row = 0.0;
          for (std::size_t j = 0; j < g.nodes.size(); ++j) {
            const double s = g.nodes[j];
            const double gt = analytic_G_tilde(r, s);
            row += g.weights[j] * gt * gt / (2.0 * (1.0 - s));
          }
          acc += g.weights[static_cast<std::size_t>(i)] * row / dr;
        }
        return acc;
      },
      [](double& a, const double& b) { a += b; }, 0.0);
  return total;
}

OperatorDiscretization discretized_normal_operator(const BasisFamily& basis, int N) {
  if (basis.measure().kind() != DensityModel::Kind::AnalyticUniformPair)
    throw std::invalid_argument("discretized_normal_operator: uniform-pair measure required");
  const int n = basis.size();
  const QuadratureGrid& g = basis.grid();
  const std::size_t Q = g.nodes.size();

  // Values matrix and G-weighted product; integrate psi_k psi_l Gtilde.
  Eigen::MatrixXd V(n, static_cast<Eigen::Index>(Q));
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (std::size_t q = 0; q < Q; ++q) {
    basis.eval_first(g.nodes[q], n, vals);
    for (int k = 0; k < n; ++k) V(k, static_cast<Eigen::Index>(q)) = vals[static_cast<std::size_t>(k)] * g.weights[q];
  }
  Eigen::MatrixXd Gt(static_cast<Eigen::Index>(Q), static_cast<Eigen::Index>(Q));
  parallel_for_index(static_cast<std::int64_t>(Q), [&](std::int64_t i) {
    for (std::size_t j = 0; j < Q; ++j)
      Gt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          analytic_G_tilde(g.nodes[static_cast<std::size_t>(i)], g.nodes[j]);
  });

  OperatorDiscretization out;
  out.n = n;
  out.N = N;
  out.basis_id = basis.id();
  out.L_G = V * Gt * V.transpose();
  out.L_G = 0.5 * (out.L_G + out.L_G.transpose()).eval();
  const double c1 = double(N - 1) * (N - 2) / (double(N) * N);
  const double c2 = coercivity_constant(N);
  out.Lbar = c1 * out.L_G + c2 * Eigen::MatrixXd::Identity(n, n);
  return out;
}

AsymptoticSystem asymptotic_normal_system(const BasisFamily& basis, int N,
                                          const RadialKernel& truth, int n, double quad_tol) {
  if (n < 1 || n > basis.size())
    throw std::invalid_argument("asymptotic_normal_system: n out of range");
  const OperatorDiscretization disc = discretized_normal_operator(basis, N);
  const std::vector<double> star = project_coefficients(truth, basis, basis.size());
  Eigen::Map<const Eigen::VectorXd> star_all(star.data(), static_cast<Eigen::Index>(star.size()));

  AsymptoticSystem sys;
  sys.A = disc.Lbar.topLeftCorner(n, n);
  // b_inf(k) = <Lbar psi_k, phi*> = sum_l Lbar(k,l) theta*_l over the family,
  // plus the unrepresented tail of the truth (zero when the truth is an
  // expansion in this family).
  sys.b = disc.Lbar.topRows(n) * star_all;
  sys.lambda_min = smallest_eigenvalue(sys.A);

  const double c = coercivity_constant(N);
  Eigen::VectorXd theta_n = star_all.head(n);
  Eigen::VectorXd solved = Eigen::LDLT<Eigen::MatrixXd>(sys.A).solve(sys.b);
  sys.extra_bias = (theta_n - solved).squaredNorm();
  double tail = 0.0;
  for (std::size_t k = static_cast<std::size_t>(n); k < star.size(); ++k) tail += star[k] * star[k];
  sys.extra_bias_bound = tail / (c * c);
  if (sys.extra_bias > sys.extra_bias_bound + quad_tol)
    throw std::runtime_error("asymptotic_normal_system: extra bias exceeds its bound");
  return sys;
}

double per_sample_identity(const double* X, int N, int d, const RadialKernel& phi) {
  std::vector<double> R(static_cast<std::size_t>(N) * d);
  forward(phi, X, N, d, R.data());
  double lhs = 0.0;
  for (int i = 0; i < N * d; ++i) lhs += R[static_cast<std::size_t>(i)] * R[static_cast<std::size_t>(i)];
  lhs /= N;

  // phi(r_ij) and unit vectors, with coincident pairs zeroed consistently.
  std::vector<double> phiv(static_cast<std::size_t>(N) * N, 0.0);
  std::vector<double> unit(static_cast<std::size_t>(N) * N * d, 0.0);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (i == j) continue;
      double r2 = 0.0;
      for (int k = 0; k < d; ++k) {
        const double t = X[i * d + k] - X[j * d + k];
        r2 += t * t;
      }
      const double r = std::sqrt(r2);
      if (r < 1e-12) continue;
      phiv[static_cast<std::size_t>(i) * N + j] = kernel_on_distance(phi, r);
      for (int k = 0; k < d; ++k)
        unit[(static_cast<std::size_t>(i) * N + j) * d + k] = (X[i * d + k] - X[j * d + k]) / r;
    }

  double diag = 0.0, cross = 0.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      const double pij = phiv[static_cast<std::size_t>(i) * N + j];
      diag += pij * pij;
      for (int jp = 0; jp < N; ++jp) {
        if (jp == i || jp == j) continue;
        double dot = 0.0;
        for (int k = 0; k < d; ++k)
          dot += unit[(static_cast<std::size_t>(i) * N + j) * d + k] *
                 unit[(static_cast<std::size_t>(i) * N + jp) * d + k];
        cross += pij * phiv[static_cast<std::size_t>(i) * N + jp] * dot;
      }
    }
  const double rhs = (diag + cross) / (double(N) * N * N);
  return std::abs(lhs - rhs);
}

void TailBoundParams::validate() const {
  if (n < 1 || M < 0 || !(eps > 0.0 && eps < 1.0) || !(c > 0.0) || !(C_max > 0.0) ||
      !(kappa > 0.0) || N < 3)
    throw std::invalid_argument("tail bound params: positivity/range violation");
}

TailBound bernstein_tail_bound(const TailBoundParams& p) {
  p.validate();
  const double nC2 = double(p.n) * p.C_max * p.C_max;
  const double num = double(p.M) * p.eps * p.eps * p.c * p.c / 4.0;
  const double den = nC2 * nC2 + nC2 * p.eps * p.c / 3.0;
  TailBound b;
  b.raw = 2.0 * p.n * std::exp(-num / den);
  b.clamped = std::min(b.raw, 1.0);
  b.vacuous = b.raw >= 1.0;
  return b;
}

double pacbayes_min_M(const TailBoundParams& p) {
  return 16.0 * p.kappa * p.N * p.N / (p.c * p.c) *
         std::log(5.0 * p.C_max * p.C_max / p.c) * double(p.n) / (p.eps * p.eps);
}

TailBound pacbayes_tail_bound(const TailBoundParams& p) {
  p.validate();
  if (p.n < 2) throw std::invalid_argument("pacbayes_tail_bound: n >= 2 required");
  const double min_M = pacbayes_min_M(p);
  if (double(p.M) < min_M)
    throw std::invalid_argument("pacbayes_tail_bound: M below validity threshold (need M >= " +
                                std::to_string(min_M) + ")");
  const double expo = double(p.n) * std::log(5.0 * p.C_max * p.C_max / p.c) -
                      p.eps * p.eps * double(p.M) * p.c * p.c / (16.0 * p.kappa * p.N * p.N);
  TailBound b;
  b.raw = std::exp(expo);
  b.clamped = std::min(b.raw, 1.0);
  b.vacuous = b.raw >= 1.0;
  return b;
}

WilsonInterval wilson95(std::int64_t hits, std::int64_t total) {
  if (total <= 0) throw std::invalid_argument("wilson95: total > 0 required");
  const double z = 1.959963984540054;
  const double n = double(total), ph = double(hits) / n, z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (ph + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(ph * (1.0 - ph) / n + z2 / (4.0 * n * n)) / denom;
  WilsonInterval w{std::max(0.0, center - half), std::min(1.0, center + half)};
  if (hits == 0) w.lo = 0.0;
  if (hits == total) w.hi = 1.0;
  return w;
}

FrequencyResult empirical_tail_frequency(const SystemConfig& config, const BasisFamily& basis,
                                         int n, double threshold, int reps) {
  if (reps < 100) throw std::invalid_argument("empirical_tail_frequency: reps >= 100 required");
  std::vector<char> hit(static_cast<std::size_t>(reps), 0);
  parallel_for_index(reps, [&](std::int64_t rep) {
    const Eigen::MatrixXd A = assemble_gram_streaming(config, basis, n, kStreamTail,
                                                      static_cast<std::uint64_t>(rep));
    hit[static_cast<std::size_t>(rep)] = smallest_eigenvalue(A) <= threshold ? 1 : 0;
  });
  FrequencyResult out;
  out.reps = reps;
  for (char h : hit) out.hits += h;
  out.frequency = double(out.hits) / reps;
  const WilsonInterval w = wilson95(out.hits, reps);
  out.ci_lo = w.lo;
  out.ci_hi = w.hi;
  return out;
}

double fourth_moment_ratio(const RadialKernel& phi, const SystemConfig& config, std::int64_t M_mc,
                           const DensityModel& rho, std::uint64_t stream) {
  double norm2;
  if (phi.variant() == RadialKernel::Variant::BasisExpansion) {
    // Parseval over the orthonormal family; quadrature would need panels
    // aligned to the family's support edge.
    norm2 = 0.0;
    for (double t : phi.coefficients()) norm2 += t * t;
  } else {
    const QuadratureGrid g =
        QuadratureGrid::gauss_legendre_split({0.0, 1.0}, phi.breakpoints(), 64, 8);
    norm2 = l2rho_norm2([&](double r) { return phi(r); }, rho, g);
  }
  if (std::abs(norm2 - 1.0) > 1e-6)
    throw std::invalid_argument("fourth_moment_ratio: kernel must have unit weighted L2 norm (got " +
                                std::to_string(norm2) + ")");
  SystemConfig local = config;
  local.M = M_mc;
  local.seed = substream({config.seed, kStreamMoment, stream});
  struct Acc {
    double s2 = 0.0, s4 = 0.0;
  };
  const Acc total = deterministic_reduce<Acc>(
      M_mc, kDefaultChunk,
      [&](std::int64_t lo, std::int64_t hi) {
        Acc acc;
        std::vector<double> x(static_cast<std::size_t>(config.N) * config.d);
        std::vector<double> R(x.size());
        for (std::int64_t m = lo; m < hi; ++m) {
          sample_positions_one(local, m, x.data());
          forward(phi, x.data(), config.N, config.d, R.data());
          double s = 0.0;
          for (double v : R) s += v * v;
          acc.s2 += s;
          acc.s4 += s * s;
        }
        return acc;
      },
      [](Acc& a, const Acc& b) {
        a.s2 += b.s2;
        a.s4 += b.s4;
      },
      Acc{});
  const double m2 = total.s2 / double(M_mc), m4 = total.s4 / double(M_mc);
  if (m2 <= 0.0) throw std::runtime_error("fourth_moment_ratio: degenerate second moment");
  return m4 / (m2 * m2);
}

MomentOracleResult empirical_mean_fourth_moment_oracle(const std::vector<DiscreteAtom>& atoms,
                                                       int M, int n) {
  if (M < 1 || M > 6 || atoms.empty() || atoms.size() > 4)
    throw std::invalid_argument("moment oracle: need 1 <= M <= 6 and 1 <= atoms <= 4");
  double psum = 0.0;
  for (const auto& a : atoms) {
    if (static_cast<int>(a.value.size()) != n)
      throw std::invalid_argument("moment oracle: atom dimension mismatch");
    if (a.prob < 0.0) throw std::invalid_argument("moment oracle: negative probability");
    psum += a.prob;
  }
  if (std::abs(psum - 1.0) > 1e-12)
    throw std::invalid_argument("moment oracle: probabilities must sum to 1");

  std::vector<double> mean(static_cast<std::size_t>(n), 0.0);
  for (const auto& a : atoms)
    for (int k = 0; k < n; ++k) mean[static_cast<std::size_t>(k)] += a.prob * a.value[static_cast<std::size_t>(k)];

  MomentOracleResult out;
  // bound = (6n/M^2) sum_k E|Z(k) - EZ(k)|^4
  double centered4 = 0.0;
  for (const auto& a : atoms)
    for (int k = 0; k < n; ++k) {
      const double t = a.value[static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)];
      centered4 += a.prob * t * t * t * t;
    }
  out.bound = 6.0 * double(n) / (double(M) * M) * centered4;

  // Odometer over atoms^M tuples.
  std::vector<int> idx(static_cast<std::size_t>(M), 0);
  while (true) {
    double p = 1.0;
    std::vector<double> s(static_cast<std::size_t>(n), 0.0);
    for (int m = 0; m < M; ++m) {
      const auto& a = atoms[static_cast<std::size_t>(idx[static_cast<std::size_t>(m)])];
      p *= a.prob;
      for (int k = 0; k < n; ++k)
        s[static_cast<std::size_t>(k)] += a.value[static_cast<std::size_t>(k)] - mean[static_cast<std::size_t>(k)];
    }
    double norm2 = 0.0;
    for (int k = 0; k < n; ++k) {
      const double t = s[static_cast<std::size_t>(k)] / M;
      norm2 += t * t;
    }
    out.exact += p * norm2 * norm2;
    int pos = 0;
    while (pos < M && ++idx[static_cast<std::size_t>(pos)] == static_cast<int>(atoms.size())) {
      idx[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == M) break;
  }
  if (out.exact > out.bound + 1e-12)
    throw std::logic_error("moment oracle: exact moment exceeds the lemma bound");
  return out;
}

std::vector<MomentScalingRow> normal_vector_moment_scaling(
    const SystemConfig& config, const BasisFamily& basis, const RadialKernel& truth,
    const std::vector<int>& n_list, const std::vector<std::int64_t>& M_list, int reps) {
  std::vector<MomentScalingRow> rows;
  const std::vector<double> star_all = project_coefficients(truth, basis, basis.size());
  for (int n : n_list) {
    const AsymptoticSystem inf = asymptotic_normal_system(basis, config.N, truth, n);
    Eigen::Map<const Eigen::VectorXd> star(star_all.data(), n);
    for (std::int64_t M : M_list) {
      std::vector<double> a4(static_cast<std::size_t>(reps)), b4(static_cast<std::size_t>(reps));
      parallel_for_index(reps, [&](std::int64_t rep) {
        SystemConfig c = config;
        c.M = M;
        c.seed = substream({config.seed, kStreamMoment, static_cast<std::uint64_t>(rep),
                            static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(M)});
        const Dataset data = generate_serial(c, truth);
        const NormalSystem sys = assemble_serial(data, basis, n);
        const double an = ((sys.A - inf.A) * star).norm();
        const double bn = (sys.b - inf.b).norm();
        a4[static_cast<std::size_t>(rep)] = an * an * an * an;
        b4[static_cast<std::size_t>(rep)] = bn * bn * bn * bn;
      });
      MomentScalingRow row;
      row.n = n;
      row.M = M;
      double sa = 0.0, sb = 0.0;
      for (int r = 0; r < reps; ++r) {
        sa += a4[static_cast<std::size_t>(r)];
        sb += b4[static_cast<std::size_t>(r)];
      }
      row.a_moment = std::sqrt(sa / reps);
      row.b_moment = std::sqrt(sb / reps);
      row.a_ratio = row.a_moment * double(M) / double(n);
      row.b_ratio = row.b_moment * double(M) / double(n);
      rows.push_back(row);
    }
  }
  return rows;
}

LambdaMinStat mc_lambda_min_stat(const SystemConfig& config, const BasisFamily& basis, int n,
                                 std::uint64_t replicate) {
  const Eigen::MatrixXd A = assemble_gram_streaming(config, basis, n, kStreamTail, replicate);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  LambdaMinStat st;
  st.lambda_min = es.eigenvalues()(0);
  const Eigen::VectorXd v = es.eigenvectors().col(0);

  // Second pass: per-sample quadratic forms q_m = (1/N) ||Phi_m' v||^2.
  SystemConfig local = config;
  local.seed = substream({config.seed, kStreamTail, replicate});
  const int N = config.N, d = config.d;
  struct Acc {
    double s = 0.0, s2 = 0.0;
  };
  const Acc tot = deterministic_reduce<Acc>(
      config.M, kDefaultChunk,
      [&](std::int64_t lo, std::int64_t hi) {
        Acc acc;
        std::vector<double> x(static_cast<std::size_t>(N) * d), psi(static_cast<std::size_t>(n));
        std::vector<double> Rv(static_cast<std::size_t>(N) * d);
        for (std::int64_t m = lo; m < hi; ++m) {
          sample_positions_one(local, m, x.data());
          std::fill(Rv.begin(), Rv.end(), 0.0);
          for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) {
              double r2 = 0.0;
              for (int k = 0; k < d; ++k) {
                const double t = x[static_cast<std::size_t>(i * d + k)] - x[static_cast<std::size_t>(j * d + k)];
                r2 += t * t;
              }
              const double r = std::sqrt(r2);
              if (r < 1e-12) continue;
              basis.eval_first(r, n, psi);
              double pv = 0.0;
              for (int c = 0; c < n; ++c) pv += v(c) * psi[static_cast<std::size_t>(c)];
              const double w = pv / r / N;
              for (int k = 0; k < d; ++k) {
                const double u = w * (x[static_cast<std::size_t>(i * d + k)] - x[static_cast<std::size_t>(j * d + k)]);
                Rv[static_cast<std::size_t>(i * d + k)] += u;
                Rv[static_cast<std::size_t>(j * d + k)] -= u;
              }
            }
          double q = 0.0;
          for (double t : Rv) q += t * t;
          q /= N;
          acc.s += q;
          acc.s2 += q * q;
        }
        return acc;
      },
      [](Acc& a, const Acc& b) {
        a.s += b.s;
        a.s2 += b.s2;
      },
      Acc{});
  const double mean = tot.s / double(config.M);
  const double var = std::max(0.0, tot.s2 / double(config.M) - mean * mean);
  st.se = std::sqrt(var / double(config.M));
  return st;
}

EntryStats mc_operator_entry_stats(const SystemConfig& config, const BasisFamily& basis, int n) {
  const int N = config.N, d = config.d;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n), sum2 = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd Phi(n, N * d), Q(n, n);
  std::vector<double> psi_vals(static_cast<std::size_t>(n));
  std::vector<double> x(static_cast<std::size_t>(N) * d);
  for (std::int64_t m = 0; m < config.M; ++m) {
    sample_positions_one(config, m, x.data());
    Phi.setZero();
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) {
        if (i == j) continue;
        double r2 = 0.0;
        for (int k = 0; k < d; ++k) {
          const double t = x[static_cast<std::size_t>(i * d + k)] - x[static_cast<std::size_t>(j * d + k)];
          r2 += t * t;
        }
        const double r = std::sqrt(r2);
        if (r < 1e-12) continue;
        basis.eval_first(r, n, psi_vals);
        for (int c = 0; c < n; ++c) {
          const double w = psi_vals[static_cast<std::size_t>(c)] / r;
          for (int k = 0; k < d; ++k)
            Phi(c, i * d + k) += w * (x[static_cast<std::size_t>(i * d + k)] - x[static_cast<std::size_t>(j * d + k)]) / N;
        }
      }
    Q = Phi * Phi.transpose() / N;
    sum += Q;
    sum2 += Q.cwiseProduct(Q);
  }
  EntryStats st;
  st.mean = sum / double(config.M);
  Eigen::MatrixXd var = sum2 / double(config.M) - st.mean.cwiseProduct(st.mean);
  st.se = (var.cwiseMax(0.0) / double(config.M)).cwiseSqrt();
  return st;
}

}  // namespace theory
}  // namespace ik
