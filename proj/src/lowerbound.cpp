#include "ik/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ik/parallel.hpp"
#include "ik/rng.hpp"

namespace ik {
namespace lowerbound {

IntervalPack build_intervals(const DensityModel& model, int Kbar, double a0) {
  if (Kbar < 1) throw std::invalid_argument("build_intervals: Kbar >= 1 required");
  const auto runs = model.high_density_runs();
  // The construction needs one contiguous high-density interval; multi-run
  // regions are out of scope.
  std::vector<Interval> above;
  for (const Interval& r : runs)
    if (r.length() > 0.0) above.push_back(r);
  if (above.empty())
    throw std::runtime_error("build_intervals: no region with density above a0 = " + std::to_string(a0));
  if (above.size() > 1)
    throw std::runtime_error("build_intervals: high-density region is not a single interval (" +
                             std::to_string(above.size()) + " components); unsupported");
  const Interval region = above[0];
  const double span = region.length();
  const double h = span / (4.0 * Kbar);
  // Touching packing from the left edge: centers (2l-1)h + lo; 2h Kbar =
  // span/2 always fits, so the error path triggers only for degenerate spans.
  if (!(h > 0.0) || 2.0 * h * Kbar > span + 1e-15) {
    const int feasible = static_cast<int>(std::floor(span / (2.0 * h)));
    throw std::runtime_error("build_intervals: region too short; maximal feasible Kbar = " +
                             std::to_string(feasible));
  }
  IntervalPack pack;
  pack.Kbar = Kbar;
  pack.a0 = a0;
  pack.halfwidth = h;
  pack.region = region;
  for (int l = 1; l <= Kbar; ++l) pack.centers.push_back(region.lo + (2.0 * l - 1.0) * h);
  return pack;
}

namespace {

int hamming(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace

Codebook varshamov_gilbert(int Kbar, std::uint64_t seed, std::int64_t max_tries) {
  if (Kbar < 8) throw std::invalid_argument("varshamov_gilbert: Kbar >= 8 required");
  const int min_dist = (Kbar + 7) / 8;  // ceil(Kbar/8)
  const int target_K = static_cast<int>(std::ceil(std::pow(2.0, double(Kbar) / 8.0)));

  Codebook book;
  book.Kbar = Kbar;
  book.words.emplace_back(static_cast<std::size_t>(Kbar), 0);  // zero word
  RngStream rng(seed, substream({kStreamCodebook, static_cast<std::uint64_t>(Kbar)}));
  std::int64_t tries = 0;
  while (book.K < target_K) {
    if (++tries > max_tries)
      throw std::runtime_error("varshamov_gilbert: search budget exhausted after " +
                               std::to_string(max_tries) + " candidates");
    std::vector<std::uint8_t> cand(static_cast<std::size_t>(Kbar));
    for (auto& bit : cand) bit = static_cast<std::uint8_t>(rng.next_u32() & 1u);
    bool ok = true;
    for (const auto& w : book.words)
      if (hamming(w, cand) < min_dist) {
        ok = false;
        break;
      }
    if (ok) {
      book.words.push_back(std::move(cand));
      ++book.K;
    }
  }
  book.min_distance = verify_codebook(book);
  return book;
}

int verify_codebook(const Codebook& book) {
  int min_d = book.Kbar;
  for (std::size_t i = 0; i < book.words.size(); ++i)
    for (std::size_t j = i + 1; j < book.words.size(); ++j)
      min_d = std::min(min_d, hamming(book.words[i], book.words[j]));
  return min_d;
}

namespace {

QuadratureGrid bump_aligned_grid(const IntervalPack& pack) {
  std::vector<double> cuts;
  for (double c : pack.centers) {
    cuts.push_back(c - pack.halfwidth);
    cuts.push_back(c - 0.5 * pack.halfwidth);
    cuts.push_back(c);
    cuts.push_back(c + 0.5 * pack.halfwidth);
    cuts.push_back(c + pack.halfwidth);
  }
  return QuadratureGrid::gauss_legendre_split({0.0, 1.0}, cuts, 4, 8);
}

RadialKernel hypothesis_kernel(const IntervalPack& pack, const std::vector<std::uint8_t>& word,
                               double amplitude) {
  std::vector<BumpTerm> terms;
  for (std::size_t l = 0; l < word.size(); ++l)
    if (word[l]) terms.push_back({pack.centers[l], pack.halfwidth, amplitude});
  return RadialKernel::bump_sum(std::move(terms));
}

}  // namespace

double l2rho_distance(const RadialKernel& f, const RadialKernel& g, const DensityModel& model,
                      const QuadratureGrid& grid) {
  double s = 0.0;
  for (std::size_t q = 0; q < grid.nodes.size(); ++q) {
    const double r = grid.nodes[q];
    const double t = f(r) - g(r);
    s += grid.weights[q] * t * t * model.density(r);
  }
  return std::sqrt(s);
}

HypothesisSet build_hypotheses(const IntervalPack& pack, const Codebook& book, double beta,
                               double L, double amplitude_scale, double sigma_eta, int N, int d,
                               std::int64_t M, const DensityModel& model) {
  if (book.Kbar != pack.Kbar) throw std::invalid_argument("build_hypotheses: Kbar mismatch");
  if (!(sigma_eta > 0.0)) throw std::invalid_argument("build_hypotheses: Gaussian noise required");
  HypothesisSet set;
  set.beta = beta;
  set.L = L;
  set.amplitude_scale = amplitude_scale;
  set.sigma_eta = sigma_eta;
  set.pack = pack;
  set.book = book;
  set.c_eta = double(N) * d / (2.0 * sigma_eta * sigma_eta);
  set.grid = bump_aligned_grid(pack);

  const double amplitude = amplitude_scale * L * std::pow(pack.halfwidth, beta);
  for (const auto& w : book.words) set.kernels.push_back(hypothesis_kernel(pack, w, amplitude));

  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < set.kernels.size(); ++i)
    for (std::size_t j = i + 1; j < set.kernels.size(); ++j)
      min_dist = std::min(min_dist, l2rho_distance(set.kernels[i], set.kernels[j], model, set.grid));
  set.separation_s = 0.5 * min_dist;

  // Dataset-free budget: per-hypothesis KL <= c_eta amplitude^2 N M since
  // the bump peaks at 1 and the supports are disjoint.
  const double kl_uniform = set.c_eta * amplitude * amplitude * double(N) * double(M);
  set.alpha_uniform = (book.K >= 2) ? kl_uniform / std::log(double(book.K)) : std::numeric_limits<double>::infinity();
  return set;
}

double auto_scale_amplitude(const IntervalPack& pack, const Codebook& book, double beta, double L,
                            double sigma_eta, int N, int d, std::int64_t M,
                            const DensityModel& model, double alpha_target) {
  double lo = 0.0, hi = 1.0;
  const auto alpha_at = [&](double s) {
    return build_hypotheses(pack, book, beta, L, s, sigma_eta, N, d, M, model).alpha_uniform;
  };
  if (alpha_at(hi) <= alpha_target) return hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (alpha_at(mid) <= alpha_target ? lo : hi) = mid;
  }
  return lo;
}

KlBudget kl_budget(const HypothesisSet& set, const Array3& X) {
  const int K = set.book.K;
  if (K < 2) throw std::invalid_argument("kl_budget: K >= 2 required for a defined alpha");
  double total = 0.0;
  for (int k = 1; k <= K; ++k) {
    const RadialKernel& phi = set.kernels[static_cast<std::size_t>(k)];
    const double sum = deterministic_reduce<double>(
        X.M, kDefaultChunk,
        [&](std::int64_t lo, std::int64_t hi) {
          double acc = 0.0;
          std::vector<double> R(static_cast<std::size_t>(X.N) * X.d);
          for (std::int64_t m = lo; m < hi; ++m) {
            forward(phi, X.sample(m), X.N, X.d, R.data());
            for (double v : R) acc += v * v;
          }
          return acc;
        },
        [](double& a, const double& b) { a += b; }, 0.0);
    total += set.c_eta * sum;
  }
  KlBudget out;
  out.average_kl = total / K;
  out.alpha = out.average_kl / std::log(double(K));
  return out;
}

int min_distance_test(const RadialKernel& estimate, const HypothesisSet& set,
                      const DensityModel& model) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < set.kernels.size(); ++k) {
    const double dk = l2rho_distance(estimate, set.kernels[k], model, set.grid);
    if (dk < best_d) {
      best_d = dk;
      best = static_cast<int>(k);
    }
  }
  return best;
}

FanoResult fano_experiment(const HypothesisSet& set, const SystemConfig& config,
                           const EstimatorSpec& est, const BasisFamily& est_basis, int est_n,
                           int reps) {
  const int K = set.book.K;
  if (K < 2) throw std::invalid_argument("fano_experiment: K >= 2 required (floor undefined)");
  if (set.alpha_uniform >= 0.125)
    throw std::invalid_argument("fano_experiment: hypothesis set not certified (alpha >= 1/8)");
  const DensityModel& model = est_basis.measure();

  FanoResult out;
  out.reps = reps;
  out.replicas.resize(static_cast<std::size_t>(reps));
  out.fano_floor =
      (std::log(double(K + 1)) - std::log(2.0)) / std::log(double(K)) - set.alpha_uniform;
  const auto shared_basis = std::make_shared<const BasisFamily>(est_basis);

  parallel_for_index(reps, [&](std::int64_t rep) {
    RngStream pick(config.seed, substream({kStreamFano, static_cast<std::uint64_t>(rep)}));
    const int k = static_cast<int>(pick.below(static_cast<std::uint64_t>(K + 1)));
    SystemConfig c = config;
    c.seed = substream({config.seed, kStreamFano, static_cast<std::uint64_t>(rep), 0x646174u});
    const Dataset data = generate_serial(c, set.kernels[static_cast<std::size_t>(k)]);
    const NormalSystem sys = assemble_serial(data, est_basis, est_n);
    EstimateResult res;
    if (est.kind == "tlse") {
      const double thr = est.threshold > 0.0 ? est.threshold : default_tlse_threshold(config.N);
      res = tlse(sys, thr);
    } else if (est.kind == "lse") {
      res = lse(sys, est.rank_tol);
    } else if (est.kind == "tikhonov") {
      res = tikhonov(sys, est.lambda_reg);
    } else if (est.kind == "tsvd") {
      res = tsvd(sys, est.cut);
    } else {
      throw std::invalid_argument("fano_experiment: unknown estimator kind " + est.kind);
    }
    const RadialKernel est_kernel = RadialKernel::basis_expansion(
        std::vector<double>(res.theta.data(), res.theta.data() + res.theta.size()), shared_basis);
    const int chosen = min_distance_test(est_kernel, set, model);
    out.replicas[static_cast<std::size_t>(rep)] = {k, chosen, chosen != k};
  });

  for (const auto& r : out.replicas) out.errors += r.error ? 1 : 0;
  out.p_err = double(out.errors) / reps;
  out.binom_se = std::sqrt(std::max(out.p_err * (1.0 - out.p_err), 1e-12) / reps);
  return out;
}

}  // namespace lowerbound
}  // namespace ik
