#include "ik/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "ik/io.hpp"
#include "ik/parallel.hpp"
#include "ik/rng.hpp"
#include "json.hpp"

namespace ik {

using io::CsvWriter;
using io::format_double;
using nlohmann::json;

LogLogFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) throw std::invalid_argument("fit_loglog_slope: >= 3 points required");
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : points) {
    if (!(x > 0.0) || !(y > 0.0))
      throw std::domain_error("fit_loglog_slope: nonpositive value in log-log fit");
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double n = double(points.size());
  const double vxx = sxx - sx * sx / n;
  const double vxy = sxy - sx * sy / n;
  const double vyy = syy - sy * sy / n;
  LogLogFit fit;
  fit.slope = vxy / vxx;
  fit.intercept = (sy - fit.slope * sx) / n;
  const double ss_res = vyy - fit.slope * vxy;
  fit.r2 = (vyy > 1e-30) ? 1.0 - ss_res / vyy : 1.0;
  return fit;
}

namespace {

std::filesystem::path ensure_out_dir(const ExperimentConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

lowerbound::EstimatorSpec estimator_spec(const ExperimentConfig& cfg) {
  lowerbound::EstimatorSpec est;
  est.kind = cfg.estimator;
  est.threshold = cfg.threshold;
  est.rank_tol = cfg.rank_tol;
  est.lambda_reg = cfg.lambda_reg;
  est.cut = cfg.cut;
  return est;
}

EstimateResult run_estimator(const lowerbound::EstimatorSpec& est, const NormalSystem& sys) {
  if (est.kind == "tlse") {
    const double thr = est.threshold > 0.0 ? est.threshold : default_tlse_threshold(sys.N);
    return tlse(sys, thr);
  }
  if (est.kind == "lse") return lse(sys, est.rank_tol);
  if (est.kind == "tikhonov") return tikhonov(sys, est.lambda_reg);
  if (est.kind == "tsvd") return tsvd(sys, est.cut);
  throw std::invalid_argument("unknown estimator kind: " + est.kind);
}

}  // namespace

RateFitResult run_rate_sweep(const ExperimentConfig& cfg) {
  const DensityModel measure = make_measure(cfg.basis);
  const std::int64_t M_max = cfg.M_list.back();
  const int n_max = choose_dimension(M_max, cfg.beta, cfg.gamma);
  BasisSpec bspec = cfg.basis;
  bspec.n = std::max({bspec.n, n_max, cfg.kernel.is_expansion ? cfg.kernel.kbig : 0});
  const auto family = std::make_shared<const BasisFamily>(make_basis(bspec, measure));
  const RadialKernel truth = make_truth(cfg.kernel, family);
  const lowerbound::EstimatorSpec est = estimator_spec(cfg);

  RateFitResult out;
  out.reference_slope = -2.0 * cfg.beta / (2.0 * cfg.beta + 1.0);

  for (const std::int64_t M : cfg.M_list) {
    const int n = choose_dimension(M, cfg.beta, cfg.gamma);
    std::vector<double> risks(static_cast<std::size_t>(cfg.replicates),
                              std::numeric_limits<double>::quiet_NaN());
    std::vector<char> gated(static_cast<std::size_t>(cfg.replicates), 0);
    parallel_for_index(cfg.replicates, [&](std::int64_t rep) {
      SystemConfig sc = cfg.system;
      sc.M = M;
      sc.seed = substream({cfg.system.seed, kStreamRate, static_cast<std::uint64_t>(M),
                           static_cast<std::uint64_t>(rep)});
      try {
        const Dataset data = generate_serial(sc, truth);
        const NormalSystem sys = assemble_serial(data, *family, n);
        const EstimateResult res = run_estimator(est, sys);
        gated[static_cast<std::size_t>(rep)] = res.gated ? 1 : 0;
        risks[static_cast<std::size_t>(rep)] = l2rho_risk(res, truth, *family);
      } catch (const std::exception&) {
        // leave NaN: recorded as a failed trial
      }
    });
    RatePoint pt;
    pt.M = M;
    pt.n = n;
    pt.replicates = cfg.replicates;
    double sum = 0.0, sum2 = 0.0;
    int ok = 0;
    for (int r = 0; r < cfg.replicates; ++r) {
      const double v = risks[static_cast<std::size_t>(r)];
      if (std::isnan(v)) {
        ++pt.failed;
        continue;
      }
      sum += v;
      sum2 += v * v;
      ++ok;
      pt.gated += gated[static_cast<std::size_t>(r)];
    }
    if (ok > 0) {
      pt.mean_risk = sum / ok;
      const double var = std::max(0.0, sum2 / ok - pt.mean_risk * pt.mean_risk);
      pt.se = std::sqrt(var / ok);
    }
    out.points.push_back(pt);
  }

  std::vector<std::pair<double, double>> fit_pts;
  bool degenerate = true;
  for (const auto& p : out.points) {
    if (p.mean_risk > 1e-20) degenerate = false;
    if (p.mean_risk > 0.0) fit_pts.emplace_back(double(p.M), p.mean_risk);
  }
  if (degenerate || fit_pts.size() < 3) {
    out.fit_skipped = true;
    out.note = "degenerate data: risks at machine-epsilon scale, slope fit skipped";
  } else {
    out.fit = fit_loglog_slope(fit_pts);
  }
  return out;
}

TailSweepResult run_tail_sweep(const ExperimentConfig& cfg) {
  const DensityModel measure = make_measure(cfg.basis);
  BasisSpec bspec = cfg.basis;
  const int n_max = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
  bspec.n = std::max(bspec.n, n_max);
  const auto family = std::make_shared<const BasisFamily>(make_basis(bspec, measure));
  const double c = theory::coercivity_constant(cfg.system.N);

  TailSweepResult out;
  out.c = c;
  out.kappa_used = cfg.kappa;
  if (out.kappa_used <= 0.0) {
    // Worst fourth-moment ratio over the unit-norm family members in play.
    for (int k = 0; k < n_max; ++k) {
      std::vector<double> e(static_cast<std::size_t>(k + 1), 0.0);
      e.back() = 1.0;
      const RadialKernel psi_k = RadialKernel::basis_expansion(std::move(e), family);
      out.kappa_used = std::max(
          out.kappa_used, theory::fourth_moment_ratio(psi_k, cfg.system, 20000, measure,
                                                      static_cast<std::uint64_t>(k)));
    }
  }

  for (const int n : cfg.n_list)
    for (const std::int64_t M : cfg.M_list)
      for (const double eps : cfg.eps_list) {
        TailRow row;
        row.n = n;
        row.M = M;
        row.eps = eps;
        row.threshold = (1.0 - eps) * c;
        SystemConfig sc = cfg.system;
        sc.M = M;
        sc.seed = substream({cfg.system.seed, kStreamTail, static_cast<std::uint64_t>(n),
                             static_cast<std::uint64_t>(M),
                             static_cast<std::uint64_t>(std::llround(eps * 1e6))});
        const theory::FrequencyResult freq =
            theory::empirical_tail_frequency(sc, *family, n, row.threshold, cfg.reps);
        row.frequency = freq.frequency;
        row.ci_lo = freq.ci_lo;
        row.ci_hi = freq.ci_hi;
        theory::TailBoundParams p;
        p.n = n;
        p.M = M;
        p.eps = eps;
        p.c = c;
        p.C_max = family->cmax_first(n);
        p.kappa = out.kappa_used;
        p.N = cfg.system.N;
        const theory::TailBound bern = theory::bernstein_tail_bound(p);
        row.bernstein_raw = bern.raw;
        row.bernstein_vacuous = bern.vacuous;
        if (n >= 2 && double(M) >= theory::pacbayes_min_M(p)) {
          const theory::TailBound pb = theory::pacbayes_tail_bound(p);
          row.pacbayes_raw = pb.raw;
          row.pacbayes_vacuous = pb.vacuous;
        } else {
          row.pacbayes_raw = std::numeric_limits<double>::quiet_NaN();
          row.pacbayes_vacuous = true;
        }
        out.rows.push_back(row);
      }
  return out;
}

CoercivityReport run_coercivity(const ExperimentConfig& cfg) {
  const DensityModel measure = make_measure(cfg.basis);
  BasisSpec bspec = cfg.basis;
  const int n_max = *std::max_element(cfg.n_list.begin(), cfg.n_list.end());
  bspec.n = std::max({bspec.n, n_max, cfg.est_n});
  const auto family = std::make_shared<const BasisFamily>(make_basis(bspec, measure));

  CoercivityReport rep;
  rep.target = theory::coercivity_constant(cfg.system.N);
  for (const int n : cfg.n_list) {
    BasisSpec sub = bspec;
    sub.n = n;
    const BasisFamily fam_n = make_basis(sub, measure);
    const theory::OperatorDiscretization disc =
        theory::discretized_normal_operator(fam_n, cfg.system.N);
    rep.lambda_min_by_n.emplace_back(n, smallest_eigenvalue(disc.Lbar));
  }
  rep.hs_norm = theory::hs_norm_G(128, 8);

  const IdentityReport ident = run_identity_suite(cfg, 1000);
  rep.max_identity_residual = ident.max_identity_residual;

  SystemConfig sc = cfg.system;
  const theory::LambdaMinStat stat = theory::mc_lambda_min_stat(sc, *family, cfg.est_n);
  rep.mc_lambda_min = stat.lambda_min;
  rep.mc_lambda_se = stat.se;
  return rep;
}

LowerboundReport run_lowerbound(const ExperimentConfig& cfg) {
  const DensityModel measure = make_measure(cfg.basis);
  BasisSpec bspec = cfg.basis;
  bspec.n = std::max(bspec.n, cfg.est_n);
  const BasisFamily est_basis = make_basis(bspec, measure);
  const double sigma_eta = cfg.system.noise_sigma();
  if (!(sigma_eta > 0.0))
    throw std::runtime_error("lowerbound experiment: Gaussian noise with sigma_eta > 0 required");

  LowerboundReport report;
  for (const int Kbar : cfg.kbar_list) {
    LowerboundSetReport s;
    s.Kbar = Kbar;
    try {
      const lowerbound::IntervalPack pack =
          lowerbound::build_intervals(measure, Kbar, cfg.basis.a0);
      const lowerbound::Codebook book = lowerbound::varshamov_gilbert(Kbar, cfg.system.seed);
      s.K = book.K;
      s.min_hamming = lowerbound::verify_codebook(book);
      s.halfwidth = pack.halfwidth;
      if (s.min_hamming < (Kbar + 7) / 8) {
        s.failure = "codebook separation";
        report.sets.push_back(s);
        continue;
      }
      const double scale =
          cfg.amp_scale > 0.0
              ? cfg.amp_scale
              : lowerbound::auto_scale_amplitude(pack, book, cfg.beta, cfg.L, sigma_eta,
                                                 cfg.system.N, cfg.system.d, cfg.fano_M, measure,
                                                 cfg.alpha_target);
      s.amplitude_scale = scale;
      const lowerbound::HypothesisSet set =
          lowerbound::build_hypotheses(pack, book, cfg.beta, cfg.L, scale, sigma_eta,
                                       cfg.system.N, cfg.system.d, cfg.fano_M, measure);
      s.separation_s = set.separation_s;
      s.alpha_uniform = set.alpha_uniform;
      if (!(set.alpha_uniform < 0.125)) {
        s.failure = "KL budget (alpha >= 1/8)";
        report.sets.push_back(s);
        continue;
      }
      // Conditional KL on a reference dataset drawn from the configured law.
      SystemConfig ref = cfg.system;
      ref.M = cfg.fano_M;
      ref.seed = substream({cfg.system.seed, kStreamMisc, static_cast<std::uint64_t>(Kbar)});
      const Array3 X = sample_positions(ref);
      s.alpha_empirical = lowerbound::kl_budget(set, X).alpha;
      if (!(set.separation_s > 0.0)) {
        s.failure = "separation";
        report.sets.push_back(s);
        continue;
      }
      s.certified = true;

      SystemConfig fano_cfg = cfg.system;
      fano_cfg.M = cfg.fano_M;
      const lowerbound::FanoResult fano = lowerbound::fano_experiment(
          set, fano_cfg, estimator_spec(cfg), est_basis, cfg.est_n, cfg.reps);
      s.p_err = fano.p_err;
      s.fano_floor = fano.fano_floor;
      s.binom_se = fano.binom_se;

      const auto dir = ensure_out_dir(cfg);
      CsvWriter fano_csv((dir / ("fano_K" + std::to_string(Kbar) + ".csv")).string(),
                         {"replicate", "true_k", "chosen_k", "error"}, cfg.config_hash,
                         cfg.system.seed);
      for (std::size_t r = 0; r < fano.replicas.size(); ++r)
        fano_csv.row({std::to_string(r), std::to_string(fano.replicas[r].truth_k),
                      std::to_string(fano.replicas[r].chosen_k),
                      fano.replicas[r].error ? "1" : "0"});

      json jset = {{"Kbar", Kbar},
                   {"K", book.K},
                   {"min_hamming", s.min_hamming},
                   {"centers", pack.centers},
                   {"halfwidth", pack.halfwidth},
                   {"amplitude_scale", scale},
                   {"separation_s", set.separation_s},
                   {"alpha_uniform", set.alpha_uniform},
                   {"alpha_empirical", s.alpha_empirical},
                   {"c_eta", set.c_eta}};
      json words = json::array();
      for (const auto& w : book.words) {
        std::string bits;
        for (auto v : w) bits += v ? '1' : '0';
        words.push_back(bits);
      }
      jset["codebook"] = words;
      std::ofstream js(dir / ("hypotheses_K" + std::to_string(Kbar) + ".json"));
      js << jset.dump(2) << "\n";
    } catch (const std::exception& e) {
      s.failure = e.what();
    }
    report.sets.push_back(s);
  }
  return report;
}

IdentityReport run_identity_suite(const ExperimentConfig& cfg, int cases) {
  IdentityReport rep;
  rep.cases = cases;
  const DensityModel measure = make_measure(cfg.basis);
  BasisSpec bspec = cfg.basis;
  bspec.n = std::max(bspec.n, 6);
  const auto family = std::make_shared<const BasisFamily>(make_basis(bspec, measure));

  std::vector<double> ident(static_cast<std::size_t>(cases)), mom(static_cast<std::size_t>(cases)),
      lin(static_cast<std::size_t>(cases)), exch(static_cast<std::size_t>(cases));
  parallel_for_index(cases, [&](std::int64_t i) {
    RngStream rng(cfg.system.seed, substream({kStreamMisc, 0x1DEAu, static_cast<std::uint64_t>(i)}));
    const int N = 3 + static_cast<int>(rng.below(4));
    const int d = 1 + static_cast<int>(rng.below(3));
    std::vector<double> X(static_cast<std::size_t>(N) * d);
    for (double& x : X) x = rng.uniform01();

    RadialKernel phi = RadialKernel::zero();
    switch (rng.below(4)) {
      case 0:
        phi = RadialKernel::power(0.5 + rng.uniform01());
        break;
      case 1:
        phi = RadialKernel::indicator(0.2, 0.8, rng.uniform(-2.0, 2.0));
        break;
      case 2:
        phi = RadialKernel::gaussian_bump(rng.uniform01(), 0.1 + 0.3 * rng.uniform01(),
                                          rng.uniform(-1.0, 1.0));
        break;
      default: {
        std::vector<double> theta(6);
        for (double& t : theta) t = rng.uniform(-1.0, 1.0);
        phi = RadialKernel::basis_expansion(std::move(theta), family);
      }
    }
    ident[static_cast<std::size_t>(i)] = theory::per_sample_identity(X.data(), N, d, phi);

    const std::vector<double> R = forward(phi, X, N, d);
    double max_mom = 0.0;
    for (int k = 0; k < d; ++k) {
      double s = 0.0;
      for (int p = 0; p < N; ++p) s += R[static_cast<std::size_t>(p * d + k)];
      max_mom = std::max(max_mom, std::abs(s));
    }
    mom[static_cast<std::size_t>(i)] = max_mom;

    // Linearity: a R_phi + b R_psi against a direct pass with a phi + b psi.
    const RadialKernel psi = RadialKernel::power(1.0);
    const double a = rng.uniform(-2.0, 2.0), bscale = rng.uniform(-2.0, 2.0);
    const std::vector<double> Rpsi = forward(psi, X, N, d);
    double max_lin = 0.0;
    {
      std::vector<double> rhs(static_cast<std::size_t>(N) * d, 0.0);
      for (int p = 0; p < N; ++p)
        for (int q = 0; q < N; ++q) {
          if (p == q) continue;
          double r2 = 0.0;
          for (int k = 0; k < d; ++k) {
            const double t = X[static_cast<std::size_t>(p * d + k)] - X[static_cast<std::size_t>(q * d + k)];
            r2 += t * t;
          }
          const double r = std::sqrt(r2);
          if (r < 1e-12) continue;
          const double w = (a * kernel_on_distance(phi, r) + bscale * kernel_on_distance(psi, r)) / r;
          for (int k = 0; k < d; ++k)
            rhs[static_cast<std::size_t>(p * d + k)] +=
                w * (X[static_cast<std::size_t>(p * d + k)] - X[static_cast<std::size_t>(q * d + k)]) / N;
        }
      for (int k = 0; k < N * d; ++k) {
        const double lhs = a * R[static_cast<std::size_t>(k)] + bscale * Rpsi[static_cast<std::size_t>(k)];
        max_lin = std::max(max_lin, std::abs(lhs - rhs[static_cast<std::size_t>(k)]));
      }
    }
    lin[static_cast<std::size_t>(i)] = max_lin;

    // Exchangeability: permute particles, compare permuted forward.
    std::vector<int> perm(static_cast<std::size_t>(N));
    for (int p = 0; p < N; ++p) perm[static_cast<std::size_t>(p)] = p;
    for (int p = N - 1; p > 0; --p)
      std::swap(perm[static_cast<std::size_t>(p)], perm[rng.below(static_cast<std::uint64_t>(p + 1))]);
    std::vector<double> Xp(static_cast<std::size_t>(N) * d);
    for (int p = 0; p < N; ++p)
      for (int k = 0; k < d; ++k)
        Xp[static_cast<std::size_t>(p * d + k)] = X[static_cast<std::size_t>(perm[static_cast<std::size_t>(p)] * d + k)];
    const std::vector<double> Rp = forward(phi, Xp, N, d);
    double max_ex = 0.0;
    for (int p = 0; p < N; ++p)
      for (int k = 0; k < d; ++k)
        max_ex = std::max(max_ex, std::abs(Rp[static_cast<std::size_t>(p * d + k)] -
                                           R[static_cast<std::size_t>(perm[static_cast<std::size_t>(p)] * d + k)]));
    exch[static_cast<std::size_t>(i)] = max_ex;
  });

  for (int i = 0; i < cases; ++i) {
    rep.max_identity_residual = std::max(rep.max_identity_residual, ident[static_cast<std::size_t>(i)]);
    rep.max_momentum_residual = std::max(rep.max_momentum_residual, mom[static_cast<std::size_t>(i)]);
    rep.max_linearity_residual = std::max(rep.max_linearity_residual, lin[static_cast<std::size_t>(i)]);
    rep.max_exchange_residual = std::max(rep.max_exchange_residual, exch[static_cast<std::size_t>(i)]);
  }
  return rep;
}

void run_simulate(const ExperimentConfig& cfg) {
  const auto dir = ensure_out_dir(cfg);
  std::shared_ptr<const BasisFamily> family;
  if (cfg.kernel.is_expansion) {
    const DensityModel measure = make_measure(cfg.basis);
    BasisSpec bspec = cfg.basis;
    bspec.n = std::max(bspec.n, cfg.kernel.kbig);
    family = std::make_shared<const BasisFamily>(make_basis(bspec, measure));
  }
  const RadialKernel truth = make_truth(cfg.kernel, family);
  const Dataset data = generate(cfg.system, truth);
  const std::string path = (dir / cfg.dataset_path).string();
  io::save_dataset(path, data);
  if (cfg.csv_export) io::export_dataset_csv(path + ".csv", data);
  std::cout << "wrote " << path << " (M=" << data.X.M << ", N=" << data.X.N << ", d=" << data.X.d
            << ")\n";
}

void run_estimate(const ExperimentConfig& cfg) {
  const auto dir = ensure_out_dir(cfg);
  const std::filesystem::path in_path(cfg.dataset_path);
  const Dataset data = io::load_dataset(
      in_path.is_absolute() || std::filesystem::exists(in_path) ? in_path.string()
                                                                : (dir / cfg.dataset_path).string());
  const DensityModel measure = make_measure(cfg.basis);
  BasisSpec bspec = cfg.basis;
  bspec.n = std::max(bspec.n, cfg.est_n);
  const BasisFamily family = make_basis(bspec, measure);
  const NormalSystem sys = assemble(data, family, cfg.est_n);
  const EstimateResult res = run_estimator(estimator_spec(cfg), sys);
  io::save_normal_system((dir / "normal_system.csv").string(),
                         (dir / "normal_system.json").string(), sys, cfg.config_hash,
                         cfg.system.seed);
  io::save_estimate_json((dir / "estimate.json").string(), res, family.id());
  std::cout << "estimate: kind=" << res.kind << " gated=" << (res.gated ? "true" : "false")
            << " lambda_min=" << format_double(res.lambda_min) << "\n";
}

void write_loglog_svg(const std::string& path, const std::vector<RatePoint>& points,
                      const LogLogFit& fit, double reference_slope, const std::string& title) {
  const double W = 640, H = 480, ml = 70, mr = 20, mt = 40, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : points) {
    if (p.mean_risk <= 0.0) continue;
    xmin = std::min(xmin, std::log10(double(p.M)));
    xmax = std::max(xmax, std::log10(double(p.M)));
    ymin = std::min(ymin, std::log10(p.mean_risk));
    ymax = std::max(ymax, std::log10(p.mean_risk));
  }
  if (xmax <= xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax <= ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  const double xpad = 0.05 * (xmax - xmin), ypad = 0.1 * (ymax - ymin);
  xmin -= xpad;
  xmax += xpad;
  ymin -= ypad;
  ymax += ypad;
  auto px = [&](double lx) { return ml + (lx - xmin) / (xmax - xmin) * (W - ml - mr); };
  auto py = [&](double ly) { return H - mb - (ly - ymin) / (ymax - ymin) * (H - mt - mb); };

  std::ofstream svg(path);
  if (!svg) throw std::runtime_error("cannot write SVG: " + path);
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
  svg << "<rect width='100%' height='100%' fill='white'/>\n";
  svg << "<text x='" << W / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
      << "</text>\n";
  svg << "<rect x='" << ml << "' y='" << mt << "' width='" << (W - ml - mr) << "' height='"
      << (H - mt - mb) << "' fill='none' stroke='black'/>\n";
  // decade ticks
  for (int e = static_cast<int>(std::ceil(xmin)); e <= static_cast<int>(std::floor(xmax)); ++e) {
    svg << "<line x1='" << px(e) << "' y1='" << (H - mb) << "' x2='" << px(e) << "' y2='"
        << (H - mb + 5) << "' stroke='black'/>\n";
    svg << "<text x='" << px(e) << "' y='" << (H - mb + 20)
        << "' text-anchor='middle' font-size='11'>1e" << e << "</text>\n";
  }
  for (int e = static_cast<int>(std::ceil(ymin)); e <= static_cast<int>(std::floor(ymax)); ++e) {
    svg << "<line x1='" << (ml - 5) << "' y1='" << py(e) << "' x2='" << ml << "' y2='" << py(e)
        << "' stroke='black'/>\n";
    svg << "<text x='" << (ml - 8) << "' y='" << (py(e) + 4)
        << "' text-anchor='end' font-size='11'>1e" << e << "</text>\n";
  }
  svg << "<text x='" << W / 2 << "' y='" << (H - 10)
      << "' text-anchor='middle' font-size='12'>M</text>\n";
  svg << "<text x='15' y='" << H / 2 << "' font-size='12' transform='rotate(-90 15 " << H / 2
      << ")'>mean risk</text>\n";

  // fitted line (natural-log fit; convert to log10 coordinates)
  const double l10 = std::log(10.0);
  auto fit_ly = [&](double lx) { return (fit.intercept + fit.slope * (lx * l10)) / l10; };
  svg << "<line x1='" << px(xmin) << "' y1='" << py(fit_ly(xmin)) << "' x2='" << px(xmax)
      << "' y2='" << py(fit_ly(xmax)) << "' stroke='steelblue' stroke-width='1.5'/>\n";
  // reference-slope guide through the first point
  if (!points.empty() && points.front().mean_risk > 0.0) {
    const double lx0 = std::log10(double(points.front().M));
    const double ly0 = std::log10(points.front().mean_risk);
    auto ref_ly = [&](double lx) { return ly0 + reference_slope * (lx - lx0); };
    svg << "<line x1='" << px(xmin) << "' y1='" << py(ref_ly(xmin)) << "' x2='" << px(xmax)
        << "' y2='" << py(ref_ly(xmax))
        << "' stroke='gray' stroke-width='1' stroke-dasharray='6,4'/>\n";
  }
  for (const auto& p : points) {
    if (p.mean_risk <= 0.0) continue;
    const double x = px(std::log10(double(p.M)));
    const double y = py(std::log10(p.mean_risk));
    if (p.se > 0.0 && p.mean_risk - p.se > 0.0) {
      svg << "<line x1='" << x << "' y1='" << py(std::log10(p.mean_risk + p.se)) << "' x2='" << x
          << "' y2='" << py(std::log10(p.mean_risk - p.se)) << "' stroke='black'/>\n";
    }
    svg << "<circle cx='" << x << "' cy='" << y << "' r='3.5' fill='firebrick'/>\n";
  }
  char label[128];
  std::snprintf(label, sizeof label, "slope %.4f (ref %.4f), R^2 %.4f", fit.slope, reference_slope,
                fit.r2);
  svg << "<text x='" << (W - mr - 5) << "' y='" << (mt + 15)
      << "' text-anchor='end' font-size='12'>" << label << "</text>\n";
  svg << "</svg>\n";
}

namespace {

void emit_rate_outputs(const ExperimentConfig& cfg, const RateFitResult& res) {
  const auto dir = ensure_out_dir(cfg);
  CsvWriter csv((dir / "rate_sweep.csv").string(),
                {"M", "n", "mean_risk", "se", "replicates", "failed", "gated"}, cfg.config_hash,
                cfg.system.seed);
  for (const auto& p : res.points)
    csv.row({std::to_string(p.M), std::to_string(p.n), format_double(p.mean_risk),
             format_double(p.se), std::to_string(p.replicates), std::to_string(p.failed),
             std::to_string(p.gated)});
  csv.close();
  if (!res.fit_skipped)
    write_loglog_svg((dir / "rate_sweep.svg").string(), res.points, res.fit, res.reference_slope,
                     "convergence rate (beta=" + std::to_string(cfg.beta) + ")");
  json j = {{"experiment", "rate_sweep"},
            {"beta", cfg.beta},
            {"gamma", cfg.gamma},
            {"reference_slope", res.reference_slope},
            {"fit_skipped", res.fit_skipped},
            {"note", res.note}};
  if (!res.fit_skipped) {
    j["slope"] = res.fit.slope;
    j["intercept"] = res.fit.intercept;
    j["r2"] = res.fit.r2;
  }
  std::ofstream js(dir / "rate_sweep.json");
  js << j.dump(2) << "\n";
  std::cout << "rate_sweep: ";
  if (res.fit_skipped)
    std::cout << res.note << "\n";
  else
    std::cout << "slope " << res.fit.slope << " (reference " << res.reference_slope << "), R2 "
              << res.fit.r2 << "\n";
}

void emit_tail_outputs(const ExperimentConfig& cfg, const TailSweepResult& res) {
  const auto dir = ensure_out_dir(cfg);
  CsvWriter csv((dir / "tail_sweep.csv").string(),
                {"n", "M", "eps", "threshold", "frequency", "ci_lo", "ci_hi", "bernstein_raw",
                 "pacbayes_raw", "bernstein_vacuous", "pacbayes_vacuous"},
                cfg.config_hash, cfg.system.seed);
  for (const auto& r : res.rows)
    csv.row({std::to_string(r.n), std::to_string(r.M), format_double(r.eps),
             format_double(r.threshold), format_double(r.frequency), format_double(r.ci_lo),
             format_double(r.ci_hi), format_double(r.bernstein_raw), format_double(r.pacbayes_raw),
             r.bernstein_vacuous ? "1" : "0", r.pacbayes_vacuous ? "1" : "0"});
  csv.close();
  std::cout << "tail_sweep: " << res.rows.size() << " cells, c=" << res.c
            << ", kappa=" << res.kappa_used << "\n";
}

void emit_coercivity_outputs(const ExperimentConfig& cfg, const CoercivityReport& rep) {
  const auto dir = ensure_out_dir(cfg);
  json j = {{"experiment", "coercivity"},
            {"target", rep.target},
            {"hs_norm_G", rep.hs_norm},
            {"max_identity_residual", rep.max_identity_residual},
            {"mc_lambda_min", rep.mc_lambda_min},
            {"mc_lambda_se", rep.mc_lambda_se}};
  json by_n = json::array();
  for (const auto& [n, lmin] : rep.lambda_min_by_n) by_n.push_back({{"n", n}, {"lambda_min", lmin}});
  j["discretized"] = by_n;
  std::ofstream js(dir / "coercivity.json");
  js << j.dump(2) << "\n";
  std::cout << "coercivity: target " << rep.target << ", hs_norm " << rep.hs_norm
            << ", mc lambda_min " << rep.mc_lambda_min << " +- " << rep.mc_lambda_se << "\n";
  for (const auto& [n, lmin] : rep.lambda_min_by_n)
    std::cout << "  n=" << n << "  lambda_min(Lbar_n) = " << lmin << "\n";
}

void emit_lowerbound_outputs(const ExperimentConfig& cfg, const LowerboundReport& rep) {
  const auto dir = ensure_out_dir(cfg);
  json sets = json::array();
  for (const auto& s : rep.sets) {
    sets.push_back({{"Kbar", s.Kbar},
                    {"K", s.K},
                    {"min_hamming", s.min_hamming},
                    {"separation_s", s.separation_s},
                    {"alpha_uniform", s.alpha_uniform},
                    {"alpha_empirical", s.alpha_empirical},
                    {"amplitude_scale", s.amplitude_scale},
                    {"certified", s.certified},
                    {"p_err", s.p_err},
                    {"fano_floor", s.fano_floor},
                    {"binom_se", s.binom_se},
                    {"failure", s.failure}});
    std::cout << "lowerbound Kbar=" << s.Kbar;
    if (!s.certified)
      std::cout << " NOT CERTIFIED: " << s.failure << "\n";
    else
      std::cout << " K=" << s.K << " alpha=" << s.alpha_uniform << " p_err=" << s.p_err
                << " floor=" << s.fano_floor << "\n";
  }
  std::ofstream js(dir / "lowerbound.json");
  js << json{{"experiment", "lowerbound"}, {"sets", sets}}.dump(2) << "\n";
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg) {
  if (cfg.kind == "rate_sweep") {
    emit_rate_outputs(cfg, run_rate_sweep(cfg));
    return 0;
  }
  if (cfg.kind == "tail_sweep") {
    emit_tail_outputs(cfg, run_tail_sweep(cfg));
    return 0;
  }
  if (cfg.kind == "coercivity") {
    emit_coercivity_outputs(cfg, run_coercivity(cfg));
    return 0;
  }
  if (cfg.kind == "lowerbound") {
    emit_lowerbound_outputs(cfg, run_lowerbound(cfg));
    return 0;
  }
  if (cfg.kind == "identity_suite") {
    const IdentityReport rep = run_identity_suite(cfg);
    std::cout << "identity_suite over " << rep.cases << " cases:\n"
              << "  per-sample identity residual  " << rep.max_identity_residual << "\n"
              << "  momentum conservation         " << rep.max_momentum_residual << "\n"
              << "  forward linearity             " << rep.max_linearity_residual << "\n"
              << "  exchangeability               " << rep.max_exchange_residual << "\n";
    const auto dir = ensure_out_dir(cfg);
    std::ofstream js(dir / "identity_suite.json");
    js << json{{"experiment", "identity_suite"},
               {"cases", rep.cases},
               {"max_identity_residual", rep.max_identity_residual},
               {"max_momentum_residual", rep.max_momentum_residual},
               {"max_linearity_residual", rep.max_linearity_residual},
               {"max_exchange_residual", rep.max_exchange_residual}}
                 .dump(2)
       << "\n";
    return 0;
  }
  if (cfg.kind == "simulate") {
    run_simulate(cfg);
    return 0;
  }
  if (cfg.kind == "estimate") {
    run_estimate(cfg);
    return 0;
  }
  throw std::runtime_error("unknown experiment kind: " + cfg.kind);
}

}  // namespace ik
