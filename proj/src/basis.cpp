#include "ik/basis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ik {
namespace {

double cell_mass(const DensityModel& model, double a, double b, int nodes) {
  std::vector<double> xr, wr;
  gauss_legendre_rule(nodes, xr, wr);
  double s = 0.0;
  for (int q = 0; q < nodes; ++q) {
    const double x = a + 0.5 * (b - a) * (xr[q] + 1.0);
    s += 0.5 * (b - a) * wr[q] * model.density(x);
  }
  return s;
}

}  // namespace

void BasisFamily::finalize(const std::string& id) {
  id_ = id;
  // Sup norm on the validation grid plus a uniform 4096-node scan.
  const int scan = 4096;
  std::vector<double> vals(static_cast<std::size_t>(n_));
  cmax_prefix_.assign(static_cast<std::size_t>(n_), 0.0);
  auto scan_point = [&](double r) {
    eval_first(r, n_, vals);
    for (int k = 0; k < n_; ++k)
      cmax_prefix_[k] = std::max(cmax_prefix_[k], std::abs(vals[static_cast<std::size_t>(k)]));
  };
  for (double r : grid_.nodes) scan_point(r);
  for (int i = 0; i <= scan; ++i)
    scan_point(interval_.lo + interval_.length() * double(i) / scan);
  for (int k = 1; k < n_; ++k) cmax_prefix_[k] = std::max(cmax_prefix_[k], cmax_prefix_[k - 1]);
  cmax_ = cmax_prefix_.back();

  // Gram matrix on the validation grid.
  const std::size_t Q = grid_.nodes.size();
  Eigen::MatrixXd V(n_, static_cast<Eigen::Index>(Q));
  Eigen::VectorXd w(static_cast<Eigen::Index>(Q));
  for (std::size_t q = 0; q < Q; ++q) {
    eval_first(grid_.nodes[q], n_, vals);
    for (int k = 0; k < n_; ++k) V(k, static_cast<Eigen::Index>(q)) = vals[static_cast<std::size_t>(k)];
    w(static_cast<Eigen::Index>(q)) = grid_.weights[q] * measure_->density(grid_.nodes[q]);
  }
  Eigen::MatrixXd G = V * w.asDiagonal() * V.transpose();
  G.diagonal().array() -= 1.0;
  ortho_residual_ = G.cwiseAbs().maxCoeff();
}

double BasisFamily::cmax_first(int n) const {
  if (n < 1 || n > n_) throw std::invalid_argument("cmax_first: n out of range");
  return cmax_prefix_[static_cast<std::size_t>(n - 1)];
}

double BasisFamily::eval(int k, double r) const {
  if (k < 0 || k >= n_) throw std::invalid_argument("basis eval: index out of range");
  if (!interval_.contains(r)) return 0.0;
  switch (rep_) {
    case Rep::Trig: {
      const double len = interval_.length();
      const double rho = measure_->density(r);
      return std::sqrt(2.0 / len) * std::sin((k + 1) * M_PI * (r - interval_.lo) / len) /
             std::sqrt(rho) / trig_norm_[static_cast<std::size_t>(k)];
    }
    case Rep::PolyRec: {
      double pm = 0.0, p = 1.0 / rec_b_[0];
      for (int j = 0; j < k; ++j) {
        const double pn = ((r - rec_a_[static_cast<std::size_t>(j)]) * p -
                           (j > 0 ? rec_b_[static_cast<std::size_t>(j)] * pm : 0.0)) /
                          rec_b_[static_cast<std::size_t>(j + 1)];
        pm = p;
        p = pn;
      }
      return p;
    }
    case Rep::HaarTree: {
      if (k == 0) return haar_c0_;
      const std::size_t cell = static_cast<std::size_t>(k - 1);
      int level = 0;
      while ((std::size_t(2) << level) - 2 < cell) ++level;  // cells at level L: [2^L-1, 2^{L+1}-2]
      const std::size_t first = (std::size_t(1) << level) - 1;
      const std::size_t pos = cell - first;
      const double width = interval_.length() / double(std::size_t(1) << level);
      const double a = interval_.lo + double(pos) * width;
      const double mid = a + 0.5 * width;
      const double b = a + width;
      if (r < a || r >= b) {
        if (!(r == interval_.hi && b == interval_.hi)) return 0.0;
      }
      return (r < mid) ? haar_alpha_[cell] : -haar_beta_[cell];
    }
    case Rep::Partition: {
      const auto it = std::upper_bound(part_breaks_.begin(), part_breaks_.end(), r);
      std::size_t j = static_cast<std::size_t>(it - part_breaks_.begin());
      if (j == 0) return 0.0;
      if (j >= part_breaks_.size()) j = part_breaks_.size() - 1;  // r at the right endpoint
      return (static_cast<int>(j - 1) == k) ? part_values_[static_cast<std::size_t>(k)] : 0.0;
    }
    case Rep::SeedGS: {
      double s = 0.0;
      for (std::size_t j = 0; j < seeds_.size(); ++j) {
        const double c = coef_[static_cast<std::size_t>(k)][j];
        if (c != 0.0) s += c * seeds_[j](r);
      }
      return s;
    }
  }
  return 0.0;
}

void BasisFamily::eval_first(double r, int n, std::span<double> out) const {
  if (n < 0 || n > n_) throw std::invalid_argument("eval_first: n out of range");
  if (!interval_.contains(r)) {
    std::fill(out.begin(), out.begin() + n, 0.0);
    return;
  }
  switch (rep_) {
    case Rep::PolyRec: {
      double pm = 0.0, p = 1.0 / rec_b_[0];
      for (int k = 0; k < n; ++k) {
        out[static_cast<std::size_t>(k)] = p;
        const double pn = ((r - rec_a_[static_cast<std::size_t>(k)]) * p -
                           (k > 0 ? rec_b_[static_cast<std::size_t>(k)] * pm : 0.0)) /
                          rec_b_[static_cast<std::size_t>(k + 1)];
        pm = p;
        p = pn;
      }
      return;
    }
    case Rep::HaarTree: {
      std::fill(out.begin(), out.begin() + n, 0.0);
      if (n > 0) out[0] = haar_c0_;
      const double len = interval_.length();
      for (int level = 0;; ++level) {
        const std::size_t first = (std::size_t(1) << level) - 1;
        if (first + 1 >= static_cast<std::size_t>(n)) break;  // function index = cell + 1
        const std::size_t cells = std::size_t(1) << level;
        const double width = len / double(cells);
        std::size_t pos = static_cast<std::size_t>((r - interval_.lo) / width);
        if (pos >= cells) pos = cells - 1;
        const std::size_t cell = first + pos;
        const std::size_t idx = cell + 1;
        if (idx >= static_cast<std::size_t>(n)) continue;
        const double a = interval_.lo + double(pos) * width;
        out[idx] = (r < a + 0.5 * width) ? haar_alpha_[cell] : -haar_beta_[cell];
      }
      return;
    }
    default:
      for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = eval(k, r);
  }
}

double BasisFamily::expansion_eval(std::span<const double> theta, double r) const {
  const int n = static_cast<int>(theta.size());
  if (n > n_) throw std::invalid_argument("expansion_eval: more coefficients than basis functions");
  if (!interval_.contains(r)) return 0.0;
  if (rep_ == Rep::HaarTree) {
    double s = (n > 0) ? theta[0] * haar_c0_ : 0.0;
    const double len = interval_.length();
    for (int level = 0;; ++level) {
      const std::size_t first = (std::size_t(1) << level) - 1;
      if (first + 1 >= static_cast<std::size_t>(n)) break;
      const std::size_t cells = std::size_t(1) << level;
      const double width = len / double(cells);
      std::size_t pos = static_cast<std::size_t>((r - interval_.lo) / width);
      if (pos >= cells) pos = cells - 1;
      const std::size_t cell = first + pos;
      const std::size_t idx = cell + 1;
      if (idx >= static_cast<std::size_t>(n)) continue;
      const double a = interval_.lo + double(pos) * width;
      s += theta[idx] * ((r < a + 0.5 * width) ? haar_alpha_[cell] : -haar_beta_[cell]);
    }
    return s;
  }
  if (rep_ == Rep::Partition) {
    const auto it = std::upper_bound(part_breaks_.begin(), part_breaks_.end(), r);
    std::size_t j = static_cast<std::size_t>(it - part_breaks_.begin());
    if (j == 0) return 0.0;
    if (j >= part_breaks_.size()) j = part_breaks_.size() - 1;
    const std::size_t k = j - 1;
    return (k < static_cast<std::size_t>(n)) ? theta[k] * part_values_[k] : 0.0;
  }
  std::vector<double> vals(static_cast<std::size_t>(n));
  eval_first(r, n, vals);
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += theta[static_cast<std::size_t>(k)] * vals[static_cast<std::size_t>(k)];
  return s;
}

BasisFamily weighted_trig(int n, const DensityModel& model, Interval iv, int panels,
                          int nodes_per_panel) {
  if (n < 1) throw std::invalid_argument("weighted_trig: n >= 1 required");
  BasisFamily b;
  b.rep_ = BasisFamily::Rep::Trig;
  b.kind_ = BasisFamily::Kind::WeightedTrig;
  b.n_ = n;
  b.interval_ = iv;
  b.measure_ = std::make_shared<DensityModel>(model);
  b.grid_ = QuadratureGrid::gauss_legendre(iv, panels, nodes_per_panel);
  for (double r : b.grid_.nodes) {
    if (model.density(r) < model.floor())
      throw std::runtime_error("weighted_trig: density below floor on the interval (unbounded basis)");
  }
  // Unit normalization per mode (the weight cancels, so these are ~1).
  b.trig_norm_.assign(static_cast<std::size_t>(n), 1.0);
  for (int k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t q = 0; q < b.grid_.nodes.size(); ++q) {
      const double x = b.grid_.nodes[q];
      const double v = std::sqrt(2.0 / iv.length()) *
                       std::sin((k + 1) * M_PI * (x - iv.lo) / iv.length()) /
                       std::sqrt(model.density(x));
      s += b.grid_.weights[q] * v * v * model.density(x);
    }
    b.trig_norm_[static_cast<std::size_t>(k)] = std::sqrt(s);
  }
  b.finalize("trig[n=" + std::to_string(n) + ",rho=" + model.id() + "]");
  return b;
}

BasisFamily poly_basis(int n, const DensityModel& model, Interval iv, int panels,
                       int nodes_per_panel) {
  if (n < 1) throw std::invalid_argument("poly_basis: n >= 1 required");
  BasisFamily b;
  b.rep_ = BasisFamily::Rep::PolyRec;
  b.kind_ = BasisFamily::Kind::GramSchmidtPoly;
  b.n_ = n;
  b.interval_ = iv;
  b.measure_ = std::make_shared<DensityModel>(model);
  // Per-panel exactness must cover degree 2n+2 products, or the recurrence
  // drifts off the continuum family and high modes spike between nodes.
  const int npp = std::max(nodes_per_panel, n + 8);
  const int eff_panels = std::max(1, panels * nodes_per_panel / npp);
  b.grid_ = QuadratureGrid::gauss_legendre(iv, eff_panels, npp);

  const std::size_t Q = b.grid_.nodes.size();
  std::vector<double> wr(Q);
  for (std::size_t q = 0; q < Q; ++q)
    wr[q] = b.grid_.weights[q] * model.density(b.grid_.nodes[q]);
  auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t q = 0; q < Q; ++q) s += wr[q] * u[q] * v[q];
    return s;
  };

  // Stieltjes procedure for the recurrence coefficients.
  b.rec_a_.assign(static_cast<std::size_t>(n), 0.0);
  b.rec_b_.assign(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> pm(Q, 0.0), p(Q, 1.0), scratch(Q);
  b.rec_b_[0] = std::sqrt(dot(p, p));
  if (!(b.rec_b_[0] > 0.0)) throw std::runtime_error("poly_basis: measure has no mass on the interval");
  for (std::size_t q = 0; q < Q; ++q) p[q] /= b.rec_b_[0];
  for (int k = 0; k < n; ++k) {
    for (std::size_t q = 0; q < Q; ++q) scratch[q] = b.grid_.nodes[q] * p[q];
    const double a = dot(scratch, p);
    b.rec_a_[static_cast<std::size_t>(k)] = a;
    for (std::size_t q = 0; q < Q; ++q)
      scratch[q] = (b.grid_.nodes[q] - a) * p[q] -
                   (k > 0 ? b.rec_b_[static_cast<std::size_t>(k)] * pm[q] : 0.0);
    const double nb = std::sqrt(dot(scratch, scratch));
    if (!(nb > 1e-14)) throw std::runtime_error("poly_basis: recurrence broke down (n too large for grid)");
    b.rec_b_[static_cast<std::size_t>(k + 1)] = nb;
    for (std::size_t q = 0; q < Q; ++q) {
      const double t = scratch[q] / nb;
      pm[q] = p[q];
      p[q] = t;
    }
  }
  b.finalize("poly[n=" + std::to_string(n) + ",lo=" + std::to_string(iv.lo) +
             ",hi=" + std::to_string(iv.hi) + ",rho=" + model.id() + "]");
  return b;
}

BasisFamily haar_basis(int n, const DensityModel& model, Interval iv, int nodes_per_cell) {
  if (n < 1) throw std::invalid_argument("haar_basis: n >= 1 required");
  BasisFamily b;
  b.rep_ = BasisFamily::Rep::HaarTree;
  b.kind_ = BasisFamily::Kind::NormalizedHaar;
  b.n_ = n;
  b.interval_ = iv;
  b.measure_ = std::make_shared<DensityModel>(model);

  const std::size_t n_cells = static_cast<std::size_t>(std::max(1, n - 1));
  int depth = 0;
  while ((std::size_t(1) << (depth + 1)) - 1 < n_cells) ++depth;  // deepest used level
  const int leaf_level = depth + 1;

  // Masses of all cells down to the children of the deepest used level.
  std::vector<double> leaf_mass(std::size_t(1) << leaf_level);
  const double leaf_w = iv.length() / double(leaf_mass.size());
  for (std::size_t p = 0; p < leaf_mass.size(); ++p)
    leaf_mass[p] = cell_mass(model, iv.lo + double(p) * leaf_w, iv.lo + double(p + 1) * leaf_w,
                             nodes_per_cell);
  // mass[level][pos] folded up from the leaves; stored per heap cell.
  std::vector<std::vector<double>> mass(static_cast<std::size_t>(leaf_level + 1));
  mass[static_cast<std::size_t>(leaf_level)] = leaf_mass;
  for (int level = leaf_level - 1; level >= 0; --level) {
    auto& cur = mass[static_cast<std::size_t>(level)];
    const auto& fine = mass[static_cast<std::size_t>(level + 1)];
    cur.assign(std::size_t(1) << level, 0.0);
    for (std::size_t p = 0; p < cur.size(); ++p) cur[p] = fine[2 * p] + fine[2 * p + 1];
  }

  const double total = mass[0][0];
  if (!(total > 0.0)) throw std::runtime_error("haar_basis: measure has no mass on the interval");
  b.haar_c0_ = 1.0 / std::sqrt(total);

  b.haar_alpha_.assign(n_cells, 0.0);
  b.haar_beta_.assign(n_cells, 0.0);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    int level = 0;
    while ((std::size_t(2) << level) - 2 < cell) ++level;
    const std::size_t pos = cell - ((std::size_t(1) << level) - 1);
    const double mL = mass[static_cast<std::size_t>(level + 1)][2 * pos];
    const double mR = mass[static_cast<std::size_t>(level + 1)][2 * pos + 1];
    if (mL < 1e-14 || mR < 1e-14)
      throw std::runtime_error("haar_basis: dyadic cell with (near) zero mass");
    b.haar_alpha_[cell] = std::sqrt(mR / (mL * (mL + mR)));
    b.haar_beta_[cell] = std::sqrt(mL / (mR * (mL + mR)));
  }

  // Validation grid aligned to the finest cells. Integrands against the
  // family are piecewise smooth per leaf, so few nodes per leaf suffice
  // once there are many leaves.
  std::vector<double> cuts;
  for (std::size_t p = 1; p < leaf_mass.size(); ++p) cuts.push_back(iv.lo + double(p) * leaf_w);
  const int panels_per_piece = std::max(1, 256 / static_cast<int>(leaf_mass.size()));
  const int nodes_per_leaf = leaf_mass.size() > 512 ? 4 : 8;
  b.grid_ = QuadratureGrid::gauss_legendre_split(iv, cuts, panels_per_piece, nodes_per_leaf);
  b.finalize("haar[n=" + std::to_string(n) + ",lo=" + std::to_string(iv.lo) +
             ",hi=" + std::to_string(iv.hi) + ",rho=" + model.id() + "]");
  return b;
}

BasisFamily indicator_partition_basis(const std::vector<double>& breakpoints,
                                      const DensityModel& model, int nodes_per_cell) {
  if (breakpoints.size() < 2) throw std::invalid_argument("indicator basis: need >= 2 breakpoints");
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i)
    if (!(breakpoints[i] < breakpoints[i + 1]))
      throw std::invalid_argument("indicator basis: breakpoints must increase");
  BasisFamily b;
  b.rep_ = BasisFamily::Rep::Partition;
  b.kind_ = BasisFamily::Kind::NormalizedHaar;
  b.n_ = static_cast<int>(breakpoints.size()) - 1;
  b.interval_ = {breakpoints.front(), breakpoints.back()};
  b.measure_ = std::make_shared<DensityModel>(model);
  b.part_breaks_ = breakpoints;
  b.part_values_.assign(static_cast<std::size_t>(b.n_), 0.0);
  for (int k = 0; k < b.n_; ++k) {
    const double m = cell_mass(model, breakpoints[static_cast<std::size_t>(k)],
                               breakpoints[static_cast<std::size_t>(k + 1)], nodes_per_cell);
    if (m < 1e-14) throw std::runtime_error("indicator basis: cell with (near) zero mass");
    b.part_values_[static_cast<std::size_t>(k)] = 1.0 / std::sqrt(m);
  }
  std::vector<double> cuts(breakpoints.begin() + 1, breakpoints.end() - 1);
  b.grid_ = QuadratureGrid::gauss_legendre_split(b.interval_, cuts, 8, 8);
  b.finalize("ind[n=" + std::to_string(b.n_) + ",rho=" + model.id() + "]");
  return b;
}

BasisFamily gram_schmidt_basis(const std::vector<ScalarFn>& seeds, const DensityModel& model,
                               const QuadratureGrid& grid, BasisFamily::Kind kind) {
  const int n = static_cast<int>(seeds.size());
  if (n < 1) throw std::invalid_argument("gram_schmidt_basis: need >= 1 seed");
  BasisFamily b;
  b.rep_ = BasisFamily::Rep::SeedGS;
  b.kind_ = kind;
  b.n_ = n;
  b.interval_ = grid.interval;
  b.measure_ = std::make_shared<DensityModel>(model);
  b.grid_ = grid;
  b.seeds_ = seeds;

  const std::size_t Q = grid.nodes.size();
  std::vector<double> wr(Q);
  for (std::size_t q = 0; q < Q; ++q) wr[q] = grid.weights[q] * model.density(grid.nodes[q]);
  auto dot = [&](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t q = 0; q < Q; ++q) s += wr[q] * u[q] * v[q];
    return s;
  };

  std::vector<std::vector<double>> vals(static_cast<std::size_t>(n), std::vector<double>(Q));
  for (int k = 0; k < n; ++k)
    for (std::size_t q = 0; q < Q; ++q) vals[static_cast<std::size_t>(k)][q] = seeds[static_cast<std::size_t>(k)](grid.nodes[q]);

  b.coef_.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n), 0.0));
  for (int k = 0; k < n; ++k) {
    auto& vk = vals[static_cast<std::size_t>(k)];
    auto& ck = b.coef_[static_cast<std::size_t>(k)];
    ck[static_cast<std::size_t>(k)] = 1.0;
    const double norm0 = std::sqrt(dot(vk, vk));
    // Two passes of modified Gram-Schmidt.
    for (int pass = 0; pass < 2; ++pass) {
      for (int j = 0; j < k; ++j) {
        const double c = dot(vk, vals[static_cast<std::size_t>(j)]);
        for (std::size_t q = 0; q < Q; ++q) vk[q] -= c * vals[static_cast<std::size_t>(j)][q];
        for (int t = 0; t <= j; ++t)
          ck[static_cast<std::size_t>(t)] -= c * b.coef_[static_cast<std::size_t>(j)][static_cast<std::size_t>(t)];
      }
    }
    const double nk = std::sqrt(dot(vk, vk));
    if (nk < 1e-10 * std::max(1.0, norm0))
      throw std::runtime_error("gram_schmidt_basis: dependent seeds at index " + std::to_string(k));
    for (std::size_t q = 0; q < Q; ++q) vk[q] /= nk;
    for (int t = 0; t <= k; ++t) ck[static_cast<std::size_t>(t)] /= nk;
  }
  b.finalize("gs[n=" + std::to_string(n) + ",rho=" + model.id() + "]");
  return b;
}

}  // namespace ik
