#include "ik/measure.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ik/sim.hpp"

namespace ik {

void gauss_legendre_rule(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_rule: n >= 1 required");
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Newton iteration on P_n with the Chebyshev-root initial guess.
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (n == 1) p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double pn = (n == 1) ? x : p1;
      const double pn1 = (n == 1) ? 1.0 : p0;
      pp = n * (x * pn - pn1) / (x * x - 1.0);
      const double dx = pn / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    nodes[i] = -x;
    nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) nodes[n / 2] = 0.0;
}

QuadratureGrid QuadratureGrid::gauss_legendre(Interval iv, int panels, int nodes_per_panel) {
  if (panels < 1 || nodes_per_panel < 1) throw std::invalid_argument("quadrature: bad panel spec");
  std::vector<double> xr, wr;
  gauss_legendre_rule(nodes_per_panel, xr, wr);
  QuadratureGrid g;
  g.interval = iv;
  g.panels = panels;
  const double h = iv.length() / panels;
  g.nodes.reserve(static_cast<std::size_t>(panels) * nodes_per_panel);
  g.weights.reserve(g.nodes.capacity());
  for (int p = 0; p < panels; ++p) {
    const double a = iv.lo + p * h;
    for (int q = 0; q < nodes_per_panel; ++q) {
      g.nodes.push_back(a + 0.5 * h * (xr[q] + 1.0));
      g.weights.push_back(0.5 * h * wr[q]);
    }
  }
  return g;
}

QuadratureGrid QuadratureGrid::gauss_legendre_split(Interval iv, const std::vector<double>& breaks,
                                                    int panels_per_piece, int nodes_per_panel) {
  std::vector<double> cuts{iv.lo};
  for (double b : breaks)
    if (b > iv.lo && b < iv.hi) cuts.push_back(b);
  cuts.push_back(iv.hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  QuadratureGrid g;
  g.interval = iv;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const QuadratureGrid piece =
        gauss_legendre({cuts[i], cuts[i + 1]}, panels_per_piece, nodes_per_panel);
    g.nodes.insert(g.nodes.end(), piece.nodes.begin(), piece.nodes.end());
    g.weights.insert(g.weights.end(), piece.weights.begin(), piece.weights.end());
    g.panels += piece.panels;
  }
  return g;
}

QuadratureGrid QuadratureGrid::refined() const {
  const int npp = panels > 0 ? static_cast<int>(nodes.size()) / panels : 8;
  return gauss_legendre(interval, panels * 2, npp);
}

DensityModel DensityModel::analytic_uniform_pair(double floor_a0) {
  DensityModel m;
  m.kind_ = Kind::AnalyticUniformPair;
  m.floor_a0_ = floor_a0;
  m.compute_support();
  m.validate_mass();
  return m;
}

DensityModel DensityModel::tabulated(std::vector<double> nodes, std::vector<double> values,
                                     double floor_a0) {
  if (nodes.size() != values.size() || nodes.size() < 2)
    throw std::invalid_argument("tabulated density: need >= 2 (node, value) pairs");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i] < nodes[i + 1])) throw std::invalid_argument("tabulated density: nodes must increase");
  for (double v : values)
    if (v < 0.0) throw std::invalid_argument("tabulated density: negative value");
  DensityModel m;
  m.kind_ = Kind::Tabulated;
  m.floor_a0_ = floor_a0;
  m.grid_nodes_ = std::move(nodes);
  m.grid_values_ = std::move(values);
  m.compute_support();
  m.validate_mass();
  return m;
}

DensityModel DensityModel::empirical(std::vector<double> sample, double floor_a0) {
  if (sample.empty()) throw std::invalid_argument("empirical density: empty sample");
  std::sort(sample.begin(), sample.end());
  if (sample.front() < 0.0 || sample.back() > 1.0)
    throw std::invalid_argument("empirical density: sample outside [0,1]");
  DensityModel m;
  m.kind_ = Kind::Empirical;
  m.floor_a0_ = floor_a0;
  m.sample_ = std::move(sample);
  const std::size_t n = m.sample_.size();
  const int bins = static_cast<int>(std::ceil(std::sqrt(double(n))));
  m.hist_lo_ = 0.0;
  m.hist_width_ = 1.0 / bins;
  m.hist_density_.assign(bins, 0.0);
  for (double r : m.sample_) {
    int b = std::min(bins - 1, static_cast<int>(r / m.hist_width_));
    m.hist_density_[b] += 1.0;
  }
  for (double& d : m.hist_density_) d /= double(n) * m.hist_width_;
  m.compute_support();
  return m;
}

double DensityModel::density(double r) const {
  if (r < 0.0 || r > 1.0) throw std::domain_error("density: r outside [0,1]");
  switch (kind_) {
    case Kind::AnalyticUniformPair:
      return 2.0 * (1.0 - r);
    case Kind::Tabulated: {
      if (r <= grid_nodes_.front()) return grid_values_.front();
      if (r >= grid_nodes_.back()) return grid_values_.back();
      const auto it = std::upper_bound(grid_nodes_.begin(), grid_nodes_.end(), r);
      const std::size_t j = static_cast<std::size_t>(it - grid_nodes_.begin());
      const double t = (r - grid_nodes_[j - 1]) / (grid_nodes_[j] - grid_nodes_[j - 1]);
      return (1.0 - t) * grid_values_[j - 1] + t * grid_values_[j];
    }
    case Kind::Empirical: {
      const int bins = static_cast<int>(hist_density_.size());
      const int b = std::min(bins - 1, static_cast<int>(r / hist_width_));
      return hist_density_[b];
    }
  }
  return 0.0;
}

void DensityModel::compute_support() {
  // Scan a fine grid for maximal runs with density > floor; refine run
  // endpoints by bisection against the exact density.
  const int n_scan = 4096;
  runs_.clear();
  bool in_run = false;
  double run_lo = 0.0;
  auto above = [&](double r) { return density(r) > floor_a0_; };
  double prev = 0.0;
  for (int i = 0; i <= n_scan; ++i) {
    const double r = double(i) / n_scan;
    const bool hi = above(r);
    if (hi && !in_run) {
      run_lo = r;
      if (i > 0) {
        double a = prev, b = r;
        for (int it = 0; it < 50; ++it) {
          const double mid = 0.5 * (a + b);
          (above(mid) ? b : a) = mid;
        }
        run_lo = b;
      }
      in_run = true;
    } else if (!hi && in_run) {
      double a = prev, b = r;
      for (int it = 0; it < 50; ++it) {
        const double mid = 0.5 * (a + b);
        (above(mid) ? a : b) = mid;
      }
      runs_.push_back({run_lo, a});
      in_run = false;
    }
    prev = r;
  }
  if (in_run) runs_.push_back({run_lo, 1.0});
  if (runs_.empty()) {
    support_ = {0.0, 0.0};
    return;
  }
  support_ = *std::max_element(runs_.begin(), runs_.end(),
                               [](const Interval& a, const Interval& b) { return a.length() < b.length(); });
}

void DensityModel::validate_mass() const {
  const QuadratureGrid g = QuadratureGrid::gauss_legendre({0.0, 1.0}, 128, 8);
  double mass = 0.0;
  for (std::size_t q = 0; q < g.nodes.size(); ++q) mass += g.weights[q] * density(g.nodes[q]);
  if (std::abs(mass - 1.0) > 1e-8)
    throw std::invalid_argument("density does not integrate to 1 (mass " + std::to_string(mass) + ")");
}

std::string DensityModel::id() const {
  switch (kind_) {
    case Kind::AnalyticUniformPair:
      return "unif_pair";
    case Kind::Tabulated:
      return "tabulated[" + std::to_string(grid_nodes_.size()) + "]";
    case Kind::Empirical:
      return "empirical[" + std::to_string(sample_.size()) + "]";
  }
  return "?";
}

DensityModel empirical_measure(const Dataset& data, double floor_a0) {
  const auto& X = data.X;
  if (X.M < 1 || X.N < 2) throw std::invalid_argument("empirical_measure: need M >= 1, N >= 2");
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(X.M) * X.N * (X.N - 1));
  for (std::int64_t m = 0; m < X.M; ++m) {
    const double* xm = X.sample(m);
    for (int i = 0; i < X.N; ++i)
      for (int j = 0; j < X.N; ++j) {
        if (i == j) continue;
        double s = 0.0;
        for (int k = 0; k < X.d; ++k) {
          const double t = xm[i * X.d + k] - xm[j * X.d + k];
          s += t * t;
        }
        dist.push_back(std::sqrt(s));
      }
  }
  return DensityModel::empirical(std::move(dist), floor_a0);
}

double l2rho_inner(const ScalarFn& f, const ScalarFn& g, const DensityModel& model,
                   const QuadratureGrid& grid) {
  double s = 0.0;
  for (std::size_t q = 0; q < grid.nodes.size(); ++q) {
    const double x = grid.nodes[q];
    s += grid.weights[q] * f(x) * g(x) * model.density(x);
  }
  return s;
}

double l2rho_norm2(const ScalarFn& f, const DensityModel& model, const QuadratureGrid& grid) {
  return l2rho_inner(f, f, model, grid);
}

double ks_distance(const std::vector<double>& sorted_sample, const ScalarFn& cdf) {
  const std::size_t n = sorted_sample.size();
  if (n == 0) throw std::invalid_argument("ks_distance: empty sample");
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double F = cdf(sorted_sample[i]);
    d = std::max(d, std::abs(F - double(i) / n));
    d = std::max(d, std::abs(double(i + 1) / n - F));
  }
  return d;
}

DensityModel load_tabulated_csv(const std::string& path, double floor_a0) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open density CSV: " + path);
  std::vector<double> nodes, values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double r, v;
    if (!(ss >> r >> v)) throw std::runtime_error("bad density CSV line: " + line);
    nodes.push_back(r);
    values.push_back(v);
  }
  return DensityModel::tabulated(std::move(nodes), std::move(values), floor_a0);
}

void save_sample_csv(const std::string& path, const std::vector<double>& sample) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sample CSV: " + path);
  char buf[40];
  for (double r : sample) {
    std::snprintf(buf, sizeof buf, "%.17g\n", r);
    out << buf;
  }
}

}  // namespace ik
