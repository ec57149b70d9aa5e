#include "ik/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ik/io.hpp"

namespace ik {
namespace {

struct KeyValue {
  std::string value;
  bool used = false;
};
using Section = std::map<std::string, KeyValue>;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::map<std::string, Section> parse_sections(const std::string& text) {
  std::map<std::string, Section> sections;
  const std::set<std::string> known = {"system", "kernel", "basis", "experiment"};
  std::istringstream in(text);
  std::string line, current;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section header");
      current = trim(t.substr(1, t.size() - 2));
      if (!known.count(current))
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unknown section [" + current + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    if (current.empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(t.substr(0, eq));
    sections[current][key] = {trim(t.substr(eq + 1)), false};
  }
  return sections;
}

class SectionReader {
 public:
  SectionReader(std::map<std::string, Section>& all, const std::string& name)
      : name_(name), sec_(all.count(name) ? &all[name] : nullptr) {}

  bool has(const std::string& key) const { return sec_ && sec_->count(key); }
  std::string str(const std::string& key, const std::string& def) {
    if (!has(key)) return def;
    auto& kv = (*sec_)[key];
    kv.used = true;
    return kv.value;
  }
  double num(const std::string& key, double def) {
    if (!has(key)) return def;
    return std::stod(str(key, ""));
  }
  std::int64_t integer(const std::string& key, std::int64_t def) {
    if (!has(key)) return def;
    return std::stoll(str(key, ""));
  }
  bool flag(const std::string& key, bool def) {
    if (!has(key)) return def;
    const std::string v = str(key, "");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::runtime_error("config [" + name_ + "] " + key + ": expected boolean, got '" + v + "'");
  }
  template <class T>
  std::vector<T> list(const std::string& key, const std::vector<T>& def) {
    if (!has(key)) return def;
    std::vector<T> out;
    std::stringstream ss(str(key, ""));
    std::string item;
    while (std::getline(ss, item, ','))
      if (!trim(item).empty()) out.push_back(static_cast<T>(std::stod(trim(item))));
    return out;
  }
  void check_all_used() const {
    if (!sec_) return;
    for (const auto& [key, kv] : *sec_)
      if (!kv.used)
        throw std::runtime_error("config [" + name_ + "]: unknown key '" + key + "'");
  }

 private:
  std::string name_;
  Section* sec_;
};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  auto sections = parse_sections(text);
  ExperimentConfig cfg;
  cfg.config_hash = io::fnv1a_bytes(text.data(), text.size());

  SectionReader sys(sections, "system");
  cfg.system.N = static_cast<int>(sys.integer("N", 3));
  cfg.system.d = static_cast<int>(sys.integer("d", 1));
  cfg.system.M = sys.integer("M", 1024);
  cfg.system.seed = static_cast<std::uint64_t>(sys.integer("seed", 0));
  const std::string pos = sys.str("position", "iid_uniform");
  if (pos == "iid_uniform") {
    cfg.system.position_law = IidUniform{};
  } else if (pos == "euler_maruyama") {
    EulerMaruyamaStep em;
    em.dt = sys.num("em_dt", 0.01);
    em.sigma = sys.num("em_sigma", 1.0);
    em.drift = RadialKernel::parse_record(sys.str("em_kernel", "power p=1"));
    cfg.system.position_law = em;
  } else if (pos == "mixture") {
    ConditionalIidMixture mix;
    // components as lo:hi:weight triples separated by ';'
    std::stringstream comps(sys.str("mixture", "0:1:1"));
    std::string c;
    while (std::getline(comps, c, ';')) {
      std::stringstream cs(c);
      std::string f;
      std::vector<double> v;
      while (std::getline(cs, f, ':')) v.push_back(std::stod(f));
      if (v.size() != 3) throw std::runtime_error("config [system] mixture: expected lo:hi:weight");
      mix.components.push_back({v[0], v[1]});
      mix.weights.push_back(v[2]);
    }
    cfg.system.position_law = mix;
  } else {
    throw std::runtime_error("config [system] position: unknown law '" + pos + "'");
  }
  const std::string noise = sys.str("noise", "gaussian");
  if (noise == "gaussian")
    cfg.system.noise = NoiseGaussian{sys.num("sigma_eta", 0.1)};
  else if (noise == "none")
    cfg.system.noise = NoiseNone{};
  else if (noise == "centered_uniform")
    cfg.system.noise = NoiseCenteredUniform{sys.num("noise_half_range", 0.1)};
  else
    throw std::runtime_error("config [system] noise: unknown law '" + noise + "'");
  sys.check_all_used();

  SectionReader ker(sections, "kernel");
  const std::string ktype = ker.str("type", "record");
  if (ktype == "expansion") {
    cfg.kernel.is_expansion = true;
    cfg.kernel.decay = ker.num("decay", 1.75);
    cfg.kernel.kbig = static_cast<int>(ker.integer("kbig", 500));
  } else if (ktype == "record") {
    cfg.kernel.record = ker.str("spec", "zero");
  } else {
    throw std::runtime_error("config [kernel] type: expected 'record' or 'expansion'");
  }
  ker.check_all_used();

  SectionReader bas(sections, "basis");
  cfg.basis.kind = bas.str("kind", "poly");
  if (cfg.basis.kind != "poly" && cfg.basis.kind != "trig" && cfg.basis.kind != "haar" &&
      cfg.basis.kind != "indicator")
    throw std::runtime_error("config [basis] kind: unknown basis '" + cfg.basis.kind + "'");
  cfg.basis.n = static_cast<int>(bas.integer("n", 32));
  cfg.basis.lo = bas.num("lo", 0.0);
  cfg.basis.hi = bas.num("hi", 0.95);
  cfg.basis.a0 = bas.num("a0", 0.1);
  cfg.basis.panels = static_cast<int>(bas.integer("panels", 64));
  cfg.basis.nodes_per_panel = static_cast<int>(bas.integer("nodes_per_panel", 8));
  cfg.basis.breaks = bas.list<double>("breaks", {});
  cfg.basis.density = bas.str("density", "unif_pair");
  bas.check_all_used();

  SectionReader exp(sections, "experiment");
  cfg.kind = exp.str("kind", "rate_sweep");
  const std::set<std::string> kinds = {"rate_sweep", "tail_sweep",     "coercivity", "lowerbound",
                                       "identity_suite", "simulate",   "estimate"};
  if (!kinds.count(cfg.kind))
    throw std::runtime_error("config [experiment] kind: unknown experiment '" + cfg.kind + "'");
  cfg.M_list = exp.list<std::int64_t>("M_list", {512, 1024, 2048, 4096, 8192, 16384});
  cfg.beta = exp.num("beta", 1.0);
  cfg.gamma = exp.num("gamma", 1.0);
  cfg.replicates = static_cast<int>(exp.integer("replicates", 20));
  cfg.eps_list = exp.list<double>("eps_list", {0.5, 0.75, 0.9});
  cfg.n_list = exp.list<int>("n_list", {2, 4, 8});
  cfg.reps = static_cast<int>(exp.integer("reps", 500));
  cfg.kbar_list = exp.list<int>("kbar_list", {8, 16, 24});
  cfg.L = exp.num("L", 1.0);
  cfg.alpha_target = exp.num("alpha_target", 1.0 / 9.0);
  cfg.amp_scale = exp.num("amp_scale", 0.0);
  cfg.fano_M = static_cast<int>(exp.integer("fano_M", 4096));
  cfg.estimator = exp.str("estimator", "tlse");
  cfg.threshold = exp.num("threshold", 0.0);
  cfg.rank_tol = exp.num("rank_tol", 1e-10);
  cfg.lambda_reg = exp.num("lambda_reg", 1e-6);
  cfg.cut = exp.num("cut", 1e-10);
  cfg.kappa = exp.num("kappa", 0.0);
  cfg.est_n = static_cast<int>(exp.integer("est_n", 8));
  cfg.out_dir = exp.str("out", "out");
  cfg.dataset_path = exp.str("dataset", "dataset.ikds");
  cfg.csv_export = exp.flag("csv_export", false);
  exp.check_all_used();

  if (cfg.kind == "rate_sweep") {
    if (cfg.M_list.size() < 2) throw std::runtime_error("rate_sweep: M_list needs >= 2 entries");
    for (std::size_t i = 0; i + 1 < cfg.M_list.size(); ++i)
      if (!(cfg.M_list[i] < cfg.M_list[i + 1]))
        throw std::runtime_error("rate_sweep: M_list must be strictly increasing");
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

DensityModel make_measure(const BasisSpec& spec) {
  if (spec.density == "unif_pair") return DensityModel::analytic_uniform_pair(spec.a0);
  if (spec.density.rfind("csv:", 0) == 0)
    return load_tabulated_csv(spec.density.substr(4), spec.a0);
  throw std::runtime_error("basis density: expected 'unif_pair' or 'csv:<path>', got '" +
                           spec.density + "'");
}

BasisFamily make_basis(const BasisSpec& spec, const DensityModel& measure) {
  const Interval iv{spec.lo, spec.hi};
  if (spec.kind == "poly")
    return poly_basis(spec.n, measure, iv, spec.panels, spec.nodes_per_panel);
  if (spec.kind == "trig")
    return weighted_trig(spec.n, measure, iv, spec.panels, spec.nodes_per_panel);
  if (spec.kind == "haar") return haar_basis(spec.n, measure, iv);
  if (spec.kind == "indicator") {
    if (spec.breaks.size() < 2) throw std::runtime_error("indicator basis: 'breaks' required");
    return indicator_partition_basis(spec.breaks, measure);
  }
  throw std::runtime_error("unknown basis kind: " + spec.kind);
}

RadialKernel make_truth(const KernelSpec& spec, std::shared_ptr<const BasisFamily> family) {
  if (!spec.is_expansion) return RadialKernel::parse_record(spec.record);
  if (!family) throw std::runtime_error("expansion kernel: basis family required");
  const int k = std::min(spec.kbig, family->size());
  return RadialKernel::basis_expansion(power_decay_coefficients(spec.decay, k), std::move(family));
}

}  // namespace ik
