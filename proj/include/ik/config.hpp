// Experiment configuration: a strict key-value tree with sections [system],
// [kernel], [basis], [experiment]. Unknown sections or keys are hard errors.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ik/basis.hpp"
#include "ik/kernels.hpp"
#include "ik/sim.hpp"

namespace ik {

struct BasisSpec {
  std::string kind = "poly";  // poly | trig | haar | indicator
  int n = 32;
  double lo = 0.0, hi = 0.95;
  double a0 = 0.1;
  int panels = 64;
  int nodes_per_panel = 8;
  std::vector<double> breaks;       // indicator partition
  std::string density = "unif_pair";  // unif_pair | csv:<path>
};

struct KernelSpec {
  // Either a kernel record ("power p=1", "indicator a=0.5 b=1 amp=2", ...)
  // or an expansion rule theta_k = k^{-decay} in the configured basis.
  std::string record = "zero";
  bool is_expansion = false;
  double decay = 1.75;
  int kbig = 500;
};

struct ExperimentConfig {
  std::string kind = "rate_sweep";
  SystemConfig system;
  KernelSpec kernel;
  BasisSpec basis;

  std::vector<std::int64_t> M_list;
  double beta = 1.0;
  double gamma = 1.0;
  int replicates = 20;
  std::vector<double> eps_list;
  std::vector<int> n_list;
  int reps = 500;
  std::vector<int> kbar_list;
  double L = 1.0;
  double alpha_target = 1.0 / 9.0;
  double amp_scale = 0.0;  // 0 = auto-scale
  int fano_M = 4096;

  std::string estimator = "tlse";
  double threshold = 0.0;  // 0 = default c/4
  double rank_tol = 1e-10;
  double lambda_reg = 1e-6;
  double cut = 1e-10;
  double kappa = 0.0;  // 0 = Monte Carlo estimate from the basis
  int est_n = 8;

  std::string out_dir = "out";
  std::string dataset_path = "dataset.ikds";
  bool csv_export = false;

  std::uint64_t config_hash = 0;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

DensityModel make_measure(const BasisSpec& spec);
BasisFamily make_basis(const BasisSpec& spec, const DensityModel& measure);
// Resolves the kernel spec; expansions are built over `family`.
RadialKernel make_truth(const KernelSpec& spec, std::shared_ptr<const BasisFamily> family);

}  // namespace ik
