// Timing comparison between the serial reference kernels and the OpenMP
// paths: dataset generation, normal-system assembly, and tail-frequency
// replicates. Verifies bitwise agreement before reporting speedups.
#include <chrono>
#include <cstdio>
#include <string>

#include "ik/estimator.hpp"
#include "ik/parallel.hpp"
#include "ik/theory.hpp"

using namespace ik;

namespace {

double time_once(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const std::string& name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", name.c_str(), serial_s, parallel_s,
              serial_s / parallel_s, identical ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  std::int64_t M = 20000;
  int n = 16;
  if (argc > 1) M = std::stoll(argv[1]);
  if (argc > 2) n = std::stoi(argv[2]);
  std::printf("benchmark: M=%lld, n=%d, threads=%d\n", static_cast<long long>(M), n,
              max_threads());
  std::printf("%-28s %11s %11s %9s\n", "kernel", "serial", "openmp", "speedup");

  SystemConfig cfg;
  cfg.N = 5;
  cfg.d = 1;
  cfg.M = M;
  cfg.seed = 7;
  cfg.noise = NoiseGaussian{0.1};
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(n, m, {0.0, 0.95}, 128, 8);
  const auto shared = std::make_shared<const BasisFamily>(fam);
  const RadialKernel truth =
      RadialKernel::basis_expansion(power_decay_coefficients(1.75, n), shared);

  Dataset ser_data, par_data;
  const double t_gen_s = time_once([&] { ser_data = generate_serial(cfg, truth); });
  const double t_gen_p = time_once([&] { par_data = generate(cfg, truth); });
  row("generate", t_gen_s, t_gen_p, ser_data.X.v == par_data.X.v && ser_data.Y.v == par_data.Y.v);

  NormalSystem ser_sys, par_sys;
  const double t_asm_s = time_once([&] { ser_sys = assemble_serial(ser_data, fam, n); });
  const double t_asm_p = time_once([&] { par_sys = assemble(ser_data, fam, n); });
  row("assemble", t_asm_s, t_asm_p, ser_sys.checksum == par_sys.checksum);

  SystemConfig tail = cfg;
  tail.M = std::max<std::int64_t>(200, M / 40);
  theory::FrequencyResult f1, f2;
  const double c = theory::coercivity_constant(cfg.N);
  const int reps = 200;
  set_threads(1);
  const double t_tail_s =
      time_once([&] { f1 = theory::empirical_tail_frequency(tail, fam, std::min(n, 8), 0.5 * c, reps); });
  set_threads(0);
  const double t_tail_p =
      time_once([&] { f2 = theory::empirical_tail_frequency(tail, fam, std::min(n, 8), 0.5 * c, reps); });
  row("tail replicates", t_tail_s, t_tail_p, f1.hits == f2.hits);

  return 0;
}
