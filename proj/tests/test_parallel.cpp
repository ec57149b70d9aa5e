// The OpenMP kernels must agree bit-for-bit with the serial reference and
// be invariant under the thread count.
#include <numeric>

#include "doctest.h"
#include "ik/estimator.hpp"
#include "ik/experiments.hpp"
#include "ik/parallel.hpp"
#include "ik/rng.hpp"
#include "ik/theory.hpp"

using namespace ik;

TEST_CASE("deterministic_reduce matches its own serial plan bitwise") {
  RngStream rng(55, 0);
  std::vector<double> data(10000);
  for (double& v : data) v = rng.uniform(-1.0, 1.0);
  auto chunk_sum = [&](std::int64_t lo, std::int64_t hi) {
    double s = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) s += data[static_cast<std::size_t>(i)];
    return s;
  };
  auto add = [](double& a, const double& b) { a += b; };
  const double serial =
      deterministic_reduce<double>(10000, 256, chunk_sum, add, 0.0, /*parallel=*/false);
  for (int threads : {1, 2, 3, 8}) {
    set_threads(threads);
    const double par = deterministic_reduce<double>(10000, 256, chunk_sum, add, 0.0, true);
    CHECK(par == serial);  // bitwise
  }
  set_threads(0);
}

TEST_CASE("generate matches generate_serial bitwise") {
  SystemConfig cfg;
  cfg.N = 5;
  cfg.d = 2;
  cfg.M = 333;
  cfg.seed = 777;
  cfg.noise = NoiseGaussian{0.15};
  const Dataset par = generate(cfg, RadialKernel::power(1.0));
  const Dataset ser = generate_serial(cfg, RadialKernel::power(1.0));
  CHECK(par.X.v == ser.X.v);
  CHECK(par.Y.v == ser.Y.v);
}

TEST_CASE("assemble matches assemble_serial bitwise across thread counts") {
  SystemConfig cfg;
  cfg.N = 4;
  cfg.d = 1;
  cfg.M = 700;  // several chunks
  cfg.seed = 91;
  const Dataset data = generate_serial(cfg, RadialKernel::power(1.0));
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(6, m, {0.0, 0.95});
  const NormalSystem ser = assemble_serial(data, fam, 6);
  for (int threads : {1, 2, 5, 8}) {
    set_threads(threads);
    const NormalSystem par = assemble(data, fam, 6);
    CHECK(par.checksum == ser.checksum);
    CHECK(par.A == ser.A);
    CHECK(par.b == ser.b);
  }
  set_threads(0);
}

TEST_CASE("tail sweep rows are invariant under the thread count") {
  ExperimentConfig cfg = parse_config_text(R"(
[system]
N = 3
M = 64
seed = 12

[basis]
kind = poly
n = 4

[experiment]
kind = tail_sweep
M_list = 64,128
n_list = 2,3
eps_list = 0.5
reps = 100
kappa = 5
)");
  set_threads(1);
  const TailSweepResult one = run_tail_sweep(cfg);
  set_threads(8);
  const TailSweepResult eight = run_tail_sweep(cfg);
  set_threads(0);
  REQUIRE(one.rows.size() == eight.rows.size());
  for (std::size_t i = 0; i < one.rows.size(); ++i) {
    CHECK(one.rows[i].frequency == eight.rows[i].frequency);
    CHECK(one.rows[i].bernstein_raw == eight.rows[i].bernstein_raw);
  }
}
