#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "ik/config.hpp"
#include "ik/experiments.hpp"
#include "ik/io.hpp"

using namespace ik;

namespace {

std::filesystem::path tmp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "ik_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("dataset round trip is bit-identical") {
  SystemConfig cfg;
  cfg.N = 4;
  cfg.d = 2;
  cfg.M = 37;
  cfg.seed = 123;
  cfg.noise = NoiseGaussian{0.2};
  const Dataset data = generate(cfg, RadialKernel::power(1.0));
  const auto path = (tmp_dir() / "round.ikds").string();
  io::save_dataset(path, data);
  const Dataset back = io::load_dataset(path);
  CHECK(back.X.v == data.X.v);
  CHECK(back.Y.v == data.Y.v);
  CHECK(back.config.N == 4);
  CHECK(back.config.seed == 123);
  CHECK(back.truth_id == data.truth_id);
  io::export_dataset_csv(path + ".csv", data);
  CHECK(std::filesystem::exists(path + ".csv"));
}

TEST_CASE("dataset loader reports byte offsets") {
  const auto dir = tmp_dir();
  const auto bad_magic = (dir / "bad_magic.ikds").string();
  {
    std::ofstream out(bad_magic, std::ios::binary);
    out << "NOPE1234567890";
  }
  CHECK_THROWS_WITH_AS(io::load_dataset(bad_magic), doctest::Contains("byte 0"),
                       std::runtime_error);

  const auto truncated = (dir / "trunc.ikds").string();
  {
    std::ofstream out(truncated, std::ios::binary);
    out << "IKDS";
    const std::uint32_t v = 1, M = 5, N = 3, d = 1;
    out.write(reinterpret_cast<const char*>(&v), 4);
    out.write(reinterpret_cast<const char*>(&M), 4);
    out.write(reinterpret_cast<const char*>(&N), 4);
    out.write(reinterpret_cast<const char*>(&d), 4);
    const double x = 0.5;
    out.write(reinterpret_cast<const char*>(&x), 8);  // far too few doubles
  }
  CHECK_THROWS_WITH_AS(io::load_dataset(truncated), doctest::Contains("unexpected EOF"),
                       std::runtime_error);
}

TEST_CASE("csv writer emits a manifest row") {
  const auto path = (tmp_dir() / "manifest.csv").string();
  io::CsvWriter csv(path, {"a", "b"}, 0xabcdef, 7);
  csv.row({"1", "2"});
  CHECK_THROWS(csv.row({"1"}));
  csv.close();
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line.find("# manifest") == 0);
  CHECK(line.find("seed=7") != std::string::npos);
  CHECK(line.find("config_hash=0000000000abcdef") != std::string::npos);
  std::getline(in, line);
  CHECK(line == "a,b");
}

TEST_CASE("config parsing: defaults, overrides, strictness") {
  const std::string text = R"(
[system]
N = 5
M = 2048
seed = 9

[kernel]
type = expansion
decay = 1.75

[basis]
kind = poly
n = 40

[experiment]
kind = rate_sweep
M_list = 512,1024,2048
beta = 1
replicates = 4
)";
  const ExperimentConfig cfg = parse_config_text(text);
  CHECK(cfg.system.N == 5);
  CHECK(cfg.system.M == 2048);
  CHECK(cfg.kernel.is_expansion);
  CHECK(cfg.basis.n == 40);
  CHECK(cfg.M_list.size() == 3);
  CHECK(cfg.config_hash != 0);

  CHECK_THROWS_WITH_AS(parse_config_text("[system]\nbogus_key = 1\n"),
                       doctest::Contains("unknown key"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_config_text("[warp]\nx = 1\n"), doctest::Contains("unknown section"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(
      parse_config_text("[experiment]\nkind = rate_sweep\nM_list = 100,100\n"),
      doctest::Contains("strictly increasing"), std::runtime_error);
  CHECK_THROWS(parse_config_text("[experiment]\nkind = warp_drive\n"));
}

TEST_CASE("normal system and estimate exports") {
  SystemConfig cfg;
  cfg.N = 3;
  cfg.d = 1;
  cfg.M = 64;
  cfg.seed = 2;
  const Dataset data = generate(cfg, RadialKernel::power(1.0));
  const DensityModel m = DensityModel::analytic_uniform_pair();
  const BasisFamily fam = poly_basis(4, m, {0.0, 0.95});
  const NormalSystem sys = assemble(data, fam, 4);
  const auto dir = tmp_dir();
  io::save_normal_system((dir / "ns.csv").string(), (dir / "ns.json").string(), sys);
  const EstimateResult res = tlse(sys, default_tlse_threshold(3));
  io::save_estimate_json((dir / "est.json").string(), res, fam.id());
  std::ifstream js(dir / "est.json");
  std::string all((std::istreambuf_iterator<char>(js)), std::istreambuf_iterator<char>());
  CHECK(all.find("\"gated\"") != std::string::npos);
  CHECK(all.find("\"coefficients\"") != std::string::npos);
}

TEST_CASE("loglog fit: exact power laws") {
  std::vector<std::pair<double, double>> pts;
  for (double x : {1.0, 2.0, 4.0, 8.0, 16.0}) pts.emplace_back(x, std::pow(x, -2.0 / 3));
  LogLogFit f = fit_loglog_slope(pts);
  CHECK(f.slope == doctest::Approx(-2.0 / 3).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

  pts.clear();
  for (double x : {1.0, 3.0, 9.0}) pts.emplace_back(x, 5.0);
  f = fit_loglog_slope(pts);
  CHECK(f.slope == doctest::Approx(0.0).epsilon(1e-12));

  pts.clear();
  for (double x : {1.0, 2.0, 4.0}) pts.emplace_back(x, 4.0 * x * x);
  f = fit_loglog_slope(pts);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  pts = {{1.0, 1.0}, {2.0, -1.0}, {3.0, 1.0}};
  CHECK_THROWS_AS(fit_loglog_slope(pts), std::domain_error);
  pts = {{1.0, 1.0}, {2.0, 1.0}};
  CHECK_THROWS_AS(fit_loglog_slope(pts), std::invalid_argument);
}

TEST_CASE("rate sweep skips the fit on degenerate noiseless data") {
  ExperimentConfig cfg = parse_config_text(R"(
[system]
N = 4
noise = none
seed = 2

[kernel]
type = expansion
decay = 1.75
kbig = 4

[basis]
kind = poly
n = 12

[experiment]
kind = rate_sweep
M_list = 512,1024,2048
beta = 3.0
gamma = 2.0
replicates = 2
)");
  const RateFitResult res = run_rate_sweep(cfg);
  CHECK(res.fit_skipped);
  CHECK(res.note.find("degenerate") != std::string::npos);
  for (const auto& p : res.points) CHECK(p.mean_risk <= 1e-20);
}

TEST_CASE("simulate and estimate experiments round-trip through files") {
  const auto dir = tmp_dir() / "sim_est";
  std::filesystem::remove_all(dir);
  ExperimentConfig cfg = parse_config_text(R"(
[system]
N = 3
M = 128
seed = 44

[kernel]
type = record
spec = power p=1

[basis]
kind = poly
n = 6

[experiment]
kind = simulate
est_n = 4
)");
  cfg.out_dir = dir.string();
  run_experiment(cfg);
  CHECK(std::filesystem::exists(dir / "dataset.ikds"));

  cfg.kind = "estimate";
  cfg.dataset_path = (dir / "dataset.ikds").string();
  run_experiment(cfg);
  CHECK(std::filesystem::exists(dir / "estimate.json"));
  CHECK(std::filesystem::exists(dir / "normal_system.csv"));

  // determinism: rerun and compare JSON bytes
  std::ifstream a(dir / "estimate.json");
  const std::string first((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  run_experiment(cfg);
  std::ifstream b(dir / "estimate.json");
  const std::string second((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(first == second);
}
