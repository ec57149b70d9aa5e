// File formats: the binary dataset container with its JSON sidecar, CSV
// tables with a replayable manifest row, and JSON exports.
#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ik/estimator.hpp"
#include "ik/sim.hpp"

namespace ik {
namespace io {

std::uint64_t fnv1a_bytes(const void* data, std::size_t n,
                          std::uint64_t h = 0xcbf29ce484222325ull);
std::string format_double(double v);  // shortest round-trip decimal

// Binary container: magic "IKDS", then u32 version, M, N, d, then row-major
// little-endian f64 for X then Y. A JSON sidecar <path>.json carries the
// config and truth record.
void save_dataset(const std::string& path, const Dataset& data);
// Throws with the byte offset on any format violation.
Dataset load_dataset(const std::string& path);
// Columns: m, i, coord, x, y.
void export_dataset_csv(const std::string& path, const Dataset& data);

// CSV (row, col, value) plus a JSON header with n, M, N, lambda_min.
// Nonzero config_hash adds the manifest comment row.
void save_normal_system(const std::string& csv_path, const std::string& json_path,
                        const NormalSystem& sys, std::uint64_t config_hash = 0,
                        std::uint64_t seed = 0);
void save_estimate_json(const std::string& path, const EstimateResult& res,
                        const std::string& basis_id);

std::string position_law_name(const PositionLaw& law);
std::string noise_law_name(const NoiseLaw& law);

// CSV writer that prepends a manifest comment row
//   # manifest config_hash=... seed=... version=...
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns,
            std::uint64_t config_hash, std::uint64_t seed);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  std::size_t n_cols_;
};

constexpr const char* kArtifactVersion = "1.0.0";

}  // namespace io
}  // namespace ik
