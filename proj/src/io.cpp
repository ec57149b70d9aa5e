#include "ik/io.hpp"

#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "json.hpp"

namespace ik {
namespace io {

using nlohmann::json;

std::uint64_t fnv1a_bytes(const void* data, std::size_t n, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

json law_to_json(const PositionLaw& law) {
  if (std::holds_alternative<IidUniform>(law)) return {{"kind", "iid_uniform"}};
  if (const auto* em = std::get_if<EulerMaruyamaStep>(&law))
    return {{"kind", "euler_maruyama"},
            {"dt", em->dt},
            {"sigma", em->sigma},
            {"drift", em->drift.to_record()}};
  const auto& mix = std::get<ConditionalIidMixture>(law);
  json comp = json::array();
  for (std::size_t i = 0; i < mix.components.size(); ++i)
    comp.push_back({{"lo", mix.components[i].lo},
                    {"hi", mix.components[i].hi},
                    {"weight", mix.weights[i]}});
  return {{"kind", "mixture"}, {"components", comp}};
}

PositionLaw law_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "iid_uniform") return IidUniform{};
  if (kind == "euler_maruyama")
    return EulerMaruyamaStep{RadialKernel::parse_record(j.at("drift")), j.at("dt"), j.at("sigma")};
  if (kind == "mixture") {
    ConditionalIidMixture mix;
    for (const auto& c : j.at("components")) {
      mix.components.push_back({c.at("lo"), c.at("hi")});
      mix.weights.push_back(c.at("weight"));
    }
    return mix;
  }
  throw std::runtime_error("unknown position law: " + kind);
}

json noise_to_json(const NoiseLaw& law) {
  if (std::holds_alternative<NoiseNone>(law)) return {{"kind", "none"}};
  if (const auto* g = std::get_if<NoiseGaussian>(&law))
    return {{"kind", "gaussian"}, {"sigma_eta", g->sigma_eta}};
  return {{"kind", "centered_uniform"},
          {"half_range", std::get<NoiseCenteredUniform>(law).half_range}};
}

NoiseLaw noise_from_json(const json& j) {
  const std::string kind = j.at("kind");
  if (kind == "none") return NoiseNone{};
  if (kind == "gaussian") return NoiseGaussian{j.at("sigma_eta")};
  if (kind == "centered_uniform") return NoiseCenteredUniform{j.at("half_range")};
  throw std::runtime_error("unknown noise law: " + kind);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& in, std::size_t& offset, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4)
    throw std::runtime_error("dataset parse error: unexpected EOF reading " + what + " at byte " +
                             std::to_string(offset));
  offset += 4;
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void write_f64_block(std::ofstream& out, const std::vector<double>& v) {
  // Little-endian hosts write directly; this project targets x86-64/ARM64.
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_f64_block(std::ifstream& in, std::size_t& offset, std::vector<double>& v,
                    const std::string& what) {
  const std::streamsize bytes = static_cast<std::streamsize>(v.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(v.data()), bytes);
  if (in.gcount() != bytes)
    throw std::runtime_error("dataset parse error: unexpected EOF reading " + what + " at byte " +
                             std::to_string(offset + static_cast<std::size_t>(in.gcount())));
  offset += static_cast<std::size_t>(bytes);
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  out.write("IKDS", 4);
  write_u32(out, 1u);
  write_u32(out, static_cast<std::uint32_t>(data.X.M));
  write_u32(out, static_cast<std::uint32_t>(data.X.N));
  write_u32(out, static_cast<std::uint32_t>(data.X.d));
  write_f64_block(out, data.X.v);
  write_f64_block(out, data.Y.v);
  out.close();

  json side = {{"N", data.config.N},
               {"d", data.config.d},
               {"M", data.config.M},
               {"seed", data.config.seed},
               {"position", law_to_json(data.config.position_law)},
               {"noise", noise_to_json(data.config.noise)},
               {"truth", data.truth_id}};
  std::ofstream js(path + ".json");
  if (!js) throw std::runtime_error("cannot write dataset sidecar: " + path + ".json");
  js << side.dump(2) << "\n";
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::size_t offset = 0;
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "IKDS", 4) != 0)
    throw std::runtime_error("dataset parse error: bad magic at byte 0 in " + path);
  offset = 4;
  const std::uint32_t version = read_u32(in, offset, "version");
  if (version != 1u)
    throw std::runtime_error("dataset parse error: unsupported version " + std::to_string(version) +
                             " at byte 4");
  const std::uint32_t M = read_u32(in, offset, "M");
  const std::uint32_t N = read_u32(in, offset, "N");
  const std::uint32_t d = read_u32(in, offset, "d");

  Dataset data;
  data.X = Array3(M, static_cast<int>(N), static_cast<int>(d));
  data.Y = Array3(M, static_cast<int>(N), static_cast<int>(d));
  read_f64_block(in, offset, data.X.v, "X");
  read_f64_block(in, offset, data.Y.v, "Y");
  char extra;
  if (in.read(&extra, 1), in.gcount() != 0)
    throw std::runtime_error("dataset parse error: trailing bytes at byte " + std::to_string(offset));

  std::ifstream js(path + ".json");
  if (js) {
    json side = json::parse(js);
    data.config.N = side.at("N");
    data.config.d = side.at("d");
    data.config.M = side.at("M");
    data.config.seed = side.at("seed");
    data.config.position_law = law_from_json(side.at("position"));
    data.config.noise = noise_from_json(side.at("noise"));
    data.truth_id = side.value("truth", "");
  } else {
    data.config.N = static_cast<int>(N);
    data.config.d = static_cast<int>(d);
    data.config.M = M;
  }
  return data;
}

void export_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write CSV: " + path);
  out << "m,i,coord,x,y\n";
  for (std::int64_t m = 0; m < data.X.M; ++m)
    for (int i = 0; i < data.X.N; ++i)
      for (int k = 0; k < data.X.d; ++k) {
        const std::size_t idx = (static_cast<std::size_t>(m) * data.X.N + i) * data.X.d + k;
        out << m << ',' << i << ',' << k << ',' << format_double(data.X.v[idx]) << ','
            << format_double(data.Y.v[idx]) << '\n';
      }
}

void save_normal_system(const std::string& csv_path, const std::string& json_path,
                        const NormalSystem& sys, std::uint64_t config_hash, std::uint64_t seed) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write CSV: " + csv_path);
  if (config_hash != 0) {
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx", static_cast<unsigned long long>(config_hash));
    out << "# manifest config_hash=" << hash_hex << " seed=" << seed
        << " version=" << kArtifactVersion << "\n";
  }
  out << "row,col,value\n";
  for (int r = 0; r < sys.n; ++r)
    for (int c = 0; c < sys.n; ++c)
      out << r << ',' << c << ',' << format_double(sys.A(r, c)) << '\n';
  for (int r = 0; r < sys.n; ++r) out << r << ",b," << format_double(sys.b(r)) << '\n';

  json hdr = {{"n", sys.n},          {"M", sys.M},
              {"N", sys.N},          {"lambda_min", sys.lambda_min},
              {"basis", sys.basis_id}, {"checksum", sys.checksum}};
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write JSON: " + json_path);
  js << hdr.dump(2) << "\n";
}

void save_estimate_json(const std::string& path, const EstimateResult& res,
                        const std::string& basis_id) {
  json j = {{"kind", res.kind},
            {"gated", res.gated},
            {"lambda_min", res.lambda_min},
            {"solve_residual", res.solve_residual},
            {"hyperparameter", res.hyperparameter},
            {"basis", basis_id},
            {"coefficients", std::vector<double>(res.theta.data(), res.theta.data() + res.theta.size())}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write JSON: " + path);
  out << j.dump(2) << "\n";
}

std::string position_law_name(const PositionLaw& law) {
  if (std::holds_alternative<IidUniform>(law)) return "iid_uniform";
  if (std::holds_alternative<EulerMaruyamaStep>(law)) return "euler_maruyama";
  return "mixture";
}

std::string noise_law_name(const NoiseLaw& law) {
  if (std::holds_alternative<NoiseNone>(law)) return "none";
  if (std::holds_alternative<NoiseGaussian>(law)) return "gaussian";
  return "centered_uniform";
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns,
                     std::uint64_t config_hash, std::uint64_t seed)
    : out_(path), n_cols_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write CSV: " + path);
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof hash_hex, "%016llx", static_cast<unsigned long long>(config_hash));
  out_ << "# manifest config_hash=" << hash_hex << " seed=" << seed
       << " version=" << kArtifactVersion << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_cols_) throw std::logic_error("CsvWriter: column count mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
}

void CsvWriter::close() { out_.close(); }

}  // namespace io
}  // namespace ik
