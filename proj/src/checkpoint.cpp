#include "toric/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace toric {
namespace {

constexpr char kMagic[4] = {'T', 'L', 'Q', 'C'};
constexpr uint32_t kVersion = 1;

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& in, void* data, std::size_t n, const char* what) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n)
    throw std::runtime_error(std::string("checkpoint truncated while reading ") + what);
}

void write_array(std::ofstream& out, const std::vector<double>& a) {
  write_bytes(out, a.data(), a.size() * sizeof(double));
}

std::vector<double> read_array(std::ifstream& in, std::size_t n, const char* what) {
  std::vector<double> a(n);
  read_bytes(in, a.data(), n * sizeof(double), what);
  return a;
}

}  // namespace

nlohmann::json config_to_json(const QNetworkConfig& cfg) {
  nlohmann::json j;
  j["d"] = cfg.d;
  auto convs = nlohmann::json::array();
  for (const ConvSpec& c : cfg.conv_specs) convs.push_back({c.filters, c.kernel, c.stride});
  j["conv_specs"] = std::move(convs);
  j["fc_sizes"] = cfg.fc_sizes;
  j["outputs"] = cfg.outputs;
  j["precision"] = cfg.precision == Precision::kF32 ? "f32" : "f64";
  return j;
}

QNetworkConfig config_from_json(const nlohmann::json& j) {
  QNetworkConfig cfg;
  cfg.d = j.at("d").get<int>();
  cfg.conv_specs.clear();
  for (const auto& c : j.at("conv_specs"))
    cfg.conv_specs.push_back({c.at(0).get<int>(), c.at(1).get<int>(), c.at(2).get<int>()});
  cfg.fc_sizes = j.at("fc_sizes").get<std::vector<int>>();
  cfg.outputs = j.at("outputs").get<int>();
  std::string prec = j.value("precision", "f64");
  if (prec == "f32")
    cfg.precision = Precision::kF32;
  else if (prec == "f64")
    cfg.precision = Precision::kF64;
  else
    throw std::runtime_error("unknown precision tag: " + prec);
  return cfg;
}

void save_checkpoint(const std::string& path, const QNetworkParams& params, const AdamState& adam,
                     const nlohmann::json& extra) {
  if (adam.m.size() != params.theta.size() || adam.v.size() != params.theta.size())
    throw std::invalid_argument("optimizer state does not match the parameter shape");
  nlohmann::json header;
  header["config"] = config_to_json(params.config);
  header["adam"] = {{"lr", adam.lr},
                    {"beta1", adam.beta1},
                    {"beta2", adam.beta2},
                    {"eps", adam.eps},
                    {"step", adam.step}};
  header["sizes"] = {{"theta", params.theta.size()}, {"m", adam.m.size()}, {"v", adam.v.size()}};
  header["extra"] = extra;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  write_bytes(out, kMagic, sizeof(kMagic));
  uint32_t version = kVersion;
  write_bytes(out, &version, sizeof(version));
  uint64_t len = text.size();
  write_bytes(out, &len, sizeof(len));
  write_bytes(out, text.data(), text.size());
  write_array(out, params.theta);
  write_array(out, adam.m);
  write_array(out, adam.v);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  read_bytes(in, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  uint32_t version = 0;
  read_bytes(in, &version, sizeof(version), "version");
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  uint64_t len = 0;
  read_bytes(in, &len, sizeof(len), "header length");
  std::string text(len, '\0');
  read_bytes(in, text.data(), len, "header");
  nlohmann::json header = nlohmann::json::parse(text);

  Checkpoint ck;
  ck.params.config = config_from_json(header.at("config"));
  const auto& sizes = header.at("sizes");
  std::size_t n_theta = sizes.at("theta").get<std::size_t>();
  if (n_theta != param_count(ck.params.config))
    throw std::runtime_error("checkpoint parameter count does not match its config");
  ck.params.theta = read_array(in, n_theta, "theta");
  const auto& adam = header.at("adam");
  ck.adam.lr = adam.at("lr").get<double>();
  ck.adam.beta1 = adam.at("beta1").get<double>();
  ck.adam.beta2 = adam.at("beta2").get<double>();
  ck.adam.eps = adam.at("eps").get<double>();
  ck.adam.step = adam.at("step").get<int64_t>();
  ck.adam.m = read_array(in, sizes.at("m").get<std::size_t>(), "first moment");
  ck.adam.v = read_array(in, sizes.at("v").get<std::size_t>(), "second moment");
  if (ck.adam.m.size() != n_theta || ck.adam.v.size() != n_theta)
    throw std::runtime_error("checkpoint moment arrays do not match the parameter count");
  ck.extra = header.value("extra", nlohmann::json::object());
  return ck;
}

}  // namespace toric
