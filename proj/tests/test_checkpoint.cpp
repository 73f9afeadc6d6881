#include "toric/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "toric/rng.hpp"

using namespace toric;

namespace {

QNetworkConfig tiny_config() {
  QNetworkConfig cfg;
  cfg.d = 3;
  cfg.conv_specs = {{8, 3, 2}};
  cfg.fc_sizes = {8, 4};
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("config JSON round trip") {
  QNetworkConfig cfg = tiny_config();
  cfg.precision = Precision::kF32;
  QNetworkConfig back = config_from_json(config_to_json(cfg));
  CHECK(back == cfg);
}

TEST_CASE("checkpoint round trip preserves every array bit-for-bit") {
  TempFile file("toric_ck_roundtrip.bin");
  QNetworkConfig cfg = tiny_config();
  QNetworkParams params = init_params(cfg, 5);
  AdamState opt = make_adam(cfg, 2e-4);
  Rng rng(6);
  for (auto& m : opt.m) m = rng.gauss();
  for (auto& v : opt.v) v = rng.uniform();
  opt.step = 1234;
  nlohmann::json extra = {{"episode", 42}, {"p_cursor", 0.07}};

  save_checkpoint(file.path, params, opt, extra);
  Checkpoint ck = load_checkpoint(file.path);
  CHECK(ck.params.config == cfg);
  CHECK(ck.params.theta == params.theta);
  CHECK(ck.adam.lr == opt.lr);
  CHECK(ck.adam.step == opt.step);
  CHECK(ck.adam.m == opt.m);
  CHECK(ck.adam.v == opt.v);
  CHECK(ck.extra == extra);
}

TEST_CASE("identical state writes identical bytes") {
  TempFile a("toric_ck_a.bin"), b("toric_ck_b.bin");
  QNetworkConfig cfg = tiny_config();
  QNetworkParams params = init_params(cfg, 7);
  AdamState opt = make_adam(cfg);
  save_checkpoint(a.path, params, opt, {{"k", 1}});
  Checkpoint ck = load_checkpoint(a.path);
  save_checkpoint(b.path, ck.params, ck.adam, ck.extra);
  CHECK(slurp(a.path) == slurp(b.path));
}

TEST_CASE("garbage and truncated files are refused") {
  TempFile file("toric_ck_bad.bin");
  {
    std::ofstream out(file.path, std::ios::binary);
    out << "definitely not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(file.path), std::runtime_error);

  QNetworkConfig cfg = tiny_config();
  save_checkpoint(file.path, init_params(cfg, 8), make_adam(cfg), {});
  std::string full = slurp(file.path);
  {
    std::ofstream out(file.path, std::ios::binary | std::ios::trunc);
    out.write(full.data(), static_cast<std::streamsize>(full.size() / 2));
  }
  CHECK_THROWS_AS(load_checkpoint(file.path), std::runtime_error);
  CHECK_THROWS_AS(load_checkpoint("/tmp/toric_ck_does_not_exist.bin"), std::runtime_error);
}
