#include <doctest.h>

#include <cstring>

#include "helpers.hpp"
#include "ultrasr/checkpoint.hpp"

using namespace ultrasr;

namespace {

ModelConfig small() {
  ModelConfig m;
  m.enc_channels = 3;
  m.enc_blocks = 1;
  m.hidden_width = 6;
  m.hidden_layers = 2;
  m.encoding_dim = 8;
  m.freq_init = FreqInit::pow2;
  return m;
}

CheckpointError::Kind kind_of(const std::string& bytes) {
  try {
    parse_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  FAIL("parse_checkpoint accepted corrupt bytes");
  return CheckpointError::Kind::io;
}

}  // namespace

TEST_CASE("checkpoints round-trip bit for bit") {
  const ModelConfig m = small();
  const auto p = cast_params<float>(init_params<double>(m, 4));
  const auto dir = testutil::temp_dir("ckpt");
  save_checkpoint(p, m, dir / "a.ckpt");
  const Checkpoint c = load_checkpoint(dir / "a.ckpt");
  CHECK(c.config == m);
  REQUIRE(c.params.size() == p.size());
  for (const auto& [name, t] : p) {
    CAPTURE(name);
    CHECK(c.params.at(name).shape() == t.shape());
    CHECK(std::memcmp(c.params.at(name).data().data(), t.data().data(),
                      t.size() * sizeof(float)) == 0);
  }
  CHECK(serialize_checkpoint(c.params, c.config) == read_file(dir / "a.ckpt"));
  CHECK(!std::filesystem::exists(dir / "a.ckpt.tmp"));
}

TEST_CASE("the header layout is as documented") {
  const ModelConfig m = small();
  const std::string b = serialize_checkpoint(cast_params<float>(init_params<double>(m, 1)), m);
  CHECK(b.substr(0, 4) == "UISR");
  CHECK(static_cast<unsigned char>(b[4]) == kCheckpointVersion);
  const std::string cfg = canonical_json(m);
  std::uint32_t len = 0;
  std::memcpy(&len, b.data() + 8, 4);
  CHECK(len == cfg.size());
  CHECK(b.substr(12, len) == cfg);
}

TEST_CASE("corrupt checkpoints are classified") {
  using K = CheckpointError::Kind;
  const ModelConfig m = small();
  const std::string good = serialize_checkpoint(cast_params<float>(init_params<double>(m, 1)), m);

  std::string magic = good;
  magic[0] = 'X';
  CHECK(kind_of(magic) == K::bad_magic);

  std::string version = good;
  version[4] = 9;
  CHECK(kind_of(version) == K::version_mismatch);

  for (std::size_t cut : {std::size_t{2}, std::size_t{6}, std::size_t{20}, good.size() / 2,
                          good.size() - 1})
    CHECK(kind_of(good.substr(0, cut)) == K::truncated);

  CHECK(kind_of(good + "x") == K::malformed);

  auto missing = cast_params<float>(init_params<double>(m, 1));
  missing.erase("dec.out.b");
  CHECK(kind_of(serialize_checkpoint(missing, m)) == K::malformed);

  CHECK_THROWS_AS(load_checkpoint("/nonexistent/x.ckpt"), CheckpointError);
}
