#include "ultrasr/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ultrasr {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

using Kind = CheckpointError::Kind;

template <typename U>
void put(std::string& out, U v) {
  char buf[sizeof(U)];
  std::memcpy(buf, &v, sizeof(U));
  out.append(buf, sizeof(U));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename U>
  U get(const char* what) {
    need(sizeof(U), what);
    U v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }

  std::string take(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError(Kind::truncated, std::string("checkpoint truncation: ") +
                                                 "file ends inside " + what);
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const ModelParams<float>& params, const ModelConfig& cfg) {
  std::string out = "UISR";
  put<std::uint32_t>(out, kCheckpointVersion);
  const std::string json = canonical_json(cfg);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(json.size()));
  out += json;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, t] : params) {
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out += name;
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.append(reinterpret_cast<const char*>(t.ptr()), t.size() * sizeof(float));
  }
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (bytes.size() < 4 || bytes.compare(0, 4, "UISR") != 0) {
    if (bytes.size() < 4 && std::string("UISR").compare(0, bytes.size(), bytes) == 0)
      throw CheckpointError(Kind::truncated, "checkpoint truncation: file ends inside magic");
    throw CheckpointError(Kind::bad_magic, "checkpoint bad magic: expected \"UISR\"");
  }
  r.take(4, "magic");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion)
    throw CheckpointError(Kind::version_mismatch,
                          "checkpoint version mismatch: file has " + std::to_string(version) +
                              ", expected " + std::to_string(kCheckpointVersion));
  const auto json_len = r.get<std::uint32_t>("config length");
  const std::string json = r.take(json_len, "config");
  Checkpoint ck;
  try {
    ck.config = model_config_from_json(nlohmann::json::parse(json));
  } catch (const std::exception& e) {
    throw CheckpointError(Kind::malformed, std::string("checkpoint config invalid: ") + e.what());
  }
  const auto count = r.get<std::uint32_t>("array count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>("array name length");
    std::string name = r.take(name_len, "array name");
    const auto ndim = r.get<std::uint8_t>("array rank");
    Shape shape;
    for (std::uint8_t d = 0; d < ndim; ++d) shape.push_back(r.get<std::uint32_t>("array dims"));
    const std::size_t n = shape_size(shape);
    const std::string raw = r.take(n * sizeof(float), "array data");
    std::vector<float> data(n);
    std::memcpy(data.data(), raw.data(), raw.size());
    if (!ck.params.emplace(std::move(name), Tensor<float>(std::move(shape), std::move(data))).second)
      throw CheckpointError(Kind::malformed, "checkpoint has duplicate array names");
  }
  if (!r.done())
    throw CheckpointError(Kind::malformed, "checkpoint has trailing bytes after the last array");

  const ModelParams<float> expected = init_params<float>(ck.config, 0);
  for (const auto& [name, t] : expected) {
    auto it = ck.params.find(name);
    if (it == ck.params.end() || it->second.shape() != t.shape())
      throw CheckpointError(Kind::malformed,
                            "checkpoint array '" + name + "' missing or mis-shaped for its config");
  }
  if (expected.size() != ck.params.size())
    throw CheckpointError(Kind::malformed, "checkpoint holds arrays its config does not declare");
  return ck;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError(Kind::io, "cannot write '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::filesystem::remove(tmp);
      throw CheckpointError(Kind::io, "write to '" + tmp.string() + "' failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
void save_checkpoint(const ModelParams<T>& params, const ModelConfig& cfg,
                     const std::filesystem::path& path) {
  ModelParams<float> narrow;
  for (const auto& [k, v] : params) narrow[k] = v.template cast<float>();
  write_file_atomic(path, serialize_checkpoint(narrow, cfg));
}

template void save_checkpoint<float>(const ModelParams<float>&, const ModelConfig&,
                                     const std::filesystem::path&);
template void save_checkpoint<double>(const ModelParams<double>&, const ModelConfig&,
                                      const std::filesystem::path&);

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path));
}

}  // namespace ultrasr
