#pragma once

// Binary checkpoint layout (all integers little-endian):
//   "UISR"                      magic
//   u32                         format version (1)
//   u32 + bytes                 ModelConfig as canonical JSON
//   u32                         array count
//   per array:
//     u16 + bytes               name, UTF-8
//     u8                        ndim
//     u32 * ndim                dims
//     f32 * prod(dims)          data

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "ultrasr/config.hpp"
#include "ultrasr/model.hpp"

namespace ultrasr {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, version_mismatch, truncated, malformed };

  CheckpointError(Kind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct Checkpoint {
  ModelConfig config;
  ModelParams<float> params;
};

std::string serialize_checkpoint(const ModelParams<float>& params, const ModelConfig& cfg);
Checkpoint parse_checkpoint(const std::string& bytes);

// Written to a temporary sibling and renamed into place.
template <typename T>
void save_checkpoint(const ModelParams<T>& params, const ModelConfig& cfg,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Writes bytes to path atomically (temp file + rename), creating parent
// directories as needed.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace ultrasr
