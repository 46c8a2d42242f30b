#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ultrasr/image.hpp"

namespace ultrasr {

struct Dataset {
  std::vector<std::string> names;  // file names, sorted
  std::vector<Image> images;

  std::size_t size() const { return images.size(); }
  bool empty() const { return images.empty(); }
};

// Every *.png directly inside dir, in file-name order.
Dataset load_dataset(const std::filesystem::path& dir);

// FNV-1a over file names and raw file bytes, as 16 hex digits.
std::string dataset_fingerprint(const std::filesystem::path& dir);

// Procedural corpus of sinusoidal gratings, checkerboards and smooth
// gradients. Deterministic for a given seed.
Image synthesize_image(std::size_t size, std::uint64_t seed, std::size_t index);

// Writes img_000.png ... into dir (created if needed); returns the paths.
std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir,
                                                          std::size_t count, std::size_t size,
                                                          std::uint64_t seed);

}  // namespace ultrasr
