#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ultrasr/image.hpp"
#include "ultrasr/tensor.hpp"

namespace testutil {

inline std::vector<double> random_vec(std::size_t n, std::uint64_t seed, double lo = -1.0,
                                      double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

template <typename T>
ultrasr::Tensor<T> random_tensor(ultrasr::Shape shape, std::uint64_t seed, double lo = -1.0,
                                 double hi = 1.0) {
  const auto v = random_vec(ultrasr::shape_size(shape), seed, lo, hi);
  return ultrasr::Tensor<T>(std::move(shape), std::vector<T>(v.begin(), v.end()));
}

inline ultrasr::Image random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  ultrasr::Image img(h, w);
  img.data = random_vec(h * w * 3, seed, 0.0, 1.0);
  return img;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("ultrasr_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testutil
