#include "ultrasr/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ultrasr/hash.hpp"
#include "ultrasr/rng.hpp"

namespace ultrasr {
namespace {

std::vector<std::filesystem::path> png_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw ImageError("dataset directory '" + dir.string() + "' does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

using Color = std::array<double, 3>;

Color random_color(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {u(rng), u(rng), u(rng)};
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  for (const auto& f : png_files(dir)) {
    ds.names.push_back(f.filename().string());
    ds.images.push_back(load_png(f));
  }
  if (ds.empty()) throw ImageError("dataset directory '" + dir.string() + "' has no PNG files");
  return ds;
}

std::string dataset_fingerprint(const std::filesystem::path& dir) {
  Fnv1a h;
  for (const auto& f : png_files(dir)) {
    h.mix(f.filename().string());
    std::ifstream in(f, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    h.mix(ss.str());
  }
  return h.hex();
}

Image synthesize_image(std::size_t size, std::uint64_t seed, std::size_t index) {
  Rng rng(splitmix64(splitmix64(seed ^ static_cast<std::uint64_t>(Stream::dataset)) + index));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double n = static_cast<double>(size);
  constexpr double two_pi = 2.0 * std::numbers::pi;

  // Smooth gradient between two colors along a random direction.
  const Color g0 = random_color(rng), g1 = random_color(rng);
  const double gdir = u(rng) * two_pi;

  struct Grating {
    double freq, theta, phase, amp;
    Color color;
  };
  std::vector<Grating> gratings(1 + static_cast<std::size_t>(u(rng) * 2.0));
  for (Grating& g : gratings) {
    g.freq = 0.03 + 0.17 * u(rng);  // cycles per pixel
    g.theta = u(rng) * std::numbers::pi;
    g.phase = u(rng) * two_pi;
    g.amp = 0.15 + 0.2 * u(rng);
    g.color = random_color(rng);
  }

  const bool checker = u(rng) < 0.7;
  const double cell = 4.0 + 10.0 * u(rng);
  const double ctheta = u(rng) * std::numbers::pi / 2.0;
  const Color c0 = random_color(rng), c1 = random_color(rng);
  // Checkerboard occupies a disc of random center and radius.
  const double cy = n * u(rng), cx = n * u(rng), radius = n * (0.25 + 0.35 * u(rng));

  Image img(size, size);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x) {
      const double fy = static_cast<double>(y) + 0.5, fx = static_cast<double>(x) + 0.5;
      const double t = std::clamp(
          0.5 + ((fx - n / 2) * std::cos(gdir) + (fy - n / 2) * std::sin(gdir)) / n, 0.0, 1.0);
      Color v{};
      for (std::size_t c = 0; c < 3; ++c) v[c] = g0[c] + (g1[c] - g0[c]) * t;
      for (const Grating& g : gratings) {
        const double s = std::sin(two_pi * g.freq *
                                      (fx * std::cos(g.theta) + fy * std::sin(g.theta)) +
                                  g.phase);
        for (std::size_t c = 0; c < 3; ++c) v[c] += g.amp * s * (g.color[c] - 0.5);
      }
      if (checker && std::hypot(fy - cy, fx - cx) < radius) {
        const double ry = fy * std::cos(ctheta) - fx * std::sin(ctheta);
        const double rx = fy * std::sin(ctheta) + fx * std::cos(ctheta);
        const bool odd = (static_cast<long>(std::floor(ry / cell)) +
                          static_cast<long>(std::floor(rx / cell))) % 2 != 0;
        v = odd ? c1 : c0;
      }
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = std::clamp(v[c], 0.0, 1.0);
    }
  return img;
}

std::vector<std::filesystem::path> write_synthetic_corpus(const std::filesystem::path& dir,
                                                          std::size_t count, std::size_t size,
                                                          std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "img_%03zu.png", i);
    out.push_back(dir / name);
    save_png(synthesize_image(size, seed, i), out.back());
  }
  return out;
}

}  // namespace ultrasr
