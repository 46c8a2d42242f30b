#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ultrasr/rng.hpp"

namespace ultrasr {

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// H x W x 3 linear intensities in [0, 1], row-major with interleaved
// channels.
struct Image {
  static constexpr std::size_t channels = 3;

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, double fill = 0.0);

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return data[(y * width + x) * channels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * width + x) * channels + c];
  }
  std::size_t size() const { return data.size(); }

  bool operator==(const Image&) const = default;
};

Image crop(const Image& img, std::size_t y0, std::size_t x0, std::size_t h,
           std::size_t w);
Image center_crop(const Image& img, std::size_t h, std::size_t w);
void clamp_unit(Image& img);

// 8-bit RGB PNG. Bytes map to v / 255; saving rounds 255 * v to nearest.
Image load_png(const std::filesystem::path& path);
void save_png(const Image& img, const std::filesystem::path& path);

// Cubic convolution (a = -0.5) with the kernel widened by the scale factor
// when shrinking. Output is clamped to [0, 1].
Image bicubic_resize(const Image& img, std::size_t out_h, std::size_t out_w);

// Cubic convolution kernel with a = -0.5.
double cubic_kernel(double x);

// Returned for identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

// 10 log10(1 / MSE) over all pixels and channels.
double psnr(const Image& a, const Image& b);

struct LaplacianStats {
  double mean_abs_laplacian = 0.0;
  double mean_abs_laplacian_error = 0.0;
};

// Zero-padded [[0,1,0],[1,-4,1],[0,1,0]] per channel; means over all pixels
// and channels of |L(img)| and |L(img) - L(gt)|.
LaplacianStats laplacian_stats(const Image& img, const Image& gt);

struct PatchPair {
  Image lr;
  Image hr;
};

// Crops a random round(scale * lr_size) square from hr and bicubically
// shrinks it to lr_size.
PatchPair make_lr_hr_pair(const Image& hr, double scale, std::size_t lr_size,
                          Rng& rng);

}  // namespace ultrasr
