#include <algorithm>
#include <cmath>

#include "ultrasr/image.hpp"

namespace ultrasr {

Image::Image(std::size_t h, std::size_t w, double fill)
    : height(h), width(w), data(h * w * channels, fill) {
  if (h == 0 || w == 0)
    throw ImageError("image dimensions must be at least 1x1, got " +
                     std::to_string(h) + "x" + std::to_string(w));
}

Image crop(const Image& img, std::size_t y0, std::size_t x0, std::size_t h,
           std::size_t w) {
  if (y0 + h > img.height || x0 + w > img.width)
    throw ImageError("crop " + std::to_string(h) + "x" + std::to_string(w) +
                     " at (" + std::to_string(y0) + "," + std::to_string(x0) +
                     ") exceeds " + std::to_string(img.height) + "x" +
                     std::to_string(img.width));
  Image out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    const double* src = &img.data[((y0 + y) * img.width + x0) * Image::channels];
    std::copy(src, src + w * Image::channels, &out.data[y * w * Image::channels]);
  }
  return out;
}

Image center_crop(const Image& img, std::size_t h, std::size_t w) {
  if (h > img.height || w > img.width)
    throw ImageError("center crop larger than image");
  return crop(img, (img.height - h) / 2, (img.width - w) / 2, h, w);
}

void clamp_unit(Image& img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
}

double psnr(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width)
    throw ImageError("psnr: dimension mismatch " + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + " vs " + std::to_string(b.height) +
                     "x" + std::to_string(b.width));
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

double laplacian_at(const Image& img, std::size_t y, std::size_t x, std::size_t c) {
  double v = -4.0 * img.at(y, x, c);
  if (y > 0) v += img.at(y - 1, x, c);
  if (y + 1 < img.height) v += img.at(y + 1, x, c);
  if (x > 0) v += img.at(y, x - 1, c);
  if (x + 1 < img.width) v += img.at(y, x + 1, c);
  return v;
}

}  // namespace

LaplacianStats laplacian_stats(const Image& img, const Image& gt) {
  if (img.height != gt.height || img.width != gt.width)
    throw ImageError("laplacian_stats: dimension mismatch");
  double abs_sum = 0.0, err_sum = 0.0;
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < Image::channels; ++c) {
        const double li = laplacian_at(img, y, x, c);
        const double lg = laplacian_at(gt, y, x, c);
        abs_sum += std::abs(li);
        err_sum += std::abs(li - lg);
      }
  const auto n = static_cast<double>(img.size());
  return {abs_sum / n, err_sum / n};
}

}  // namespace ultrasr
