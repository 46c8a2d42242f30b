#include <algorithm>
#include <cmath>

#include "ultrasr/image.hpp"

namespace ultrasr {
namespace {

struct Tap {
  std::size_t index;
  double weight;
};

// Per output sample: clamped input indices and normalized weights.
std::vector<std::vector<Tap>> resize_taps(std::size_t in, std::size_t out) {
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const double stretch = std::max(scale, 1.0);
  const double support = 2.0 * stretch;
  std::vector<std::vector<Tap>> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double center = (static_cast<double>(i) + 0.5) * scale - 0.5;
    const auto first = static_cast<std::ptrdiff_t>(std::floor(center - support)) + 1;
    const auto last = static_cast<std::ptrdiff_t>(std::floor(center + support));
    double total = 0.0;
    for (std::ptrdiff_t j = first; j <= last; ++j) {
      const double w = cubic_kernel((static_cast<double>(j) - center) / stretch);
      if (w == 0.0) continue;
      const auto idx = static_cast<std::size_t>(
          std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(in) - 1));
      taps[i].push_back({idx, w});
      total += w;
    }
    for (Tap& t : taps[i]) t.weight /= total;
  }
  return taps;
}

}  // namespace

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double t = std::abs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

Image bicubic_resize(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0)
    throw ImageError("bicubic_resize: output dimensions must be >= 1");
  constexpr std::size_t C = Image::channels;
  const auto tx = resize_taps(img.width, out_w);
  const auto ty = resize_taps(img.height, out_h);

  // Horizontal pass into an in_h x out_w buffer, then vertical.
  std::vector<double> tmp(img.height * out_w * C, 0.0);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < out_w; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (const Tap& t : tx[x]) acc += t.weight * img.at(y, t.index, c);
        tmp[(y * out_w + x) * C + c] = acc;
      }

  Image out(out_h, out_w);
  for (std::size_t y = 0; y < out_h; ++y)
    for (std::size_t x = 0; x < out_w; ++x)
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (const Tap& t : ty[y]) acc += t.weight * tmp[(t.index * out_w + x) * C + c];
        out.at(y, x, c) = std::clamp(acc, 0.0, 1.0);
      }
  return out;
}

PatchPair make_lr_hr_pair(const Image& hr, double scale, std::size_t lr_size,
                          Rng& rng) {
  if (!(scale >= 1.0) || lr_size == 0)
    throw ImageError("make_lr_hr_pair: need scale >= 1 and a positive patch size");
  const auto side =
      static_cast<std::size_t>(std::llround(scale * static_cast<double>(lr_size)));
  if (side > hr.height || side > hr.width)
    throw ImageError("make_lr_hr_pair: " + std::to_string(hr.height) + "x" +
                     std::to_string(hr.width) + " image cannot hold a " +
                     std::to_string(side) + "x" + std::to_string(side) + " crop");
  std::uniform_int_distribution<std::size_t> py(0, hr.height - side);
  std::uniform_int_distribution<std::size_t> px(0, hr.width - side);
  const std::size_t y0 = py(rng);
  const std::size_t x0 = px(rng);
  PatchPair pair;
  pair.hr = crop(hr, y0, x0, side, side);
  pair.lr = bicubic_resize(pair.hr, lr_size, lr_size);
  return pair;
}

}  // namespace ultrasr
