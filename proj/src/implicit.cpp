#include "ultrasr/implicit.hpp"

#include <algorithm>
#include <cmath>

#include "ultrasr/kernels.hpp"

namespace ultrasr {

FreqInit parse_freq_init(const std::string& s) {
  if (s == "paper_2e_n") return FreqInit::paper_2e_n;
  if (s == "pow2") return FreqInit::pow2;
  throw std::invalid_argument("freq_init must be \"paper_2e_n\" or \"pow2\", got \"" +
                              s + "\"");
}

std::string to_string(FreqInit f) {
  return f == FreqInit::paper_2e_n ? "paper_2e_n" : "pow2";
}

EncodingParams make_encoding_params(std::size_t encoding_dim, FreqInit init) {
  if (encoding_dim == 0 || encoding_dim % 4 != 0)
    throw std::invalid_argument("encoding_dim must be a positive multiple of 4, got " +
                                std::to_string(encoding_dim));
  EncodingParams p;
  for (std::size_t n = 1; n <= encoding_dim / 4; ++n) {
    const double k = static_cast<double>(n);
    p.freqs.push_back(init == FreqInit::paper_2e_n ? 2.0 * std::exp(k)
                                                   : std::exp2(k));
  }
  return p;
}

std::vector<double> coord_grid(std::size_t n) {
  std::vector<double> c(n);
  for (std::size_t i = 0; i < n; ++i)
    c[i] = -1.0 + static_cast<double>(2 * i + 1) / static_cast<double>(n);
  return c;
}

std::vector<Vec2> pixel_centers(std::size_t h, std::size_t w) {
  const auto ys = coord_grid(h);
  const auto xs = coord_grid(w);
  std::vector<Vec2> out;
  out.reserve(h * w);
  for (double y : ys)
    for (double x : xs) out.push_back({y, x});
  return out;
}

std::vector<double> spatial_encoding(const Vec2& delta, const EncodingParams& params) {
  const std::size_t nf = params.freqs.size();
  std::vector<double> out(4 * nf);
  kernels::serial::periodic_encode(1, nf, delta.data(), params.freqs.data(), out.data());
  return out;
}

template <typename T>
Tensor<T> unfold3x3(const Tensor<T>& fm) {
  if (fm.rank() != 3)
    throw ShapeError("unfold3x3: feature map must be [c,h,w], got " + shape_str(fm.shape()));
  Tensor<T> out(Shape{9 * fm.dim(0), fm.dim(1), fm.dim(2)});
  kernels::unfold3x3_forward(fm.dim(0), fm.dim(1), fm.dim(2), fm.ptr(), out.ptr());
  return out;
}

template Tensor<float> unfold3x3<float>(const Tensor<float>&);
template Tensor<double> unfold3x3<double>(const Tensor<double>&);

std::array<double, 4> ensemble_weights(const Vec2& query,
                                       const std::array<Vec2, 4>& neighbors) {
  std::array<double, 4> w{};
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const Vec2& opp = neighbors[3 - k];
    w[k] = std::abs(query[0] - opp[0]) * std::abs(query[1] - opp[1]);
    total += w[k];
  }
  if (total < 1e-9) {
    std::size_t nearest = 0;
    double best = INFINITY;
    for (std::size_t k = 0; k < 4; ++k) {
      const double d = std::hypot(query[0] - neighbors[k][0], query[1] - neighbors[k][1]);
      if (d < best) {
        best = d;
        nearest = k;
      }
    }
    w.fill(0.0);
    w[nearest] = 1.0;
    return w;
  }
  for (double& v : w) v /= total;
  return w;
}

namespace {

struct AxisNeighbors {
  std::ptrdiff_t lo;  // ideal (unclamped) lower neighbor index
  double u;           // target position in cell-index units
};

// Continuous index u where feature centers sit on the integers.
AxisNeighbors axis_neighbors(double t, std::size_t n) {
  const double u = (t + 1.0) * static_cast<double>(n) / 2.0 - 0.5;
  return {static_cast<std::ptrdiff_t>(std::floor(u)), u};
}

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1));
}

}  // namespace

QueryLayout locate_queries(std::size_t feat_h, std::size_t feat_w,
                           std::span<const Vec2> targets, std::size_t out_h,
                           std::size_t out_w) {
  if (feat_h == 0 || feat_w == 0 || out_h == 0 || out_w == 0)
    throw QueryError("locate_queries: dimensions must be >= 1");
  QueryLayout q;
  q.num_targets = targets.size();
  q.pixel.resize(4 * targets.size());
  q.rel.resize(8 * targets.size());
  q.cell.resize(8 * targets.size());
  q.weight.resize(4 * targets.size());
  // Cell extent 2/out scaled by N/2 into nearest-cell units.
  const double cell_y = static_cast<double>(feat_h) / static_cast<double>(out_h);
  const double cell_x = static_cast<double>(feat_w) / static_cast<double>(out_w);

  for (std::size_t t = 0; t < targets.size(); ++t) {
    const Vec2& p = targets[t];
    if (!(p[0] >= -1.0 && p[0] <= 1.0 && p[1] >= -1.0 && p[1] <= 1.0))
      throw QueryError("target (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                       ") outside [-1,1]^2");
    const AxisNeighbors ay = axis_neighbors(p[0], feat_h);
    const AxisNeighbors ax = axis_neighbors(p[1], feat_w);
    std::array<Vec2, 4> ideal{};
    for (std::size_t k = 0; k < 4; ++k) {
      const std::ptrdiff_t r = ay.lo + static_cast<std::ptrdiff_t>(k / 2);
      const std::ptrdiff_t c = ax.lo + static_cast<std::ptrdiff_t>(k % 2);
      ideal[k] = {static_cast<double>(r), static_cast<double>(c)};
      const std::size_t e = 4 * t + k;
      q.pixel[e] = static_cast<std::int64_t>(clamp_index(r, feat_h) * feat_w +
                                             clamp_index(c, feat_w));
      q.rel[2 * e] = ay.u - static_cast<double>(r);
      q.rel[2 * e + 1] = ax.u - static_cast<double>(c);
      q.cell[2 * e] = cell_y;
      q.cell[2 * e + 1] = cell_x;
    }
    const auto w = ensemble_weights({ay.u, ax.u}, ideal);
    for (std::size_t k = 0; k < 4; ++k) q.weight[4 * t + k] = w[k];
  }
  return q;
}

std::vector<std::array<WeightedBundle, 4>> build_queries(
    const Tensor<double>& fm, std::span<const Vec2> targets, std::size_t out_h,
    std::size_t out_w, const EncodingParams* encoding) {
  if (fm.rank() != 3)
    throw ShapeError("build_queries: feature map must be [c,h,w], got " +
                     shape_str(fm.shape()));
  const Tensor<double> unfolded = unfold3x3(fm);
  const std::size_t channels = unfolded.dim(0);
  const std::size_t positions = fm.dim(1) * fm.dim(2);
  const QueryLayout layout = locate_queries(fm.dim(1), fm.dim(2), targets, out_h, out_w);

  std::vector<std::array<WeightedBundle, 4>> out(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t)
    for (std::size_t k = 0; k < 4; ++k) {
      const std::size_t e = 4 * t + k;
      WeightedBundle& wb = out[t][k];
      wb.weight = layout.weight[e];
      wb.bundle.feature.resize(channels);
      const auto p = static_cast<std::size_t>(layout.pixel[e]);
      for (std::size_t c = 0; c < channels; ++c)
        wb.bundle.feature[c] = unfolded[c * positions + p];
      wb.bundle.rel_coord = {layout.rel[2 * e], layout.rel[2 * e + 1]};
      wb.bundle.cell = {layout.cell[2 * e], layout.cell[2 * e + 1]};
      if (encoding) wb.bundle.encoding = spatial_encoding(wb.bundle.rel_coord, *encoding);
    }
  return out;
}

}  // namespace ultrasr
