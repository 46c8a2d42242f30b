#pragma once

// Query construction between the feature map and the decoder: pixel-center
// grids, nearest-cell relative coordinates, periodic encoding of those
// coordinates, 3x3 feature unfolding, area-weighted local ensembles and cell
// sizes.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ultrasr/tensor.hpp"

namespace ultrasr {

// (row, column) pair; coordinates live in [-1, 1].
using Vec2 = std::array<double, 2>;

enum class FreqInit {
  paper_2e_n,  // w_n = 2 e^n
  pow2,        // w_n = 2^n
};

FreqInit parse_freq_init(const std::string& s);
std::string to_string(FreqInit f);

// Learnable frequencies w_1..w_F shared by both axes.
struct EncodingParams {
  std::vector<double> freqs;

  std::size_t dim() const { return 4 * freqs.size(); }
};

EncodingParams make_encoding_params(std::size_t encoding_dim,
                                    FreqInit init = FreqInit::paper_2e_n);

// Pixel centers -1 + (2i + 1) / n.
std::vector<double> coord_grid(std::size_t n);

// All pixel centers of an h x w grid, row-major.
std::vector<Vec2> pixel_centers(std::size_t h, std::size_t w);

// Per axis, per frequency: (sin(w d), cos(w d)). Axis-major layout.
std::vector<double> spatial_encoding(const Vec2& delta, const EncodingParams& params);

// [c, h, w] -> [9c, h, w].
template <typename T>
Tensor<T> unfold3x3(const Tensor<T>& fm);

// Neighbors ordered (r0,c0), (r0,c1), (r1,c0), (r1,c1). The weight of each
// is the area spanned by the query and the diagonally opposite neighbor.
std::array<double, 4> ensemble_weights(const Vec2& query,
                                       const std::array<Vec2, 4>& neighbors);

// Flat description of the four neighbor queries of every target, laid out
// target-major: entry 4 * t + k is neighbor k of target t.
struct QueryLayout {
  std::size_t num_targets = 0;
  std::vector<std::int64_t> pixel;  // clamped r * w + c into the feature map
  std::vector<double> rel;          // 2 per entry, nearest-cell units
  std::vector<double> cell;         // 2 per entry, same units
  std::vector<double> weight;       // 1 per entry
};

class QueryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

QueryLayout locate_queries(std::size_t feat_h, std::size_t feat_w,
                           std::span<const Vec2> targets, std::size_t out_h,
                           std::size_t out_w);

struct QueryBundle {
  std::vector<double> feature;   // unfolded, 9C
  Vec2 rel_coord{};
  std::vector<double> encoding;  // empty when no encoding is used
  Vec2 cell{};
};

struct WeightedBundle {
  QueryBundle bundle;
  double weight = 0.0;
};

// Materialized bundles for each target from a raw [c, h, w] feature map.
// Pass a null encoding to leave bundle.encoding empty.
std::vector<std::array<WeightedBundle, 4>> build_queries(
    const Tensor<double>& fm, std::span<const Vec2> targets,
    std::size_t out_h, std::size_t out_w, const EncodingParams* encoding);

}  // namespace ultrasr
