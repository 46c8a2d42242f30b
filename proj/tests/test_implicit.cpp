#include <doctest.h>

#include <cmath>
#include <algorithm>

#include "helpers.hpp"
#include "ultrasr/implicit.hpp"
#include "ultrasr/kernels.hpp"

using namespace ultrasr;

TEST_CASE("coordinate grid holds pixel centers") {
  CHECK(coord_grid(4) == std::vector<double>{-0.75, -0.25, 0.25, 0.75});
  CHECK(coord_grid(1) == std::vector<double>{0.0});
  const auto pc = pixel_centers(2, 3);
  REQUIRE(pc.size() == 6);
  CHECK(pc[1][0] == -0.5);
  CHECK(pc[1][1] == doctest::Approx(0.0));
  CHECK(pc[5][0] == 0.5);
  CHECK(pc[5][1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("encoding of the zero offset alternates 0 and 1") {
  for (std::size_t dim : {4, 12, 24, 48}) {
    const EncodingParams p = make_encoding_params(dim);
    const auto e = spatial_encoding({0.0, 0.0}, p);
    REQUIRE(e.size() == dim);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(e[i] == (i % 2 == 0 ? 0.0 : 1.0));
  }
}

TEST_CASE("twelve frequencies give a 48-wide encoding") {
  const EncodingParams p = make_encoding_params(48);
  CHECK(p.freqs.size() == 12);
  CHECK(p.dim() == 48);
}

TEST_CASE("frequency initializations") {
  const EncodingParams e = make_encoding_params(12);
  REQUIRE(e.freqs.size() == 3);
  for (std::size_t n = 1; n <= 3; ++n)
    CHECK(e.freqs[n - 1] == doctest::Approx(2.0 * std::exp(static_cast<double>(n))));
  const EncodingParams p = make_encoding_params(12, FreqInit::pow2);
  CHECK(p.freqs == std::vector<double>{2.0, 4.0, 8.0});
  CHECK_THROWS(make_encoding_params(10));
  CHECK_THROWS(make_encoding_params(0));
  CHECK(parse_freq_init(to_string(FreqInit::pow2)) == FreqInit::pow2);
  CHECK_THROWS(parse_freq_init("linear"));
}

TEST_CASE("encoding layout and range") {
  const EncodingParams p{{1.5, 3.0}};
  const Vec2 d{0.3, -0.7};
  const auto e = spatial_encoding(d, p);
  REQUIRE(e.size() == 8);
  CHECK(e[0] == doctest::Approx(std::sin(1.5 * 0.3)));
  CHECK(e[3] == doctest::Approx(std::cos(3.0 * 0.3)));
  CHECK(e[6] == doctest::Approx(std::sin(3.0 * -0.7)));
  for (std::uint64_t s = 0; s < 200; ++s) {
    const auto dv = testutil::random_vec(2, s, -5.0, 5.0);
    for (double v : spatial_encoding({dv[0], dv[1]}, make_encoding_params(48))) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("unfold3x3 on tensors agrees with the serial kernel") {
  const auto fm = testutil::random_tensor<double>({3, 4, 5}, 1);
  const Tensor<double> u = unfold3x3(fm);
  CHECK(u.shape() == Shape{27, 4, 5});
  std::vector<double> ref(27 * 20);
  kernels::serial::unfold3x3_forward(3, 4, 5, fm.ptr(), ref.data());
  CHECK(std::vector<double>(u.data().begin(), u.data().end()) == ref);
}

TEST_CASE("ensemble weights form a partition of unity over random queries") {
  const std::size_t fh = 7, fw = 5, oh = 23, ow = 31;
  const auto raw = testutil::random_vec(2 * 10000, 2);
  std::vector<Vec2> targets;
  for (std::size_t i = 0; i < 10000; ++i) targets.push_back({raw[2 * i], raw[2 * i + 1]});
  const QueryLayout q = locate_queries(fh, fw, targets, oh, ow);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    double sum = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      const double w = q.weight[4 * t + k];
      CHECK(w >= 0.0);
      CHECK(w <= 1.0);
      sum += w;
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
  }
}

TEST_CASE("a query on a feature center puts all weight on that neighbor") {
  const auto w = ensemble_weights({2.0, 3.0}, {Vec2{2, 3}, Vec2{2, 4}, Vec2{3, 3}, Vec2{3, 4}});
  CHECK(w == std::array<double, 4>{1.0, 0.0, 0.0, 0.0});
  const auto mid = ensemble_weights({2.5, 3.5}, {Vec2{2, 3}, Vec2{2, 4}, Vec2{3, 3}, Vec2{3, 4}});
  for (double v : mid) CHECK(v == doctest::Approx(0.25));
  const auto degenerate =
      ensemble_weights({1.0, 1.0}, {Vec2{1, 1}, Vec2{1, 1}, Vec2{1, 1}, Vec2{1, 1}});
  CHECK(degenerate[0] == 1.0);
}

TEST_CASE("query geometry matches a brute-force search over feature centers") {
  const std::size_t fh = 5, fw = 4, oh = 13, ow = 9;
  const auto targets = pixel_centers(oh, ow);
  const QueryLayout q = locate_queries(fh, fw, targets, oh, ow);
  const auto centers_y = coord_grid(fh), centers_x = coord_grid(fw);
  for (std::size_t t = 0; t < targets.size(); ++t) {
    // Nearest center at or below the target on each axis (index -1 if none).
    const auto below = [](double v, const std::vector<double>& cs) {
      std::ptrdiff_t idx = -1;
      for (std::size_t i = 0; i < cs.size(); ++i)
        if (cs[i] <= v) idx = static_cast<std::ptrdiff_t>(i);
      return idx;
    };
    const std::ptrdiff_t ry = below(targets[t][0], centers_y);
    const std::ptrdiff_t rx = below(targets[t][1], centers_x);
    for (std::size_t k = 0; k < 4; ++k) {
      const std::ptrdiff_t r = ry + static_cast<std::ptrdiff_t>(k / 2);
      const std::ptrdiff_t c = rx + static_cast<std::ptrdiff_t>(k % 2);
      const double cy = -1.0 + (2.0 * static_cast<double>(r) + 1.0) / fh;
      const double cx = -1.0 + (2.0 * static_cast<double>(c) + 1.0) / fw;
      const std::size_t e = 4 * t + k;
      CHECK(q.rel[2 * e] == doctest::Approx((targets[t][0] - cy) * fh / 2.0));
      CHECK(q.rel[2 * e + 1] == doctest::Approx((targets[t][1] - cx) * fw / 2.0));
      const auto cr = std::clamp<std::ptrdiff_t>(r, 0, fh - 1);
      const auto cc = std::clamp<std::ptrdiff_t>(c, 0, fw - 1);
      CHECK(q.pixel[e] == cr * static_cast<std::ptrdiff_t>(fw) + cc);
      CHECK(q.cell[2 * e] == doctest::Approx(5.0 / 13.0));
      CHECK(q.cell[2 * e + 1] == doctest::Approx(4.0 / 9.0));
    }
  }
}

TEST_CASE("targets outside the unit square are rejected") {
  const std::vector<Vec2> bad{{0.0, 1.5}};
  CHECK_THROWS_AS(locate_queries(4, 4, bad, 8, 8), QueryError);
  CHECK_THROWS_AS(locate_queries(0, 4, {}, 8, 8), QueryError);
}

TEST_CASE("built bundles carry the unfolded feature and the encoding of their offset") {
  const auto fm = testutil::random_tensor<double>({2, 3, 3}, 3);
  const EncodingParams enc = make_encoding_params(8);
  const std::vector<Vec2> targets{{0.1, -0.4}, {-0.9, 0.95}};
  const auto qs = build_queries(fm, targets, 7, 7, &enc);
  const QueryLayout layout = locate_queries(3, 3, targets, 7, 7);
  const Tensor<double> u = unfold3x3(fm);
  for (std::size_t t = 0; t < 2; ++t)
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& b = qs[t][k].bundle;
      const std::size_t e = 4 * t + k;
      REQUIRE(b.feature.size() == 18);
      for (std::size_t c = 0; c < 18; ++c)
        CHECK(b.feature[c] == u[c * 9 + static_cast<std::size_t>(layout.pixel[e])]);
      CHECK(b.rel_coord == Vec2{layout.rel[2 * e], layout.rel[2 * e + 1]});
      CHECK(b.encoding == spatial_encoding(b.rel_coord, enc));
      CHECK(qs[t][k].weight == layout.weight[e]);
    }
  CHECK(build_queries(fm, targets, 7, 7, nullptr)[0][0].bundle.encoding.empty());
}
