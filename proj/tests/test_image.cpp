#include <doctest.h>

#include <cmath>
#include <fstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "ultrasr/image.hpp"
#include "ultrasr/rng.hpp"

using namespace ultrasr;
using testutil::random_image;
using testutil::brute_laplacian;
using testutil::brute_psnr;


TEST_CASE("psnr matches a brute-force oracle on random pairs") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Image a = random_image(5 + s % 4, 3 + s % 5, 2 * s);
    const Image b = random_image(a.height, a.width, 2 * s + 1);
    CHECK(std::abs(psnr(a, b) - brute_psnr(a, b)) < 1e-9);
  }
}

TEST_CASE("psnr of a uniform 0.1 error is 20 dB and identical images give the sentinel") {
  Image a(4, 4, 0.5), b(4, 4, 0.6);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(psnr(a, a) == kPsnrIdentical);
  CHECK_THROWS_AS(psnr(a, Image(4, 5)), ImageError);
}

TEST_CASE("laplacian statistics match a brute-force oracle on random pairs") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Image a = random_image(3 + s % 6, 4 + s % 3, 500 + s);
    const Image b = random_image(a.height, a.width, 900 + s);
    const LaplacianStats got = laplacian_stats(a, b);
    const LaplacianStats want = brute_laplacian(a, b);
    CHECK(std::abs(got.mean_abs_laplacian - want.mean_abs_laplacian) < 1e-9);
    CHECK(std::abs(got.mean_abs_laplacian_error - want.mean_abs_laplacian_error) < 1e-9);
  }
}

TEST_CASE("laplacian of a single impulse") {
  Image img(3, 3);
  img.at(1, 1, 0) = 1.0;
  const LaplacianStats s = laplacian_stats(img, img);
  // |L| is 4 at the center and 1 at its four neighbors, over 27 samples.
  CHECK(s.mean_abs_laplacian == doctest::Approx(8.0 / 27.0).epsilon(1e-15));
  CHECK(s.mean_abs_laplacian_error == 0.0);
}

TEST_CASE("cubic kernel values with a = -0.5") {
  CHECK(cubic_kernel(0.0) == 1.0);
  CHECK(cubic_kernel(1.0) == 0.0);
  CHECK(cubic_kernel(2.0) == 0.0);
  CHECK(cubic_kernel(0.5) == doctest::Approx(0.5625));
  CHECK(cubic_kernel(-1.5) == doctest::Approx(-0.0625));
  CHECK(cubic_kernel(2.5) == 0.0);
}

TEST_CASE("bicubic resize to the same size is the identity") {
  const Image a = random_image(6, 7, 3);
  const Image b = bicubic_resize(a, 6, 7);
  CHECK(testutil::max_abs_diff(a.data, b.data) < 1e-12);
}

TEST_CASE("bicubic resize preserves constants and interior linear ramps") {
  const Image flat(9, 11, 0.3);
  for (auto [h, w] : {std::pair{4, 5}, std::pair{20, 23}, std::pair{9, 3}}) {
    const Image r = bicubic_resize(flat, h, w);
    for (double v : r.data) CHECK(v == doctest::Approx(0.3).epsilon(1e-12));
  }
  Image ramp(8, 8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x)
      for (std::size_t c = 0; c < 3; ++c) ramp.at(y, x, c) = 0.1 * static_cast<double>(x);
  const Image up = bicubic_resize(ramp, 16, 16);
  // Output pixel x maps to input coordinate (x + 0.5) / 2 - 0.5.
  for (std::size_t x = 4; x < 12; ++x)
    CHECK(up.at(5, x, 1) == doctest::Approx(0.1 * ((static_cast<double>(x) + 0.5) / 2 - 0.5)));
}

TEST_CASE("png round trip is exact for 8-bit values and rejects missing files") {
  Image a(5, 4);
  for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] = static_cast<double>(i * 7 % 256) / 255.0;
  const auto dir = testutil::temp_dir("png");
  save_png(a, dir / "a.png");
  const Image b = load_png(dir / "a.png");
  CHECK(b.height == 5);
  CHECK(b.width == 4);
  CHECK(testutil::max_abs_diff(a.data, b.data) < 1e-15);
  CHECK_THROWS_AS(load_png(dir / "missing.png"), ImageError);
  std::ofstream(dir / "bad.png") << "not a png";
  CHECK_THROWS_AS(load_png(dir / "bad.png"), ImageError);
}

TEST_CASE("crops and clamping") {
  const Image a = random_image(6, 8, 4);
  const Image c = center_crop(a, 4, 4);
  CHECK(c.at(0, 0, 2) == a.at(1, 2, 2));
  CHECK_THROWS_AS(crop(a, 3, 0, 4, 4), ImageError);
  Image d(1, 1);
  d.data = {-0.5, 0.5, 1.5};
  clamp_unit(d);
  CHECK(d.data == std::vector<double>{0.0, 0.5, 1.0});
  CHECK_THROWS_AS(Image(0, 3), ImageError);
}

TEST_CASE("lr/hr pairs have the requested sizes") {
  const Image hr = random_image(40, 50, 5);
  Rng rng = make_rng(1, Stream::crop);
  const PatchPair p = make_lr_hr_pair(hr, 2.5, 8, rng);
  CHECK(p.lr.height == 8);
  CHECK(p.lr.width == 8);
  CHECK(p.hr.height == 20);
  CHECK(p.hr.width == 20);
  const PatchPair q = make_lr_hr_pair(hr, 2.0, 12, rng);
  CHECK(q.hr.height == 24);
  CHECK_THROWS_AS(make_lr_hr_pair(hr, 4.0, 12, rng), ImageError);
}
