#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "ultrasr/image.hpp"

namespace ultrasr {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void on_png_error(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

}  // namespace

Image load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw ImageError("cannot open '" + path.string() + "'");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw ImageError("'" + path.string() + "' is not a PNG file");

  std::string err;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) throw ImageError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw ImageError("libpng: cannot create info struct");
  }

  // Everything that can longjmp lives between setjmp and the destroy call;
  // no objects with destructors are created inside.
  std::size_t h = 0, w = 0;
  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  int bit_depth = 0, color_type = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ImageError("'" + path.string() + "': " + err);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  bit_depth = png_get_bit_depth(png, info);
  color_type = png_get_color_type(png, info);
  h = png_get_image_height(png, info);
  w = png_get_image_width(png, info);
  const bool ok = bit_depth == 8 && color_type == PNG_COLOR_TYPE_RGB;
  if (ok) {
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    pixels.resize(h * w * 3);
    rows.resize(h);
    for (std::size_t y = 0; y < h; ++y) rows[y] = &pixels[y * w * 3];
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (bit_depth != 8)
    throw ImageError("'" + path.string() + "': bit depth " + std::to_string(bit_depth) +
                     " unsupported, need 8");
  if (color_type != PNG_COLOR_TYPE_RGB)
    throw ImageError("'" + path.string() + "': not an RGB image (color type " +
                     std::to_string(color_type) + ")");
  Image img(h, w);
  for (std::size_t i = 0; i < pixels.size(); ++i) img.data[i] = pixels[i] / 255.0;
  return img;
}

void save_png(const Image& img, const std::filesystem::path& path) {
  std::vector<png_byte> pixels(img.size());
  for (std::size_t i = 0; i < img.size(); ++i)
    pixels[i] = static_cast<png_byte>(std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
  std::vector<png_bytep> rows(img.height);
  for (std::size_t y = 0; y < img.height; ++y) rows[y] = &pixels[y * img.width * 3];

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw ImageError("cannot write '" + path.string() + "'");
  std::string err;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) throw ImageError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw ImageError("libpng: cannot create info struct");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw ImageError("'" + path.string() + "': " + err);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace ultrasr
