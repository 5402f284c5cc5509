#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "iafs/error.hpp"
#include "iafs/tensor_io.hpp"

namespace iafs {

std::uint8_t quantize_unit(double v) {
  // nearbyint honours the default FE_TONEAREST mode: ties go to even.
  const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::nearbyint(scaled));
}

void write_png(const std::filesystem::path& path, const ImageTensor& image) {
  if (image.empty()) throw InvalidArgument("write_png: empty image");
  const bool rgb = image.channels() == 3;
  const std::size_t out_channels = rgb ? 3 : 1;
  const std::size_t h = image.height();
  const std::size_t w = image.width();

  std::vector<std::uint8_t> pixels(h * w * out_channels);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < out_channels; ++c) {
        pixels[(y * w + x) * out_channels + c] = quantize_unit(image.at(c, y, x));
      }
    }
  }

  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!file) throw IoError("cannot open for writing: " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng error writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
               rgb ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < h; ++y) {
    png_write_row(png, pixels.data() + y * w * out_channels);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace iafs
