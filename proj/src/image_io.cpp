#include "stego/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace stego {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageU8 read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("failed to decode PNG " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  // Normalize to 8-bit RGB.
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY ||
      png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  ImageU8 img;
  img.width = static_cast<Index>(png_get_image_width(png, info));
  img.height = static_cast<Index>(png_get_image_height(png, info));
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("unexpected channel count in " + path);
  }
  img.pixels.resize(static_cast<size_t>(img.width * img.height * 3));
  std::vector<png_bytep> rows(static_cast<size_t>(img.height));
  for (Index y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] = img.pixels.data() + y * img.width * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const ImageU8& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open " + path + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_const_bytep> rows(static_cast<size_t>(img.height));
  for (Index y = 0; y < img.height; ++y)
    rows[static_cast<size_t>(y)] = img.pixels.data() + y * img.width * 3;
  png_write_image(png, const_cast<png_bytepp>(rows.data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageU8 read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P6") throw DataError("not a P6 PPM: " + path);
  auto next_int = [&](const char* what) {
    // Skip whitespace and '#' comment lines.
    int c = in.get();
    while (c == '#' || std::isspace(c)) {
      if (c == '#')
        while (c != '\n' && c != EOF) c = in.get();
      c = in.get();
    }
    long v = 0;
    bool any = false;
    while (std::isdigit(c)) {
      v = v * 10 + (c - '0');
      any = true;
      c = in.get();
    }
    if (!any) throw DataError(std::string("bad PPM header (") + what + ") in " + path);
    return v;
  };
  const long w = next_int("width"), h = next_int("height"), maxval = next_int("maxval");
  if (w <= 0 || h <= 0 || maxval != 255)
    throw DataError("unsupported PPM geometry/maxval in " + path);
  ImageU8 img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w * h * 3));
  in.read(reinterpret_cast<char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.pixels.size()))
    throw DataError("PPM truncated: " + path);
  return img;
}

ImageU8 load_image(const std::string& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open " + path);
  char magic[2] = {0, 0};
  probe.read(magic, 2);
  probe.close();
  if (magic[0] == '\x89' && magic[1] == 'P') return read_png(path);
  if (magic[0] == 'P' && magic[1] == '6') return read_ppm(path);
  throw DataError("unrecognized image format: " + path);
}

ImageU8 center_crop(const ImageU8& img, Index size) {
  if (size > img.width || size > img.height)
    throw DataError("crop " + std::to_string(size) + " exceeds image " +
                    std::to_string(img.width) + "x" + std::to_string(img.height));
  const Index y0 = (img.height - size) / 2;
  const Index x0 = (img.width - size) / 2;
  ImageU8 out;
  out.width = size;
  out.height = size;
  out.pixels.resize(static_cast<size_t>(size * size * 3));
  for (Index y = 0; y < size; ++y)
    std::memcpy(out.pixels.data() + y * size * 3,
                img.pixels.data() + ((y0 + y) * img.width + x0) * 3,
                static_cast<size_t>(size * 3));
  return out;
}

}  // namespace stego
