#pragma once

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "polydet/image.hpp"

namespace polydet {

inline Image read_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw FileError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FileError("png reader initialization failed");
  }
  Image img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw FileError("unreadable file: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  const png_byte color = png_get_color_type(png, info);
  const png_byte depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int c = static_cast<int>(png_get_channels(png, info));
  img = Image(w, h, c);
  rows.resize(h);
  for (int y = 0; y < h; ++y)
    rows[y] = img.pixels.data() + static_cast<size_t>(y) * w * c;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

inline void write_png(const std::string& path, const Image& img) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw FileError("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw FileError("png writer initialization failed");
  }
  std::vector<png_bytep> rows(img.height);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw FileError("failed writing " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y)
    rows[y] = const_cast<png_bytep>(img.pixels.data() +
                                    static_cast<size_t>(y) * img.width * img.channels);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

namespace detail {

inline std::uint16_t rd_u16(const std::vector<unsigned char>& b, std::size_t off) {
  return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}
inline std::uint32_t rd_u32(const std::vector<unsigned char>& b, std::size_t off) {
  return b[off] | (b[off + 1] << 8) | (b[off + 2] << 16)
       | (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

}  // namespace detail

/// Minimal BMP reader: uncompressed 24-bit BGR and 8-bit paletted files,
/// bottom-up or top-down. Output is always 3-channel RGB.
inline Image read_bmp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 54 || buf[0] != 'B' || buf[1] != 'M')
    throw FileError("unreadable file: " + path);
  const std::uint32_t data_off = detail::rd_u32(buf, 10);
  const std::uint32_t dib_size = detail::rd_u32(buf, 14);
  const auto width = static_cast<std::int32_t>(detail::rd_u32(buf, 18));
  const auto raw_height = static_cast<std::int32_t>(detail::rd_u32(buf, 22));
  const std::uint16_t bpp = detail::rd_u16(buf, 28);
  const std::uint32_t compression = detail::rd_u32(buf, 30);
  if (dib_size < 40 || compression != 0 || (bpp != 24 && bpp != 8) || width <= 0 ||
      raw_height == 0)
    throw FileError("unsupported BMP layout: " + path);

  const bool top_down = raw_height < 0;
  const int height = top_down ? -raw_height : raw_height;
  const std::size_t stride = ((static_cast<std::size_t>(bpp) * width + 31) / 32) * 4;
  if (buf.size() < data_off + stride * height)
    throw FileError("unreadable file: " + path);

  std::uint32_t palette_n = detail::rd_u32(buf, 46);
  if (bpp == 8 && palette_n == 0) palette_n = 256;
  const std::size_t palette_off = 14 + dib_size;

  Image img(width, height, 3);
  for (int y = 0; y < height; ++y) {
    const std::size_t row = data_off + stride * (top_down ? y : height - 1 - y);
    for (int x = 0; x < width; ++x) {
      unsigned char r, g, b;
      if (bpp == 24) {
        b = buf[row + 3 * x];
        g = buf[row + 3 * x + 1];
        r = buf[row + 3 * x + 2];
      } else {
        const unsigned idx = buf[row + x];
        if (idx >= palette_n) throw FileError("unreadable file: " + path);
        const std::size_t p = palette_off + 4 * idx;
        b = buf[p];
        g = buf[p + 1];
        r = buf[p + 2];
      }
      img.at(x, y, 0) = r;
      img.at(x, y, 1) = g;
      img.at(x, y, 2) = b;
    }
  }
  return img;
}

/// Dispatch on extension. Lossless 8-bit formats only.
inline Image read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(ch));
  if (ext == ".png") return read_png(path.string());
  if (ext == ".bmp") return read_bmp(path.string());
  throw FileError("unsupported image format: " + path.string());
}

/// Any nonzero channel marks a polyp pixel.
inline BinaryMask image_to_mask(const Image& img) {
  BinaryMask m(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        if (img.at(x, y, c) != 0) {
          m.set(x, y);
          break;
        }
  return m;
}

inline Image mask_to_image(const BinaryMask& m) {
  Image img(m.width, m.height, 1);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) img.at(x, y, 0) = 255;
  return img;
}

}  // namespace polydet
