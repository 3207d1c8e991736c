#pragma once

// Raster decoding (PNG, JPEG, PPM/PGM) into 8-bit RGB, and PNG/JPEG encoding.

#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "storyweave/common.hpp"

namespace storyweave {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major RGB pixels.
class ImagePixels {
 public:
  ImagePixels() = default;
  ImagePixels(int width, int height, Rgb fill = {})
      : width_(width), height_(height), pixels_(checked_area(width, height), fill) {}
  ImagePixels(int width, int height, std::vector<Rgb> pixels) : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != checked_area(width, height)) throw ValidationError("image: pixel count does not match dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  const std::vector<Rgb>& pixels() const { return pixels_; }

  Rgb& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  const Rgb& at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  friend bool operator==(const ImagePixels&, const ImagePixels&) = default;

 private:
  static std::size_t checked_area(int w, int h) {
    if (w <= 0 || h <= 0) throw ValidationError("image: width and height must be positive");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Rgb> pixels_;
};

class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint8_t composite_on_white(std::uint8_t c, std::uint8_t alpha) {
  // c*a/255 + 255*(255-a)/255, rounded
  const unsigned v = static_cast<unsigned>(c) * alpha + 255u * (255u - alpha);
  return static_cast<std::uint8_t>((v + 127u) / 255u);
}

inline ImagePixels decode_png(const std::string& bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw DecodeError(fmt::format("png: {}", image.message));
  }
  image.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw DecodeError(fmt::format("png: {}", msg));
  }
  const int w = static_cast<int>(image.width), h = static_cast<int>(image.height);
  std::vector<Rgb> px(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < px.size(); ++i) {
    const std::uint8_t* p = &buffer[i * 4];
    px[i] = {composite_on_white(p[0], p[3]), composite_on_white(p[1], p[3]), composite_on_white(p[2], p[3])};
  }
  return ImagePixels(w, h, std::move(px));
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// No C++ objects with non-trivial destructors live across the setjmp window.
inline bool decode_jpeg_raw(const std::string& bytes, std::vector<std::uint8_t>& out, int& w, int& h, std::string& error) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  jerr.message[0] = '\0';
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    error = jerr.message;
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  w = static_cast<int>(cinfo.output_width);
  h = static_cast<int>(cinfo.output_height);
  out.resize(static_cast<std::size_t>(w) * h * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = &out[static_cast<std::size_t>(cinfo.output_scanline) * w * 3];
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return true;
}

inline ImagePixels decode_jpeg(const std::string& bytes) {
  std::vector<std::uint8_t> raw;
  std::string error;
  int w = 0, h = 0;
  if (!decode_jpeg_raw(bytes, raw, w, h, error)) throw DecodeError(fmt::format("jpeg: {}", error));
  if (w <= 0 || h <= 0) throw DecodeError("jpeg: empty image");
  std::vector<Rgb> px(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = {raw[i * 3], raw[i * 3 + 1], raw[i * 3 + 2]};
  return ImagePixels(w, h, std::move(px));
}

// Netpbm P2/P3/P5/P6 with maxval <= 255.
inline ImagePixels decode_pnm(const std::string& bytes) {
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_int = [&]() -> long {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) throw DecodeError("pnm: truncated header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1'000'000) throw DecodeError("pnm: value too large");
    }
    return v;
  };
  const char kind = bytes[1];
  const bool color = kind == '3' || kind == '6';
  const bool binary = kind == '5' || kind == '6';
  const long w = read_int(), h = read_int(), maxval = read_int();
  if (w <= 0 || h <= 0) throw DecodeError("pnm: bad dimensions");
  if (maxval <= 0 || maxval > 255) throw DecodeError("pnm: only maxval <= 255 is supported");
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  const std::size_t channels = color ? 3 : 1;
  std::vector<std::uint8_t> samples(count * channels);
  if (binary) {
    ++pos;  // single whitespace after maxval
    if (bytes.size() < pos + samples.size()) throw DecodeError("pnm: truncated pixel data");
    std::memcpy(samples.data(), bytes.data() + pos, samples.size());
  } else {
    for (auto& s : samples) {
      long v = read_int();
      if (v > maxval) throw DecodeError("pnm: sample above maxval");
      s = static_cast<std::uint8_t>(v);
    }
  }
  auto scale = [&](std::uint8_t v) {
    return maxval == 255 ? v : static_cast<std::uint8_t>((static_cast<unsigned>(v) * 255u + maxval / 2) / maxval);
  };
  std::vector<Rgb> px(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (color) {
      px[i] = {scale(samples[i * 3]), scale(samples[i * 3 + 1]), scale(samples[i * 3 + 2])};
    } else {
      auto g = scale(samples[i]);
      px[i] = {g, g, g};
    }
  }
  return ImagePixels(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

}  // namespace detail

// Format is sniffed from magic bytes. Alpha is composited on white; gray
// sources replicate into R=G=B.
inline ImagePixels decode_image_bytes(const std::string& bytes) {
  static constexpr unsigned char png_magic[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_magic, 8) == 0) return detail::decode_png(bytes);
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF && static_cast<unsigned char>(bytes[1]) == 0xD8) {
    return detail::decode_jpeg(bytes);
  }
  if (bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '3' || bytes[1] == '5' || bytes[1] == '6')) {
    return detail::decode_pnm(bytes);
  }
  throw DecodeError("unsupported image format");
}

inline ImagePixels decode_image(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const IoError& e) {
    throw DecodeError(e.what());
  }
  return decode_image_bytes(bytes);
}

// Feature-less media: the error is swallowed and std::nullopt returned.
inline std::optional<ImagePixels> try_decode_image(const std::filesystem::path& path, std::string* error = nullptr) {
  try {
    return decode_image(path);
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return std::nullopt;
  }
}

inline std::string encode_png(const ImagePixels& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> raw(img.size() * 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    raw[i * 3] = img.pixels()[i].r;
    raw[i * 3 + 1] = img.pixels()[i].g;
    raw[i * 3 + 2] = img.pixels()[i].b;
  }
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, raw.data(), 0, nullptr)) {
    throw IoError(fmt::format("png encode: {}", image.message));
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raw.data(), 0, nullptr)) {
    throw IoError(fmt::format("png encode: {}", image.message));
  }
  out.resize(size);
  return out;
}

inline std::string encode_jpeg(const ImagePixels& img, int quality) {
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  cinfo.dct_method = JDCT_ISLOW;
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()) * 3);
  while (cinfo.next_scanline < cinfo.image_height) {
    const int y = static_cast<int>(cinfo.next_scanline);
    for (int x = 0; x < img.width(); ++x) {
      const Rgb& p = img.at(x, y);
      row[static_cast<std::size_t>(x) * 3] = p.r;
      row[static_cast<std::size_t>(x) * 3 + 1] = p.g;
      row[static_cast<std::size_t>(x) * 3 + 2] = p.b;
    }
    JSAMPROW r = row.data();
    jpeg_write_scanlines(&cinfo, &r, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::string out(reinterpret_cast<const char*>(buffer), size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

}  // namespace storyweave
