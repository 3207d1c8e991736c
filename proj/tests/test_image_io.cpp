#include <gtest/gtest.h>

#include <cstring>

#include <png.h>

#include "storyweave/image_io.hpp"
#include "test_support.hpp"

using namespace storyweave;
using testing_support::TempDir;

namespace {

// Encodes raw samples with libpng directly, independent of encode_png.
std::string raw_png(int w, int h, png_uint_32 format, const std::vector<std::uint8_t>& samples) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = format;
  png_alloc_size_t size = 0;
  EXPECT_TRUE(png_image_write_get_memory_size(image, size, 0, samples.data(), 0, nullptr));
  std::string out(size, '\0');
  EXPECT_TRUE(png_image_write_to_memory(&image, out.data(), &size, 0, samples.data(), 0, nullptr));
  out.resize(size);
  return out;
}

}  // namespace

TEST(DecodeImage, WhitePngTwoByTwo) {
  TempDir dir;
  write_file_atomic(dir / "white.png", encode_png(testing_support::solid(2, 2, {255, 255, 255})));
  const auto img = decode_image(dir / "white.png");
  EXPECT_EQ(img.width(), 2);
  EXPECT_EQ(img.height(), 2);
  for (const auto& p : img.pixels()) EXPECT_EQ(p, (Rgb{255, 255, 255}));
}

TEST(DecodeImage, CorruptFileIsFeatureless) {
  TempDir dir;
  auto bytes = encode_png(testing_support::solid(4, 4, {1, 2, 3}));
  bytes.resize(bytes.size() / 2);
  write_file_atomic(dir / "broken.png", bytes);
  write_file_atomic(dir / "text.png", "not an image");
  std::string error;
  EXPECT_FALSE(try_decode_image(dir / "broken.png", &error).has_value());
  EXPECT_FALSE(error.empty());
  EXPECT_FALSE(try_decode_image(dir / "text.png").has_value());
  EXPECT_FALSE(try_decode_image(dir / "missing.png").has_value());
  EXPECT_THROW(decode_image(dir / "text.png"), DecodeError);
}

TEST(DecodeImage, GrayscaleReplicatesChannels) {
  const std::string pgm = "P5\n2 1\n255\n" + std::string{char(10), char(200)};
  auto img = decode_image_bytes(pgm);
  EXPECT_EQ(img.at(0, 0), (Rgb{10, 10, 10}));
  EXPECT_EQ(img.at(1, 0), (Rgb{200, 200, 200}));

  auto png = decode_image_bytes(raw_png(2, 1, PNG_FORMAT_GRAY, {7, 99}));
  EXPECT_EQ(png.at(0, 0), (Rgb{7, 7, 7}));
  EXPECT_EQ(png.at(1, 0), (Rgb{99, 99, 99}));
}

TEST(DecodeImage, AlphaCompositedOnWhite) {
  // Opaque red, fully transparent black, half-transparent black.
  auto img = decode_image_bytes(raw_png(3, 1, PNG_FORMAT_RGBA, {255, 0, 0, 255, 0, 0, 0, 0, 0, 0, 0, 128}));
  EXPECT_EQ(img.at(0, 0), (Rgb{255, 0, 0}));
  EXPECT_EQ(img.at(1, 0), (Rgb{255, 255, 255}));
  // 255 * (255 - 128) / 255 = 127
  EXPECT_EQ(img.at(2, 0), (Rgb{127, 127, 127}));
}

TEST(DecodeImage, AsciiPnmWithComments) {
  const std::string ppm = "P3\n# comment\n2 1\n15\n15 0 0  0 15 0\n";
  auto img = decode_image_bytes(ppm);
  EXPECT_EQ(img.at(0, 0), (Rgb{255, 0, 0}));
  EXPECT_EQ(img.at(1, 0), (Rgb{0, 255, 0}));
  EXPECT_THROW(decode_image_bytes("P6\n2 2\n255\n"), DecodeError);
}

TEST(EncodeDecode, PngIsLossless) {
  testing_support::Gen gen(3);
  for (int i = 0; i < 10; ++i) {
    auto img = gen.image(gen.integer(1, 40), gen.integer(1, 40));
    EXPECT_EQ(decode_image_bytes(encode_png(img)), img);
  }
}

TEST(EncodeDecode, JpegIsCloseNotExact) {
  auto img = testing_support::solid(16, 16, {120, 60, 200});
  auto back = decode_image_bytes(encode_jpeg(img, 90));
  ASSERT_EQ(back.width(), 16);
  for (const auto& p : back.pixels()) {
    EXPECT_NEAR(p.r, 120, 4);
    EXPECT_NEAR(p.g, 60, 4);
    EXPECT_NEAR(p.b, 200, 4);
  }
}

TEST(ImagePixels, RejectsBadDimensions) {
  EXPECT_THROW(ImagePixels(0, 3), ValidationError);
  EXPECT_THROW(ImagePixels(2, 2, std::vector<Rgb>(3)), ValidationError);
}
