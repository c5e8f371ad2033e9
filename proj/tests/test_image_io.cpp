#include <doctest.h>

#include <png.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "tsr/image.hpp"
#include "tsr/rng.hpp"

using namespace tsr;
namespace fs = std::filesystem;

namespace {

fs::path tempDir() {
  const fs::path dir = fs::temp_directory_path() / "tsr_io_test";
  fs::create_directories(dir);
  return dir;
}

GrayImage quantized(const GrayImage& img) {
  GrayImage out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(x, y) = std::lround(img.at(x, y) * 255.0) / 255.0;
  return out;
}

void writeRgbPng(const fs::path& file, int w, int h,
                 const std::vector<unsigned char>& rgb) {
  std::FILE* fp = std::fopen(file.string().c_str(), "wb");
  REQUIRE(fp);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  REQUIRE(setjmp(png_jmpbuf(png)) == 0);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(rgb.data() + static_cast<std::size_t>(y) * w * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

TEST_CASE("pgm round trip is exact on quantized intensities") {
  Rng rng(3);
  GrayImage img(7, 5);
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x) img.at(x, y) = rng.unitReal();
  const fs::path f = tempDir() / "round.pgm";
  writeImage(img, f);
  const GrayImage back = readImage(f);
  CHECK(maxAbsDiff(back, quantized(img)) == 0.0);
}

TEST_CASE("png round trip is exact on quantized intensities") {
  Rng rng(5);
  GrayImage img(9, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 9; ++x) img.at(x, y) = rng.unitReal();
  const fs::path f = tempDir() / "round.png";
  writeImage(img, f);
  const GrayImage back = readImage(f);
  CHECK(maxAbsDiff(back, quantized(img)) == 0.0);
}

TEST_CASE("pgm and png decode identical pixels identically") {
  Rng rng(7);
  GrayImage img(12, 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 12; ++x) img.at(x, y) = rng.unitReal();
  const fs::path dir = tempDir();
  writeImage(img, dir / "same.pgm");
  writeImage(img, dir / "same.png");
  const GrayImage a = readImage(dir / "same.pgm");
  const GrayImage b = readImage(dir / "same.png");
  CHECK(maxAbsDiff(a, b) == 0.0);
}

TEST_CASE("color png converts by the 0.299/0.587/0.114 luminance") {
  const int w = 3, h = 1;
  std::vector<unsigned char> rgb = {255, 0, 0, 0, 255, 0, 0, 0, 255};
  const fs::path f = tempDir() / "color.png";
  writeRgbPng(f, w, h, rgb);
  const GrayImage img = readImage(f);
  CHECK(img.at(0, 0) == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(img.at(1, 0) == doctest::Approx(0.587).epsilon(1e-12));
  CHECK(img.at(2, 0) == doctest::Approx(0.114).epsilon(1e-12));
}

TEST_CASE("16-bit pgm is rejected") {
  const fs::path f = tempDir() / "deep.pgm";
  std::ofstream out(f, std::ios::binary);
  out << "P5\n2 1\n65535\n";
  out.put(0);
  out.put(0);
  out.put(0);
  out.put(0);
  out.close();
  CHECK_THROWS_WITH_AS(static_cast<void>(readImage(f)), doctest::Contains("8-bit"),
                       std::runtime_error);
}

TEST_CASE("unknown magic is rejected") {
  const fs::path f = tempDir() / "garbage.bin";
  std::ofstream out(f, std::ios::binary);
  out << "XYZW";
  out.close();
  CHECK_THROWS_WITH_AS(static_cast<void>(readImage(f)),
                       doctest::Contains("unsupported image format"), std::runtime_error);
}
