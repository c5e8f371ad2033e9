#include "tsr/image.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>

namespace tsr {

GrayImage::GrayImage(int width, int height, double fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("image dims must be positive");
  if (fill < 0.0 || fill > 1.0)
    throw std::invalid_argument("image intensity must be in [0,1]");
  pix_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<double> pixels)
    : width_(width), height_(height), pix_(std::move(pixels)) {
  if (width < 1 || height < 1)
    throw std::invalid_argument("image dims must be positive");
  if (pix_.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("image pixel count does not match dims");
  for (double v : pix_) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("image intensity out of [0,1]");
  }
}

double maxAbsDiff(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument("maxAbsDiff: image sizes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i)
    m = std::max(m, std::abs(a.pixels()[i] - b.pixels()[i]));
  return m;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void pngWarning(png_structp, png_const_charp) {}  // keep stderr clean

GrayImage readPng(const std::filesystem::path& file) {
  FilePtr fp(std::fopen(file.string().c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open image file " + file.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, pngWarning);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png: allocation failed");
  }

  std::vector<png_bytep> rowPtrs;
  std::vector<png_byte> bytes;
  int width = 0, height = 0, channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: failed to decode " + file.string());
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_packing(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(png);
  if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png: unsupported channel count " +
                             std::to_string(channels));
  }

  const std::size_t rowBytes = png_get_rowbytes(png, info);
  bytes.assign(rowBytes * height, 0);
  rowPtrs.resize(height);
  for (int y = 0; y < height; ++y) rowPtrs[y] = bytes.data() + rowBytes * y;
  png_read_image(png, rowPtrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  std::vector<double> pix(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const png_byte* row = bytes.data() + rowBytes * y;
    for (int x = 0; x < width; ++x) {
      double v;
      if (channels == 1) {
        v = row[x] / 255.0;
      } else {
        const double rC = row[3 * x + 0], gC = row[3 * x + 1], bC = row[3 * x + 2];
        v = (0.299 * rC + 0.587 * gC + 0.114 * bC) / 255.0;
      }
      pix[static_cast<std::size_t>(y) * width + x] = std::min(1.0, std::max(0.0, v));
    }
  }
  return GrayImage(width, height, std::move(pix));
}

void writePng(const GrayImage& img, const std::filesystem::path& file) {
  FilePtr fp(std::fopen(file.string().c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open output file " + file.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, pngWarning);
  if (!png) throw std::runtime_error("png: allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png: allocation failed");
  }

  const int w = img.width(), h = img.height();
  std::vector<png_byte> bytes(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = std::min(1.0, std::max(0.0, img.at(x, y)));
      bytes[static_cast<std::size_t>(y) * w + x] =
          static_cast<png_byte>(std::lround(v * 255.0));
    }
  std::vector<png_bytep> rowPtrs(h);
  for (int y = 0; y < h; ++y) rowPtrs[y] = bytes.data() + static_cast<std::size_t>(y) * w;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png: failed to encode " + file.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rowPtrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

int pgmToken(std::istream& in) {
  // Skips whitespace and '#' comments, then reads one nonnegative integer.
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c)) throw std::runtime_error("pgm: malformed header");
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 30) throw std::runtime_error("pgm: header value out of range");
    c = in.get();
  }
  return static_cast<int>(v);
}

GrayImage readPgm(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image file " + file.string());
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || m1 != '5') throw std::runtime_error("pgm: not a P5 file");
  const int width = pgmToken(in);
  const int height = pgmToken(in);
  const int maxval = pgmToken(in);
  if (maxval != 255)
    throw std::runtime_error("pgm: only 8-bit (maxval 255) supported, got " +
                             std::to_string(maxval));
  if (width < 1 || height < 1) throw std::runtime_error("pgm: bad dimensions");
  std::vector<unsigned char> bytes(static_cast<std::size_t>(width) * height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
    throw std::runtime_error("pgm: truncated pixel data");
  std::vector<double> pix(bytes.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) pix[i] = bytes[i] / 255.0;
  return GrayImage(width, height, std::move(pix));
}

void writePgm(const GrayImage& img, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + file.string());
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<unsigned char> bytes(static_cast<std::size_t>(img.width()) * img.height());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const double v = std::min(1.0, std::max(0.0, img.at(x, y)));
      bytes[static_cast<std::size_t>(y) * img.width() + x] =
          static_cast<unsigned char>(std::lround(v * 255.0));
    }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("pgm: write failed for " + file.string());
}

}  // namespace

GrayImage readImage(const std::filesystem::path& file) {
  std::ifstream probe(file, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open image file " + file.string());
  unsigned char magic[2] = {0, 0};
  probe.read(reinterpret_cast<char*>(magic), 2);
  probe.close();
  if (magic[0] == 'P' && magic[1] == '5') return readPgm(file);
  if (magic[0] == 0x89 && magic[1] == 'P') return readPng(file);
  throw std::runtime_error("unsupported image format (need PNG or PGM P5): " +
                           file.string());
}

void writeImage(const GrayImage& img, const std::filesystem::path& file) {
  std::string ext = file.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(ch));
  if (ext == ".png") {
    writePng(img, file);
  } else if (ext == ".pgm") {
    writePgm(img, file);
  } else {
    throw std::runtime_error("unsupported output extension (need .png or .pgm): " +
                             file.string());
  }
}

}  // namespace tsr
