#pragma once

#include <filesystem>
#include <vector>

namespace tsr {

// Grayscale image with intensities in [0,1], row-major (y outer, x inner).
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, double fill = 0.0);
  GrayImage(int width, int height, std::vector<double> pixels);  // validates range

  int width() const { return width_; }
  int height() const { return height_; }

  double& at(int x, int y) { return pix_[static_cast<std::size_t>(y) * width_ + x]; }
  double at(int x, int y) const { return pix_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<double>& pixels() const { return pix_; }
  std::vector<double>& pixels() { return pix_; }

 private:
  int width_ = 0, height_ = 0;
  std::vector<double> pix_;
};

double maxAbsDiff(const GrayImage& a, const GrayImage& b);

// Reads 8-bit grayscale PNG or PGM (P5), dispatching on magic bytes. Color
// PNG is converted by luminance Y = 0.299 R + 0.587 G + 0.114 B; intensities
// map to [0,1] by /255.
GrayImage readImage(const std::filesystem::path& file);

// Writes 8-bit grayscale, format chosen by extension (.png or .pgm).
void writeImage(const GrayImage& img, const std::filesystem::path& file);

}  // namespace tsr
