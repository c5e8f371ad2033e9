#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsr/dict.hpp"
#include "tsr/fold.hpp"
#include "tsr/image.hpp"
#include "tsr/sparse.hpp"

namespace tsr {

struct TrainSpec {
  std::vector<std::filesystem::path> images;
  FoldConfig fold;
  SparseCodeConfig sparse;  // lambda is the per-block sparsity weight
  int atoms = 128;          // m
  int outerIter = 10;       // T
  std::uint32_t seed = 0;
  std::function<void(int, double, double)> progress;
};

// Trained model. dh/dl are the stacked-normalized dictionaries (joint atom
// norms <= 1); lambda is the configured per-block weight, reused as the
// generation-phase coding weight.
struct SrModel {
  std::uint32_t version = 1;
  FoldConfig fold;
  double lambda = 0.05;
  std::uint32_t seed = 0;
  Tensor3 dh;  // d_h x m x n
  Tensor3 dl;  // d_l x m x n
  TrainingMeta meta;  // not serialized
};

SrModel trainModel(const TrainSpec& spec);

// Binary model format, bit-exact:
//   "TSR1", u32 version, u32 a,r,c,m,n,d_h,d_l,seed, f64 lambda,
//   r x (i8 dx, i8 dy), u8 filter-set id (0 = the 6-filter derivative set),
//   payload dh then dl as f64 LE in (slice, row, col) nesting, u32 CRC32.
// All integers and floats little-endian.
void saveModel(const SrModel& model, const std::filesystem::path& file);
SrModel loadModel(const std::filesystem::path& file);
std::vector<std::uint8_t> encodeModel(const SrModel& model);
SrModel decodeModel(const std::vector<std::uint8_t>& bytes);

struct SuperResolveOptions {
  std::optional<double> lambda;  // default: model lambda
  std::optional<int> maxIter;    // default: 50
  std::optional<double> tol;     // default: 1e-7
};

// Upsample, shift-concat, feature-extract, exhaustive fold, sparse-code with
// dl, reconstruct with dh, add per-cube DC from the upsampled image, unfold,
// slice z=0, clamp.
GrayImage superResolve(const SrModel& model, const GrayImage& lowRes,
                       const SuperResolveOptions& opts = {});

// The zero-code path: per-cube DC from the upsampled image only. superResolve
// degenerates to this exactly when lambda exceeds the max correlation.
GrayImage bicubicDcReference(const SrModel& model, const GrayImage& lowRes);

// Abstract provider of low-resolution images (stands in for any generator).
class LowResSource {
 public:
  virtual ~LowResSource() = default;
  virtual std::size_t count() const = 0;
  virtual std::string name(std::size_t i) const = 0;
  virtual GrayImage load(std::size_t i) const = 0;
};

// PNG/PGM files of a directory, sorted by filename.
class DirectoryLowResSource : public LowResSource {
 public:
  explicit DirectoryLowResSource(const std::filesystem::path& dir);
  std::size_t count() const override { return files_.size(); }
  std::string name(std::size_t i) const override;
  GrayImage load(std::size_t i) const override;

 private:
  std::vector<std::filesystem::path> files_;
};

// Sorted list of the PNG/PGM files under dir.
std::vector<std::filesystem::path> listImageFiles(const std::filesystem::path& dir);

// 10 log10(MAX^2 / MSE), MAX = 1, capped at 100 dB.
double psnr(const GrayImage& a, const GrayImage& b);
double meanAbsError(const GrayImage& a, const GrayImage& b);

struct EvalEntry {
  std::string name;
  double psnrModel = 0.0, psnrBicubic = 0.0;
  double maeModel = 0.0, maeBicubic = 0.0;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  double meanPsnrModel = 0.0, meanPsnrBicubic = 0.0;
  double meanMaeModel = 0.0, meanMaeBicubic = 0.0;
};

// Downsamples each ground-truth image by c, super-resolves it back and
// reports PSNR/MAE against the truth next to the bicubic baseline.
EvalReport evalModel(const SrModel& model, const std::filesystem::path& truthDir);

}  // namespace tsr
