#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tsr/image.hpp"
#include "tsr/tensor.hpp"

namespace tsr {

struct Shift {
  int dx = 0, dy = 0;
  bool operator==(const Shift&) const = default;
};

// Canonical shift sequence: (0,0), then ring-1 axes and diagonals, then
// ring 2 in the same pattern. The first 7 entries are the default set.
std::vector<Shift> defaultShifts(int r);

struct FoldConfig {
  int a = 4;               // cube edge
  int r = 7;               // shift count, r >= a
  int c = 2;               // downsampling rate
  std::vector<Shift> shifts;  // size r, shifts[0] = (0,0), pairwise distinct
  long sampleBudget = 0;   // max cubes N; 0 = exhaustive stride-1
  std::uint32_t seed = 0;  // subsampling seed

  // Throws std::invalid_argument naming the violated invariant.
  void validate() const;
};

struct CubeOrigin {
  int image = 0;
  int x = 0, y = 0, z = 0;
  bool operator==(const CubeOrigin&) const = default;
};

// d x N x n tensor block plus, for each sample column, its cube origin.
// Cube entry (i, j, k) maps to block row i + a*j, tube k.
struct TensorBlock {
  Tensor3 block;
  std::vector<CubeOrigin> provenance;
};

// Slice k is the image translated by shifts[k] with edge replication;
// slice 0 equals the image. Tensor dims are (p, q, r) = (width, height, r).
Tensor3 shiftConcat(const GrayImage& img, const FoldConfig& cfg);

// All stride-1 cube origins of an (n1, n2, n3) volume, lexicographic in
// (x, y, z). (p-a+1)(q-a+1)(r-a+1) entries.
std::vector<CubeOrigin> enumerateOrigins(const Dims3& volDims, int a, int imageIndex = 0);

TensorBlock foldAtOrigins(const Tensor3& vol, const std::vector<CubeOrigin>& origins, int a);

// Exhaustive stride-1 sampling, optionally reduced to cfg.sampleBudget cubes
// by a seeded uniform draw without replacement (order stays lexicographic).
TensorBlock fold(const Tensor3& vol, const FoldConfig& cfg);

// Scatters cubes back to their origins, averaging overlaps. Pixels covered
// by no cube are taken from fallback; with no fallback they are an error.
// Contributions that agree bitwise reproduce the value exactly.
Tensor3 unfold(const TensorBlock& block, const Dims3& outDims,
               const Tensor3* fallback = nullptr);

// c x c box mean; dims must be divisible by c.
GrayImage downsample(const GrayImage& img, int c);

// Bicubic interpolation (Catmull-Rom, parameter -0.5) to c times the size,
// edge replication, clamped to [0,1].
GrayImage upsample(const GrayImage& img, int c);

// Six derivative volumes of the upsampled shift-concatenated tensor:
// f1 = [-1,0,1] and f2 = [1,0,-2,0,1] along x, y and z, replicate padding.
// Order: f1x, f1y, f2x, f2y, f1z, f2z.
std::array<Tensor3, 6> extractFeatures(const Tensor3& vol);

// Folds each feature volume at the shared origins and stacks the row blocks,
// volume-major: rows [v*d, (v+1)*d) come from volume v, d = a*a.
TensorBlock foldFeatures(const std::array<Tensor3, 6>& vols,
                         const std::vector<CubeOrigin>& origins, int a);

double cubeMean(const Tensor3& vol, const CubeOrigin& origin, int a);

// Subtracts each column's mean over its d x n slab (the cube mean).
void removeColumnMeans(TensorBlock& block);

}  // namespace tsr
