#include "tsr/fold.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsr/parallel.hpp"
#include "tsr/rng.hpp"

namespace tsr {

std::vector<Shift> defaultShifts(int r) {
  if (r < 1) throw std::invalid_argument("shift count r must be >= 1");
  std::vector<Shift> out;
  out.push_back({0, 0});
  for (int ring = 1; static_cast<int>(out.size()) < r; ++ring) {
    const Shift ringShifts[8] = {{ring, 0},     {0, ring},      {-ring, 0},
                                 {0, -ring},    {ring, ring},   {-ring, -ring},
                                 {-ring, ring}, {ring, -ring}};
    for (const Shift& s : ringShifts) {
      if (static_cast<int>(out.size()) >= r) break;
      out.push_back(s);
    }
  }
  return out;
}

void FoldConfig::validate() const {
  if (a < 2) throw std::invalid_argument("fold config: a must be >= 2 (cube edge)");
  if (r < a) throw std::invalid_argument("fold config: r must be >= a (so r-a+1 >= 1)");
  if (c < 2) throw std::invalid_argument("fold config: c must be >= 2 (downsampling rate)");
  if (static_cast<int>(shifts.size()) != r)
    throw std::invalid_argument("fold config: shift set size must equal r");
  if (!(shifts[0] == Shift{0, 0}))
    throw std::invalid_argument("fold config: shifts[0] must be (0,0)");
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    if (shifts[i].dx < -127 || shifts[i].dx > 127 || shifts[i].dy < -127 ||
        shifts[i].dy > 127)
      throw std::invalid_argument("fold config: shift offsets must fit in [-127,127]");
    for (std::size_t j = i + 1; j < shifts.size(); ++j)
      if (shifts[i] == shifts[j])
        throw std::invalid_argument("fold config: shifts must be pairwise distinct");
  }
  if (sampleBudget < 0)
    throw std::invalid_argument("fold config: sample budget must be >= 0");
}

Tensor3 shiftConcat(const GrayImage& img, const FoldConfig& cfg) {
  cfg.validate();
  const int p = img.width(), q = img.height();
  Tensor3 out(p, q, cfg.r);
  for (int k = 0; k < cfg.r; ++k) {
    const Shift s = cfg.shifts[k];
    for (int x = 0; x < p; ++x) {
      const int sx = std::clamp(x - s.dx, 0, p - 1);
      for (int y = 0; y < q; ++y) {
        const int sy = std::clamp(y - s.dy, 0, q - 1);
        out(x, y, k) = img.at(sx, sy);
      }
    }
  }
  return out;
}

std::vector<CubeOrigin> enumerateOrigins(const Dims3& volDims, int a, int imageIndex) {
  if (volDims.n1 < a || volDims.n2 < a || volDims.n3 < a)
    throw std::invalid_argument("fold: volume " + toString(volDims) +
                                " smaller than cube edge a=" + std::to_string(a));
  std::vector<CubeOrigin> origins;
  origins.reserve(static_cast<std::size_t>(volDims.n1 - a + 1) * (volDims.n2 - a + 1) *
                  (volDims.n3 - a + 1));
  for (int x = 0; x + a <= volDims.n1; ++x)
    for (int y = 0; y + a <= volDims.n2; ++y)
      for (int z = 0; z + a <= volDims.n3; ++z) origins.push_back({imageIndex, x, y, z});
  return origins;
}

TensorBlock foldAtOrigins(const Tensor3& vol, const std::vector<CubeOrigin>& origins, int a) {
  if (a < 2) throw std::invalid_argument("fold: a must be >= 2");
  const int d = a * a;
  const int N = static_cast<int>(origins.size());
  if (N == 0) throw std::invalid_argument("fold: no cube origins");
  for (const CubeOrigin& o : origins) {
    if (o.x < 0 || o.y < 0 || o.z < 0 || o.x + a > vol.n1() || o.y + a > vol.n2() ||
        o.z + a > vol.n3())
      throw std::invalid_argument("fold: cube origin out of bounds for volume " +
                                  toString(vol.dims()));
  }
  TensorBlock out;
  out.block = Tensor3(d, N, a);
  out.provenance = origins;
  Tensor3& blk = out.block;
  parallelFor(N, [&](int col) {
    const CubeOrigin& o = origins[col];
    for (int k = 0; k < a; ++k)
      for (int j = 0; j < a; ++j)
        for (int i = 0; i < a; ++i)
          blk(i + a * j, col, k) = vol(o.x + i, o.y + j, o.z + k);
  });
  return out;
}

TensorBlock fold(const Tensor3& vol, const FoldConfig& cfg) {
  cfg.validate();
  std::vector<CubeOrigin> origins = enumerateOrigins(vol.dims(), cfg.a);
  if (cfg.sampleBudget > 0 &&
      static_cast<std::size_t>(cfg.sampleBudget) < origins.size()) {
    Rng rng = rngStream(cfg.seed, 1);
    const auto keep = sampleWithoutReplacement(origins.size(),
                                               static_cast<std::size_t>(cfg.sampleBudget), rng);
    std::vector<CubeOrigin> subset;
    subset.reserve(keep.size());
    for (std::size_t idx : keep) subset.push_back(origins[idx]);
    origins = std::move(subset);
  }
  return foldAtOrigins(vol, origins, cfg.a);
}

Tensor3 unfold(const TensorBlock& block, const Dims3& outDims, const Tensor3* fallback) {
  const Tensor3& blk = block.block;
  const int N = blk.n2();
  if (static_cast<int>(block.provenance.size()) != N)
    throw std::invalid_argument("unfold: provenance length does not match block columns");
  const int a = blk.n3();
  if (blk.n1() != a * a)
    throw std::invalid_argument("unfold: block rows must equal a*a, got " +
                                toString(blk.dims()));
  if (fallback && !(fallback->dims() == outDims))
    throw std::invalid_argument("unfold: fallback dims do not match output dims");

  Tensor3 sum(outDims.n1, outDims.n2, outDims.n3);
  Tensor3 first(outDims.n1, outDims.n2, outDims.n3);
  std::vector<std::uint32_t> count(sum.size(), 0);
  std::vector<unsigned char> allEqual(sum.size(), 1);

  for (int col = 0; col < N; ++col) {
    const CubeOrigin& o = block.provenance[col];
    if (o.x < 0 || o.y < 0 || o.z < 0 || o.x + a > outDims.n1 || o.y + a > outDims.n2 ||
        o.z + a > outDims.n3)
      throw std::invalid_argument("unfold: cube origin out of bounds for dims " +
                                  toString(outDims));
    for (int k = 0; k < a; ++k)
      for (int j = 0; j < a; ++j)
        for (int i = 0; i < a; ++i) {
          const double v = blk(i + a * j, col, k);
          const std::size_t at =
              (static_cast<std::size_t>(o.z + k) * outDims.n1 + (o.x + i)) * outDims.n2 +
              (o.y + j);
          if (count[at] == 0) {
            first.data()[at] = v;
          } else if (v != first.data()[at]) {
            allEqual[at] = 0;
          }
          sum.data()[at] += v;
          count[at] += 1;
        }
  }

  Tensor3 out(outDims.n1, outDims.n2, outDims.n3);
  for (std::size_t at = 0; at < out.size(); ++at) {
    if (count[at] == 0) {
      if (!fallback)
        throw std::runtime_error("unfold: uncovered pixel with no fallback image");
      out.data()[at] = fallback->data()[at];
    } else if (allEqual[at]) {
      // identical contributions average to themselves, bit-exactly
      out.data()[at] = first.data()[at];
    } else {
      out.data()[at] = sum.data()[at] / count[at];
    }
  }
  return out;
}

GrayImage downsample(const GrayImage& img, int c) {
  if (c < 2) throw std::invalid_argument("downsample: c must be >= 2");
  const int p = img.width(), q = img.height();
  if (p % c != 0 || q % c != 0)
    throw std::invalid_argument("downsample: image " + std::to_string(p) + "x" +
                                std::to_string(q) + " not divisible by c=" +
                                std::to_string(c));
  GrayImage out(p / c, q / c);
  const double inv = 1.0 / (static_cast<double>(c) * c);
  for (int y = 0; y < q / c; ++y)
    for (int x = 0; x < p / c; ++x) {
      double s = 0.0;
      for (int dy = 0; dy < c; ++dy)
        for (int dx = 0; dx < c; ++dx) s += img.at(x * c + dx, y * c + dy);
      out.at(x, y) = s * inv;
    }
  return out;
}

namespace {

// Catmull-Rom kernel (bicubic, parameter -0.5).
double cubicKernel(double t) {
  const double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

// One separable pass along x; rows stay untouched.
std::vector<double> cubicPassX(const std::vector<double>& src, int w, int h, int c) {
  std::vector<double> dst(static_cast<std::size_t>(w) * c * h);
  const int outW = w * c;
  for (int y = 0; y < h; ++y) {
    const double* row = src.data() + static_cast<std::size_t>(y) * w;
    double* orow = dst.data() + static_cast<std::size_t>(y) * outW;
    for (int X = 0; X < outW; ++X) {
      const double sx = (X + 0.5) / c - 0.5;
      const int x0 = static_cast<int>(std::floor(sx));
      const double t = sx - x0;
      double v = 0.0;
      for (int k = -1; k <= 2; ++k) {
        const int xi = std::clamp(x0 + k, 0, w - 1);
        v += cubicKernel(t - k) * row[xi];
      }
      orow[X] = v;
    }
  }
  return dst;
}

std::vector<double> cubicPassY(const std::vector<double>& src, int w, int h, int c) {
  std::vector<double> dst(static_cast<std::size_t>(w) * h * c);
  const int outH = h * c;
  for (int Y = 0; Y < outH; ++Y) {
    const double sy = (Y + 0.5) / c - 0.5;
    const int y0 = static_cast<int>(std::floor(sy));
    const double t = sy - y0;
    double* orow = dst.data() + static_cast<std::size_t>(Y) * w;
    int yi[4];
    double wgt[4];
    for (int k = -1; k <= 2; ++k) {
      yi[k + 1] = std::clamp(y0 + k, 0, h - 1);
      wgt[k + 1] = cubicKernel(t - k);
    }
    for (int x = 0; x < w; ++x) {
      double v = 0.0;
      for (int k = 0; k < 4; ++k)
        v += wgt[k] * src[static_cast<std::size_t>(yi[k]) * w + x];
      orow[x] = v;
    }
  }
  return dst;
}

}  // namespace

GrayImage upsample(const GrayImage& img, int c) {
  if (c < 1) throw std::invalid_argument("upsample: c must be >= 1");
  if (c == 1) return img;
  const int w = img.width(), h = img.height();
  std::vector<double> wide = cubicPassX(img.pixels(), w, h, c);
  std::vector<double> full = cubicPassY(wide, w * c, h, c);
  for (double& v : full) v = std::min(1.0, std::max(0.0, v));
  return GrayImage(w * c, h * c, std::move(full));
}

namespace {

struct Tap {
  int offset;
  double weight;
};

Tensor3 axisFilter(const Tensor3& vol, int axis, const Tap* taps, int nTaps) {
  const Dims3 d = vol.dims();
  Tensor3 out(d.n1, d.n2, d.n3);
  const int extent = axis == 0 ? d.n1 : axis == 1 ? d.n2 : d.n3;
  for (int k = 0; k < d.n3; ++k)
    for (int i = 0; i < d.n1; ++i)
      for (int j = 0; j < d.n2; ++j) {
        const int pos = axis == 0 ? i : axis == 1 ? j : k;
        double v = 0.0;
        for (int t = 0; t < nTaps; ++t) {
          const int s = std::clamp(pos + taps[t].offset, 0, extent - 1);
          const double in = axis == 0   ? vol(s, j, k)
                            : axis == 1 ? vol(i, s, k)
                                        : vol(i, j, s);
          v += taps[t].weight * in;
        }
        out(i, j, k) = v;
      }
  return out;
}

}  // namespace

std::array<Tensor3, 6> extractFeatures(const Tensor3& vol) {
  static const Tap f1[] = {{-1, -1.0}, {1, 1.0}};
  static const Tap f2[] = {{-2, 1.0}, {0, -2.0}, {2, 1.0}};
  std::array<Tensor3, 6> out;
  // x and y here follow the volume axes: axis 0 is the image x direction.
  const int axes[6] = {0, 1, 0, 1, 2, 2};
  const bool second[6] = {false, false, true, true, false, true};
  parallelFor(6, [&](int f) {
    out[f] = axisFilter(vol, axes[f], second[f] ? f2 : f1, second[f] ? 3 : 2);
  });
  return out;
}

TensorBlock foldFeatures(const std::array<Tensor3, 6>& vols,
                         const std::vector<CubeOrigin>& origins, int a) {
  const int d = a * a;
  const int N = static_cast<int>(origins.size());
  TensorBlock out;
  out.block = Tensor3(6 * d, N, a);
  out.provenance = origins;
  Tensor3& blk = out.block;
  parallelFor(N, [&](int col) {
    const CubeOrigin& o = origins[col];
    for (int f = 0; f < 6; ++f) {
      const Tensor3& vol = vols[f];
      if (o.x + a > vol.n1() || o.y + a > vol.n2() || o.z + a > vol.n3())
        throw std::invalid_argument("foldFeatures: cube origin out of bounds");
      for (int k = 0; k < a; ++k)
        for (int j = 0; j < a; ++j)
          for (int i = 0; i < a; ++i)
            blk(f * d + i + a * j, col, k) = vol(o.x + i, o.y + j, o.z + k);
    }
  });
  return out;
}

double cubeMean(const Tensor3& vol, const CubeOrigin& origin, int a) {
  double s = 0.0;
  for (int k = 0; k < a; ++k)
    for (int j = 0; j < a; ++j)
      for (int i = 0; i < a; ++i) s += vol(origin.x + i, origin.y + j, origin.z + k);
  return s / (static_cast<double>(a) * a * a);
}

void removeColumnMeans(TensorBlock& block) {
  Tensor3& blk = block.block;
  const int d = blk.n1(), N = blk.n2(), n = blk.n3();
  parallelFor(N, [&](int col) {
    double s = 0.0;
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < d; ++i) s += blk(i, col, k);
    const double mean = s / (static_cast<double>(d) * n);
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < d; ++i) blk(i, col, k) -= mean;
  });
}

}  // namespace tsr
