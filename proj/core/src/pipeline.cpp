#include "tsr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tsr/parallel.hpp"
#include "tsr/rng.hpp"
#include "tsr/tproduct.hpp"

namespace tsr {

namespace {

struct PreparedImage {
  Tensor3 highVol;                  // shift-concat of the original
  Tensor3 upsampledVol;             // shift-concat of upsample(downsample(x))
  std::array<Tensor3, 6> features;  // derivative volumes of upsampledVol
  std::vector<CubeOrigin> origins;  // exhaustive grid
};

PreparedImage prepareTrainingImage(const GrayImage& img, const FoldConfig& cfg,
                                   int imageIndex) {
  const int a = cfg.a, c = cfg.c;
  if (img.width() % c != 0 || img.height() % c != 0)
    throw std::invalid_argument("training image " + std::to_string(imageIndex) + " is " +
                                std::to_string(img.width()) + "x" +
                                std::to_string(img.height()) +
                                ", not divisible by c=" + std::to_string(c));
  if (img.width() / c < a || img.height() / c < a)
    throw std::invalid_argument("training image " + std::to_string(imageIndex) +
                                " smaller than " + std::to_string(a * c) + "x" +
                                std::to_string(a * c) +
                                " (must stay at least a x a after downsampling)");
  PreparedImage out;
  out.highVol = shiftConcat(img, cfg);
  const GrayImage up = upsample(downsample(img, c), c);
  out.upsampledVol = shiftConcat(up, cfg);
  out.features = extractFeatures(out.upsampledVol);
  out.origins = enumerateOrigins(out.highVol.dims(), a, imageIndex);
  return out;
}

Tensor3 concatColumns(const std::vector<TensorBlock>& blocks) {
  int total = 0;
  for (const TensorBlock& b : blocks) total += b.block.n2();
  const Tensor3& first = blocks.front().block;
  Tensor3 out(first.n1(), total, first.n3());
  int at = 0;
  for (const TensorBlock& b : blocks) {
    for (int k = 0; k < out.n3(); ++k)
      out.slice(k).middleCols(at, b.block.n2()) = b.block.slice(k);
    at += b.block.n2();
  }
  return out;
}

}  // namespace

SrModel trainModel(const TrainSpec& spec) {
  spec.fold.validate();
  spec.sparse.validate();
  if (spec.images.empty()) throw std::invalid_argument("train: no input images");
  if (spec.atoms < 1) throw std::invalid_argument("train: atom count m must be >= 1");
  if (spec.outerIter < 0) throw std::invalid_argument("train: T must be >= 0");

  const int nImages = static_cast<int>(spec.images.size());
  std::vector<GrayImage> images(nImages);
  parallelFor(nImages, [&](int i) { images[i] = readImage(spec.images[i]); });

  std::vector<PreparedImage> prepared(nImages);
  parallelFor(nImages, [&](int i) {
    prepared[i] = prepareTrainingImage(images[i], spec.fold, i);
  });

  // one global budget draw across the pooled per-image origin grids
  std::vector<std::size_t> poolSizes(nImages);
  std::size_t poolTotal = 0;
  for (int i = 0; i < nImages; ++i) {
    poolSizes[i] = prepared[i].origins.size();
    poolTotal += poolSizes[i];
  }
  std::vector<std::vector<CubeOrigin>> selected(nImages);
  if (spec.fold.sampleBudget > 0 &&
      static_cast<std::size_t>(spec.fold.sampleBudget) < poolTotal) {
    Rng rng = rngStream(spec.seed, 1);
    const auto keep = sampleWithoutReplacement(
        poolTotal, static_cast<std::size_t>(spec.fold.sampleBudget), rng);
    std::vector<std::size_t> starts(nImages + 1, 0);
    for (int i = 0; i < nImages; ++i) starts[i + 1] = starts[i] + poolSizes[i];
    for (std::size_t idx : keep) {
      const int img = static_cast<int>(
          std::upper_bound(starts.begin(), starts.end(), idx) - starts.begin() - 1);
      selected[img].push_back(prepared[img].origins[idx - starts[img]]);
    }
  } else {
    for (int i = 0; i < nImages; ++i) selected[i] = prepared[i].origins;
  }

  std::vector<TensorBlock> highBlocks, lowBlocks;
  std::vector<CubeOrigin> provenance;
  for (int i = 0; i < nImages; ++i) {
    if (selected[i].empty()) continue;
    highBlocks.push_back(foldAtOrigins(prepared[i].highVol, selected[i], spec.fold.a));
    lowBlocks.push_back(foldFeatures(prepared[i].features, selected[i], spec.fold.a));
    provenance.insert(provenance.end(), selected[i].begin(), selected[i].end());
  }
  if (highBlocks.empty()) throw std::runtime_error("train: no samples selected");

  TensorBlock th{concatColumns(highBlocks), provenance};
  TensorBlock tl{concatColumns(lowBlocks), provenance};
  removeColumnMeans(th);

  const JointProblem jp = makeJointProblem(std::move(th), std::move(tl),
                                           spec.sparse.lambda);
  TrainOptions opt;
  opt.atoms = spec.atoms;
  opt.outerIter = spec.outerIter;
  opt.sparse = spec.sparse;
  opt.seed = spec.seed;
  opt.progress = spec.progress;
  DictionaryPair pair = trainDictionaries(jp, opt);

  SrModel model;
  model.version = 1;
  model.fold = spec.fold;
  model.lambda = spec.sparse.lambda;
  model.seed = spec.seed;
  model.dh = std::move(pair.dh);
  model.dl = std::move(pair.dl);
  model.meta = std::move(pair.meta);
  return model;
}

namespace {

GrayImage reconstruct(const SrModel& model, const GrayImage& lowRes, bool useDictionary,
                      const SuperResolveOptions& opts) {
  const FoldConfig& cfg = model.fold;
  const int a = cfg.a, c = cfg.c;
  const int p = lowRes.width() * c, q = lowRes.height() * c;
  if (p < a || q < a)
    throw std::runtime_error("geometry mismatch: input " + std::to_string(lowRes.width()) +
                             "x" + std::to_string(lowRes.height()) + " upsamples to " +
                             std::to_string(p) + "x" + std::to_string(q) +
                             ", smaller than the cube edge a=" + std::to_string(a));

  const GrayImage up = upsample(lowRes, c);
  const Tensor3 upVol = shiftConcat(up, cfg);
  // generation-phase folding is always exhaustive so unfold leaves no holes
  const std::vector<CubeOrigin> origins = enumerateOrigins(upVol.dims(), a, 0);

  Tensor3 highBlock;
  if (useDictionary) {
    const std::array<Tensor3, 6> feats = extractFeatures(upVol);
    const TensorBlock tl = foldFeatures(feats, origins, a);
    SparseCodeConfig cc;
    cc.lambda = opts.lambda.value_or(model.lambda);
    cc.maxIter = opts.maxIter.value_or(50);
    cc.tol = opts.tol.value_or(1e-7);
    const CodingResult res = fista(model.dl, tl.block, cc);
    highBlock = tproduct(model.dh, res.coeffs);
  } else {
    highBlock = Tensor3(a * a, static_cast<int>(origins.size()), a);
  }

  // put the DC back from the upsampled image, cube by cube
  const int N = static_cast<int>(origins.size());
  parallelFor(N, [&](int col) {
    const double mean = cubeMean(upVol, origins[col], a);
    for (int k = 0; k < a; ++k)
      for (int i = 0; i < a * a; ++i) highBlock(i, col, k) += mean;
  });

  const Tensor3 rec = unfold(TensorBlock{std::move(highBlock), origins},
                             upVol.dims(), &upVol);
  GrayImage out(p, q);
  for (int y = 0; y < q; ++y)
    for (int x = 0; x < p; ++x)
      out.at(x, y) = std::min(1.0, std::max(0.0, rec(x, y, 0)));
  return out;
}

}  // namespace

GrayImage superResolve(const SrModel& model, const GrayImage& lowRes,
                       const SuperResolveOptions& opts) {
  return reconstruct(model, lowRes, true, opts);
}

GrayImage bicubicDcReference(const SrModel& model, const GrayImage& lowRes) {
  return reconstruct(model, lowRes, false, {});
}

std::vector<std::filesystem::path> listImageFiles(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    for (char& ch : ext) ch = static_cast<char>(std::tolower(ch));
    if (ext == ".png" || ext == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

DirectoryLowResSource::DirectoryLowResSource(const std::filesystem::path& dir)
    : files_(listImageFiles(dir)) {}

std::string DirectoryLowResSource::name(std::size_t i) const {
  return files_.at(i).filename().string();
}

GrayImage DirectoryLowResSource::load(std::size_t i) const {
  return readImage(files_.at(i));
}

double psnr(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument("psnr: image sizes differ");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i) {
    const double d = a.pixels()[i] - b.pixels()[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels().size());
  if (mse <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

double meanAbsError(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw std::invalid_argument("meanAbsError: image sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.pixels().size(); ++i)
    s += std::abs(a.pixels()[i] - b.pixels()[i]);
  return s / static_cast<double>(a.pixels().size());
}

EvalReport evalModel(const SrModel& model, const std::filesystem::path& truthDir) {
  const std::vector<std::filesystem::path> files = listImageFiles(truthDir);
  if (files.empty())
    throw std::runtime_error("evaluation directory holds no PNG/PGM images: " +
                             truthDir.string());
  EvalReport report;
  report.entries.resize(files.size());
  parallelFor(static_cast<int>(files.size()), [&](int i) {
    const GrayImage truth = readImage(files[i]);
    const GrayImage low = downsample(truth, model.fold.c);
    const GrayImage sr = superResolve(model, low);
    const GrayImage bicubic = upsample(low, model.fold.c);
    EvalEntry& e = report.entries[i];
    e.name = files[i].filename().string();
    e.psnrModel = psnr(sr, truth);
    e.psnrBicubic = psnr(bicubic, truth);
    e.maeModel = meanAbsError(sr, truth);
    e.maeBicubic = meanAbsError(bicubic, truth);
  });
  for (const EvalEntry& e : report.entries) {
    report.meanPsnrModel += e.psnrModel;
    report.meanPsnrBicubic += e.psnrBicubic;
    report.meanMaeModel += e.maeModel;
    report.meanMaeBicubic += e.maeBicubic;
  }
  const double inv = 1.0 / static_cast<double>(report.entries.size());
  report.meanPsnrModel *= inv;
  report.meanPsnrBicubic *= inv;
  report.meanMaeModel *= inv;
  report.meanMaeBicubic *= inv;
  return report;
}

}  // namespace tsr
