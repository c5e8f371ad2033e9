#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "support/synthetic.hpp"
#include "support/test_util.hpp"
#include "tsr/pipeline.hpp"
#include "tsr/tproduct.hpp"

using namespace tsr;
namespace fs = std::filesystem;
using tsrtest::stripeImage;

namespace {

fs::path freshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tsr_pipe_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> readBytes(const fs::path& f) {
  std::ifstream in(f, std::ios::binary);
  REQUIRE(in);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

// small corpus + spec good for sub-second training in tests
TrainSpec tinySpec(const fs::path& imageDir, int nImages, int size, std::uint32_t seed) {
  Rng rng(seed);
  TrainSpec spec;
  for (int i = 0; i < nImages; ++i) {
    const fs::path f = imageDir / ("img" + std::to_string(i) + ".pgm");
    writeImage(stripeImage(size, rng), f);
    spec.images.push_back(f);
  }
  spec.fold.a = 4;
  spec.fold.r = 4;
  spec.fold.c = 2;
  spec.fold.shifts = defaultShifts(4);
  spec.fold.sampleBudget = 400;
  spec.fold.seed = seed;
  spec.sparse.lambda = 0.05;
  spec.sparse.maxIter = 8;
  spec.atoms = 12;
  spec.outerIter = 2;
  spec.seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("trainModel produces the documented dictionary dims") {
  const fs::path dir = freshDir("dims");
  const TrainSpec spec = tinySpec(dir, 4, 16, 3);
  const SrModel model = trainModel(spec);
  CHECK(model.dh.n1() == 16);   // a^2
  CHECK(model.dl.n1() == 96);   // 6 a^2
  CHECK(model.dh.n2() == 12);
  CHECK(model.dh.n3() == 4);
  for (int j = 0; j < model.dh.n2(); ++j)
    CHECK(sliceNormSq(model.dh, j) + sliceNormSq(model.dl, j) <= 1.0 + 1e-9);
}

TEST_CASE("a constant corpus aborts with a degenerate-input error") {
  const fs::path dir = freshDir("constant");
  TrainSpec spec;
  const fs::path f = dir / "flat.pgm";
  writeImage(GrayImage(16, 16, 0.5), f);
  spec.images = {f};
  spec.fold.a = 4;
  spec.fold.r = 4;
  spec.fold.shifts = defaultShifts(4);
  spec.atoms = 8;
  CHECK_THROWS_WITH_AS(static_cast<void>(trainModel(spec)),
                       doctest::Contains("degenerate"), std::runtime_error);
}

TEST_CASE("model serialization") {
  const fs::path dir = freshDir("serialize");
  const TrainSpec spec = tinySpec(dir, 3, 16, 7);
  const SrModel model = trainModel(spec);

  SUBCASE("round trip is bit exact") {
    const fs::path f = dir / "model.tsr";
    saveModel(model, f);
    const SrModel back = loadModel(f);
    CHECK(back.version == model.version);
    CHECK(back.lambda == model.lambda);
    CHECK(back.seed == model.seed);
    CHECK(back.fold.a == model.fold.a);
    CHECK(back.fold.shifts == model.fold.shifts);
    CHECK(maxAbsDiff(back.dh, model.dh) == 0.0);
    CHECK(maxAbsDiff(back.dl, model.dl) == 0.0);
    // re-encoding gives identical bytes
    CHECK(encodeModel(back) == encodeModel(model));
  }
  SUBCASE("corrupted payload fails the checksum") {
    const fs::path f = dir / "model2.tsr";
    saveModel(model, f);
    auto bytes = readBytes(f);
    bytes[bytes.size() / 2] ^= 0x40;
    std::ofstream out(f, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.close();
    CHECK_THROWS_WITH_AS(static_cast<void>(loadModel(f)),
                         doctest::Contains("checksum mismatch"), std::runtime_error);
  }
  SUBCASE("truncated file is rejected") {
    auto bytes = encodeModel(model);
    bytes.resize(bytes.size() / 2);
    CHECK_THROWS_AS(static_cast<void>(decodeModel(bytes)), std::runtime_error);
  }
  SUBCASE("bad magic is rejected") {
    auto bytes = encodeModel(model);
    bytes[0] = 'X';
    CHECK_THROWS_WITH_AS(static_cast<void>(decodeModel(bytes)),
                         doctest::Contains("magic"), std::runtime_error);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  const fs::path dirA = freshDir("det_a");
  const fs::path dirB = freshDir("det_b");
  const SrModel a = trainModel(tinySpec(dirA, 3, 16, 11));
  const SrModel b = trainModel(tinySpec(dirB, 3, 16, 11));
  CHECK(encodeModel(a) == encodeModel(b));
}

TEST_CASE("superResolve") {
  const fs::path dir = freshDir("superres");
  const TrainSpec spec = tinySpec(dir, 4, 16, 13);
  const SrModel model = trainModel(spec);

  SUBCASE("output dims are c times the input dims") {
    Rng rng(17);
    const GrayImage low = stripeImage(14, rng);
    const GrayImage out = superResolve(model, low);
    CHECK(out.width() == 28);
    CHECK(out.height() == 28);
  }
  SUBCASE("constant input reproduces the constant") {
    const GrayImage low(10, 10, 0.42);
    const GrayImage out = superResolve(model, low);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        CHECK(out.at(x, y) == doctest::Approx(0.42).epsilon(1e-6));
  }
  SUBCASE("too-small input names the geometry") {
    const GrayImage low(1, 1, 0.3);
    CHECK_THROWS_WITH_AS(static_cast<void>(superResolve(model, low)),
                         doctest::Contains("geometry mismatch"), std::runtime_error);
  }
  SUBCASE("deterministic output") {
    Rng rng(19);
    const GrayImage low = stripeImage(12, rng);
    const GrayImage a = superResolve(model, low);
    const GrayImage b = superResolve(model, low);
    CHECK(maxAbsDiff(a, b) == 0.0);
  }
  SUBCASE("degenerate lambda collapses onto the bicubic+DC path") {
    Rng rng(23);
    const GrayImage low = stripeImage(12, rng);
    // lambda above the max correlation of the features with the atoms
    const GrayImage up = upsample(low, model.fold.c);
    const Tensor3 vol = shiftConcat(up, model.fold);
    const auto feats = extractFeatures(vol);
    const auto origins = enumerateOrigins(vol.dims(), model.fold.a, 0);
    const TensorBlock tl = foldFeatures(feats, origins, model.fold.a);
    const Tensor3 g0 =
        gradF(model.dl, Tensor3(model.dl.n2(), tl.block.n2(), model.dl.n3()), tl.block);
    SuperResolveOptions opts;
    opts.lambda = maxAbs(g0) * 1.001;
    const GrayImage collapsed = superResolve(model, low, opts);
    const GrayImage reference = bicubicDcReference(model, low);
    CHECK(maxAbsDiff(collapsed, reference) <= 1e-9);
  }
}

TEST_CASE("psnr and mae") {
  const GrayImage zero(4, 4, 0.0);
  const GrayImage one(4, 4, 1.0);
  CHECK(psnr(zero, zero) == 100.0);  // identical images hit the cap
  CHECK(psnr(zero, one) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(meanAbsError(zero, one) == 1.0);
}

TEST_CASE("evalModel") {
  const fs::path dir = freshDir("eval_train");
  const TrainSpec spec = tinySpec(dir, 4, 16, 29);
  const SrModel model = trainModel(spec);

  SUBCASE("aggregates are the means of the per-image values") {
    const fs::path truthDir = freshDir("eval_truth");
    Rng rng(31);
    for (int i = 0; i < 3; ++i)
      writeImage(stripeImage(16, rng), truthDir / ("t" + std::to_string(i) + ".pgm"));
    const EvalReport report = evalModel(model, truthDir);
    REQUIRE(report.entries.size() == 3);
    double meanPsnr = 0.0, meanBicubic = 0.0;
    for (const EvalEntry& e : report.entries) {
      meanPsnr += e.psnrModel;
      meanBicubic += e.psnrBicubic;
    }
    CHECK(std::abs(report.meanPsnrModel - meanPsnr / 3.0) < 1e-12);
    CHECK(std::abs(report.meanPsnrBicubic - meanBicubic / 3.0) < 1e-12);
  }
  SUBCASE("empty directory is an error") {
    const fs::path emptyDir = freshDir("eval_empty");
    CHECK_THROWS_WITH_AS(static_cast<void>(evalModel(model, emptyDir)),
                         doctest::Contains("no PNG/PGM"), std::runtime_error);
  }
}

TEST_CASE("directory source lists images sorted by name") {
  const fs::path dir = freshDir("source");
  writeImage(GrayImage(4, 4, 0.2), dir / "b.pgm");
  writeImage(GrayImage(4, 4, 0.4), dir / "a.pgm");
  writeImage(GrayImage(4, 4, 0.6), dir / "c.png");
  std::ofstream(dir / "notes.txt") << "ignored";
  const DirectoryLowResSource src(dir);
  REQUIRE(src.count() == 3);
  CHECK(src.name(0) == "a.pgm");
  CHECK(src.name(1) == "b.pgm");
  CHECK(src.name(2) == "c.png");
  CHECK(src.load(0).at(0, 0) == doctest::Approx(0.4).epsilon(1e-2));
}
