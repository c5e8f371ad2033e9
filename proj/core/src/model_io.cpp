#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tsr/pipeline.hpp"

namespace tsr {

namespace {

constexpr char kMagic[4] = {'T', 'S', 'R', '1'};
constexpr std::uint8_t kFilterSetDerivative6 = 0;

void putU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void putF64(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes_[pos_ + i];
    pos_ += 8;
    return std::bit_cast<double>(bits);
  }

  std::int8_t i8() {
    need(1);
    return static_cast<std::int8_t>(bytes_[pos_++]);
  }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }

  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw std::runtime_error("model file truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void putTensor(std::vector<std::uint8_t>& out, const Tensor3& t) {
  // storage order is already (slice, row, col) with slice outermost
  for (std::size_t i = 0; i < t.size(); ++i) putF64(out, t.data()[i]);
}

}  // namespace

std::vector<std::uint8_t> encodeModel(const SrModel& model) {
  model.fold.validate();
  const int a = model.fold.a;
  const int m = model.dh.n2(), n = model.dh.n3();
  const int dHigh = model.dh.n1(), dLow = model.dl.n1();
  if (model.dl.n2() != m || model.dl.n3() != n)
    throw std::invalid_argument("model: dh and dl must share m and n");
  if (n != a) throw std::invalid_argument("model: tube length n must equal cube edge a");
  if (dHigh != a * a || dLow != 6 * a * a)
    throw std::invalid_argument("model: dictionary rows must be a^2 and 6a^2");

  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  putU32(out, model.version);
  putU32(out, static_cast<std::uint32_t>(model.fold.a));
  putU32(out, static_cast<std::uint32_t>(model.fold.r));
  putU32(out, static_cast<std::uint32_t>(model.fold.c));
  putU32(out, static_cast<std::uint32_t>(m));
  putU32(out, static_cast<std::uint32_t>(n));
  putU32(out, static_cast<std::uint32_t>(dHigh));
  putU32(out, static_cast<std::uint32_t>(dLow));
  putU32(out, model.seed);
  putF64(out, model.lambda);
  for (const Shift& s : model.fold.shifts) {
    out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(s.dx)));
    out.push_back(static_cast<std::uint8_t>(static_cast<std::int8_t>(s.dy)));
  }
  out.push_back(kFilterSetDerivative6);
  putTensor(out, model.dh);
  putTensor(out, model.dl);
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(crc32(0L, nullptr, 0), out.data(), static_cast<uInt>(out.size())));
  putU32(out, crc);
  return out;
}

SrModel decodeModel(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 + 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("not a model file (bad magic)");
  const std::uint32_t storedCrc = static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
                                  (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
                                  (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
                                  (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
  const std::uint32_t actualCrc = static_cast<std::uint32_t>(
      crc32(crc32(0L, nullptr, 0), bytes.data(), static_cast<uInt>(bytes.size() - 4)));
  if (storedCrc != actualCrc) throw std::runtime_error("model checksum mismatch");

  Reader rd(bytes);
  rd.u32();  // magic, already checked
  SrModel model;
  model.version = rd.u32();
  if (model.version != 1)
    throw std::runtime_error("unsupported model version " + std::to_string(model.version));
  model.fold.a = static_cast<int>(rd.u32());
  model.fold.r = static_cast<int>(rd.u32());
  model.fold.c = static_cast<int>(rd.u32());
  const int m = static_cast<int>(rd.u32());
  const int n = static_cast<int>(rd.u32());
  const int dHigh = static_cast<int>(rd.u32());
  const int dLow = static_cast<int>(rd.u32());
  model.seed = rd.u32();
  model.lambda = rd.f64();
  if (model.fold.r < 1 || model.fold.r > 4096)
    throw std::runtime_error("model: implausible shift count");
  model.fold.shifts.resize(model.fold.r);
  for (Shift& s : model.fold.shifts) {
    s.dx = rd.i8();
    s.dy = rd.i8();
  }
  const std::uint8_t filterSet = rd.u8();
  if (filterSet != kFilterSetDerivative6)
    throw std::runtime_error("model: unknown filter set id " + std::to_string(filterSet));

  if (m < 1 || n < 1 || dHigh < 1 || dLow < 1)
    throw std::runtime_error("model: invalid dictionary dims");
  const std::size_t payload =
      (static_cast<std::size_t>(dHigh) + dLow) * m * n * 8;
  if (bytes.size() != rd.pos() + payload + 4)
    throw std::runtime_error("model: payload size does not match declared dims");

  auto readTensor = [&](int rows) {
    std::vector<double> data(static_cast<std::size_t>(rows) * m * n);
    for (double& v : data) v = rd.f64();
    return Tensor3({rows, m, n}, std::move(data));
  };
  model.dh = readTensor(dHigh);
  model.dl = readTensor(dLow);

  model.fold.validate();
  if (n != model.fold.a || dHigh != model.fold.a * model.fold.a || dLow != 6 * dHigh)
    throw std::runtime_error("model: dims inconsistent with cube edge");
  return model;
}

void saveModel(const SrModel& model, const std::filesystem::path& file) {
  const std::vector<std::uint8_t> bytes = encodeModel(model);
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open model file for writing: " + file.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed to write model file " + file.string());
}

SrModel loadModel(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("cannot open model file " + file.string());
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  in.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!in) throw std::runtime_error("failed to read model file " + file.string());
  return decodeModel(bytes);
}

}  // namespace tsr
