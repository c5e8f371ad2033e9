#include "tsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace tsr {

std::string toString(const Dims3& d) {
  std::ostringstream os;
  os << d.n1 << "x" << d.n2 << "x" << d.n3;
  return os.str();
}

namespace {

void checkPositive(const Dims3& d) {
  if (d.n1 < 1 || d.n2 < 1 || d.n3 < 1)
    throw std::invalid_argument("tensor dims must be positive, got " + toString(d));
}

}  // namespace

Tensor3::Tensor3(int n1, int n2, int n3) : dims_{n1, n2, n3} {
  checkPositive(dims_);
  data_.assign(static_cast<std::size_t>(n1) * n2 * n3, 0.0);
}

Tensor3::Tensor3(Dims3 dims, std::vector<double> data)
    : dims_(dims), data_(std::move(data)) {
  checkPositive(dims_);
  const std::size_t expect =
      static_cast<std::size_t>(dims_.n1) * dims_.n2 * dims_.n3;
  if (data_.size() != expect) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match dims " + toString(dims_));
  }
  for (double v : data_) {
    if (!std::isfinite(v))
      throw std::invalid_argument("tensor entries must be finite");
  }
}

Eigen::Map<RowMat> Tensor3::slice(int k) {
  return Eigen::Map<RowMat>(data_.data() + static_cast<std::size_t>(k) * dims_.n1 * dims_.n2,
                            dims_.n1, dims_.n2);
}

Eigen::Map<const RowMat> Tensor3::slice(int k) const {
  return Eigen::Map<const RowMat>(
      data_.data() + static_cast<std::size_t>(k) * dims_.n1 * dims_.n2, dims_.n1,
      dims_.n2);
}

namespace {

void requireSameDims(const Tensor3& a, const Tensor3& b, const char* op) {
  if (!a.sameDims(b)) {
    throw std::invalid_argument(std::string(op) + ": dims mismatch " +
                                toString(a.dims()) + " vs " + toString(b.dims()));
  }
}

}  // namespace

Tensor3 operator+(const Tensor3& a, const Tensor3& b) {
  requireSameDims(a, b, "tensor add");
  Tensor3 out(a.n1(), a.n2(), a.n3());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

Tensor3 operator-(const Tensor3& a, const Tensor3& b) {
  requireSameDims(a, b, "tensor sub");
  Tensor3 out(a.n1(), a.n2(), a.n3());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

Tensor3 operator*(double s, const Tensor3& a) {
  Tensor3 out(a.n1(), a.n2(), a.n3());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = s * a.data()[i];
  return out;
}

Tensor3 identityTensor(int n, int n3) {
  Tensor3 out(n, n, n3);
  for (int i = 0; i < n; ++i) out(i, i, 0) = 1.0;
  return out;
}

double frobNorm(const Tensor3& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
  return std::sqrt(s);
}

double l1Norm(const Tensor3& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a.data()[i]);
  return s;
}

double sliceNormSq(const Tensor3& a, int j) {
  if (j < 0 || j >= a.n2())
    throw std::invalid_argument("sliceNormSq: column index " + std::to_string(j) +
                                " out of range [0, " + std::to_string(a.n2()) + ")");
  double s = 0.0;
  for (int k = 0; k < a.n3(); ++k)
    for (int i = 0; i < a.n1(); ++i) {
      const double v = a(i, j, k);
      s += v * v;
    }
  return s;
}

double maxAbs(const Tensor3& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
  return m;
}

double maxAbsDiff(const Tensor3& a, const Tensor3& b) {
  requireSameDims(a, b, "maxAbsDiff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

SpectralTensor::SpectralTensor(Dims3 d) : dims(d) {
  slices.assign(d.n3, Eigen::MatrixXcd::Zero(d.n1, d.n2));
}

namespace {

// Symmetric DFT kernel W(b,k) = exp(-2*pi*i*b*k/n).
Eigen::MatrixXcd dftMatrix(int n) {
  Eigen::MatrixXcd w(n, n);
  const double step = -2.0 * 3.14159265358979323846264338327950288 / n;
  for (int b = 0; b < n; ++b)
    for (int k = 0; k < n; ++k) {
      const double ang = step * static_cast<double>(static_cast<long long>(b) * k % n);
      w(b, k) = std::complex<double>(std::cos(ang), std::sin(ang));
    }
  return w;
}

}  // namespace

SpectralTensor fft3(const Tensor3& a) {
  const Dims3 d = a.dims();
  const Eigen::Index tubes = static_cast<Eigen::Index>(d.n1) * d.n2;
  // Column k of this view is frontal slice k flattened row-major.
  Eigen::Map<const Eigen::MatrixXd> m(a.data(), tubes, d.n3);
  const Eigen::MatrixXcd s = m * dftMatrix(d.n3);
  SpectralTensor out(d);
  for (int k = 0; k < d.n3; ++k) {
    out.slices[k] = Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                                   Eigen::Dynamic, Eigen::RowMajor>>(
        s.col(k).data(), d.n1, d.n2);
  }
  return out;
}

Tensor3 ifft3(const SpectralTensor& s) {
  const Dims3 d = s.dims;
  if (static_cast<int>(s.slices.size()) != d.n3)
    throw std::invalid_argument("ifft3: slice count does not match dims " + toString(d));
  const Eigen::Index tubes = static_cast<Eigen::Index>(d.n1) * d.n2;
  Eigen::MatrixXcd sm(tubes, d.n3);
  for (int k = 0; k < d.n3; ++k) {
    const auto& sl = s.slices[k];
    if (sl.rows() != d.n1 || sl.cols() != d.n2)
      throw std::invalid_argument("ifft3: slice " + std::to_string(k) + " has wrong shape");
    sm.col(k) = Eigen::Map<const Eigen::VectorXcd>(
        Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                      Eigen::RowMajor>(sl).data(),
        tubes);
  }
  const Eigen::MatrixXcd back = sm * dftMatrix(d.n3).conjugate() / static_cast<double>(d.n3);
  const double maxImag = back.imag().cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, back.real().cwiseAbs().maxCoeff());
  if (maxImag > 1e-8 * scale) {
    throw std::runtime_error("ifft3: corrupted spectrum, imaginary residue " +
                             std::to_string(maxImag / scale));
  }
  Tensor3 out(d.n1, d.n2, d.n3);
  Eigen::Map<Eigen::MatrixXd>(out.data(), tubes, d.n3) = back.real();
  return out;
}

}  // namespace tsr
