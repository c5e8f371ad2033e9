#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace tsr {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Dims3 {
  int n1 = 0, n2 = 0, n3 = 0;
  bool operator==(const Dims3&) const = default;
};

std::string toString(const Dims3& d);

// Dense order-3 real tensor. Storage is slice-major along dim 3, then rows,
// then columns: element (i, j, k) lives at ((k*n1)+i)*n2 + j. This nesting is
// also the serialized payload order.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int n1, int n2, int n3);  // zero-filled
  Tensor3(Dims3 dims, std::vector<double> data);  // validates size and finiteness

  static Tensor3 zeros(int n1, int n2, int n3) { return Tensor3(n1, n2, n3); }

  const Dims3& dims() const { return dims_; }
  int n1() const { return dims_.n1; }
  int n2() const { return dims_.n2; }
  int n3() const { return dims_.n3; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j, int k) {
    return data_[(static_cast<std::size_t>(k) * dims_.n1 + i) * dims_.n2 + j];
  }
  double operator()(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(k) * dims_.n1 + i) * dims_.n2 + j];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  // Frontal slice k as an n1 x n2 matrix view.
  Eigen::Map<RowMat> slice(int k);
  Eigen::Map<const RowMat> slice(int k) const;

  bool sameDims(const Tensor3& o) const { return dims_ == o.dims_; }

 private:
  Dims3 dims_;
  std::vector<double> data_;
};

Tensor3 operator+(const Tensor3& a, const Tensor3& b);
Tensor3 operator-(const Tensor3& a, const Tensor3& b);
Tensor3 operator*(double s, const Tensor3& a);

// Frontal slice 1 = I, all other slices zero; two-sided t-product identity.
Tensor3 identityTensor(int n, int n3);

double frobNorm(const Tensor3& a);
double l1Norm(const Tensor3& a);
// Squared Frobenius norm of the lateral slice (:, j, :), j zero-based.
double sliceNormSq(const Tensor3& a, int j);

double maxAbs(const Tensor3& a);
double maxAbsDiff(const Tensor3& a, const Tensor3& b);

// Per-frequency image of a Tensor3 under the DFT along dim 3. Slice b holds
// the b-th frequency as an n1 x n2 complex matrix.
struct SpectralTensor {
  Dims3 dims;
  std::vector<Eigen::MatrixXcd> slices;

  SpectralTensor() = default;
  explicit SpectralTensor(Dims3 d);
};

// Unnormalized forward DFT along dim 3; the inverse applies the 1/n3 factor.
SpectralTensor fft3(const Tensor3& a);
// Throws if the imaginary residue exceeds 1e-8 relative (corrupted spectrum);
// smaller residue is discarded.
Tensor3 ifft3(const SpectralTensor& s);

}  // namespace tsr
