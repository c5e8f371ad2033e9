#include "tsr/tproduct.hpp"

#include <stdexcept>

#include "tsr/parallel.hpp"

namespace tsr {

Tensor3 ttranspose(const Tensor3& a) {
  Tensor3 out(a.n2(), a.n1(), a.n3());
  out.slice(0) = a.slice(0).transpose();
  for (int k = 1; k < a.n3(); ++k) out.slice(k) = a.slice(a.n3() - k).transpose();
  return out;
}

Eigen::MatrixXd stackSlices(const Tensor3& a) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(a.n1()) * a.n3(), a.n2());
  for (int k = 0; k < a.n3(); ++k)
    m.middleRows(static_cast<Eigen::Index>(k) * a.n1(), a.n1()) = a.slice(k);
  return m;
}

Tensor3 unstackSlices(const Eigen::MatrixXd& m, Dims3 dims) {
  if (m.rows() != static_cast<Eigen::Index>(dims.n1) * dims.n3 || m.cols() != dims.n2)
    throw std::invalid_argument("unstackSlices: matrix shape does not match dims " +
                                toString(dims));
  Tensor3 out(dims.n1, dims.n2, dims.n3);
  for (int k = 0; k < dims.n3; ++k)
    out.slice(k) = m.middleRows(static_cast<Eigen::Index>(k) * dims.n1, dims.n1);
  return out;
}

Eigen::MatrixXd circulantUnfold(const Tensor3& a) {
  const int n1 = a.n1(), n2 = a.n2(), n3 = a.n3();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n1) * n3, static_cast<Eigen::Index>(n2) * n3);
  for (int br = 0; br < n3; ++br)
    for (int bc = 0; bc < n3; ++bc) {
      const int k = (br - bc + n3) % n3;
      m.block(static_cast<Eigen::Index>(br) * n1, static_cast<Eigen::Index>(bc) * n2, n1, n2) =
          a.slice(k);
    }
  return m;
}

namespace {

void checkConformable(const Tensor3& a, const Tensor3& b) {
  if (a.n2() != b.n1() || a.n3() != b.n3()) {
    throw std::invalid_argument("tproduct: dims mismatch " + toString(a.dims()) +
                                " * " + toString(b.dims()));
  }
}

}  // namespace

Tensor3 tproduct(const Tensor3& a, const Tensor3& b, TproductPath path) {
  checkConformable(a, b);
  if (path == TproductPath::naiveCirculant) {
    const Eigen::MatrixXd stacked = circulantUnfold(a) * stackSlices(b);
    return unstackSlices(stacked, {a.n1(), b.n2(), a.n3()});
  }
  const SpectralTensor as = fft3(a);
  const SpectralTensor bs = fft3(b);
  SpectralTensor cs({a.n1(), b.n2(), a.n3()});
  parallelFor(a.n3(), [&](int k) { cs.slices[k] = as.slices[k] * bs.slices[k]; });
  return ifft3(cs);
}

}  // namespace tsr
