#pragma once

#include <Eigen/Dense>

#include "tsr/tensor.hpp"

namespace tsr {

// The naive block-circulant route exists as a permanent test oracle; the
// pipeline always uses the FFT path.
enum class TproductPath { fft, naiveCirculant };

// a (n1 x n2 x n3) * b (n2 x n4 x n3) -> n1 x n4 x n3. Every output tube is a
// sum of circular convolutions of input tubes.
Tensor3 tproduct(const Tensor3& a, const Tensor3& b,
                 TproductPath path = TproductPath::fft);

// Slice 1 transposed, slices 2..n3 transposed with their order reversed;
// equivalently, each spectral slice becomes its conjugate transpose.
Tensor3 ttranspose(const Tensor3& a);

// Block-circulant matrix (n1*n3) x (n2*n3): block (r, c) is the frontal
// slice with index (r - c) mod n3.
Eigen::MatrixXd circulantUnfold(const Tensor3& a);

// Frontal slices stacked vertically: (n1*n3) x n2.
Eigen::MatrixXd stackSlices(const Tensor3& a);
Tensor3 unstackSlices(const Eigen::MatrixXd& m, Dims3 dims);

}  // namespace tsr
