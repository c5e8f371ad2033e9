#pragma once

#include <cmath>
#include <vector>

#include "tsr/rng.hpp"
#include "tsr/tensor.hpp"

namespace tsrtest {

inline tsr::Tensor3 randomTensor(int n1, int n2, int n3, tsr::Rng& rng) {
  std::vector<double> data(static_cast<std::size_t>(n1) * n2 * n3);
  for (double& v : data) v = rng.normal();
  return tsr::Tensor3({n1, n2, n3}, std::move(data));
}

// Gaussian atoms normalized to unit lateral-slice norm.
inline tsr::Tensor3 randomDictionary(int d, int m, int n, tsr::Rng& rng) {
  tsr::Tensor3 dict = randomTensor(d, m, n, rng);
  for (int j = 0; j < m; ++j) {
    const double s = 1.0 / std::sqrt(tsr::sliceNormSq(dict, j));
    for (int k = 0; k < n; ++k)
      for (int i = 0; i < d; ++i) dict(i, j, k) *= s;
  }
  return dict;
}

inline double relErr(const tsr::Tensor3& got, const tsr::Tensor3& want) {
  const double scale = tsr::frobNorm(want);
  return tsr::frobNorm(got - want) / (scale > 0.0 ? scale : 1.0);
}

}  // namespace tsrtest
