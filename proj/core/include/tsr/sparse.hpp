#pragma once

#include <vector>

#include "tsr/tensor.hpp"

namespace tsr {

enum class LipschitzStrategy { spectral, frobeniusBound };

struct SparseCodeConfig {
  double lambda = 0.05;
  int maxIter = 50;     // S
  double tol = 1e-7;    // relative objective-change stop
  LipschitzStrategy lipschitz = LipschitzStrategy::spectral;
  double eta = 1.0;     // safety factor, >= 1

  void validate() const;
};

struct CodingResult {
  Tensor3 coeffs;                  // best iterate
  std::vector<double> objective;   // J(C_0), J(C_1), ... per iteration
  int iterations = 0;
};

// Entrywise sign(x) * max(|x| - theta, 0).
Tensor3 softThreshold(const Tensor3& x, double theta);

// Gradient of f(C) = 1/2 ||T - D*C||_F^2: ttranspose(D) * (D*C - T),
// evaluated per spectral slice as D^H (D C - T).
Tensor3 gradF(const Tensor3& dict, const Tensor3& coeffs, const Tensor3& target);

// spectral: eta * max_b sigma_max(D~(b))^2 (tight);
// frobeniusBound: eta * sum_b ||D~(b)^H D~(b)||_F. Both upper-bound the true
// gradient Lipschitz constant for eta >= 1.
double lipschitzConstant(const Tensor3& dict, LipschitzStrategy strategy,
                         double eta = 1.0);

// Accelerated proximal gradient for
//   min_C 1/2 ||T - D*C||_F^2 + lambda ||C||_1
// starting from C_0 = 0 with momentum t_{s+1} = (1+sqrt(1+4 t_s^2))/2 and a
// monotone restart (t reset to 1, momentum anchored at the best iterate)
// whenever the objective increases. Throws on a non-finite objective.
CodingResult fista(const Tensor3& dict, const Tensor3& target,
                   const SparseCodeConfig& cfg);

}  // namespace tsr
