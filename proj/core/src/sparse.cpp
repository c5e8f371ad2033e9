#include "tsr/sparse.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "tsr/parallel.hpp"
#include "tsr/tproduct.hpp"

namespace tsr {

void SparseCodeConfig::validate() const {
  if (lambda < 0.0) throw std::invalid_argument("sparse config: lambda must be >= 0");
  if (maxIter < 1) throw std::invalid_argument("sparse config: S must be >= 1");
  if (tol < 0.0) throw std::invalid_argument("sparse config: tol must be >= 0");
  if (eta < 1.0) throw std::invalid_argument("sparse config: eta must be >= 1");
}

Tensor3 softThreshold(const Tensor3& x, double theta) {
  if (theta < 0.0) throw std::invalid_argument("softThreshold: theta must be >= 0");
  Tensor3 out(x.n1(), x.n2(), x.n3());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    const double m = std::abs(v) - theta;
    out.data()[i] = m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
  }
  return out;
}

namespace {

void checkCodingShapes(const Tensor3& d, const Tensor3& c, const Tensor3& t) {
  if (d.n2() != c.n1() || d.n1() != t.n1() || c.n2() != t.n2() ||
      d.n3() != c.n3() || d.n3() != t.n3()) {
    throw std::invalid_argument("coding shapes mismatch: dict " + toString(d.dims()) +
                                ", coeffs " + toString(c.dims()) + ", target " +
                                toString(t.dims()));
  }
}

}  // namespace

Tensor3 gradF(const Tensor3& d, const Tensor3& c, const Tensor3& t) {
  checkCodingShapes(d, c, t);
  const SpectralTensor ds = fft3(d);
  const SpectralTensor cs = fft3(c);
  const SpectralTensor ts = fft3(t);
  SpectralTensor gs({c.n1(), c.n2(), c.n3()});
  parallelFor(d.n3(), [&](int b) {
    gs.slices[b] = ds.slices[b].adjoint() * (ds.slices[b] * cs.slices[b] - ts.slices[b]);
  });
  return ifft3(gs);
}

double lipschitzConstant(const Tensor3& d, LipschitzStrategy strategy, double eta) {
  if (eta < 1.0) throw std::invalid_argument("lipschitzConstant: eta must be >= 1");
  if (frobNorm(d) == 0.0)
    throw std::invalid_argument("lipschitzConstant: zero dictionary");
  const SpectralTensor ds = fft3(d);
  double value = 0.0;
  if (strategy == LipschitzStrategy::spectral) {
    for (int b = 0; b < d.n3(); ++b) {
      const Eigen::MatrixXcd gram = ds.slices[b].adjoint() * ds.slices[b];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram,
                                                         Eigen::EigenvaluesOnly);
      value = std::max(value, es.eigenvalues().maxCoeff());
    }
  } else {
    for (int b = 0; b < d.n3(); ++b)
      value += (ds.slices[b].adjoint() * ds.slices[b]).norm();
  }
  return eta * value;
}

CodingResult fista(const Tensor3& d, const Tensor3& t, const SparseCodeConfig& cfg) {
  cfg.validate();
  if (d.n1() != t.n1() || d.n3() != t.n3())
    throw std::invalid_argument("fista: dict " + toString(d.dims()) +
                                " incompatible with target " + toString(t.dims()));
  const int m = d.n2(), N = t.n2(), n = d.n3();
  const double L = lipschitzConstant(d, cfg.lipschitz, cfg.eta);

  const SpectralTensor ds = fft3(d);
  const SpectralTensor ts = fft3(t);

  // Reconstruction term via Parseval: ||X||_F^2 = (1/n) sum_b ||X~(b)||_F^2.
  const auto objectiveOf = [&](const SpectralTensor& cs, const Tensor3& c) {
    double recon = 0.0;
    std::vector<double> perSlice(n, 0.0);
    parallelFor(n, [&](int b) {
      perSlice[b] = (ds.slices[b] * cs.slices[b] - ts.slices[b]).squaredNorm();
    });
    for (int b = 0; b < n; ++b) recon += perSlice[b];
    return 0.5 * recon / n + cfg.lambda * l1Norm(c);
  };

  Tensor3 cur(m, N, n);       // C_s, starts at zero
  Tensor3 prev = cur;         // C_{s-1}
  SpectralTensor curS = fft3(cur);
  SpectralTensor prevS = curS;

  Tensor3 anchor = cur;       // B_s
  SpectralTensor anchorS = curS;

  double obj = objectiveOf(curS, cur);
  std::vector<double> trace{obj};
  Tensor3 best = cur;
  SpectralTensor bestS = curS;
  double bestObj = obj;
  double tMom = 1.0;
  int iterations = 0;

  for (int s = 1; s <= cfg.maxIter; ++s) {
    // gradient of f at the anchor
    SpectralTensor gs({m, N, n});
    parallelFor(n, [&](int b) {
      gs.slices[b] =
          ds.slices[b].adjoint() * (ds.slices[b] * anchorS.slices[b] - ts.slices[b]);
    });
    const Tensor3 grad = ifft3(gs);

    Tensor3 next(m, N, n);
    const double step = 1.0 / L;
    const double theta = cfg.lambda / L;
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double v = anchor.data()[i] - step * grad.data()[i];
      const double mg = std::abs(v) - theta;
      next.data()[i] = mg > 0.0 ? (v > 0.0 ? mg : -mg) : 0.0;
    }
    SpectralTensor nextS = fft3(next);
    const double objNext = objectiveOf(nextS, next);
    if (!std::isfinite(objNext)) {
      throw std::runtime_error("fista diverged at iteration " + std::to_string(s) +
                               " (L=" + std::to_string(L) + "): objective not finite");
    }
    trace.push_back(objNext);
    iterations = s;

    // equality-tolerant best tracking: objective evaluations carry summation
    // noise of a few eps, and discarding sub-noise progress would stall the
    // terminal convergence at the noise floor
    const double noise = 16.0 * 2.220446049250313e-16 * std::max(1.0, std::abs(bestObj));
    if (objNext <= bestObj + noise) {
      best = next;
      bestS = nextS;
      bestObj = std::min(bestObj, objNext);
    }

    if (objNext > obj) {
      // monotone restart: momentum anchored at the best iterate
      tMom = 1.0;
      cur = best;
      curS = bestS;
      prev = best;
      prevS = bestS;
      anchor = best;
      anchorS = bestS;
    } else {
      const double tNext = (1.0 + std::sqrt(1.0 + 4.0 * tMom * tMom)) / 2.0;
      const double mu = (tMom - 1.0) / tNext;
      prev = std::move(cur);
      prevS = std::move(curS);
      cur = std::move(next);
      curS = std::move(nextS);
      anchor = Tensor3(m, N, n);
      for (std::size_t i = 0; i < anchor.size(); ++i)
        anchor.data()[i] = cur.data()[i] + mu * (cur.data()[i] - prev.data()[i]);
      for (int b = 0; b < n; ++b)
        anchorS.slices[b] = curS.slices[b] + mu * (curS.slices[b] - prevS.slices[b]);
      tMom = tNext;
    }

    const double rel = std::abs(objNext - obj) / std::max(std::abs(obj), 1e-12);
    obj = objNext;
    if (rel < cfg.tol) break;
  }

  return CodingResult{std::move(best), std::move(trace), iterations};
}

}  // namespace tsr
