#include "tsr/dict.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tsr/parallel.hpp"
#include "tsr/tproduct.hpp"

namespace tsr {

void JointProblem::validate() const {
  if (th.block.empty() || tl.block.empty())
    throw std::invalid_argument("joint problem: empty block");
  if (th.block.n2() != tl.block.n2())
    throw std::invalid_argument("joint problem: N mismatch, high block has " +
                                std::to_string(th.block.n2()) + " columns, low block " +
                                std::to_string(tl.block.n2()));
  if (th.block.n3() != tl.block.n3())
    throw std::invalid_argument("joint problem: tube length mismatch " +
                                toString(th.block.dims()) + " vs " +
                                toString(tl.block.dims()));
  if (th.provenance != tl.provenance)
    throw std::invalid_argument("joint problem: blocks do not share sample provenance");
  if (lambda < 0.0) throw std::invalid_argument("joint problem: lambda must be >= 0");
}

JointProblem makeJointProblem(TensorBlock th, TensorBlock tl, double lambdaPerBlock) {
  JointProblem jp;
  jp.th = std::move(th);
  jp.tl = std::move(tl);
  const double N = static_cast<double>(jp.th.block.n2());
  const double M = N;  // both blocks carry the same samples
  jp.lambda = lambdaPerBlock * (1.0 / N + 1.0 / M);
  jp.validate();
  return jp;
}

StackedProblem stackProblem(const JointProblem& jp) {
  jp.validate();
  const int dh = jp.th.block.n1(), dl = jp.tl.block.n1();
  const int N = jp.th.block.n2(), n = jp.th.block.n3();
  const double w = 1.0 / std::sqrt(static_cast<double>(N));
  StackedProblem sp;
  sp.x = Tensor3(dh + dl, N, n);
  sp.lambda = jp.lambda;
  sp.highRows = dh;
  sp.weight = w;
  for (int k = 0; k < n; ++k) {
    sp.x.slice(k).topRows(dh) = w * jp.th.block.slice(k);
    sp.x.slice(k).bottomRows(dl) = w * jp.tl.block.slice(k);
  }
  return sp;
}

std::pair<Tensor3, Tensor3> unstackRows(const Tensor3& x, int topRows) {
  if (topRows < 1 || topRows >= x.n1())
    throw std::invalid_argument("unstackRows: top row count " + std::to_string(topRows) +
                                " out of range for " + toString(x.dims()));
  Tensor3 top(topRows, x.n2(), x.n3());
  Tensor3 bottom(x.n1() - topRows, x.n2(), x.n3());
  for (int k = 0; k < x.n3(); ++k) {
    top.slice(k) = x.slice(k).topRows(topRows);
    bottom.slice(k) = x.slice(k).bottomRows(x.n1() - topRows);
  }
  return {std::move(top), std::move(bottom)};
}

namespace {

// Per-frequency normal-equation pieces of the dictionary subproblem.
struct SliceSystems {
  std::vector<Eigen::MatrixXcd> b;   // X~ C~^H, d x m
  std::vector<Eigen::MatrixXcd> a0;  // C~ C~^H, m x m Hermitian
  std::vector<double> xNormSq;
  int n = 0, m = 0, d = 0;
};

SliceSystems buildSystems(const SpectralTensor& xs, const SpectralTensor& cs) {
  SliceSystems sys;
  sys.n = xs.dims.n3;
  sys.d = xs.dims.n1;
  sys.m = cs.dims.n1;
  if (cs.dims.n3 != sys.n || cs.dims.n2 != xs.dims.n2)
    throw std::invalid_argument("dictionary update: spectral shapes mismatch");
  sys.b.resize(sys.n);
  sys.a0.resize(sys.n);
  sys.xNormSq.resize(sys.n);
  parallelFor(sys.n, [&](int k) {
    sys.b[k] = xs.slices[k] * cs.slices[k].adjoint();
    sys.a0[k] = cs.slices[k] * cs.slices[k].adjoint();
    sys.xNormSq[k] = xs.slices[k].squaredNorm();
  });
  return sys;
}

// A = A0 + diag(omega), with a 1e-8 ridge when near singular
// (condition estimate from the Cholesky diagonal exceeding 1e12).
Eigen::LLT<Eigen::MatrixXcd> factorSystem(const Eigen::MatrixXcd& a0,
                                          const Eigen::VectorXd& omega) {
  Eigen::MatrixXcd a = a0;
  a.diagonal() += omega.cast<std::complex<double>>();
  Eigen::LLT<Eigen::MatrixXcd> llt(a);
  if (llt.info() == Eigen::Success) {
    const auto diag = llt.matrixLLT().diagonal().real();
    const double lo = diag.minCoeff(), hi = diag.maxCoeff();
    if (lo > 0.0 && (hi / lo) * (hi / lo) < 1e12) return llt;
  }
  a.diagonal().array() += 1e-8;
  llt.compute(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("dictionary update: system singular after ridge fallback");
  return llt;
}

// D~^H = A^{-1} B^H; returns the m x d adjoint form used everywhere below.
Eigen::MatrixXcd solveAdjoint(const Eigen::MatrixXcd& a0, const Eigen::VectorXd& omega,
                              const Eigen::MatrixXcd& b) {
  return factorSystem(a0, omega).solve(b.adjoint());
}

struct DualEval {
  double value = 0.0;
  Eigen::VectorXd grad;       // sum_b ||D~(b)(:,j)||^2 - n
  Eigen::MatrixXd hessian;    // filled only when wantHessian
};

DualEval evalDual(const SliceSystems& sys, const Eigen::VectorXd& omega,
                  bool wantHessian) {
  DualEval ev;
  ev.grad = Eigen::VectorXd::Constant(sys.m, -static_cast<double>(sys.n));
  if (wantHessian) ev.hessian = Eigen::MatrixXd::Zero(sys.m, sys.m);
  double value = 0.0;
  for (int k = 0; k < sys.n; ++k) {
    const auto llt = factorSystem(sys.a0[k], omega);
    const Eigen::MatrixXcd dAdj = llt.solve(sys.b[k].adjoint());  // m x d
    // tr(B A^{-1} B^H) is real for Hermitian A
    const std::complex<double> tr = (sys.b[k].array() * dAdj.transpose().array()).sum();
    value += sys.xNormSq[k] - tr.real();
    ev.grad += dAdj.rowwise().squaredNorm();
    if (wantHessian) {
      const Eigen::MatrixXcd q = llt.solve(Eigen::MatrixXcd::Identity(sys.m, sys.m));
      const Eigen::MatrixXcd p = dAdj * dAdj.adjoint();
      ev.hessian -= 2.0 * (p.real().cwiseProduct(q.real()) +
                           p.imag().cwiseProduct(q.imag()));
    }
  }
  ev.value = value - sys.n * omega.sum();
  return ev;
}

double dualValueOnly(const SliceSystems& sys, const Eigen::VectorXd& omega) {
  double value = 0.0;
  for (int k = 0; k < sys.n; ++k) {
    const Eigen::MatrixXcd dAdj = solveAdjoint(sys.a0[k], omega, sys.b[k]);
    const std::complex<double> tr = (sys.b[k].array() * dAdj.transpose().array()).sum();
    value += sys.xNormSq[k] - tr.real();
  }
  return value - sys.n * omega.sum();
}

DualResult solveDualImpl(const SliceSystems& sys, const DualState& state) {
  Eigen::VectorXd omega = state.omega;
  if (omega.size() == 0) omega = Eigen::VectorXd::Zero(sys.m);
  if (omega.size() != sys.m)
    throw std::invalid_argument("solveDual: omega size does not match atom count");
  if ((omega.array() < 0.0).any())
    throw std::invalid_argument("solveDual: omega must be nonnegative");

  DualResult out;
  out.omega = omega;
  for (int iter = 0; iter < state.maxNewtonIter; ++iter) {
    DualEval ev = evalDual(sys, omega, true);
    out.dualValue = ev.value;
    out.iterations = iter;

    Eigen::VectorXd projGrad = ev.grad;
    for (int j = 0; j < sys.m; ++j)
      if (omega[j] <= 0.0 && projGrad[j] < 0.0) projGrad[j] = 0.0;
    if (projGrad.lpNorm<Eigen::Infinity>() <= state.newtonTol) {
      out.omega = omega;
      out.converged = true;
      return out;
    }

    std::vector<int> free;
    for (int j = 0; j < sys.m; ++j)
      if (omega[j] > 0.0 || ev.grad[j] > 0.0) free.push_back(j);

    const int nf = static_cast<int>(free.size());
    Eigen::VectorXd gf(nf);
    Eigen::MatrixXd hf(nf, nf);
    for (int r = 0; r < nf; ++r) {
      gf[r] = ev.grad[free[r]];
      for (int c = 0; c < nf; ++c) hf(r, c) = ev.hessian(free[r], free[c]);
    }
    // damping keeps the reduced system solvable when atoms are unused
    hf.diagonal().array() -= 1e-12 * std::max(1.0, hf.cwiseAbs().maxCoeff());

    Eigen::VectorXd df = hf.ldlt().solve(-gf);
    if (!df.allFinite() || gf.dot(df) <= 0.0) df = gf;  // steepest ascent fallback

    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd trial = omega;
      for (int r = 0; r < nf; ++r)
        trial[free[r]] = std::max(0.0, omega[free[r]] + alpha * df[r]);
      if ((trial - omega).lpNorm<Eigen::Infinity>() == 0.0) {
        alpha *= state.backtrack;
        continue;
      }
      const double trialValue = dualValueOnly(sys, trial);
      const double model = ev.grad.dot(trial - omega);
      if (trialValue >= ev.value + 1e-4 * std::max(model, 0.0)) {
        omega = trial;
        accepted = true;
        break;
      }
      alpha *= state.backtrack;
    }
    if (!accepted) {
      out.omega = omega;
      out.converged = false;
      return out;
    }
  }
  DualEval ev = evalDual(sys, omega, false);
  Eigen::VectorXd projGrad = ev.grad;
  for (int j = 0; j < sys.m; ++j)
    if (omega[j] <= 0.0 && projGrad[j] < 0.0) projGrad[j] = 0.0;
  out.omega = omega;
  out.dualValue = ev.value;
  out.iterations = state.maxNewtonIter;
  out.converged = projGrad.lpNorm<Eigen::Infinity>() <= state.newtonTol;
  return out;
}

}  // namespace

Eigen::MatrixXcd dictSliceUpdate(const Eigen::MatrixXcd& xTilde,
                                 const Eigen::MatrixXcd& cTilde,
                                 const Eigen::VectorXd& omega) {
  if (xTilde.cols() != cTilde.cols())
    throw std::invalid_argument("dictSliceUpdate: sample counts differ");
  if (omega.size() != cTilde.rows())
    throw std::invalid_argument("dictSliceUpdate: omega size does not match atoms");
  if ((omega.array() < 0.0).any())
    throw std::invalid_argument("dictSliceUpdate: omega must be nonnegative");
  const Eigen::MatrixXcd b = xTilde * cTilde.adjoint();
  const Eigen::MatrixXcd a0 = cTilde * cTilde.adjoint();
  return solveAdjoint(a0, omega, b).adjoint();
}

DualResult solveDual(const SpectralTensor& xTilde, const SpectralTensor& cTilde,
                     const DualState& state) {
  return solveDualImpl(buildSystems(xTilde, cTilde), state);
}

Tensor3 dictionaryUpdate(const Tensor3& x, const Tensor3& c, const Tensor3& prev,
                         const DualState& state, DualResult* dualOut) {
  if (x.n2() != c.n2() || x.n3() != c.n3())
    throw std::invalid_argument("dictionaryUpdate: x " + toString(x.dims()) +
                                " incompatible with c " + toString(c.dims()));
  if (prev.n1() != x.n1() || prev.n2() != c.n1() || prev.n3() != x.n3())
    throw std::invalid_argument("dictionaryUpdate: previous dictionary has wrong shape " +
                                toString(prev.dims()));
  if (frobNorm(c) == 0.0) {
    // no information to update from
    if (dualOut) *dualOut = DualResult{Eigen::VectorXd::Zero(c.n1()), true, 0, 0.0};
    return prev;
  }
  const SpectralTensor xs = fft3(x);
  const SpectralTensor cs = fft3(c);
  const SliceSystems sys = buildSystems(xs, cs);
  const DualResult dual = solveDualImpl(sys, state);
  if (dualOut) *dualOut = dual;

  SpectralTensor dsp({x.n1(), c.n1(), x.n3()});
  parallelFor(sys.n, [&](int k) {
    dsp.slices[k] = solveAdjoint(sys.a0[k], dual.omega, sys.b[k]).adjoint();
  });
  Tensor3 d = ifft3(dsp);
  // numerical safeguard: project any slack from the inexact dual back onto
  // the feasible set
  for (int j = 0; j < d.n2(); ++j) {
    const double nsq = sliceNormSq(d, j);
    if (nsq > 1.0) {
      const double s = 1.0 / std::sqrt(nsq);
      for (int k = 0; k < d.n3(); ++k)
        for (int i = 0; i < d.n1(); ++i) d(i, j, k) *= s;
    }
  }
  return d;
}

Tensor3 initDictionary(const Tensor3& x, int m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("initDictionary: atom count must be >= 1");
  std::vector<int> candidates;
  for (int j = 0; j < x.n2(); ++j)
    if (sliceNormSq(x, j) > 1e-300) candidates.push_back(j);
  if (candidates.empty())
    throw std::runtime_error("degenerate input: training tensor is all zero");

  std::vector<int> picks;
  picks.reserve(m);
  if (static_cast<int>(candidates.size()) >= m) {
    const auto idx = sampleWithoutReplacement(candidates.size(), m, rng);
    for (std::size_t i : idx) picks.push_back(candidates[i]);
  } else {
    for (int i = 0; i < m; ++i) picks.push_back(candidates[i % candidates.size()]);
  }

  Tensor3 d(x.n1(), m, x.n3());
  for (int j = 0; j < m; ++j) {
    const int col = picks[j];
    const double s = 1.0 / std::sqrt(sliceNormSq(x, col));
    for (int k = 0; k < x.n3(); ++k)
      for (int i = 0; i < x.n1(); ++i) d(i, j, k) = s * x(i, col, k);
  }
  return d;
}

double jointObjective(const Tensor3& x, const Tensor3& d, const Tensor3& c,
                      double lambda) {
  const Tensor3 recon = tproduct(d, c);
  const Tensor3 res = x - recon;
  const double fn = frobNorm(res);
  return 0.5 * fn * fn + lambda * l1Norm(c);
}

int reseedDeadAtoms(Tensor3& d, const Tensor3& x, const Tensor3& c) {
  std::vector<int> dead;
  for (int j = 0; j < c.n1(); ++j) {
    bool used = false;
    for (int k = 0; k < c.n3() && !used; ++k)
      for (int col = 0; col < c.n2() && !used; ++col)
        if (c(j, col, k) != 0.0) used = true;
    if (!used) dead.push_back(j);
  }
  if (dead.empty()) return 0;

  const Tensor3 recon = tproduct(d, c);
  std::vector<std::pair<double, int>> byResidual(x.n2());
  for (int col = 0; col < x.n2(); ++col) {
    double s = 0.0;
    for (int k = 0; k < x.n3(); ++k)
      for (int i = 0; i < x.n1(); ++i) {
        const double v = x(i, col, k) - recon(i, col, k);
        s += v * v;
      }
    byResidual[col] = {s, col};
  }
  std::sort(byResidual.begin(), byResidual.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });

  int reseeded = 0;
  std::size_t next = 0;
  for (int j : dead) {
    while (next < byResidual.size() && byResidual[next].first <= 0.0) ++next;
    if (next >= byResidual.size()) break;
    const int col = byResidual[next].second;
    ++next;
    const double nsq = sliceNormSq(x, col);
    if (nsq <= 0.0) continue;
    const double s = 1.0 / std::sqrt(nsq);
    for (int k = 0; k < x.n3(); ++k)
      for (int i = 0; i < x.n1(); ++i) d(i, j, k) = s * x(i, col, k);
    ++reseeded;
  }
  return reseeded;
}

StackedTrainResult trainStackedDictionary(const Tensor3& x, double lambda,
                                          const TrainOptions& opt) {
  if (x.empty()) throw std::invalid_argument("train: empty input tensor");
  if (frobNorm(x) == 0.0)
    throw std::runtime_error("degenerate input: training tensor is all zero");
  if (opt.outerIter < 0) throw std::invalid_argument("train: T must be >= 0");
  SparseCodeConfig cfg = opt.sparse;
  cfg.lambda = lambda;
  cfg.validate();

  StackedTrainResult out;
  out.meta.lambda = lambda;
  out.meta.outerIterations = opt.outerIter;
  out.meta.innerIterations = cfg.maxIter;
  out.meta.seed = opt.seed;
  if (x.n2() < opt.atoms)
    out.meta.warnings.push_back("fewer samples than atoms (N=" + std::to_string(x.n2()) +
                                " < m=" + std::to_string(opt.atoms) + ")");

  Rng rng = rngStream(opt.seed, 2);
  Tensor3 d = initDictionary(x, opt.atoms, rng);

  const double xn = frobNorm(x);
  out.meta.objectiveTrace.push_back(0.5 * xn * xn);  // C_0 = 0

  for (int k = 1; k <= opt.outerIter; ++k) {
    const CodingResult res = fista(d, x, cfg);
    const Tensor3& c = res.coeffs;
    const double objF = jointObjective(x, d, c, lambda);
    out.meta.objectiveTrace.push_back(objF);

    DualResult dual;
    Tensor3 dNew = dictionaryUpdate(x, c, d, opt.dual, &dual);
    if (!dual.converged)
      out.meta.warnings.push_back("outer iteration " + std::to_string(k) +
                                  ": dual Newton stopped before tolerance");
    const double objD = jointObjective(x, dNew, c, lambda);
    out.meta.objectiveTrace.push_back(objD);

    d = std::move(dNew);
    reseedDeadAtoms(d, x, c);
    if (opt.progress) opt.progress(k, objF, objD);
  }
  out.dictionary = std::move(d);
  return out;
}

DictionaryPair trainDictionaries(const JointProblem& jp, const TrainOptions& opt) {
  const StackedProblem sp = stackProblem(jp);
  StackedTrainResult res = trainStackedDictionary(sp.x, sp.lambda, opt);
  auto [dh, dl] = unstackRows(res.dictionary, sp.highRows);
  DictionaryPair pair;
  pair.dh = std::move(dh);
  pair.dl = std::move(dl);
  pair.meta = std::move(res.meta);
  return pair;
}

}  // namespace tsr
