#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tsr/fold.hpp"
#include "tsr/rng.hpp"
#include "tsr/sparse.hpp"
#include "tsr/tensor.hpp"

namespace tsr {

// Coupled high/low-resolution coding problem. th and tl must share N, n and
// sample provenance; lambda is the combined sparsity weight of the stacked
// objective (see makeJointProblem).
struct JointProblem {
  TensorBlock th;   // d_h x N x n, mean-removed high-res cubes
  TensorBlock tl;   // d_l x N x n, low-res feature cubes
  double lambda = 0.05;

  void validate() const;
};

// Builds the problem from per-block lambda: combined = lambda*(1/N + 1/M),
// M = N here.
JointProblem makeJointProblem(TensorBlock th, TensorBlock tl, double lambdaPerBlock);

struct StackedProblem {
  Tensor3 x;        // rows 1..d_h are th/sqrt(N), the rest tl/sqrt(M)
  double lambda = 0.0;
  int highRows = 0;
  double weight = 0.0;  // 1/sqrt(N)
};

StackedProblem stackProblem(const JointProblem& jp);

// Row split, no rescale.
std::pair<Tensor3, Tensor3> unstackRows(const Tensor3& x, int topRows);

struct TrainingMeta {
  double lambda = 0.0;   // solver lambda (combined for joint problems)
  int outerIterations = 0;
  int innerIterations = 0;
  std::uint32_t seed = 0;
  std::vector<double> objectiveTrace;  // initial value, then after every half-step
  std::vector<std::string> warnings;
};

// Trained pair; dh and dl are the rows of the stacked dictionary, so the
// stacked atom norms satisfy ||[dh;dl](:,j,:)||_F^2 <= 1.
struct DictionaryPair {
  Tensor3 dh;
  Tensor3 dl;
  FoldConfig foldConfig;
  TrainingMeta meta;
};

struct DualState {
  Eigen::VectorXd omega;       // m nonnegative multipliers; empty = zeros
  double newtonTol = 1e-8;     // on the projected dual gradient, inf norm
  int maxNewtonIter = 50;
  double backtrack = 0.5;
};

struct DualResult {
  Eigen::VectorXd omega;
  bool converged = false;
  int iterations = 0;
  double dualValue = 0.0;
};

// Closed-form per-frequency dictionary slice
//   D~ = (X~ C~^H) (C~ C~^H + diag(omega))^{-1}
// with a 1e-8 ridge when the system is near singular.
Eigen::MatrixXcd dictSliceUpdate(const Eigen::MatrixXcd& xTilde,
                                 const Eigen::MatrixXcd& cTilde,
                                 const Eigen::VectorXd& omega);

// Maximizes the Lagrange dual of the norm-constrained dictionary problem over
// omega >= 0 by projected Newton with backtracking. At convergence each atom
// satisfies complementary slackness.
DualResult solveDual(const SpectralTensor& xTilde, const SpectralTensor& cTilde,
                     const DualState& state);

// One dictionary half-step: FFT, dual solve, per-slice closed form, inverse
// FFT. Returns prev unchanged when c is all zero. Atoms are feasible
// (||D(:,j,:)||_F^2 <= 1) on return.
Tensor3 dictionaryUpdate(const Tensor3& x, const Tensor3& c, const Tensor3& prev,
                         const DualState& state = {}, DualResult* dualOut = nullptr);

// m distinct training columns, atom-normalized. Zero columns are skipped;
// throws if x is all zero.
Tensor3 initDictionary(const Tensor3& x, int m, Rng& rng);

// 1/2 ||x - d*c||_F^2 + lambda ||c||_1.
double jointObjective(const Tensor3& x, const Tensor3& d, const Tensor3& c,
                      double lambda);

// Re-seeds atoms with all-zero code rows from the worst-reconstructed
// columns; leaves the objective unchanged. Returns the count re-seeded.
int reseedDeadAtoms(Tensor3& d, const Tensor3& x, const Tensor3& c);

struct TrainOptions {
  int atoms = 128;          // m
  int outerIter = 10;       // T
  SparseCodeConfig sparse;  // lambda is taken from the problem, not from here
  std::uint32_t seed = 0;
  DualState dual;
  // progress(outerIndex 1..T, objective after FISTA, objective after update)
  std::function<void(int, double, double)> progress;
};

struct StackedTrainResult {
  Tensor3 dictionary;
  TrainingMeta meta;
};

// Alternating minimization on an already-stacked tensor: FISTA coefficient
// solves and Lagrange-dual dictionary updates, T rounds.
StackedTrainResult trainStackedDictionary(const Tensor3& x, double lambda,
                                          const TrainOptions& opt);

DictionaryPair trainDictionaries(const JointProblem& jp, const TrainOptions& opt);

}  // namespace tsr
