#include <doctest.h>

#include <cstdlib>
#include <stdexcept>

#include "support/test_util.hpp"
#include "tsr/sparse.hpp"
#include "tsr/tproduct.hpp"

using namespace tsr;
using tsrtest::randomDictionary;
using tsrtest::randomTensor;

TEST_CASE("softThreshold") {
  Tensor3 x(1, 1, 3);
  x(0, 0, 0) = 0.3;
  x(0, 0, 1) = -0.02;
  x(0, 0, 2) = -0.4;
  const Tensor3 y = softThreshold(x, 0.05);
  CHECK(y(0, 0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(y(0, 0, 1) == 0.0);
  CHECK(y(0, 0, 2) == doctest::Approx(-0.35).epsilon(1e-14));
  CHECK(maxAbsDiff(softThreshold(x, 0.0), x) == 0.0);
  CHECK_THROWS_AS(static_cast<void>(softThreshold(x, -0.1)), std::invalid_argument);
}

TEST_CASE("gradF") {
  SUBCASE("vanishes at an exact solution") {
    Rng rng(3);
    const Tensor3 d = randomDictionary(4, 6, 3, rng);
    const Tensor3 c = randomTensor(6, 5, 3, rng);
    const Tensor3 t = tproduct(d, c);
    CHECK(maxAbs(gradF(d, c, t)) < 1e-12);
  }
  SUBCASE("identity dictionary with zero target gives the coefficients") {
    Rng rng(5);
    const Tensor3 c = randomTensor(4, 5, 3, rng);
    const Tensor3 t(4, 5, 3);
    const Tensor3 g = gradF(identityTensor(4, 3), c, t);
    CHECK(maxAbsDiff(g, c) < 1e-12);
  }
  SUBCASE("matches central finite differences") {
    Rng rng(7);
    const Tensor3 d = randomDictionary(3, 5, 2, rng);
    Tensor3 c = randomTensor(5, 4, 2, rng);
    const Tensor3 t = randomTensor(3, 4, 2, rng);
    const Tensor3 g = gradF(d, c, t);

    const auto f = [&](const Tensor3& cc) {
      const Tensor3 res = t - tproduct(d, cc);
      const double fn = frobNorm(res);
      return 0.5 * fn * fn;
    };
    const double h = 1e-6;
    Tensor3 fd(c.n1(), c.n2(), c.n3());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double keep = c.data()[i];
      c.data()[i] = keep + h;
      const double plus = f(c);
      c.data()[i] = keep - h;
      const double minus = f(c);
      c.data()[i] = keep;
      fd.data()[i] = (plus - minus) / (2.0 * h);
    }
    CHECK(tsrtest::relErr(g, fd) < 1e-6);
  }
  SUBCASE("shape mismatch") {
    Tensor3 d(3, 4, 2), c(5, 4, 2), t(3, 4, 2);
    CHECK_THROWS_AS(static_cast<void>(gradF(d, c, t)), std::invalid_argument);
  }
}

TEST_CASE("lipschitzConstant") {
  SUBCASE("identity dictionary has spectral constant 1") {
    const Tensor3 d = identityTensor(4, 3);
    CHECK(lipschitzConstant(d, LipschitzStrategy::spectral) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("frobenius bound dominates the spectral bound") {
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      const Tensor3 d = randomDictionary(4, 6, 4, rng);
      CHECK(lipschitzConstant(d, LipschitzStrategy::frobeniusBound) >=
            lipschitzConstant(d, LipschitzStrategy::spectral) - 1e-12);
    }
  }
  SUBCASE("spectral constant matches a power-iteration estimate of the Hessian") {
    Rng rng(13);
    const Tensor3 d = randomDictionary(4, 6, 4, rng);
    const double L = lipschitzConstant(d, LipschitzStrategy::spectral);
    // power iteration on C -> ttranspose(D)*(D*C)
    Tensor3 v = randomTensor(6, 1, 4, rng);
    const Tensor3 dt = ttranspose(d);
    double norm = 0.0;
    for (int it = 0; it < 400; ++it) {
      Tensor3 w = tproduct(dt, tproduct(d, v));
      norm = frobNorm(w);
      v = (1.0 / norm) * w;
    }
    CHECK(L >= norm - 1e-6 * norm);
    CHECK(L == doctest::Approx(norm).epsilon(1e-6));
  }
  SUBCASE("zero dictionary and bad eta are rejected") {
    Tensor3 z(3, 3, 2);
    CHECK_THROWS_AS(static_cast<void>(lipschitzConstant(z, LipschitzStrategy::spectral)),
                    std::invalid_argument);
    CHECK_THROWS_AS(static_cast<void>(lipschitzConstant(identityTensor(2, 2),
                                                        LipschitzStrategy::spectral, 0.5)),
                    std::invalid_argument);
  }
}

TEST_CASE("fista") {
  SUBCASE("scalar instance has the analytic prox solution") {
    Tensor3 d(1, 1, 1), t(1, 1, 1);
    d(0, 0, 0) = 1.0;
    t(0, 0, 0) = 1.0;
    SparseCodeConfig cfg;
    cfg.lambda = 0.05;
    cfg.maxIter = 50;
    const CodingResult res = fista(d, t, cfg);
    CHECK(res.coeffs(0, 0, 0) == doctest::Approx(0.95).epsilon(1e-12));
  }
  SUBCASE("zero target gives zero coefficients at every iteration") {
    Rng rng(17);
    const Tensor3 d = randomDictionary(3, 5, 2, rng);
    const Tensor3 t(3, 4, 2);
    SparseCodeConfig cfg;
    const CodingResult res = fista(d, t, cfg);
    CHECK(maxAbs(res.coeffs) == 0.0);
    for (double o : res.objective) CHECK(o == 0.0);
  }
  SUBCASE("matches a long ISTA run and satisfies optimality conditions") {
    Rng rng(19);
    for (int trial = 0; trial < 3; ++trial) {
      const Tensor3 d = randomDictionary(4, 8, 4, rng);
      const Tensor3 t = randomTensor(4, 16, 4, rng);
      SparseCodeConfig cfg;
      cfg.lambda = 0.05;
      cfg.maxIter = 400;
      cfg.tol = 0.0;
      const CodingResult res = fista(d, t, cfg);

      // plain proximal gradient, spectral caching independent of fista's loop
      const double L = lipschitzConstant(d, LipschitzStrategy::spectral);
      Tensor3 c(8, 16, 4);
      for (int it = 0; it < 20000; ++it) {
        const Tensor3 g = gradF(d, c, t);
        Tensor3 step(8, 16, 4);
        for (std::size_t i = 0; i < c.size(); ++i)
          step.data()[i] = c.data()[i] - g.data()[i] / L;
        c = softThreshold(step, cfg.lambda / L);
      }
      const Tensor3 resid = t - tproduct(d, c);
      const double fn = frobNorm(resid);
      const double istaObj = 0.5 * fn * fn + cfg.lambda * l1Norm(c);
      const double fistaObj = res.objective.back();
      CHECK(std::abs(fistaObj - istaObj) < 1e-6);

      // subgradient optimality at the fista solution
      const Tensor3 g = gradF(d, res.coeffs, t);
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double ci = res.coeffs.data()[i];
        if (ci == 0.0) {
          CHECK(std::abs(g.data()[i]) <= cfg.lambda + 1e-8);
        } else {
          CHECK(std::abs(g.data()[i] + cfg.lambda * (ci > 0 ? 1.0 : -1.0)) <= 1e-8);
        }
      }
    }
  }
  SUBCASE("running minimum of the trace is non-increasing") {
    Rng rng(23);
    const Tensor3 d = randomDictionary(4, 8, 4, rng);
    const Tensor3 t = randomTensor(4, 10, 4, rng);
    SparseCodeConfig cfg;
    cfg.lambda = 0.05;
    cfg.maxIter = 200;
    cfg.tol = 0.0;
    const CodingResult res = fista(d, t, cfg);
    double runMin = res.objective.front();
    for (double o : res.objective) {
      const double next = std::min(runMin, o);
      CHECK(next <= runMin);
      runMin = next;
    }
    CHECK(res.objective.back() <= res.objective.front());
    CHECK(res.objective.front() == doctest::Approx(0.5 * frobNorm(t) * frobNorm(t)));
  }
  SUBCASE("large lambda gives the exact zero solution") {
    Rng rng(29);
    const Tensor3 d = randomDictionary(4, 6, 3, rng);
    const Tensor3 t = randomTensor(4, 5, 3, rng);
    const Tensor3 g0 = gradF(d, Tensor3(6, 5, 3), t);
    SparseCodeConfig cfg;
    cfg.lambda = maxAbs(g0) * 1.0001;
    const CodingResult res = fista(d, t, cfg);
    CHECK(maxAbs(res.coeffs) == 0.0);
  }
  SUBCASE("non-finite objective raises a divergence error") {
    Tensor3 d(1, 1, 1), t(1, 1, 1);
    d(0, 0, 0) = 1.0;
    t(0, 0, 0) = 1e308;
    SparseCodeConfig cfg;
    CHECK_THROWS_WITH_AS(static_cast<void>(fista(d, t, cfg)),
                         doctest::Contains("diverged"), std::runtime_error);
  }
  SUBCASE("solution is identical across thread budgets") {
    Rng rng(31);
    const Tensor3 d = randomDictionary(4, 8, 4, rng);
    const Tensor3 t = randomTensor(4, 12, 4, rng);
    SparseCodeConfig cfg;
    cfg.maxIter = 60;
    setenv("TSR_THREADS", "1", 1);
    const CodingResult one = fista(d, t, cfg);
    setenv("TSR_THREADS", "4", 1);
    const CodingResult four = fista(d, t, cfg);
    unsetenv("TSR_THREADS");
    CHECK(maxAbsDiff(one.coeffs, four.coeffs) == 0.0);
  }
}
