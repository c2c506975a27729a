#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "oracles.hpp"
#include "robh2/multiplier.hpp"

using namespace robh2;
using cd = std::complex<double>;

namespace {

YParam randomY(std::mt19937_64& rng, int N, int m) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> loga(std::log(0.1), std::log(10.0));
  std::uniform_real_distribution<double> bdist(-5.0, 5.0);
  std::vector<Eigen::MatrixXd> X, Z;
  std::vector<double> a, b;
  for (int i = 0; i < N; ++i) {
    Eigen::MatrixXd Xi(m, m), Zi(m, m);
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) {
        Xi(r, c) = normal(rng);
        Zi(r, c) = normal(rng);
      }
    X.push_back(Xi);
    Z.push_back(Zi);
    a.push_back(std::exp(loga(rng)));
    b.push_back(i % 2 == 0 ? bdist(rng) : 0.0);
  }
  return YParam::make(X, Z, a, b);
}

Eigen::VectorXcd randomComplexVector(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = cd(normal(rng), normal(rng));
  return v;
}

}  // namespace

TEST_CASE("composition with the empty multiplier is neutral") {
  const YParam y = YParam::make({Eigen::MatrixXd::Identity(1, 1)},
                                {Eigen::MatrixXd::Zero(1, 1)}, {1.0}, {0.0});
  const Multiplier pi = makeH2Performance(y, 1);
  const Multiplier same = compose(pi, Multiplier());
  const Multiplier same2 = compose(Multiplier(), pi);
  for (double w : {0.0, 0.7, 13.0}) {
    CHECK((same.assembled(w) - pi.assembled(w)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((same2.assembled(w) - pi.assembled(w)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(same.paramLen() == pi.paramLen());
}

TEST_CASE("composition block-diagonally concatenates the factors") {
  const Multiplier d1 = makeLtvReDrConstant(
      Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Zero(0));
  const Multiplier d2 = makeLtvReDrConstant(
      Eigen::MatrixXd::Constant(1, 1, 3.0), Eigen::VectorXd::Zero(0));
  const Multiplier both = compose(d1, d2);
  CHECK(both.qDim() == 2);
  CHECK(both.pDim() == 2);
  CHECK(both.paramLen() == d1.paramLen() + d2.paramLen());
  const FactorValues f = both.factors(1.3);
  CHECK(f.sigma(0, 0) == cd(2.0, 0.0));
  CHECK(f.sigma(1, 1) == cd(3.0, 0.0));
  CHECK(f.sigma(0, 1) == cd(0.0, 0.0));
  const Eigen::MatrixXcd Pi = both.assembled(1.3);
  CHECK(Pi(0, 0).real() == doctest::Approx(4.0));
  CHECK(Pi(1, 1).real() == doctest::Approx(9.0));
  CHECK(Pi(2, 2).real() == doctest::Approx(-4.0));
  CHECK(Pi(3, 3).real() == doctest::Approx(-9.0));
}

TEST_CASE("assembled multipliers are Hermitian for random parameters") {
  std::mt19937_64 rng(101);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> logw(-3.0, 4.0);
  for (int t = 0; t < 100; ++t) {
    const YParam y = randomY(rng, 1 + t % 3, 1 + t % 2);
    Multiplier pi = makeH2Performance(y, 1);
    if (t % 2 == 0) {
      Eigen::VectorXd chi_d(4);
      for (int i = 0; i < 4; ++i) chi_d(i) = normal(rng);
      pi = compose(makeLtiReDrDynamic(1, 1, chi_d), pi);
    } else {
      Eigen::MatrixXd D(2, 2);
      D << normal(rng), normal(rng), normal(rng), normal(rng);
      Eigen::VectorXd wup(1);
      wup << normal(rng);
      pi = compose(makeLtvReDrConstant(D, wup), pi);
    }
    const double w = std::pow(10.0, logw(rng));
    const Eigen::MatrixXcd Pi = pi.assembled(w);
    CHECK((Pi - Pi.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("H2 performance multiplier blocks") {
  const YParam y = YParam::make({Eigen::MatrixXd::Identity(1, 1)},
                                {Eigen::MatrixXd::Zero(1, 1)}, {1.0}, {0.0});
  const Multiplier pi = makeH2Performance(y, 1);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> logw(-3.0, 4.0);
  for (int t = 0; t < 20; ++t) {
    const double w = std::pow(10.0, logw(rng));
    const FactorValues f = pi.factors(w);
    CHECK(f.phi.cwiseAbs().maxCoeff() == 0.0);
    CHECK((f.sigma.adjoint() * f.sigma -
           Eigen::MatrixXcd::Identity(1, 1)).cwiseAbs().maxCoeff() == 0.0);
    // Psi + Psi^H = -Y with Y(iw) = 2/(1+w^2) for this first-order choice.
    const Eigen::MatrixXcd Pi = pi.assembled(w);
    CHECK(Pi(1, 1).real() ==
          doctest::Approx(-2.0 / (1.0 + w * w)).epsilon(1e-12));
  }
}

TEST_CASE("trace integral equals the sum of X traces") {
  const YParam y1 = YParam::make({Eigen::MatrixXd::Constant(1, 1, 2.0)},
                                 {Eigen::MatrixXd::Zero(1, 1)}, {1.0}, {0.0});
  CHECK(yTraceIntegral(y1) == doctest::Approx(2.0));

  Eigen::MatrixXd X1 = Eigen::Vector2d(1.0, 2.0).asDiagonal();
  Eigen::MatrixXd X2 = Eigen::Vector2d(3.0, 0.0).asDiagonal();
  const YParam y2 = YParam::make(
      {X1, X2}, {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)},
      {1.0, 2.0}, {0.0, 0.0});
  CHECK(yTraceIntegral(y2) == doctest::Approx(6.0));
}

TEST_CASE("trace integral matches quadrature including nonzero b") {
  std::mt19937_64 rng(2024);
  for (int t = 0; t < 20; ++t) {
    const YParam y = randomY(rng, 1 + t % 3, 1 + t % 3);
    const double analytic = yTraceIntegral(y);
    const double quad = oracles::traceIntegralQuadrature(y);
    CHECK(std::abs(analytic - quad) <= 1e-3 * (1.0 + std::abs(analytic)));
  }
}

TEST_CASE("trace integral gradient") {
  SUBCASE("ones exactly on the diagonal X slots") {
    std::mt19937_64 rng(5);
    const YParam y = randomY(rng, 1, 2);
    const Eigen::VectorXd g = yTraceIntegralGradient(y);
    CHECK(g.sum() == doctest::Approx(2.0));
    CHECK(g.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
    int ones = 0;
    for (int i = 0; i < g.size(); ++i) ones += g(i) == 1.0 ? 1 : 0;
    CHECK(ones == 2);
  }

  SUBCASE("matches finite differences of the quadrature oracle") {
    std::mt19937_64 rng(77);
    const YParam y = randomY(rng, 2, 2);
    const Eigen::VectorXd g = yTraceIntegralGradient(y);
    const auto f = [&y](const Eigen::VectorXd& v) {
      return oracles::traceIntegralQuadrature(
          YParam::fromVector(y.terms(), y.size(), v));
    };
    const Eigen::VectorXd fd =
        oracles::finiteDifferenceGradient(f, y.raw, 1e-5);
    for (int i = 0; i < g.size(); ++i) CHECK(std::abs(g(i) - fd(i)) < 1e-4);
  }

  SUBCASE("perturbing b leaves the integral unchanged") {
    std::mt19937_64 rng(78);
    const YParam y = randomY(rng, 1, 1);
    Eigen::VectorXd v = y.raw;
    const int bpos = y.family.bIndices()[0];
    const double base = oracles::traceIntegralQuadrature(y);
    v(bpos) += 0.5;
    const double moved =
        oracles::traceIntegralQuadrature(YParam::fromVector(1, 1, v));
    CHECK(std::abs(moved - base) <= 1e-6 * (1.0 + std::abs(base)) + 1e-6);
  }

  SUBCASE("perturbing a diagonal X entry moves the integral linearly") {
    std::mt19937_64 rng(79);
    const YParam y = randomY(rng, 1, 1);
    Eigen::VectorXd v = y.raw;
    v(0) += 0.25;
    CHECK(yTraceIntegral(YParam::fromVector(1, 1, v)) ==
          doctest::Approx(yTraceIntegral(y) + 0.25));
  }
}

TEST_CASE("constant D/W multiplier") {
  SUBCASE("scalar case has zero W") {
    const Multiplier pi = makeLtvReDrConstant(
        Eigen::MatrixXd::Constant(1, 1, 1.5), Eigen::VectorXd::Zero(0));
    const Eigen::MatrixXcd Pi = pi.assembled(0.4);
    CHECK(Pi(0, 0).real() == doctest::Approx(2.25));
    CHECK(Pi(1, 1).real() == doctest::Approx(-2.25));
    CHECK(std::abs(Pi(0, 1)) == doctest::Approx(0.0));
  }

  SUBCASE("k = 3 skew pattern") {
    Eigen::VectorXd wup(3);
    wup << 1.0, 2.0, 3.0;  // W12, W13, W23
    const Multiplier pi =
        makeLtvReDrConstant(Eigen::MatrixXd::Identity(3, 3), wup);
    const Eigen::MatrixXcd Pi = pi.assembled(1.0);
    const Eigen::MatrixXcd W = Pi.bottomLeftCorner(3, 3);
    CHECK(W(0, 1).real() == doctest::Approx(1.0));
    CHECK(W(0, 2).real() == doctest::Approx(2.0));
    CHECK(W(1, 2).real() == doctest::Approx(3.0));
    CHECK((W + W.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((Pi.topRightCorner(3, 3) - W.adjoint()).cwiseAbs().maxCoeff() <
          1e-14);
  }

  SUBCASE("pointwise value is (1 - delta^2) ||D q||^2") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int t = 0; t < 50; ++t) {
      Eigen::MatrixXd D(3, 3);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) D(r, c) = normal(rng);
      Eigen::VectorXd wup(3);
      wup << normal(rng), normal(rng), normal(rng);
      const Multiplier pi = makeLtvReDrConstant(D, wup);
      const double delta = unif(rng);
      const Eigen::VectorXcd q = randomComplexVector(rng, 3);
      const double val = iqcPointwise(pi, 0.9, q, delta * q);
      const double expect = (1.0 - delta * delta) * (D * q).squaredNorm();
      CHECK(val == doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("dynamic D multiplier") {
  SUBCASE("pointwise value for constant delta") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::uniform_real_distribution<double> logw(-2.0, 3.0);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd chi(4);
      for (int i = 0; i < 4; ++i) chi(i) = normal(rng);
      const Multiplier pi = makeLtiReDrDynamic(1, 1, chi);
      const double delta = unif(rng);
      const double w = std::pow(10.0, logw(rng));
      const Eigen::VectorXcd q = randomComplexVector(rng, 1);
      const double val = iqcPointwise(pi, w, q, delta * q);
      CHECK(val >= -1e-12);
      const PoleResidueSum fam{1, 1};
      const double expect = (1.0 - delta * delta) *
                            std::norm(fam.eval(chi, w)(0, 0)) *
                            q.squaredNorm();
      CHECK(val == doctest::Approx(expect).epsilon(1e-10));
    }
  }

  SUBCASE("wide-bandwidth first-order D approaches the constant multiplier") {
    // X = a with large a makes D(s) = a/(s+a) ~ 1 well below the corner.
    const double a = 1e4;
    Eigen::VectorXd chi(4);
    chi << a, 0.0, std::log(a), 0.0;
    const Multiplier dyn = makeLtiReDrDynamic(1, 1, chi);
    const Multiplier cst = makeLtvReDrConstant(Eigen::MatrixXd::Identity(1, 1),
                                               Eigen::VectorXd::Zero(0));
    for (double w : {0.01, 0.3, 1.0, 10.0})
      CHECK((dyn.assembled(w) - cst.assembled(w)).cwiseAbs().maxCoeff() <
            1e-6);
  }

  SUBCASE("degenerate pole pairs are rejected") {
    PoleResidueSum fam{2, 1};
    Eigen::VectorXd chi = Eigen::VectorXd::Zero(fam.paramLen());
    CHECK_THROWS_AS(makeLtiReDrDynamic(1, 2, chi), DegeneratePoles);
  }

  SUBCASE("Hermitian for random parameters") {
    std::mt19937_64 rng(32);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> logw(-2.0, 3.0);
    for (int t = 0; t < 30; ++t) {
      Eigen::VectorXd chi(8);  // two terms, scalar
      for (int i = 0; i < 8; ++i) chi(i) = normal(rng);
      chi(6) = chi(2) + 1.0;  // keep the two pole pairs apart
      const Multiplier pi = makeLtiReDrDynamic(1, 2, chi);
      const Eigen::MatrixXcd Pi = pi.assembled(std::pow(10.0, logw(rng)));
      CHECK((Pi - Pi.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("delay covering multiplier") {
  const double tau_max = 0.025;

  SUBCASE("weight covers the delay residual on a log grid") {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> unif(0.0, tau_max);
    for (int t = 0; t < 10; ++t) {
      const double tau = unif(rng);
      for (int i = 0; i < 200; ++i) {
        const double w = std::pow(10.0, -2.0 + 7.0 * i / 199.0);
        const double cover = std::abs(delayCoverWeight(tau_max, w));
        const double residual = std::abs(std::exp(cd(0.0, -w * tau)) - 1.0);
        CHECK(cover >= residual - 1e-12);
      }
    }
  }

  SUBCASE("low-frequency asymptote") {
    const double w = 1e-4;
    const double c = std::abs(delayCoverWeight(tau_max, w)) / (w * tau_max);
    CHECK(c >= 1.0);
    CHECK(c <= 1.1);
  }

  SUBCASE("pointwise nonnegativity on sampled delays") {
    std::mt19937_64 rng(56);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, tau_max);
    std::uniform_real_distribution<double> logw(-2.0, 5.0);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd chi(4);
      for (int i = 0; i < 4; ++i) chi(i) = normal(rng);
      const Multiplier pi = makeDelayCovering(tau_max, 1, chi);
      const double tau = unif(rng);
      const double w = std::pow(10.0, logw(rng));
      const Eigen::VectorXcd q = randomComplexVector(rng, 1);
      const cd residual = std::exp(cd(0.0, -w * tau)) - 1.0;
      CHECK(iqcPointwise(pi, w, q, residual * q) >= -1e-10);
    }
  }
}

TEST_CASE("pointwise IQC value basics") {
  const Multiplier pi = makeLtvReDrConstant(
      Eigen::MatrixXd::Constant(1, 1, 2.0), Eigen::VectorXd::Zero(0));
  std::mt19937_64 rng(77);
  const Eigen::VectorXcd q = randomComplexVector(rng, 1);
  CHECK(iqcPointwise(pi, 1.0, q, Eigen::VectorXcd::Zero(1)) ==
        doctest::Approx(4.0 * q.squaredNorm()));
  CHECK(iqcPointwise(pi, 1.0, Eigen::VectorXcd::Zero(1),
                     Eigen::VectorXcd::Zero(1)) == doctest::Approx(0.0));
}

TEST_CASE("class soundness: 1000 pointwise draws per class") {
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif01(0.0, 1.0);
  std::uniform_real_distribution<double> logw(-3.0, 5.0);

  SUBCASE("constant D/W (ltv_re_dr)") {
    for (int t = 0; t < 1000; ++t) {
      Eigen::MatrixXd D(2, 2);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) D(r, c) = normal(rng);
      Eigen::VectorXd wup(1);
      wup << normal(rng);
      const Multiplier pi = makeLtvReDrConstant(D, wup);
      const double delta = 2.0 * unif01(rng) - 1.0;
      const Eigen::VectorXcd q = randomComplexVector(rng, 2);
      CHECK(iqcPointwise(pi, std::pow(10.0, logw(rng)), q, delta * q) >=
            -1e-10);
    }
  }

  SUBCASE("dynamic D (lti_re_dr)") {
    for (int t = 0; t < 1000; ++t) {
      Eigen::VectorXd chi(4);
      for (int i = 0; i < 4; ++i) chi(i) = normal(rng);
      const Multiplier pi = makeLtiReDrDynamic(1, 1, chi);
      const double delta = 2.0 * unif01(rng) - 1.0;
      const Eigen::VectorXcd q = randomComplexVector(rng, 1);
      CHECK(iqcPointwise(pi, std::pow(10.0, logw(rng)), q, delta * q) >=
            -1e-10);
    }
  }

  SUBCASE("delay covering (ltv_rb_td)") {
    for (int t = 0; t < 1000; ++t) {
      Eigen::VectorXd chi(4);
      for (int i = 0; i < 4; ++i) chi(i) = normal(rng);
      const Multiplier pi = makeDelayCovering(0.025, 1, chi);
      const double tau = 0.025 * unif01(rng);
      const double w = std::pow(10.0, logw(rng));
      const Eigen::VectorXcd q = randomComplexVector(rng, 1);
      const cd residual = std::exp(cd(0.0, -w * tau)) - 1.0;
      CHECK(iqcPointwise(pi, w, q, residual * q) >= -1e-10);
    }
  }
}
