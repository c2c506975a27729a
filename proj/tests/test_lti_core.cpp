#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "oracles.hpp"
#include "robh2/lfr.hpp"
#include "robh2/state_space.hpp"

using namespace robh2;
using cd = std::complex<double>;

namespace {
StateSpaceSystem firstOrderLag() {
  // 1/(s+1)
  return StateSpaceSystem::fromTransfer(Eigen::VectorXd::Ones(1),
                                        (Eigen::VectorXd(2) << 1, 1).finished());
}

StateSpaceSystem secondOrder(double damping2, double w02 = 1.0) {
  // 1/(s^2 + damping2 s + w02)
  return StateSpaceSystem::fromTransfer(
      Eigen::VectorXd::Ones(1),
      (Eigen::VectorXd(3) << 1, damping2, w02).finished());
}
}  // namespace

TEST_CASE("frequency response of simple lags") {
  const StateSpaceSystem lag = firstOrderLag();
  CHECK(std::abs(freqResponse(lag, 0.0)(0, 0) - cd(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(freqResponse(lag, 1.0)(0, 0) - cd(0.5, -0.5)) < 1e-12);

  const StateSpaceSystem crit = secondOrder(2.0);
  const cd v = freqResponse(crit, 1.0)(0, 0);
  CHECK(std::abs(v) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::arg(v) == doctest::Approx(-M_PI / 2).epsilon(1e-10));
}

TEST_CASE("conjugate symmetry of the response") {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 20; ++t) {
    const StateSpaceSystem sys = oracles::randomStableSystem(rng, 4, 2, 3);
    const double w = std::pow(10.0, -2.0 + 4.0 * (t / 19.0));
    const Eigen::MatrixXcd pos = freqResponse(sys, w);
    const Eigen::MatrixXcd neg = freqResponse(sys, -w);
    CHECK((neg - pos.conjugate()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("resolvent near an imaginary-axis eigenvalue fails loudly") {
  Eigen::MatrixXd A(2, 2), B(2, 1), C(1, 2), D(1, 1);
  A << 0, 1, -1, 0;  // poles at +-i
  B << 0, 1;
  C << 1, 0;
  D << 0;
  const StateSpaceSystem osc(A, B, C, D);
  CHECK_THROWS_AS(freqResponse(osc, 1.0), NearSingularResolvent);
}

TEST_CASE("static lower LFT closes the loop gain") {
  Eigen::MatrixXd G(2, 2);
  G << 0, 1, 1, 0;
  const StateSpaceSystem Gs = StateSpaceSystem::gain(G);
  for (double k : {-2.0, 0.3, 5.0}) {
    const StateSpaceSystem K =
        StateSpaceSystem::gain(Eigen::MatrixXd::Constant(1, 1, k));
    const StateSpaceSystem cl = lftLower(Gs, K);
    CHECK(cl.order() == 0);
    CHECK(cl.D(0, 0) == doctest::Approx(k).epsilon(1e-14));
  }
}

TEST_CASE("zero controller returns the open-loop block") {
  std::mt19937_64 rng(11);
  const StateSpaceSystem G = oracles::randomStableSystem(rng, 3, 3, 3);
  const StateSpaceSystem K =
      StateSpaceSystem::gain(Eigen::MatrixXd::Zero(1, 1));
  const StateSpaceSystem cl = lftLower(G, K);
  const Eigen::MatrixXcd expect = freqResponse(G, 0.7).topLeftCorner(2, 2);
  CHECK((freqResponse(cl, 0.7) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("singular feedthrough loop is rejected") {
  Eigen::MatrixXd G(2, 2);
  G << 0, 1, 1, 1;  // D_yu = 1
  const StateSpaceSystem Gs = StateSpaceSystem::gain(G);
  const StateSpaceSystem K =
      StateSpaceSystem::gain(Eigen::MatrixXd::Identity(1, 1));
  CHECK_THROWS_AS(lftLower(Gs, K), IllPosedLoop);
}

TEST_CASE("LFT closure commutes with frequency evaluation") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> logw(-2.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    const StateSpaceSystem G = oracles::randomStableSystem(rng, 4, 3, 3);
    const StateSpaceSystem K = oracles::randomStableSystem(rng, 2, 2, 1);
    // Keep the static loop comfortably nonsingular.
    if (std::abs(1.0 - (K.D * G.D.bottomRightCorner(2, 1))(0, 0)) < 0.2) {
      continue;
    }
    StateSpaceSystem cl;
    try {
      cl = lftLower(G, K);
    } catch (const IllPosedLoop&) {
      continue;
    }
    const double w = std::pow(10.0, logw(rng));
    const Eigen::MatrixXcd direct = freqResponse(cl, w);
    const Eigen::MatrixXcd composed =
        lftLowerResponse(freqResponse(G, w), 2, 1, freqResponse(K, w));
    CHECK((direct - composed).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("upper LFT on the damping pull-out matches the direct plant") {
  // 1/(s^2 + (2+delta) s + 1) with q = x2 pulled out.
  Eigen::MatrixXd A(2, 2), B(2, 2), C(2, 2), D(2, 2);
  A << 0, 1, -1, -2;
  B << 0, 0, -1, 1;
  C << 0, 1, 1, 0;
  D.setZero();
  const StateSpaceSystem G(A, B, C, D);

  SUBCASE("delta = 0 gives the nominal plant") {
    const StateSpaceSystem nom =
        lftUpper(G, StateSpaceSystem::gain(Eigen::MatrixXd::Zero(1, 1)));
    const StateSpaceSystem direct = secondOrder(2.0);
    for (double w : {0.3, 1.0, 4.0})
      CHECK((freqResponse(nom, w) - freqResponse(direct, w))
                .cwiseAbs()
                .maxCoeff() < 1e-12);
  }

  SUBCASE("delta = 0.5 matches 1/(s^2 + 2.5 s + 1)") {
    const StateSpaceSystem closed =
        lftUpper(G, StateSpaceSystem::gain(Eigen::MatrixXd::Constant(1, 1, 0.5)));
    const StateSpaceSystem direct = secondOrder(2.5);
    for (double w : {0.1, 1.0, 10.0})
      CHECK((freqResponse(closed, w) - freqResponse(direct, w))
                .cwiseAbs()
                .maxCoeff() < 1e-10);
  }

  SUBCASE("mismatched uncertainty dimensions are rejected") {
    LfrPlant plant;
    plant.sys = G;
    plant.np = 1;
    plant.nw = 1;
    plant.nq = 1;
    plant.nz = 1;
    plant.blocks = {{UncertaintyClass::LtiReDr, 1, 1.0}};
    CHECK_THROWS_AS(
        lftUpper(plant, StateSpaceSystem::gain(Eigen::MatrixXd::Zero(2, 2))),
        DimensionMismatch);
  }
}

TEST_CASE("stability check returns the spectral abscissa") {
  CHECK(checkStability(firstOrderLag()).stable);
  CHECK(checkStability(firstOrderLag()).spectral_abscissa ==
        doctest::Approx(-1.0));
  const StateSpaceSystem unstable = StateSpaceSystem::fromTransfer(
      Eigen::VectorXd::Ones(1), (Eigen::VectorXd(2) << 1, -1).finished());
  CHECK_FALSE(checkStability(unstable).stable);
  CHECK(checkStability(unstable).spectral_abscissa == doctest::Approx(1.0));
  CHECK(checkStability(secondOrder(1.0)).spectral_abscissa ==
        doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("H2 norm against analytic second-order values") {
  CHECK(h2Norm(firstOrderLag()) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(2e-4));
  CHECK(h2Norm(secondOrder(2.0)) == doctest::Approx(0.5).epsilon(2e-4));
  CHECK(h2Norm(secondOrder(1.0)) ==
        doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(2e-4));
  // ||1/(s^2 + 2 zeta s + 1)||_2 = 1/sqrt(4 zeta).
  for (double zeta : {0.25, 0.5, 1.0, 2.0}) {
    CHECK(h2Norm(secondOrder(2.0 * zeta)) ==
          doctest::Approx(1.0 / std::sqrt(4.0 * zeta)).epsilon(1e-4));
  }
}

TEST_CASE("H2 norm error paths") {
  StateSpaceSystem lag = firstOrderLag();
  lag.D(0, 0) = 1.0;
  CHECK_THROWS_AS(h2Norm(lag), InfiniteH2);
  const StateSpaceSystem unstable = StateSpaceSystem::fromTransfer(
      Eigen::VectorXd::Ones(1), (Eigen::VectorXd(2) << 1, -1).finished());
  CHECK_THROWS_AS(h2Norm(unstable), UnstableSystem);
}

TEST_CASE("Pade delay approximant") {
  SUBCASE("zero delay is the identity") {
    const StateSpaceSystem id = padeDelay(0.0, 4);
    CHECK(id.order() == 0);
    CHECK(id.D(0, 0) == doctest::Approx(1.0));
  }

  SUBCASE("all-pass magnitude") {
    const StateSpaceSystem d = padeDelay(0.025, 4);
    CHECK(std::abs(freqResponse(d, 100.0)(0, 0)) ==
          doctest::Approx(1.0).epsilon(1e-9));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> logw(-2.0, 4.0);
    for (int t = 0; t < 50; ++t) {
      const double w = std::pow(10.0, logw(rng));
      CHECK(std::abs(freqResponse(d, w)(0, 0)) ==
            doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("phase tracks the exact delay well below the band edge") {
    const StateSpaceSystem d = padeDelay(0.025, 4);
    CHECK(std::arg(freqResponse(d, 10.0)(0, 0)) ==
          doctest::Approx(-0.25).epsilon(1e-3));
  }
}
