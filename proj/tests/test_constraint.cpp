#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "robh2/constraint.hpp"
#include "robh2/problems.hpp"

using namespace robh2;
using cd = std::complex<double>;

namespace {

Eigen::MatrixXcd randomComplexMatrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXcd M(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) M(r, c) = cd(normal(rng), normal(rng));
  return M;
}

// Scalar H2 bound check problem: stable strictly proper plant w -> z with
// the given Y parameters, no uncertainty channels.
ConstraintEngine h2OnlyEngine(const StateSpaceSystem& plant_wz,
                              const YParam& y,
                              FrequencyGrid grid = FrequencyGrid{}) {
  LfrPlant plant;
  plant.sys = plant_wz;
  plant.np = 0;
  plant.nq = 0;
  plant.nw = plant_wz.inputs();
  plant.nz = plant_wz.outputs();
  plant.nu = 0;
  plant.ny = 0;
  return ConstraintEngine(plant, makeH2Performance(y, plant.nz),
                          ControllerStructure::none(), grid);
}

YParam scalarY(double X, double a = 1.0, double b = 0.0, double Z = 0.0) {
  return YParam::make({Eigen::MatrixXd::Constant(1, 1, X)},
                      {Eigen::MatrixXd::Constant(1, 1, Z)}, {a}, {b});
}

StateSpaceSystem firstOrderLag() {
  return StateSpaceSystem::fromTransfer(
      Eigen::VectorXd::Ones(1), (Eigen::VectorXd(2) << 1, 1).finished());
}

}  // namespace

TEST_CASE("sector transform basics") {
  const int n = 3;
  const Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(n, n);
  CHECK((sectorTransform(Z) - Eigen::MatrixXcd::Identity(n, n))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  CHECK(sectorTransform(Eigen::MatrixXcd::Identity(n, n))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  const Eigen::MatrixXcd m3 = Eigen::MatrixXcd::Constant(1, 1, cd(3.0, 0.0));
  CHECK(sectorTransform(m3)(0, 0).real() == doctest::Approx(-0.5));
  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
  bad(0, 0) = cd(-1.0 + 1e-14, 0.0);
  bad(1, 1) = cd(1.0, 0.0);
  CHECK_THROWS_AS(sectorTransform(bad), IllPosedSector);
}

TEST_CASE("sector value 1 boundary matches the Hermitian-part sign") {
  // sigma_max(sect(-M)) < 1 iff M + M^H < 0, 200 random draws.
  std::mt19937_64 rng(314);
  int checked = 0;
  while (checked < 200) {
    const int n = 2 + checked % 4;
    Eigen::MatrixXcd M = randomComplexMatrix(rng, n);
    // Mix in definite shifts so both branches appear.
    if (checked % 2 == 0)
      M -= (2.0 + n) * Eigen::MatrixXcd::Identity(n, n);
    Eigen::MatrixXcd IpM = Eigen::MatrixXcd::Identity(n, n) + M;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(IpM);
    if (svd.singularValues().minCoeff() < 1e-3) continue;
    const Eigen::MatrixXcd H = M + M.adjoint();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H,
                                                       Eigen::EigenvaluesOnly);
    const double lmax = es.eigenvalues().maxCoeff();
    Eigen::JacobiSVD<Eigen::MatrixXcd> ssvd(sectorTransform(-M));
    const double sv = ssvd.singularValues().maxCoeff();
    if (std::abs(lmax) < 1e-9 || std::abs(sv - 1.0) < 1e-9) continue;
    CHECK((sv < 1.0) == (lmax < 0.0));
    ++checked;
  }
}

TEST_CASE("constraint inner matrix assembly") {
  const YParam y = scalarY(1.0);
  const Multiplier pi = makeH2Performance(y, 1);
  const double w = 0.7;
  const FactorValues f = pi.factors(w);

  SUBCASE("H2-only structure") {
    const cd g = 1.0 / cd(1.0, w);  // 1/(1+iw)
    const Eigen::MatrixXcd G = Eigen::MatrixXcd::Constant(1, 1, g);
    const Eigen::MatrixXcd P = assembleP(f, G);
    CHECK(P.rows() == 2);
    const cd psiY = 1.0 / cd(1.0, w);  // X/(a + iw)
    CHECK(std::abs(P(0, 0) + psiY) < 1e-14);
    CHECK(std::abs(P(1, 0) - g) < 1e-14);
    CHECK(std::abs(P(0, 1)) == 0.0);
    CHECK(P(1, 1) == cd(-0.5, 0.0));
  }

  SUBCASE("zero response leaves only Psi and the -1/2 block") {
    const Eigen::MatrixXcd P = assembleP(f, Eigen::MatrixXcd::Zero(1, 1));
    CHECK(std::abs(P(0, 0) - f.psi(0, 0)) < 1e-15);
    CHECK(std::abs(P(1, 0)) == 0.0);
    CHECK(P(1, 1) == cd(-0.5, 0.0));
  }

  SUBCASE("block shapes") {
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(3, 4);  // (q,z) x (p,w)
    FactorValues f2;
    f2.sigma = Eigen::MatrixXcd::Zero(2, 3);
    f2.phi = Eigen::MatrixXcd::Zero(4, 3);
    f2.psi = Eigen::MatrixXcd::Zero(4, 4);
    const Eigen::MatrixXcd P = assembleP(f2, G);
    CHECK(P.rows() == 6);
    CHECK(P.cols() == 6);
  }
}

TEST_CASE("constraint sup on the scalar H2 cover") {
  SUBCASE("covering Y certifies the bound") {
    // |G(iw)|^2 = 1/(1+w^2) < Y(iw) = 2/(1+w^2) everywhere.
    ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(1.0));
    const ConstraintEval ce =
        eng.constraintSup(eng.multiplier().defaultParams(), Eigen::VectorXd());
    CHECK(ce.value < 1.0);
    CHECK(!ce.active.empty());
    double amax = 0.0;
    for (const auto& a : ce.active) amax = std::max(amax, a.sigma);
    CHECK(ce.value == doctest::Approx(amax));
  }

  SUBCASE("scaled-down Y fails everywhere") {
    ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(0.25));
    const ConstraintEval ce =
        eng.constraintSup(eng.multiplier().defaultParams(), Eigen::VectorXd());
    CHECK(ce.value >= 1.0);
  }

  SUBCASE("sign of omega does not matter") {
    ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(1.0));
    const Eigen::VectorXd chi = eng.multiplier().defaultParams();
    for (double w : {0.3, 1.7, 42.0})
      CHECK(eng.sigmaSect(chi, Eigen::VectorXd(), w) ==
            doctest::Approx(eng.sigmaSect(chi, Eigen::VectorXd(), -w))
                .epsilon(1e-12));
  }
}

TEST_CASE("FDI residual") {
  SUBCASE("H2-only scalar case equals |G|^2 - Y") {
    ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(1.0));
    const Eigen::VectorXd chi = eng.multiplier().defaultParams();
    for (double w : {0.1, 1.0, 8.0}) {
      const double expect = 1.0 / (1.0 + w * w) - 2.0 / (1.0 + w * w);
      CHECK(eng.fdiResidualAt(chi, Eigen::VectorXd(), w) ==
            doctest::Approx(expect).epsilon(1e-10));
    }
  }

  SUBCASE("gamma = 1 norm-bound type multiplier on a static gain") {
    FactorValues f;
    f.sigma = Eigen::MatrixXcd::Identity(1, 1);
    f.phi = Eigen::MatrixXcd::Zero(1, 1);
    f.psi = Eigen::MatrixXcd::Constant(1, 1, cd(-0.5, 0.0));
    const Eigen::MatrixXcd G = Eigen::MatrixXcd::Constant(1, 1, cd(0.5, 0.0));
    CHECK(fdiResidual(f, G) == doctest::Approx(-0.75));
  }

  SUBCASE("even in omega") {
    ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(1.0));
    const Eigen::VectorXd chi = eng.multiplier().defaultParams();
    CHECK(eng.fdiResidualAt(chi, Eigen::VectorXd(), 2.0) ==
          doctest::Approx(eng.fdiResidualAt(chi, Eigen::VectorXd(), -2.0)));
  }
}

TEST_CASE("feasibility implies the FDI at every checked frequency") {
  ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(1.0));
  const Eigen::VectorXd chi = eng.multiplier().defaultParams();
  const ConstraintEval ce = eng.constraintSup(chi, Eigen::VectorXd());
  REQUIRE(ce.value < 1.0);
  for (double w : eng.baseOmegas())
    CHECK(eng.fdiResidualAt(chi, Eigen::VectorXd(), w) < 0.0);
  for (const auto& a : ce.active)
    if (!std::isinf(a.omega))
      CHECK(eng.fdiResidualAt(chi, Eigen::VectorXd(), a.omega) < 0.0);
}

TEST_CASE("H2 Schur reduction equivalence on random problems") {
  std::mt19937_64 rng(2718);
  FrequencyGrid grid;
  grid.points = 120;  // keep the sweep cheap
  int done = 0;
  while (done < 12) {
    const StateSpaceSystem plant =
        oracles::randomStableSystem(rng, 3, 1, 1, true);
    std::uniform_real_distribution<double> xd(0.2, 3.0);
    const YParam y = scalarY(xd(rng), xd(rng));
    ConstraintEngine eng = h2OnlyEngine(plant, y, grid);
    const Eigen::VectorXd chi = eng.multiplier().defaultParams();
    const double cval = eng.constraintSup(chi, Eigen::VectorXd()).value;
    double worst = -1e300;
    for (double w : eng.baseOmegas()) {
      const cd g = freqResponse(plant, w)(0, 0);
      worst = std::max(worst, std::norm(g) - std::real(y.evalY(w)(0, 0)));
    }
    if (std::abs(cval - 1.0) < 1e-9 || std::abs(worst) < 1e-9) continue;
    CHECK((cval < 1.0) == (worst < 0.0));
    ++done;
  }
}

TEST_CASE("grid refinement consistency on the shipped example") {
  SynthesisProblem prob = buildPaganiniSiso();
  const Multiplier aug = prob.augmented();
  Eigen::VectorXd chi = aug.defaultParams();
  chi(0) = 0.8;  // deterministic non-default point

  FrequencyGrid coarse, dense;
  dense.points = coarse.points * 2;
  ConstraintEngine e1(prob.plant, aug, prob.controller, coarse);
  ConstraintEngine e2(prob.plant, aug, prob.controller, dense);
  const double v1 = e1.constraintSup(chi, Eigen::VectorXd()).value;
  const double v2 = e2.constraintSup(chi, Eigen::VectorXd()).value;
  CHECK(std::abs(v1 - v2) < 1e-6);
}

TEST_CASE("sector-value gradients match finite differences") {
  SUBCASE("multiplier parameters (analysis problem)") {
    SynthesisProblem prob = buildPaganiniSiso();
    const Multiplier aug = prob.augmented();
    ConstraintEngine eng(prob.plant, aug, prob.controller, prob.options.grid);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> logw(-1.5, 1.5);
    for (int t = 0; t < 20; ++t) {
      Eigen::VectorXd chi = aug.defaultParams();
      for (int i = 0; i < chi.size(); ++i) chi(i) += 0.2 * normal(rng);
      const double w = std::pow(10.0, logw(rng));
      bool clustered = false;
      const auto grads =
          eng.sigmaSectGradients(chi, Eigen::VectorXd(), w, false, &clustered);
      if (clustered) continue;
      REQUIRE(grads.size() == 1);
      const auto f = [&](const Eigen::VectorXd& v) {
        return eng.sigmaSect(v, Eigen::VectorXd(), w);
      };
      const Eigen::VectorXd fd = oracles::finiteDifferenceGradient(f, chi);
      for (int i = 0; i < chi.size(); ++i) {
        const double scale =
            std::max({1.0, std::abs(fd(i)), std::abs(grads[0](i))});
        CHECK(std::abs(grads[0](i) - fd(i)) <= 1e-4 * scale);
      }
    }
  }

  SUBCASE("controller parameters enter through the closed loop") {
    SynthesisProblem prob = buildDelayMiso();
    const Multiplier aug = prob.augmented();
    ConstraintEngine eng(prob.plant, aug, prob.controller, prob.options.grid);
    std::mt19937_64 rng(123);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> logw(-1.0, 2.0);
    int done = 0;
    while (done < 8) {
      Eigen::VectorXd chi = aug.defaultParams();
      for (int i = 0; i < chi.size(); ++i) chi(i) += 0.1 * normal(rng);
      Eigen::VectorXd kappa(eng.kappaLen());
      for (int i = 0; i < kappa.size(); ++i) kappa(i) = 0.3 * normal(rng);
      const double w = std::pow(10.0, logw(rng));
      bool clustered = false;
      const auto grads =
          eng.sigmaSectGradients(chi, kappa, w, false, &clustered);
      if (clustered) continue;
      Eigen::VectorXd x(chi.size() + kappa.size());
      x << chi, kappa;
      const auto f = [&](const Eigen::VectorXd& v) {
        return eng.sigmaSect(v.head(chi.size()), v.tail(kappa.size()), w);
      };
      const Eigen::VectorXd fd = oracles::finiteDifferenceGradient(f, x);
      for (int i = 0; i < x.size(); ++i) {
        const double scale =
            std::max({1.0, std::abs(fd(i)), std::abs(grads[0](i))});
        CHECK(std::abs(grads[0](i) - fd(i)) <= 1e-4 * scale);
      }
      ++done;
    }
  }

  SUBCASE("Z entries do not act when b = 0") {
    // With b_i = 0 the Z_i residues drop out of Psi_Y entirely.
    ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(1.0));
    const Eigen::VectorXd chi = eng.multiplier().defaultParams();
    const auto grads =
        eng.sigmaSectGradients(chi, Eigen::VectorXd(), 1.0, false);
    REQUIRE(!grads.empty());
    const int zpos = 1;  // [X, Z, alpha, b] layout for N = 1, m = 1
    CHECK(grads[0](zpos) == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("scalar top block follows the scalar chain rule sign") {
    ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(0.2));
    Eigen::VectorXd chi = eng.multiplier().defaultParams();
    const double w = 0.5;
    const auto grads = eng.sigmaSectGradients(chi, Eigen::VectorXd(), w, false);
    REQUIRE(!grads.empty());
    // Increasing X grows the cover Y, which must reduce the sector value.
    CHECK(grads[0](0) < 0.0);
  }
}

TEST_CASE("asymptotic point reports the structural limit without dominating") {
  ConstraintEngine eng = h2OnlyEngine(firstOrderLag(), scalarY(1.0));
  const ConstraintEval ce =
      eng.constraintSup(eng.multiplier().defaultParams(), Eigen::VectorXd());
  CHECK(ce.sigma_at_infinity == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ce.value < 1.0);
}
