#pragma once

#include <vector>

#include "robh2/controller.hpp"
#include "robh2/lfr.hpp"
#include "robh2/multiplier.hpp"

namespace robh2 {

/// Log-spaced evaluation grid with peak-refinement settings. The method is
/// conceptually gridless; the sup over frequency is realized as this grid
/// plus local maximizer refinement plus an asymptotic feedthrough check.
struct FrequencyGrid {
  double wmin = 1e-4;
  double wmax = 1e5;
  int points = 400;
  int peak_count = 8;
  double refine_rel_tol = 1e-3;
  double activity_rel_tol = 1e-3;

  std::vector<double> basePoints() const;
  void validate() const;
};

/// Bilinear sector transform (I - M)(I + M)^{-1}. Throws IllPosedSector
/// when I + M has condition number above 1e12.
Eigen::MatrixXcd sectorTransform(const Eigen::MatrixXcd& M);

/// Constraint inner matrix [[phi G + psi, 0], [sigma G, -1/2 I]] at one
/// frequency, from the augmented multiplier factors and the closed-loop
/// response G mapping (p, w) -> (q, z).
Eigen::MatrixXcd assembleP(const FactorValues& f, const Eigen::MatrixXcd& G);

/// Largest eigenvalue of [G; I]^H Pi [G; I]; negative iff the
/// frequency-domain inequality holds at this frequency.
double fdiResidual(const FactorValues& f, const Eigen::MatrixXcd& G);

struct ActiveFrequency {
  double omega = 0.0;  ///< +inf marks the asymptotic feedthrough point
  double sigma = 0.0;
  bool clustered = false;
  std::vector<Eigen::VectorXd> subgradients;  ///< over (chi; kappa)
};

struct ConstraintEval {
  double value = 0.0;
  std::vector<ActiveFrequency> active;
  double sigma_at_infinity = 0.0;
};

/// Frequency-domain evaluator for one (plant, augmented multiplier,
/// controller template) triple. Open-loop responses on the base grid are
/// cached at construction; all evaluation methods are pure in
/// (chi, kappa) and safe to call from multiple threads.
class ConstraintEngine {
 public:
  ConstraintEngine(LfrPlant plant, Multiplier augmented,
                   ControllerStructure controller, FrequencyGrid grid);

  int chiLen() const { return multiplier_.paramLen(); }
  int kappaLen() const { return controller_.kappaLen(); }
  const LfrPlant& plant() const { return plant_; }
  const Multiplier& multiplier() const { return multiplier_; }
  const ControllerStructure& controller() const { return controller_; }
  const FrequencyGrid& grid() const { return grid_; }
  const std::vector<double>& baseOmegas() const { return omegas_; }

  /// Open-loop plant response at an arbitrary frequency.
  Eigen::MatrixXcd openResponse(double omega) const;
  /// Closed-loop response (p, w) -> (q, z) at one frequency.
  Eigen::MatrixXcd closedResponse(const Eigen::VectorXd& kappa,
                                  double omega) const;
  /// omega -> infinity limit of the closed-loop response (feedthrough).
  Eigen::MatrixXcd closedResponseLimit(const Eigen::VectorXd& kappa) const;

  /// sigma_max(sect(-P)) at one frequency. Throws IllPosedSector.
  double sigmaSect(const Eigen::VectorXd& chi, const Eigen::VectorXd& kappa,
                   double omega) const;
  double sigmaSectLimit(const Eigen::VectorXd& chi,
                        const Eigen::VectorXd& kappa) const;

  /// Gradients of sigma_max(sect(-P)) over (chi; kappa) at one frequency;
  /// one entry per singular direction in the top cluster (more than one
  /// when the largest singular value is not simple within 1e-9 relative).
  std::vector<Eigen::VectorXd> sigmaSectGradients(
      const Eigen::VectorXd& chi, const Eigen::VectorXd& kappa, double omega,
      bool at_infinity, bool* clustered = nullptr) const;

  /// Grid sweep + top-peak refinement + asymptotic check. The asymptotic
  /// point enters the sup only when it indicates a genuine violation
  /// (sigma limit > 1); the structural approach of the sector value to 1
  /// from below at high frequency carries no constraint information.
  ConstraintEval constraintSup(const Eigen::VectorXd& chi,
                               const Eigen::VectorXd& kappa,
                               bool want_subgradients = false) const;

  double fdiResidualAt(const Eigen::VectorXd& chi,
                       const Eigen::VectorXd& kappa, double omega) const;

  /// Closed-loop state matrix (for the stability constraint).
  Eigen::MatrixXd closedLoopA(const Eigen::VectorXd& kappa) const;
  double spectralAbscissa(const Eigen::VectorXd& kappa) const;
  /// Subgradients of the spectral abscissa over (chi; kappa) (chi slots
  /// zero); one per rightmost eigenvalue in the active cluster.
  std::vector<Eigen::VectorXd> abscissaSubgradients(
      const Eigen::VectorXd& kappa, double* alpha_out = nullptr) const;

 private:
  struct KFreq {
    Eigen::MatrixXcd K;     // K(i omega)
    Eigen::MatrixXcd CPhi;  // C_K (i omega I - A_K)^{-1}
    Eigen::MatrixXcd PhiB;  // (i omega I - A_K)^{-1} B_K
  };
  KFreq controllerFreq(const StateSpaceSystem& K, double omega,
                       bool at_infinity) const;
  double sigmaOfP(const Eigen::MatrixXcd& P, double omega) const;

  LfrPlant plant_;
  Multiplier multiplier_;
  ControllerStructure controller_;
  FrequencyGrid grid_;
  std::vector<double> omegas_;
  std::vector<Eigen::MatrixXcd> open_cache_;
};

}  // namespace robh2
