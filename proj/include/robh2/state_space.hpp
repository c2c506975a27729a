#pragma once

#include <Eigen/Dense>

#include "robh2/errors.hpp"

namespace robh2 {

/// Continuous-time state-space realization x' = Ax + Bu, y = Cx + Du of a
/// proper rational transfer matrix. Value type; immutable by convention
/// after construction. n == 0 describes a static gain.
struct StateSpaceSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::MatrixXd C;
  Eigen::MatrixXd D;

  StateSpaceSystem() = default;
  StateSpaceSystem(Eigen::MatrixXd A_, Eigen::MatrixXd B_, Eigen::MatrixXd C_,
                   Eigen::MatrixXd D_);

  int order() const { return static_cast<int>(A.rows()); }
  int inputs() const { return static_cast<int>(D.cols()); }
  int outputs() const { return static_cast<int>(D.rows()); }

  /// Static gain system (no states).
  static StateSpaceSystem gain(const Eigen::MatrixXd& D);
  /// Realization of b(s)/a(s), deg b <= deg a, a monic after normalization.
  /// Coefficients ordered highest power first.
  static StateSpaceSystem fromTransfer(const Eigen::VectorXd& num,
                                       const Eigen::VectorXd& den);
};

/// Input/output concatenation: diag(S1, S2) as a transfer matrix.
StateSpaceSystem blockDiag(const StateSpaceSystem& s1,
                           const StateSpaceSystem& s2);

/// C (iw I - A)^{-1} B + D. Throws NearSingularResolvent when the shifted
/// solve has relative residual above 1e-8 (iw too close to an eigenvalue).
Eigen::MatrixXcd freqResponse(const StateSpaceSystem& sys, double omega);

struct Stability {
  bool stable;
  /// Maximum real part of the eigenvalues of A; -inf for static systems.
  double spectral_abscissa;
};

/// Hurwitz test with margin: stable iff the abscissa is below -eps_stab.
Stability checkStability(const StateSpaceSystem& sys, double eps_stab = 1e-9);

/// H2 norm sqrt((1/2pi) Int tr(H^H H) dw) by adaptive quadrature on a log
/// grid over [1e-4, 1e5] rad/s plus a fitted power-law tail. Requires a
/// stable, strictly proper system. Relative accuracy target 1e-6.
double h2Norm(const StateSpaceSystem& sys);

/// All-pass diagonal Pade approximant of a pure delay exp(-s tau).
/// order >= 1; tau == 0 returns the identity gain.
StateSpaceSystem padeDelay(double tau, int order = 4);

}  // namespace robh2
