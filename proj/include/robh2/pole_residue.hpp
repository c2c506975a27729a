#pragma once

#include <vector>

#include <Eigen/Dense>

#include "robh2/errors.hpp"

namespace robh2 {

/// Parametric strictly proper real-rational transfer matrix
///
///   F(s) = sum_i (X_i s + X_i a_i + Z_i b_i) / (s^2 + 2 a_i s + a_i^2 + b_i^2)
///
/// with real m x m coefficient matrices X_i, Z_i and pole location
/// -a_i +- i b_i per summand. Positivity a_i > 0 is enforced through the
/// reparameterization a_i = exp(alpha_i). Parameter layout per summand:
/// [X_i row-major (m^2), Z_i row-major (m^2), alpha_i, b_i].
struct PoleResidueSum {
  int terms = 1;
  int size = 1;

  int termLen() const { return 2 * size * size + 2; }
  int paramLen() const { return terms * termLen(); }

  Eigen::MatrixXcd eval(const Eigen::Ref<const Eigen::VectorXd>& chi,
                        double omega) const;
  /// Derivative of F(i omega) with respect to parameter k.
  Eigen::MatrixXcd evalDeriv(const Eigen::Ref<const Eigen::VectorXd>& chi,
                             double omega, int k) const;

  Eigen::MatrixXd Xi(const Eigen::Ref<const Eigen::VectorXd>& chi, int i) const;
  Eigen::MatrixXd Zi(const Eigen::Ref<const Eigen::VectorXd>& chi, int i) const;
  double ai(const Eigen::Ref<const Eigen::VectorXd>& chi, int i) const;
  double bi(const Eigen::Ref<const Eigen::VectorXd>& chi, int i) const;

  /// Flat positions of the diagonal entries of every X_i.
  std::vector<int> diagXIndices() const;
  /// Flat positions of the alpha_i / b_i parameters.
  std::vector<int> alphaIndices() const;
  std::vector<int> bIndices() const;

  /// Throws DegeneratePoles when two (a_i, b_i) pairs coincide within tol.
  void validatePoles(const Eigen::Ref<const Eigen::VectorXd>& chi,
                     double tol = 1e-8) const;
};

/// Parameters of the H2 bounding multiplier Y(s) = Psi_Y(s) + Psi_Y(s)^H
/// with Psi_Y a PoleResidueSum. `raw` is the family parameter vector.
struct YParam {
  PoleResidueSum family;
  Eigen::VectorXd raw;

  static YParam fromVector(int terms, int size, Eigen::VectorXd v);
  /// Build from explicit matrices; a_i must be positive.
  static YParam make(const std::vector<Eigen::MatrixXd>& X,
                     const std::vector<Eigen::MatrixXd>& Z,
                     const std::vector<double>& a,
                     const std::vector<double>& b);

  int terms() const { return family.terms; }
  int size() const { return family.size; }

  Eigen::MatrixXcd evalPsiY(double omega) const;
  /// Y(i omega), Hermitian by construction.
  Eigen::MatrixXcd evalY(double omega) const;

  void validate() const;
};

/// (1/2pi) Int tr Y(i omega) d omega; equals sum_i tr X_i exactly for this
/// family (the integral of each strictly proper summand telescopes to
/// pi X_i independently of Z_i, a_i, b_i).
double yTraceIntegral(const YParam& y);

/// Gradient of the trace integral over the raw parameter vector: one for
/// each diagonal X entry, zero elsewhere.
Eigen::VectorXd yTraceIntegralGradient(const YParam& y);

}  // namespace robh2
