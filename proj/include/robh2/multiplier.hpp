#pragma once

#include <complex>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "robh2/pole_residue.hpp"

namespace robh2 {

/// Values of the three multiplier factors at one frequency. The assembled
/// multiplier is Pi = [[Sigma^H Sigma, Phi^H], [Phi, Psi + Psi^H]].
struct FactorValues {
  Eigen::MatrixXcd sigma;  ///< r x nq
  Eigen::MatrixXcd phi;    ///< np x nq
  Eigen::MatrixXcd psi;    ///< np x np
};

/// One parameterized multiplier block. Atoms are immutable; evaluation is
/// pure in (omega, chi).
class MultiplierAtom {
 public:
  virtual ~MultiplierAtom() = default;
  virtual int qDim() const = 0;
  virtual int pDim() const = 0;
  virtual int sigmaRows() const = 0;
  virtual int paramLen() const = 0;
  virtual std::string tag() const = 0;
  virtual FactorValues eval(const Eigen::Ref<const Eigen::VectorXd>& chi,
                            double omega) const = 0;
  /// Derivative of the factors with respect to chi(k).
  virtual FactorValues evalDeriv(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                 double omega, int k) const = 0;
  /// omega -> infinity limit of the factors (feedthrough terms).
  virtual FactorValues evalLimit(
      const Eigen::Ref<const Eigen::VectorXd>& chi) const = 0;
  virtual FactorValues evalDerivLimit(
      const Eigen::Ref<const Eigen::VectorXd>& chi, int k) const = 0;
  /// Flat parameter positions whose sum is the H2 trace objective
  /// (empty for robustness atoms).
  virtual std::vector<int> objectiveDiagIndices() const { return {}; }
  /// Positions of pole parameters (alpha_i, then b_i per term) for atoms
  /// built on the pole-residue family; empty otherwise.
  virtual std::vector<int> poleAlphaIndices() const { return {}; }
  virtual std::vector<int> poleBIndices() const { return {}; }
};

/// Factorized IQC multiplier: an ordered list of atoms evaluated
/// block-diagonally, together with a default parameter vector. The empty
/// multiplier is the neutral element of composition.
class Multiplier {
 public:
  Multiplier() = default;
  Multiplier(std::vector<std::shared_ptr<const MultiplierAtom>> atoms,
             Eigen::VectorXd chi0);

  int qDim() const;
  int pDim() const;
  int sigmaRows() const;
  int paramLen() const { return static_cast<int>(chi0_.size()); }
  const Eigen::VectorXd& defaultParams() const { return chi0_; }
  const std::vector<std::shared_ptr<const MultiplierAtom>>& atoms() const {
    return atoms_;
  }
  std::string structureTag() const;

  FactorValues factors(double omega) const { return factors(chi0_, omega); }
  FactorValues factors(const Eigen::Ref<const Eigen::VectorXd>& chi,
                       double omega) const;
  /// Derivative of the block-diagonal factors with respect to chi(k).
  FactorValues factorDerivs(const Eigen::Ref<const Eigen::VectorXd>& chi,
                            double omega, int k) const;
  FactorValues factorsLimit(const Eigen::Ref<const Eigen::VectorXd>& chi) const;
  FactorValues factorDerivsLimit(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                 int k) const;

  /// Assembled Pi(i omega); Hermitian by construction.
  Eigen::MatrixXcd assembled(double omega) const {
    return assembled(chi0_, omega);
  }
  Eigen::MatrixXcd assembled(const Eigen::Ref<const Eigen::VectorXd>& chi,
                             double omega) const;

  /// Positions (in the full chi vector) of the H2 trace-objective entries.
  std::vector<int> objectiveDiagIndices() const;
  /// Pole parameter positions in the full chi vector.
  std::vector<int> poleAlphaIndices() const;
  std::vector<int> poleBIndices() const;
  /// Parameter offset of atom i within the full chi vector.
  int atomOffset(int i) const;

 private:
  std::vector<std::shared_ptr<const MultiplierAtom>> atoms_;
  Eigen::VectorXd chi0_;
};

/// Block-diagonal composition of the factor triples; parameter slices
/// concatenate in order.
Multiplier compose(const Multiplier& a, const Multiplier& b);

/// Assemble Pi from factor values.
Eigen::MatrixXcd assembleMultiplier(const FactorValues& f);

/// Performance multiplier diag(I, -Y): Sigma = I on the nz performance
/// outputs, phi_o = 0, Psi = -Psi_Y.
Multiplier makeH2Performance(const YParam& y, int nz);

/// Constant multiplier [[D^T D, W^T], [W, -D^T D]] for a repeated real
/// time-varying scalar; W is skew-symmetric, built from its upper triangle
/// (row-major), so the parameterization satisfies the class constraint
/// structurally.
Multiplier makeLtvReDrConstant(const Eigen::MatrixXd& D,
                               const Eigen::VectorXd& w_upper);

/// Dynamic multiplier diag(D^H D, -D^H D) for a repeated real constant
/// scalar, with D(s, chi) a PoleResidueSum of the given size/order.
/// Throws DegeneratePoles on coinciding pole pairs.
Multiplier makeLtiReDrDynamic(int size, int terms,
                              const Eigen::VectorXd& chi_d);

/// Covering multiplier diag(|w d|^2, -|d|^2) for the delay residual
/// exp(-s delta_tau) - 1, delta_tau in [0, tau_max]: w(s) is a fixed
/// rational magnitude cover of the residual over the delay range and
/// d(s, chi) a tunable scalar PoleResidueSum scaling.
Multiplier makeDelayCovering(double tau_max, int terms,
                             const Eigen::VectorXd& chi_d);

/// w(i omega) for the delay covering construction (exposed for the cover
/// checks): with u = tau_max * s, w = 2.1 u (u + 2) / (u^2 + 2.4 u + 4).
std::complex<double> delayCoverWeight(double tau_max, double omega);

/// [q; p]^H Pi(i omega) [q; p] as a real number, using the multiplier's
/// default parameters.
double iqcPointwise(const Multiplier& pi, double omega,
                    const Eigen::VectorXcd& qhat, const Eigen::VectorXcd& phat);

}  // namespace robh2
