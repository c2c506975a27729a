#pragma once

#include <Eigen/Dense>

#include "robh2/state_space.hpp"

namespace robh2 {

/// Structured controller template. Entries where the mask is false are
/// frozen at the base value (zero unless a fixed controller was supplied);
/// the free entries form the parameter vector kappa, ordered row-major
/// over A_K, then B_K, C_K, D_K.
struct ControllerStructure {
  int order = 0;
  int ny = 0;
  int nu = 0;
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> maskA, maskB, maskC,
      maskD;
  Eigen::MatrixXd baseA, baseB, baseC, baseD;

  /// Fully free controller of the given order.
  static ControllerStructure full(int order, int ny, int nu);
  /// No controller (empty u/y channels).
  static ControllerStructure none();
  /// Frozen controller: kappa is empty, realize() returns K.
  static ControllerStructure fixed(const StateSpaceSystem& K);

  int kappaLen() const;
  bool empty() const { return nu == 0 && ny == 0; }

  StateSpaceSystem realize(const Eigen::VectorXd& kappa) const;
  /// Extracts the free entries of a conforming controller realization.
  Eigen::VectorXd extract(const StateSpaceSystem& K) const;

  void validate() const;
};

}  // namespace robh2
