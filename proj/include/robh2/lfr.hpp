#pragma once

#include <string>
#include <vector>

#include "robh2/state_space.hpp"

namespace robh2 {

enum class UncertaintyClass {
  LtiReDr,   ///< repeated real constant scalar, magnitude-bounded
  LtvReDr,   ///< repeated real time-varying scalar, magnitude-bounded
  LtvRbTd,   ///< norm-bounded residual of an uncertain time delay
};

std::string toString(UncertaintyClass c);
UncertaintyClass uncertaintyClassFromString(const std::string& s);

/// One diagonal block of the uncertainty operator. `dim` is the repetition
/// count (block width on the p/q channels); `bound` is the magnitude bound
/// for the dr classes and the maximum delay in seconds for the td class.
struct UncertaintyBlock {
  UncertaintyClass cls;
  int dim = 1;
  double bound = 1.0;

  void validate() const;
};

/// Partitioned open-loop plant: inputs (p, w, u), outputs (q, z, y).
/// The p->q channel is closed by the uncertainty, y->u by the controller,
/// and w->z carries the performance specification.
struct LfrPlant {
  StateSpaceSystem sys;
  int np = 0, nw = 0, nu = 0;  ///< input channel widths
  int nq = 0, nz = 0, ny = 0;  ///< output channel widths
  std::vector<UncertaintyBlock> blocks;

  void validate() const;

  int uncertaintyInputs() const { return np; }
  int uncertaintyOutputs() const { return nq; }
};

/// Lower LFT: closes the last `K.outputs()` inputs against the last
/// `K.inputs()` outputs of `G` with u = K y. Throws IllPosedLoop when the
/// static loop I - D_yu D_K is near-singular (condition number > 1e12).
StateSpaceSystem lftLower(const StateSpaceSystem& G, const StateSpaceSystem& K);

/// Lower LFT of an LFR plant with its controller; result maps (p, w) -> (q, z).
StateSpaceSystem lftLower(const LfrPlant& G, const StateSpaceSystem& K);

/// Upper LFT: closes the first `delta.outputs()` inputs against the first
/// `delta.inputs()` outputs of `G` with p = Delta q.
StateSpaceSystem lftUpper(const StateSpaceSystem& G, const StateSpaceSystem& delta);

/// Upper LFT of an LFR plant; result maps (w, u) -> (z, y).
StateSpaceSystem lftUpper(const LfrPlant& G, const StateSpaceSystem& delta);

/// Frequency-level lower LFT on response matrices:
/// G11 + G12 K (I - G22 K)^{-1} G21 with the (ny, nu) channels last.
Eigen::MatrixXcd lftLowerResponse(const Eigen::MatrixXcd& G, int ny, int nu,
                                  const Eigen::MatrixXcd& K);

}  // namespace robh2
