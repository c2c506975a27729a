#pragma once

#include <stdexcept>
#include <string>

namespace robh2 {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Resolvent solve (iwI - A) lost too much accuracy near an eigenvalue.
class NearSingularResolvent : public Error {
 public:
  using Error::Error;
};

/// The static feedthrough loop of an LFT is (numerically) singular.
class IllPosedLoop : public Error {
 public:
  using Error::Error;
};

/// I + M is near-singular in the bilinear sector transform.
class IllPosedSector : public Error {
 public:
  IllPosedSector(const std::string& msg, double omega_at)
      : Error(msg), omega(omega_at) {}
  double omega;
};

/// H2 norm requested for a system with direct feedthrough.
class InfiniteH2 : public Error {
 public:
  using Error::Error;
};

/// Operation requires a stable system.
class UnstableSystem : public Error {
 public:
  using Error::Error;
};

/// Two pole parameter pairs (a_i, b_i) coincide.
class DegeneratePoles : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling could not find a stabilizing controller start.
class NoStabilizingStart : public Error {
 public:
  using Error::Error;
};

/// No synthesis start reached feasibility.
class NoFeasibleStart : public Error {
 public:
  using Error::Error;
};

/// Analysis failed to certify any multiplier over all starts.
class NoFeasibleMultiplier : public Error {
 public:
  using Error::Error;
};

/// Problem file failed schema validation.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace robh2
