#pragma once

#include <string>
#include <vector>

#include "robh2/solver.hpp"

namespace robh2 {

/// Second-order SISO benchmark with constant uncertain damping:
/// 1 / (s^2 + (2 + delta) s + 1), delta in [-1, 1], pulled out as one
/// lti_re_dr block; scalar H2 channel w -> z; analysis mode (no
/// controller); first-order dynamic D and Y multipliers.
SynthesisProblem buildPaganiniSiso();

/// The uncertain-natural-frequency plant of the MISO benchmark reads
/// "s^2 + 0.1(1 + 0.5 delta) + (1 + 0.5 delta)^2" in its source; the
/// damping term is missing a factor s there. Corrected restores it.
enum class DenominatorReading { Corrected, Literal };

/// 4th-order MISO benchmark: plant with arbitrarily fast time-varying
/// natural frequency (ltv_re_dr, delta repeated), output disturbance
/// 10/(s+0.1), measurement delay delta_tau in [0, 0.025] s (ltv_rb_td)
/// and high-pass measurement noise s/(s+10); output regulation with a
/// full 3rd-order controller.
SynthesisProblem buildDelayMiso(
    DenominatorReading reading = DenominatorReading::Corrected);

/// The same problem with the uncertainty channel removed (Delta = 0, no
/// measurement delay); used to synthesize the nominal comparison
/// controller.
SynthesisProblem buildDelayMisoNominal();

struct SampleSpec {
  int dr_points = 21;     ///< grid points per scalar dr parameter
  int delay_points = 5;   ///< delay samples including both endpoints
  int pade_order = 4;
  int random_samples = 0; ///< extra uniform random draws on top of the grid
};

/// One frozen uncertainty realization closed into the plant:
/// F_u(G, Delta) mapping (w, u) -> (z, y).
struct UncertaintySample {
  StateSpaceSystem system;
  std::string description;
};

/// Deterministic grid over dr parameters crossed with Pade-realized delay
/// samples, plus optional uniform random samples. Time-varying classes are
/// sampled at frozen parameter values, which under-approximates the
/// uncertainty set; the report carries that caveat.
std::vector<UncertaintySample> sampleUncertainty(
    const SynthesisProblem& problem, const SampleSpec& spec,
    unsigned long long seed);

struct SampleEntry {
  std::string description;
  bool stable = false;
  double h2 = 0.0;  ///< NaN when unstable
};

struct SampleReport {
  std::vector<SampleEntry> entries;
  double worst = 0.0;
  double mean = 0.0;
  double gamma = 0.0;
  double gap = 0.0;           ///< gamma - worst
  double relative_gap = 0.0;  ///< gap / worst
  bool any_unstable = false;
  bool certificate_violation = false;
  std::string note;
};

/// Closes every sample with the result's controller, computes stability
/// and H2 norm per sample, and aggregates against the certified bound.
SampleReport verifySamples(const SynthesisResult& result,
                           const std::vector<UncertaintySample>& samples);

}  // namespace robh2
