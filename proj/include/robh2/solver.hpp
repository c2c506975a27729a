#pragma once

#include <string>
#include <vector>

#include "robh2/constraint.hpp"

namespace robh2 {

struct SolverOptions {
  int starts = 20;
  unsigned long long seed = 0;
  int max_iter = 500;
  double tol_stat = 1e-6;
  double eps_feas = 1e-6;
  double eps_stab = 1e-9;
  double penalty0 = 10.0;
  int jobs = 0;  ///< parallel starts; 0 = hardware concurrency
  FrequencyGrid grid;
  bool hot_start = false;
  Eigen::VectorXd hot_kappa;
  double hot_perturbation = 0.1;
};

/// Robust H2 synthesis problem: plant in LFR, one multiplier per
/// uncertainty block (in block order), the H2 bounding multiplier template
/// on the (w, z) channels, and the controller template.
struct SynthesisProblem {
  LfrPlant plant;
  std::vector<Multiplier> block_multipliers;
  YParam performance;
  ControllerStructure controller;
  SolverOptions options;

  /// C(Pi_1, ..., Pi_b, Pi_p): the augmented multiplier over
  /// ((q, z), (p, w)).
  Multiplier augmented() const;
  void validate() const;
};

enum class SolveStatus { Feasible, Marginal, Infeasible };
std::string toString(SolveStatus s);

struct StartLog {
  int start = 0;
  int iterations = 0;
  double stationarity = 0.0;
  double constraint_value = 0.0;
  double gamma = 0.0;
  bool feasible = false;
  std::string note;
  /// Best feasible objective after each improvement (non-increasing).
  std::vector<double> best_trace;
};

struct SynthesisResult {
  Eigen::VectorXd chi;
  Eigen::VectorXd kappa;
  double trace_integral = 0.0;   ///< sum of trace(X_i) at the solution
  double gamma = 0.0;            ///< sqrt(trace integral); NaN if integral <= 0
  double constraint_value = 0.0; ///< verified on the 4x denser grid
  double fdi_margin = 0.0;       ///< min over verification grid of -residual
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<ActiveFrequency> active;  ///< subgradients stripped
  std::vector<StartLog> start_logs;
  StateSpaceSystem K;
  bool analysis_mode = false;
};

/// Deterministic random start for a given seed: chi entries N(0, 0.1^2)
/// with pole alphas redrawn log-uniform so a_i spans [1e-2, 1e2] and
/// colliding pole pairs perturbed; kappa is rejection-sampled for
/// closed-loop stability (at most 200 resamples; throws
/// NoStabilizingStart). Hot-start mode perturbs the supplied nominal kappa
/// by relative noise instead of drawing it.
std::pair<Eigen::VectorXd, Eigen::VectorXd> randomStart(
    const SynthesisProblem& problem, const ConstraintEngine& engine,
    unsigned long long seed);

/// Min-norm point of the convex hull of the bundle (Wolfe's algorithm).
Eigen::VectorXd minNormConvexCombination(
    const std::vector<Eigen::VectorXd>& bundle);

/// Norm of the min-norm convex combination; the local optimality
/// certificate for the nonsmooth iteration.
double stationarityMeasure(const std::vector<Eigen::VectorXd>& bundle);

/// Optimize chi for a fixed (or absent) controller; multi-start on chi.
/// Throws UnstableSystem when the fixed loop is unstable, InfiniteH2 when
/// the performance channel has direct feedthrough, NoFeasibleMultiplier
/// when every start ends infeasible.
SynthesisResult analyze(const SynthesisProblem& problem);

/// Full synthesis over (chi, kappa): per start, phase A drives
/// max(abscissa + eps_stab, constraint - 1) negative, phase B minimizes
/// the trace objective under an exact penalty on the sector constraint.
/// Throws NoFeasibleStart when no start reaches feasibility.
SynthesisResult synthesize(const SynthesisProblem& problem);

}  // namespace robh2
