#include "robh2/problems.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace robh2 {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd defaultFamilyParams(int terms, int size) {
  // X_1 = I, Z_i = 0, a_i spread around 1, b_i = 0.
  PoleResidueSum fam{terms, size};
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(fam.paramLen());
  for (int t = 0; t < terms; ++t) {
    const int off = t * fam.termLen();
    for (int r = 0; r < size; ++r) chi(off + r * size + r) = 1.0;
    chi(off + 2 * size * size) = 0.3 * t;  // distinct a_i = exp(0.3 t)
  }
  return chi;
}

std::string formatValue(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}
}  // namespace

SynthesisProblem buildPaganiniSiso() {
  // 1/(s^2 + (2 + delta) s + 1) with q = x2, p = delta q pulled out of the
  // damping term.
  Eigen::MatrixXd A(2, 2), B(2, 2), C(2, 2), D(2, 2);
  A << 0, 1, -1, -2;
  B << 0, 0, -1, 1;     // columns: p, w
  C << 0, 1, 1, 0;      // rows: q, z
  D.setZero();

  SynthesisProblem prob;
  prob.plant.sys = StateSpaceSystem(A, B, C, D);
  prob.plant.np = 1;
  prob.plant.nw = 1;
  prob.plant.nu = 0;
  prob.plant.nq = 1;
  prob.plant.nz = 1;
  prob.plant.ny = 0;
  prob.plant.blocks = {{UncertaintyClass::LtiReDr, 1, 1.0}};
  prob.block_multipliers = {makeLtiReDrDynamic(1, 1, defaultFamilyParams(1, 1))};
  prob.performance = YParam::make({Eigen::MatrixXd::Identity(1, 1)},
                                  {Eigen::MatrixXd::Zero(1, 1)}, {1.0}, {0.0});
  prob.controller = ControllerStructure::none();
  return prob;
}

SynthesisProblem buildDelayMiso(DenominatorReading reading) {
  const bool corrected = reading == DenominatorReading::Corrected;
  // States: x1, x2 (uncertain plant), x3 (disturbance filter 10/(s+0.1)),
  // x4 (noise filter s/(s+10)). With beta = 1 + 0.5 delta the corrected
  // denominator is s^2 + 0.1 beta s + beta^2; beta^2 contributes delta and
  // delta^2 terms, so the scalar is pulled out three times (q = x1,
  // q = p1, q = x2) and once more for the delay residual on z.
  const int ndr = corrected ? 3 : 2;
  const int np = ndr + 1, nq = ndr + 1;
  const int nw = 2, nz = 1, ny = 1, nu = 1;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  A(0, 1) = 1.0;
  if (corrected) {
    A(1, 0) = -1.0;
    A(1, 1) = -0.1;
  } else {
    A(1, 0) = -1.1;  // s^2 + [0.1 beta + beta^2] as written, no damping
  }
  A(2, 2) = -0.1;
  A(3, 3) = -10.0;

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(4, np + nw + nu);
  if (corrected) {
    B(1, 0) = -1.0;    // p1 = delta x1
    B(1, 1) = -0.25;   // p2 = delta^2 x1
    B(1, 2) = -0.05;   // p3 = delta x2
  } else {
    B(1, 0) = -1.05;   // p1 = delta x1 (combined 1 + 0.05 coefficient)
    B(1, 1) = -0.25;   // p2 = delta^2 x1
  }
  B(2, np) = 1.0;       // w_d -> disturbance filter
  B(3, np + 1) = 1.0;   // w_n -> noise filter
  B(1, np + 2) = 4.0;   // u

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nq + nz + ny, 4);
  int row = 0;
  C(row++, 0) = 1.0;             // q1 = x1
  ++row;                         // q2 = p1 (pure feedthrough row)
  if (corrected) C(row++, 1) = 1.0;  // q3 = x2
  // delay input q = z, then z itself, then y = z + p_delay + noise.
  for (int i = 0; i < 3; ++i) {
    C(row, 0) = 1.0;
    C(row, 2) = 10.0;
    ++row;
  }
  C(nq + nz + ny - 1, 3) = -10.0;  // noise filter output enters y only

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(nq + nz + ny, np + nw + nu);
  D(1, 0) = 1.0;                 // q2 = p1
  D(nq + nz, ndr) = 1.0;         // y <- p_delay
  D(nq + nz, np + 1) = 1.0;      // y <- w_n direct term of s/(s+10)

  SynthesisProblem prob;
  prob.plant.sys = StateSpaceSystem(A, B, C, D);
  prob.plant.np = np;
  prob.plant.nw = nw;
  prob.plant.nu = nu;
  prob.plant.nq = nq;
  prob.plant.nz = nz;
  prob.plant.ny = ny;
  prob.plant.blocks = {{UncertaintyClass::LtvReDr, ndr, 1.0},
                       {UncertaintyClass::LtvRbTd, 1, 0.025}};
  prob.block_multipliers = {
      makeLtvReDrConstant(Eigen::MatrixXd::Identity(ndr, ndr),
                          Eigen::VectorXd::Zero(ndr * (ndr - 1) / 2)),
      makeDelayCovering(0.025, 1, defaultFamilyParams(1, 1))};
  prob.performance = YParam::make({Eigen::MatrixXd::Identity(2, 2)},
                                  {Eigen::MatrixXd::Zero(2, 2)}, {1.0}, {0.0});
  prob.controller = ControllerStructure::full(3, ny, nu);
  return prob;
}

SynthesisProblem buildDelayMisoNominal() {
  SynthesisProblem uncertain = buildDelayMiso(DenominatorReading::Corrected);
  const int np = uncertain.plant.np, nq = uncertain.plant.nq;
  const StateSpaceSystem nominal = lftUpper(
      uncertain.plant, StateSpaceSystem::gain(Eigen::MatrixXd::Zero(np, nq)));

  SynthesisProblem prob;
  prob.plant.sys = nominal;
  prob.plant.np = 0;
  prob.plant.nw = uncertain.plant.nw;
  prob.plant.nu = uncertain.plant.nu;
  prob.plant.nq = 0;
  prob.plant.nz = uncertain.plant.nz;
  prob.plant.ny = uncertain.plant.ny;
  prob.performance = uncertain.performance;
  prob.controller = uncertain.controller;
  return prob;
}

std::vector<UncertaintySample> sampleUncertainty(
    const SynthesisProblem& problem, const SampleSpec& spec,
    unsigned long long seed) {
  problem.plant.validate();
  if (spec.dr_points < 1 || spec.delay_points < 1 || spec.random_samples < 0)
    throw DimensionMismatch("sample spec counts must be positive");

  struct BlockDraw {
    std::vector<double> values;  // delta or tau per grid point
  };
  std::vector<BlockDraw> grids;
  for (const auto& b : problem.plant.blocks) {
    BlockDraw g;
    const bool is_delay = b.cls == UncertaintyClass::LtvRbTd;
    const int n = is_delay ? spec.delay_points : spec.dr_points;
    const double lo = is_delay ? 0.0 : -b.bound;
    const double hi = b.bound;
    for (int i = 0; i < n; ++i)
      g.values.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    grids.push_back(std::move(g));
  }

  auto realize = [&](const std::vector<double>& vals) -> UncertaintySample {
    StateSpaceSystem delta = StateSpaceSystem::gain(Eigen::MatrixXd::Zero(0, 0));
    std::ostringstream desc;
    for (size_t bi = 0; bi < problem.plant.blocks.size(); ++bi) {
      const auto& b = problem.plant.blocks[bi];
      if (bi > 0) desc << ", ";
      if (b.cls == UncertaintyClass::LtvRbTd) {
        // Residual of the Pade-realized delay: exp(-s tau) - 1.
        StateSpaceSystem pade = padeDelay(vals[bi], spec.pade_order);
        pade.D.array() -= 1.0;
        delta = blockDiag(delta, pade);
        desc << "tau=" << formatValue(vals[bi]);
      } else {
        delta = blockDiag(delta, StateSpaceSystem::gain(
                                     vals[bi] * Eigen::MatrixXd::Identity(
                                                    b.dim, b.dim)));
        desc << "delta=" << formatValue(vals[bi]);
      }
    }
    return {lftUpper(problem.plant, delta), desc.str()};
  };

  std::vector<UncertaintySample> out;
  // Cartesian product over the per-block grids.
  std::vector<size_t> idx(grids.size(), 0);
  const size_t nblocks = grids.size();
  if (nblocks == 0) {
    out.push_back({lftUpper(problem.plant,
                            StateSpaceSystem::gain(Eigen::MatrixXd::Zero(0, 0))),
                   "nominal"});
  } else {
    while (true) {
      std::vector<double> vals(nblocks);
      for (size_t i = 0; i < nblocks; ++i) vals[i] = grids[i].values[idx[i]];
      out.push_back(realize(vals));
      size_t k = 0;
      while (k < nblocks && ++idx[k] == grids[k].values.size()) {
        idx[k] = 0;
        ++k;
      }
      if (k == nblocks) break;
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int r = 0; r < spec.random_samples; ++r) {
    std::vector<double> vals;
    for (const auto& b : problem.plant.blocks) {
      if (b.cls == UncertaintyClass::LtvRbTd)
        vals.push_back(b.bound * unif(rng));
      else
        vals.push_back(b.bound * (2.0 * unif(rng) - 1.0));
    }
    out.push_back(realize(vals));
  }
  return out;
}

SampleReport verifySamples(const SynthesisResult& result,
                           const std::vector<UncertaintySample>& samples) {
  SampleReport rep;
  rep.gamma = result.gamma;
  rep.note =
      "time-varying blocks sampled at frozen parameter values "
      "(lower-bound check only)";
  double worst = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  int stable_count = 0;
  for (const auto& s : samples) {
    SampleEntry e;
    e.description = s.description;
    StateSpaceSystem closed =
        result.K.inputs() > 0 ? lftLower(s.system, result.K) : s.system;
    const Stability st = checkStability(closed);
    e.stable = st.stable;
    if (st.stable) {
      e.h2 = h2Norm(closed);
      worst = std::max(worst, e.h2);
      sum += e.h2;
      ++stable_count;
    } else {
      e.h2 = kNaN;
      rep.any_unstable = true;
    }
    rep.entries.push_back(std::move(e));
  }
  rep.worst = stable_count > 0 ? worst : kNaN;
  rep.mean = stable_count > 0 ? sum / stable_count : kNaN;
  rep.gap = rep.gamma - rep.worst;
  rep.relative_gap = rep.worst > 0.0 ? rep.gap / rep.worst : kNaN;
  rep.certificate_violation =
      std::isfinite(rep.worst) && std::isfinite(rep.gamma) &&
      rep.gamma < rep.worst - 1e-6;
  return rep;
}

}  // namespace robh2
