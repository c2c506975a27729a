#include "robh2/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace robh2 {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kPenaltyCap = 1e8;
}  // namespace

std::string toString(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "FEASIBLE";
    case SolveStatus::Marginal: return "MARGINAL";
    case SolveStatus::Infeasible: return "INFEASIBLE";
  }
  return "?";
}

Multiplier SynthesisProblem::augmented() const {
  Multiplier m;
  for (const auto& b : block_multipliers) m = compose(m, b);
  return compose(m, makeH2Performance(performance, plant.nz));
}

void SynthesisProblem::validate() const {
  plant.validate();
  controller.validate();
  if (controller.ny != plant.ny || controller.nu != plant.nu)
    throw DimensionMismatch("controller template does not match plant (y, u)");
  if (block_multipliers.size() != plant.blocks.size())
    throw DimensionMismatch("one multiplier per uncertainty block required");
  int q = 0, p = 0;
  for (const auto& m : block_multipliers) {
    q += m.qDim();
    p += m.pDim();
  }
  if (q != plant.nq || p != plant.np)
    throw DimensionMismatch("block multipliers do not cover the (q, p) channels");
  if (performance.size() != plant.nw)
    throw DimensionMismatch("Y parameter size must equal the w channel width");
  options.grid.validate();
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> randomStart(
    const SynthesisProblem& problem, const ConstraintEngine& engine,
    unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> logu(std::log(1e-2), std::log(1e2));

  const Multiplier& M = engine.multiplier();
  Eigen::VectorXd chi(M.paramLen());
  for (int i = 0; i < chi.size(); ++i) chi(i) = 0.1 * normal(rng);
  for (int k : M.poleAlphaIndices()) chi(k) = logu(rng);

  // Colliding pole pairs are perturbed, not rejected.
  const auto& atoms = M.atoms();
  for (size_t ai = 0; ai < atoms.size(); ++ai) {
    const auto alphas = atoms[ai]->poleAlphaIndices();
    const auto bs = atoms[ai]->poleBIndices();
    const int off = M.atomOffset(static_cast<int>(ai));
    for (size_t i = 0; i < alphas.size(); ++i)
      for (size_t j = i + 1; j < alphas.size(); ++j) {
        const double da = std::abs(std::exp(chi(off + alphas[i])) -
                                   std::exp(chi(off + alphas[j])));
        const double db = std::abs(std::abs(chi(off + bs[i])) -
                                   std::abs(chi(off + bs[j])));
        if (da <= 1e-8 && db <= 1e-8)
          chi(off + alphas[j]) += 1e-6 * static_cast<double>(j + 1);
      }
  }

  const ControllerStructure& st = engine.controller();
  const int nk = st.kappaLen();
  Eigen::VectorXd kappa = Eigen::VectorXd::Zero(nk);
  if (nk == 0) return {chi, kappa};

  const SolverOptions& opt = problem.options;
  for (int attempt = 0; attempt < 200; ++attempt) {
    if (opt.hot_start) {
      if (opt.hot_kappa.size() != nk)
        throw DimensionMismatch("hot-start kappa has wrong length");
      kappa = opt.hot_kappa;
      for (int i = 0; i < nk; ++i)
        kappa(i) *= 1.0 + opt.hot_perturbation * normal(rng);
    } else {
      // Free A_K diagonal entries are biased negative so random controllers
      // start out well-damped; everything else is plain scaled normal.
      int idx = 0;
      for (int r = 0; r < st.order; ++r)
        for (int c = 0; c < st.order; ++c)
          if (st.maskA(r, c))
            kappa(idx++) = 0.3 * normal(rng) - (r == c ? 0.5 : 0.0);
      for (int r = 0; r < st.order; ++r)
        for (int c = 0; c < st.ny; ++c)
          if (st.maskB(r, c)) kappa(idx++) = 0.3 * normal(rng);
      for (int r = 0; r < st.nu; ++r)
        for (int c = 0; c < st.order; ++c)
          if (st.maskC(r, c)) kappa(idx++) = 0.3 * normal(rng);
      for (int r = 0; r < st.nu; ++r)
        for (int c = 0; c < st.ny; ++c)
          if (st.maskD(r, c)) kappa(idx++) = 0.3 * normal(rng);
    }
    if (engine.spectralAbscissa(kappa) < -opt.eps_stab) return {chi, kappa};
    if (opt.hot_start && opt.hot_perturbation == 0.0) break;
  }
  throw NoStabilizingStart("no stabilizing controller start after resampling");
}

Eigen::VectorXd minNormConvexCombination(
    const std::vector<Eigen::VectorXd>& bundle) {
  if (bundle.empty())
    throw DimensionMismatch("min-norm point of an empty bundle");
  const int m = static_cast<int>(bundle.size());

  int init = 0;
  double bn = bundle[0].squaredNorm();
  for (int i = 1; i < m; ++i) {
    const double n2 = bundle[i].squaredNorm();
    if (n2 < bn) {
      bn = n2;
      init = i;
    }
  }
  std::vector<int> S = {init};
  Eigen::VectorXd lam = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd x = bundle[init];

  // Wolfe's min-norm-point algorithm over the convex hull.
  for (int outer = 0; outer < 100 + 10 * m; ++outer) {
    int jstar = 0;
    double mn = x.dot(bundle[0]);
    for (int j = 1; j < m; ++j) {
      const double d = x.dot(bundle[j]);
      if (d < mn) {
        mn = d;
        jstar = j;
      }
    }
    const double xx = x.squaredNorm();
    if (xx - mn <= 1e-12 * (1.0 + xx)) break;
    if (std::find(S.begin(), S.end(), jstar) != S.end()) break;
    S.push_back(jstar);
    lam.conservativeResize(lam.size() + 1);
    lam(lam.size() - 1) = 0.0;

    for (int inner = 0; inner < 100; ++inner) {
      const int k = static_cast<int>(S.size());
      Eigen::MatrixXd KKT = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) KKT(i, j) = bundle[S[i]].dot(bundle[S[j]]);
      KKT.topLeftCorner(k, k).diagonal().array() += 1e-12;
      KKT.topRightCorner(k, 1).setOnes();
      KKT.bottomLeftCorner(1, k).setOnes();
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
      rhs(k) = 1.0;
      const Eigen::VectorXd sol = KKT.fullPivLu().solve(rhs);
      const Eigen::VectorXd mu = sol.head(k);
      if (mu.minCoeff() >= -1e-12) {
        lam = mu;
        break;
      }
      double theta = 1.0;
      for (int i = 0; i < k; ++i)
        if (mu(i) < 0.0 && lam(i) > mu(i))
          theta = std::min(theta, lam(i) / (lam(i) - mu(i)));
      lam = lam + theta * (mu - lam);
      std::vector<int> S2;
      std::vector<double> l2;
      for (int i = 0; i < k; ++i)
        if (lam(i) > 1e-12) {
          S2.push_back(S[i]);
          l2.push_back(lam(i));
        }
      if (S2.empty()) {
        S2.push_back(S[0]);
        l2.push_back(1.0);
      }
      S = std::move(S2);
      lam = Eigen::Map<Eigen::VectorXd>(l2.data(), static_cast<int>(l2.size()));
    }
    x.setZero();
    for (size_t i = 0; i < S.size(); ++i) x += lam(static_cast<int>(i)) * bundle[S[i]];
  }
  return x;
}

double stationarityMeasure(const std::vector<Eigen::VectorXd>& bundle) {
  return minNormConvexCombination(bundle).norm();
}

namespace {

struct StartOutcome {
  StartLog log;
  bool has_best = false;
  Eigen::VectorXd best_chi, best_kappa;
  double best_obj = kInf;
  double best_cval = kInf;
  Eigen::VectorXd final_chi, final_kappa;
  double final_cval = kInf;
  bool final_stable = false;
};

struct LsResult {
  bool ok = false;
  double t = 0.0;
  double f = kInf;
};

template <typename F>
LsResult lineSearch(F&& f, double f0, double gnorm2, double t0) {
  const double c1 = 1e-4;
  double t = t0;
  double ft = f(t);
  if (ft <= f0 - c1 * t * gnorm2) {
    for (int e = 0; e < 8; ++e) {
      const double ft2 = f(2.0 * t);
      if (ft2 <= ft - c1 * t * gnorm2) {
        t *= 2.0;
        ft = ft2;
      } else {
        break;
      }
    }
    return {true, t, ft};
  }
  for (int i = 0; i < 45; ++i) {
    t *= 0.5;
    ft = f(t);
    if (ft <= f0 - c1 * t * gnorm2) return {true, t, ft};
  }
  return {false, 0.0, f0};
}

double objectiveValue(const Eigen::VectorXd& chi, const std::vector<int>& idx) {
  double s = 0.0;
  for (int k : idx) s += chi(k);
  return s;
}

// Exact-penalty phase-A merit: max(abscissa + eps_stab, constraint - 1).
double meritA(const ConstraintEngine& eng, const SolverOptions& opt,
              const Eigen::VectorXd& chi, const Eigen::VectorXd& kappa) {
  double c;
  try {
    c = eng.constraintSup(chi, kappa).value;
  } catch (const IllPosedSector&) {
    return kInf;
  }
  double mval = c - 1.0;
  if (eng.kappaLen() > 0)
    mval = std::max(mval, eng.spectralAbscissa(kappa) + opt.eps_stab);
  return mval;
}

// Phase-B merit with a hard stability wall.
double meritB(const ConstraintEngine& eng, const SolverOptions& opt,
              const std::vector<int>& obj_idx, double pen,
              const Eigen::VectorXd& chi, const Eigen::VectorXd& kappa) {
  if (eng.kappaLen() > 0 &&
      eng.spectralAbscissa(kappa) + opt.eps_stab >= 0.0)
    return kInf;
  double c;
  try {
    c = eng.constraintSup(chi, kappa).value;
  } catch (const IllPosedSector&) {
    return kInf;
  }
  return objectiveValue(chi, obj_idx) +
         pen * std::max(0.0, c - (1.0 - opt.eps_feas));
}

StartOutcome runStart(const ConstraintEngine& eng,
                      const SynthesisProblem& problem, int sidx) {
  const SolverOptions& opt = problem.options;
  const int nchi = eng.chiLen(), nkap = eng.kappaLen();
  const std::vector<int> obj_idx = eng.multiplier().objectiveDiagIndices();
  Eigen::VectorXd gobj = Eigen::VectorXd::Zero(nchi + nkap);
  for (int k : obj_idx) gobj(k) = 1.0;

  StartOutcome out;
  out.log.start = sidx;
  Eigen::VectorXd chi, kappa;
  try {
    std::tie(chi, kappa) = randomStart(problem, eng, opt.seed + sidx);
  } catch (const NoStabilizingStart& e) {
    out.log.note = e.what();
    out.log.constraint_value = kInf;
    out.log.gamma = kNaN;
    return out;
  }

  int iter = 0;
  double stat = kInf;
  double t_prev = 1.0;
  auto splitX = [nchi](const Eigen::VectorXd& x) {
    return std::make_pair(x.head(nchi), x.tail(x.size() - nchi));
  };
  Eigen::VectorXd x(nchi + nkap);
  x << chi, kappa;

  // ---- Phase A: feasibility ----
  double mval = meritA(eng, opt, x.head(nchi), x.tail(nkap));
  if (!std::isfinite(mval)) {
    out.log.note = "initial point ill-posed";
    out.log.constraint_value = kInf;
    out.log.gamma = kNaN;
    return out;
  }
  while (mval >= 0.0 && iter < opt.max_iter) {
    std::vector<Eigen::VectorXd> bundle;
    ConstraintEval ce;
    try {
      ce = eng.constraintSup(x.head(nchi), x.tail(nkap), true);
    } catch (const IllPosedSector&) {
      out.log.note = "sector ill-posed during phase A";
      break;
    }
    double alpha = -kInf;
    const double width = 1e-6 * (1.0 + std::abs(mval));
    if (nkap > 0) {
      auto agrads = eng.abscissaSubgradients(x.tail(nkap), &alpha);
      if (alpha + opt.eps_stab >= mval - width)
        for (auto& g : agrads) bundle.push_back(std::move(g));
    }
    if (ce.value - 1.0 >= mval - width)
      for (const auto& af : ce.active)
        for (const auto& g : af.subgradients) bundle.push_back(g);
    if (bundle.empty()) {
      out.log.note = "empty bundle in phase A";
      break;
    }
    const Eigen::VectorXd gmin = minNormConvexCombination(bundle);
    stat = gmin.norm();
    if (stat <= opt.tol_stat) break;
    const Eigen::VectorXd d = -gmin;
    const double t0 = std::clamp(2.0 * t_prev, 1e-8, 1e3);
    auto evalf = [&](double t) {
      const Eigen::VectorXd xt = x + t * d;
      auto [c2, k2] = splitX(xt);
      return meritA(eng, opt, c2, k2);
    };
    const LsResult ls = lineSearch(evalf, mval, gmin.squaredNorm(), t0);
    ++iter;
    if (!ls.ok) break;
    x += ls.t * d;
    t_prev = ls.t;
    mval = ls.f;
  }

  if (mval >= 0.0) {
    auto [c2, k2] = splitX(x);
    out.final_chi = c2;
    out.final_kappa = k2;
    try {
      out.final_cval = eng.constraintSup(c2, k2).value;
    } catch (const IllPosedSector&) {
      out.final_cval = kInf;
    }
    out.final_stable =
        nkap == 0 || eng.spectralAbscissa(k2) < -opt.eps_stab;
    out.log.iterations = iter;
    out.log.stationarity = stat;
    out.log.constraint_value = out.final_cval;
    out.log.gamma = kNaN;
    if (out.log.note.empty()) out.log.note = "phase A did not reach feasibility";
    return out;
  }

  // ---- Phase B: objective minimization under exact penalty ----
  double pen = opt.penalty0;
  t_prev = 1.0;
  while (iter < opt.max_iter) {
    auto [c2, k2] = splitX(x);
    ConstraintEval ce;
    try {
      ce = eng.constraintSup(c2, k2, true);
    } catch (const IllPosedSector&) {
      out.log.note = "sector ill-posed during phase B";
      break;
    }
    const double alpha = nkap > 0 ? eng.spectralAbscissa(k2) : -kInf;
    const double obj = objectiveValue(c2, obj_idx);
    const bool stable = nkap == 0 || alpha < -opt.eps_stab;
    if (ce.value < 1.0 && stable && obj > 0.0 && obj < out.best_obj) {
      out.has_best = true;
      out.best_chi = c2;
      out.best_kappa = k2;
      out.best_obj = obj;
      out.best_cval = ce.value;
      out.log.best_trace.push_back(obj);
    }

    std::vector<Eigen::VectorXd> bundle = {gobj};
    const double viol = ce.value - (1.0 - opt.eps_feas);
    if (viol >= -1e-12)
      for (const auto& af : ce.active)
        for (const auto& g : af.subgradients) bundle.push_back(gobj + pen * g);
    const Eigen::VectorXd gmin = minNormConvexCombination(bundle);
    stat = gmin.norm();
    if (stat <= opt.tol_stat) break;
    const Eigen::VectorXd d = -gmin;
    const double f0 = obj + pen * std::max(0.0, viol);
    const double t0 = std::clamp(2.0 * t_prev, 1e-10, 1e3);
    auto evalf = [&](double t) {
      const Eigen::VectorXd xt = x + t * d;
      auto [cc, kk] = splitX(xt);
      return meritB(eng, opt, obj_idx, pen, cc, kk);
    };
    const LsResult ls = lineSearch(evalf, f0, gmin.squaredNorm(), t0);
    ++iter;
    if (!ls.ok) break;
    x += ls.t * d;
    t_prev = ls.t;
    // The margin band [1 - eps_feas, 1] is structurally unavoidable for
    // strictly proper performance channels; escalate only on genuine
    // constraint violation.
    auto [cc, kk] = splitX(x);
    double cnew;
    try {
      cnew = eng.constraintSup(cc, kk).value;
    } catch (const IllPosedSector&) {
      cnew = kInf;
    }
    if (cnew > 1.0) pen = std::min(2.0 * pen, kPenaltyCap);
  }

  auto [c2, k2] = splitX(x);
  out.final_chi = c2;
  out.final_kappa = k2;
  try {
    out.final_cval = eng.constraintSup(c2, k2).value;
  } catch (const IllPosedSector&) {
    out.final_cval = kInf;
  }
  out.final_stable = nkap == 0 || eng.spectralAbscissa(k2) < -opt.eps_stab;
  out.log.iterations = iter;
  out.log.stationarity = stat;
  out.log.feasible = out.has_best;
  out.log.constraint_value = out.has_best ? out.best_cval : out.final_cval;
  out.log.gamma = out.has_best ? std::sqrt(out.best_obj) : kNaN;
  return out;
}

void checkFiniteH2Path(const SynthesisProblem& p) {
  const auto& D = p.plant.sys.D;
  const auto Dzw = D.block(p.plant.nq, p.plant.np, p.plant.nz, p.plant.nw);
  if (Dzw.cwiseAbs().maxCoeff() != 0.0)
    throw InfiniteH2("direct w -> z feedthrough; H2 objective is infinite");
  const auto Dzu = D.block(p.plant.nq, p.plant.np + p.plant.nw, p.plant.nz,
                           p.plant.nu);
  const auto Dyw = D.block(p.plant.nq + p.plant.nz, p.plant.np, p.plant.ny,
                           p.plant.nw);
  const bool dk_zero = p.controller.maskD.count() == 0 &&
                       (p.controller.baseD.size() == 0 ||
                        p.controller.baseD.cwiseAbs().maxCoeff() == 0.0);
  if (Dzu.size() > 0 && Dyw.size() > 0 &&
      Dzu.cwiseAbs().maxCoeff() != 0.0 && Dyw.cwiseAbs().maxCoeff() != 0.0 &&
      !dk_zero)
    throw InfiniteH2("controller feedthrough closes a w -> z static path");
}

SynthesisResult solveCore(const SynthesisProblem& problem, bool analysis) {
  problem.validate();
  checkFiniteH2Path(problem);
  const SolverOptions& opt = problem.options;
  if (opt.starts < 1) throw DimensionMismatch("starts must be >= 1");

  ConstraintEngine eng(problem.plant, problem.augmented(), problem.controller,
                       opt.grid);
  if (analysis) {
    if (eng.kappaLen() != 0)
      throw DimensionMismatch("analysis mode requires a fixed controller");
    const double alpha = eng.spectralAbscissa(Eigen::VectorXd());
    if (!(alpha < -opt.eps_stab))
      throw UnstableSystem("closed loop is not stable (abscissa " +
                           std::to_string(alpha) + ")");
  }

  std::vector<StartOutcome> outs(static_cast<size_t>(opt.starts));
  int jobs = opt.jobs > 0 ? opt.jobs
                          : static_cast<int>(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min(jobs, opt.starts));
  std::atomic<int> next(0);
  auto worker = [&]() {
    int i;
    while ((i = next.fetch_add(1)) < opt.starts)
      outs[static_cast<size_t>(i)] = runStart(eng, problem, i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Best feasible start wins; ties by lower constraint value, then index.
  int winner = -1;
  for (int i = 0; i < opt.starts; ++i) {
    const auto& o = outs[static_cast<size_t>(i)];
    if (!o.has_best) continue;
    if (winner < 0) {
      winner = i;
      continue;
    }
    const auto& w = outs[static_cast<size_t>(winner)];
    if (o.best_obj < w.best_obj ||
        (o.best_obj == w.best_obj && o.best_cval < w.best_cval))
      winner = i;
  }

  SynthesisResult res;
  res.analysis_mode = analysis;
  for (const auto& o : outs) res.start_logs.push_back(o.log);

  if (winner < 0) {
    // No feasible start; surface the best diagnostics, marginal if close.
    int diag = -1;
    for (int i = 0; i < opt.starts; ++i) {
      const auto& o = outs[static_cast<size_t>(i)];
      if (o.final_chi.size() == 0) continue;
      if (diag < 0 ||
          o.final_cval < outs[static_cast<size_t>(diag)].final_cval)
        diag = i;
    }
    if (diag >= 0) {
      const auto& o = outs[static_cast<size_t>(diag)];
      res.chi = o.final_chi;
      res.kappa = o.final_kappa;
      res.constraint_value = o.final_cval;
      res.trace_integral = objectiveValue(o.final_chi,
                                          eng.multiplier().objectiveDiagIndices());
      res.gamma = res.trace_integral > 0.0 ? std::sqrt(res.trace_integral)
                                           : kNaN;
      res.K = problem.controller.realize(o.final_kappa);
      if (o.final_stable && o.final_cval > 1.0 &&
          o.final_cval <= 1.0 + 1e-4) {
        res.status = SolveStatus::Marginal;
        return res;
      }
    }
    res.status = SolveStatus::Infeasible;
    return res;
  }

  const auto& w = outs[static_cast<size_t>(winner)];
  res.chi = w.best_chi;
  res.kappa = w.best_kappa;
  res.trace_integral = w.best_obj;
  res.gamma = std::sqrt(w.best_obj);
  res.K = problem.controller.realize(w.best_kappa);

  // Soundness pass on a 4x denser verification grid.
  FrequencyGrid vgrid = opt.grid;
  vgrid.points *= 4;
  ConstraintEngine veng(problem.plant, problem.augmented(), problem.controller,
                        vgrid);
  double cver;
  try {
    cver = veng.constraintSup(w.best_chi, w.best_kappa).value;
  } catch (const IllPosedSector&) {
    cver = kInf;
  }
  res.constraint_value = std::max(w.best_cval, cver);
  double margin = kInf;
  for (double om : veng.baseOmegas())
    margin = std::min(margin,
                      -veng.fdiResidualAt(w.best_chi, w.best_kappa, om));
  res.fdi_margin = margin;

  if (res.constraint_value < 1.0 && margin > 0.0)
    res.status = SolveStatus::Feasible;
  else if (res.constraint_value <= 1.0 + 1e-4)
    res.status = SolveStatus::Marginal;
  else
    res.status = SolveStatus::Infeasible;

  ConstraintEval ce = eng.constraintSup(w.best_chi, w.best_kappa);
  for (auto& af : ce.active) af.subgradients.clear();
  res.active = std::move(ce.active);
  return res;
}

}  // namespace

SynthesisResult analyze(const SynthesisProblem& problem) {
  SynthesisResult res = solveCore(problem, true);
  if (res.status == SolveStatus::Infeasible)
    throw NoFeasibleMultiplier(
        "no feasible multiplier over " +
        std::to_string(problem.options.starts) + " starts (best constraint " +
        std::to_string(res.constraint_value) + ")");
  return res;
}

SynthesisResult synthesize(const SynthesisProblem& problem) {
  SynthesisResult res = solveCore(problem, false);
  if (res.status == SolveStatus::Infeasible)
    throw NoFeasibleStart(
        "no start reached feasibility out of " +
        std::to_string(problem.options.starts) + " (best constraint " +
        std::to_string(res.constraint_value) + ")");
  return res;
}

}  // namespace robh2
