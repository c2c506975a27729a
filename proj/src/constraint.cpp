#include "robh2/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace robh2 {

namespace {
using cd = std::complex<double>;
constexpr double kIllPosedValue = 1e3;
}  // namespace

std::vector<double> FrequencyGrid::basePoints() const {
  std::vector<double> w(points);
  const double l0 = std::log(wmin), l1 = std::log(wmax);
  for (int i = 0; i < points; ++i)
    w[i] = std::exp(l0 + (l1 - l0) * i / (points - 1));
  w.front() = wmin;
  w.back() = wmax;
  return w;
}

void FrequencyGrid::validate() const {
  if (!(wmin > 0.0) || !(wmax > wmin) || points < 8)
    throw DimensionMismatch("frequency grid must satisfy 0 < wmin < wmax, points >= 8");
  if (peak_count < 1 || refine_rel_tol <= 0.0 || activity_rel_tol <= 0.0)
    throw DimensionMismatch("frequency grid refinement settings invalid");
}

Eigen::MatrixXcd sectorTransform(const Eigen::MatrixXcd& M) {
  const int n = static_cast<int>(M.rows());
  if (M.cols() != n) throw DimensionMismatch("sector transform needs a square matrix");
  const Eigen::MatrixXcd IpM = Eigen::MatrixXcd::Identity(n, n) + M;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(IpM);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > 1e12)
    throw IllPosedSector("I + M is near-singular in sector transform",
                         std::numeric_limits<double>::quiet_NaN());
  return (Eigen::MatrixXcd::Identity(n, n) - M) *
         IpM.partialPivLu().inverse();
}

Eigen::MatrixXcd assembleP(const FactorValues& f, const Eigen::MatrixXcd& G) {
  const int npw = static_cast<int>(f.phi.rows());
  const int nqz = static_cast<int>(f.phi.cols());
  const int r = static_cast<int>(f.sigma.rows());
  if (G.rows() != nqz || G.cols() != npw)
    throw DimensionMismatch("response does not match multiplier factors");
  Eigen::MatrixXcd P = Eigen::MatrixXcd::Zero(npw + r, npw + r);
  P.topLeftCorner(npw, npw) = f.phi * G + f.psi;
  P.bottomLeftCorner(r, npw) = f.sigma * G;
  P.bottomRightCorner(r, r) = -0.5 * Eigen::MatrixXcd::Identity(r, r);
  return P;
}

double fdiResidual(const FactorValues& f, const Eigen::MatrixXcd& G) {
  const int npw = static_cast<int>(f.phi.rows());
  const int nqz = static_cast<int>(f.phi.cols());
  Eigen::MatrixXcd V(nqz + npw, npw);
  V.topRows(nqz) = G;
  V.bottomRows(npw) = Eigen::MatrixXcd::Identity(npw, npw);
  const Eigen::MatrixXcd Pi = assembleMultiplier(f);
  Eigen::MatrixXcd M = V.adjoint() * Pi * V;
  M = 0.5 * (M + M.adjoint().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

ConstraintEngine::ConstraintEngine(LfrPlant plant, Multiplier augmented,
                                   ControllerStructure controller,
                                   FrequencyGrid grid)
    : plant_(std::move(plant)),
      multiplier_(std::move(augmented)),
      controller_(std::move(controller)),
      grid_(grid) {
  plant_.validate();
  controller_.validate();
  grid_.validate();
  if (multiplier_.qDim() != plant_.nq + plant_.nz ||
      multiplier_.pDim() != plant_.np + plant_.nw)
    throw DimensionMismatch(
        "augmented multiplier does not match (q+z, p+w) channel widths");
  if (controller_.ny != plant_.ny || controller_.nu != plant_.nu)
    throw DimensionMismatch("controller template does not match (y, u) widths");
  omegas_ = grid_.basePoints();
  open_cache_.reserve(omegas_.size());
  for (double w : omegas_) open_cache_.push_back(openResponse(w));
}

Eigen::MatrixXcd ConstraintEngine::openResponse(double omega) const {
  // An imaginary-axis eigenvalue of the open plant can defeat the shifted
  // solve at isolated grid points; nudge the frequency instead of failing.
  for (double pert : {0.0, 1e-9, 1e-7, 1e-5}) {
    try {
      return freqResponse(plant_.sys, omega * (1.0 + pert) + pert * 1e-12);
    } catch (const NearSingularResolvent&) {
    }
  }
  throw NearSingularResolvent("open-loop response failed near omega = " +
                              std::to_string(omega));
}

ConstraintEngine::KFreq ConstraintEngine::controllerFreq(
    const StateSpaceSystem& K, double omega, bool at_infinity) const {
  KFreq kf;
  const int nK = K.order();
  if (at_infinity || nK == 0) {
    kf.K = K.D.cast<cd>();
    kf.CPhi = Eigen::MatrixXcd::Zero(K.outputs(), nK);
    kf.PhiB = Eigen::MatrixXcd::Zero(nK, K.inputs());
    return kf;
  }
  Eigen::MatrixXcd M =
      cd(0.0, omega) * Eigen::MatrixXcd::Identity(nK, nK) - K.A.cast<cd>();
  const Eigen::MatrixXcd Minv = M.partialPivLu().inverse();
  kf.PhiB = Minv * K.B.cast<cd>();
  kf.CPhi = K.C.cast<cd>() * Minv;
  kf.K = K.C.cast<cd>() * kf.PhiB + K.D.cast<cd>();
  return kf;
}

Eigen::MatrixXcd ConstraintEngine::closedResponse(const Eigen::VectorXd& kappa,
                                                  double omega) const {
  // Reuse the cache when omega is a base grid point.
  const auto it = std::lower_bound(omegas_.begin(), omegas_.end(), omega);
  Eigen::MatrixXcd G;
  if (it != omegas_.end() && *it == omega) {
    G = open_cache_[static_cast<size_t>(it - omegas_.begin())];
  } else {
    G = openResponse(omega);
  }
  if (controller_.empty())
    return G.topLeftCorner(plant_.nq + plant_.nz, plant_.np + plant_.nw);
  const StateSpaceSystem K = controller_.realize(kappa);
  const KFreq kf = controllerFreq(K, omega, false);
  return lftLowerResponse(G, plant_.ny, plant_.nu, kf.K);
}

Eigen::MatrixXcd ConstraintEngine::closedResponseLimit(
    const Eigen::VectorXd& kappa) const {
  const Eigen::MatrixXcd D = plant_.sys.D.cast<cd>();
  if (controller_.empty())
    return D.topLeftCorner(plant_.nq + plant_.nz, plant_.np + plant_.nw);
  const StateSpaceSystem K = controller_.realize(kappa);
  return lftLowerResponse(D, plant_.ny, plant_.nu, K.D.cast<cd>());
}

double ConstraintEngine::sigmaOfP(const Eigen::MatrixXcd& P,
                                  double omega) const {
  const int n = static_cast<int>(P.rows());
  const Eigen::MatrixXcd ImP = Eigen::MatrixXcd::Identity(n, n) - P;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(ImP);
  // Cheap singularity proxy from the pivoted U factor; escalate to the
  // strict SVD-based check only when it looks suspicious.
  const Eigen::VectorXd udiag = lu.matrixLU().diagonal().cwiseAbs();
  const double umax = udiag.maxCoeff();
  if (umax <= 0.0 || udiag.minCoeff() < 1e-10 * umax) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(ImP);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > 1e12)
      throw IllPosedSector("sector transform ill-posed", omega);
  }
  const Eigen::MatrixXcd S =
      (Eigen::MatrixXcd::Identity(n, n) + P) * lu.inverse();
  if (!S.allFinite()) return kIllPosedValue;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S);
  return svd.singularValues().maxCoeff();
}

double ConstraintEngine::sigmaSect(const Eigen::VectorXd& chi,
                                   const Eigen::VectorXd& kappa,
                                   double omega) const {
  const FactorValues f = multiplier_.factors(chi, omega);
  const Eigen::MatrixXcd G = closedResponse(kappa, omega);
  if (!G.allFinite()) return kIllPosedValue;
  return sigmaOfP(assembleP(f, G), omega);
}

double ConstraintEngine::sigmaSectLimit(const Eigen::VectorXd& chi,
                                        const Eigen::VectorXd& kappa) const {
  const FactorValues f = multiplier_.factorsLimit(chi);
  const Eigen::MatrixXcd G = closedResponseLimit(kappa);
  return sigmaOfP(assembleP(f, G),
                  std::numeric_limits<double>::infinity());
}

std::vector<Eigen::VectorXd> ConstraintEngine::sigmaSectGradients(
    const Eigen::VectorXd& chi, const Eigen::VectorXd& kappa, double omega,
    bool at_infinity, bool* clustered) const {
  const int nchi = chiLen();
  const int nkap = kappaLen();
  const FactorValues f = at_infinity ? multiplier_.factorsLimit(chi)
                                     : multiplier_.factors(chi, omega);
  const Eigen::MatrixXcd G = at_infinity ? closedResponseLimit(kappa)
                                         : closedResponse(kappa, omega);
  const Eigen::MatrixXcd P = assembleP(f, G);
  const int n = static_cast<int>(P.rows());
  const Eigen::MatrixXcd ImP = Eigen::MatrixXcd::Identity(n, n) - P;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(ImP);
  const Eigen::MatrixXcd S =
      (Eigen::MatrixXcd::Identity(n, n) + P) * lu.inverse();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(S, Eigen::ComputeThinU |
                                                Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double s1 = sv(0);

  int cluster = 1;
  while (cluster < sv.size() && s1 - sv(cluster) <= 1e-9 * std::max(s1, 1.0))
    ++cluster;
  cluster = std::min(cluster, 3);
  if (clustered) *clustered = cluster > 1;

  const int npw = plant_.np + plant_.nw;
  const int nqz = plant_.nq + plant_.nz;

  // Controller frequency data for the kappa part of the chain rule.
  Eigen::MatrixXcd L, R;
  KFreq kf;
  const bool with_ctrl = !controller_.empty() && nkap > 0;
  if (with_ctrl) {
    const auto it = std::lower_bound(omegas_.begin(), omegas_.end(), omega);
    Eigen::MatrixXcd Gopen;
    if (at_infinity) {
      Gopen = plant_.sys.D.cast<cd>();
    } else if (it != omegas_.end() && *it == omega) {
      Gopen = open_cache_[static_cast<size_t>(it - omegas_.begin())];
    } else {
      Gopen = openResponse(omega);
    }
    const StateSpaceSystem K = controller_.realize(kappa);
    kf = controllerFreq(K, omega, at_infinity);
    const auto G12 = Gopen.topRightCorner(nqz, plant_.nu);
    const auto G21 = Gopen.bottomLeftCorner(plant_.ny, npw);
    const auto G22 = Gopen.bottomRightCorner(plant_.ny, plant_.nu);
    const Eigen::MatrixXcd Iy =
        Eigen::MatrixXcd::Identity(plant_.ny, plant_.ny);
    const Eigen::MatrixXcd Iu =
        Eigen::MatrixXcd::Identity(plant_.nu, plant_.nu);
    L = G12 * (Iu - kf.K * G22).partialPivLu().inverse();
    R = (Iy - G22 * kf.K).partialPivLu().solve(G21);
  }

  std::vector<Eigen::VectorXd> grads;
  grads.reserve(cluster);
  for (int ci = 0; ci < cluster; ++ci) {
    const Eigen::VectorXcd u = svd.matrixU().col(ci);
    const Eigen::VectorXcd v = svd.matrixV().col(ci);
    // d sigma = Re(u^H (I+S) dP (I-P)^{-1} v) = Re(a^H dP b).
    const Eigen::VectorXcd a =
        (Eigen::MatrixXcd::Identity(n, n) + S).adjoint() * u;
    const Eigen::VectorXcd b = lu.solve(v);
    const Eigen::VectorXcd a1 = a.head(npw), a2 = a.tail(n - npw);
    const Eigen::VectorXcd b1 = b.head(npw);
    const Eigen::VectorXcd w1 = G * b1;  // in C^{nqz}

    Eigen::VectorXd g = Eigen::VectorXd::Zero(nchi + nkap);
    for (int k = 0; k < nchi; ++k) {
      const FactorValues df = at_infinity
                                  ? multiplier_.factorDerivsLimit(chi, k)
                                  : multiplier_.factorDerivs(chi, omega, k);
      const cd val = a1.dot(df.phi * w1 + df.psi * b1) + a2.dot(df.sigma * w1);
      g(k) = std::real(val);
    }
    if (with_ctrl) {
      // dG = L dK R; fold the multiplier factors into c = phi^H a1 + sigma^H a2.
      const Eigen::VectorXcd c = f.phi.adjoint() * a1 + f.sigma.adjoint() * a2;
      const Eigen::VectorXcd lc = L.adjoint() * c;   // C^{nu}
      const Eigen::VectorXcd rb = R * b1;            // C^{ny}
      const Eigen::RowVectorXcd urow = lc.adjoint() * kf.CPhi;  // 1 x nK
      const Eigen::VectorXcd vcol = kf.PhiB * rb;               // nK x 1
      int j = nchi;
      const auto& st = controller_;
      for (int r = 0; r < st.order; ++r)
        for (int col = 0; col < st.order; ++col)
          if (st.maskA(r, col)) g(j++) = std::real(urow(r) * vcol(col));
      for (int r = 0; r < st.order; ++r)
        for (int col = 0; col < st.ny; ++col)
          if (st.maskB(r, col)) g(j++) = std::real(urow(r) * rb(col));
      for (int r = 0; r < st.nu; ++r)
        for (int col = 0; col < st.order; ++col)
          if (st.maskC(r, col))
            g(j++) = std::real(std::conj(lc(r)) * vcol(col));
      for (int r = 0; r < st.nu; ++r)
        for (int col = 0; col < st.ny; ++col)
          if (st.maskD(r, col)) g(j++) = std::real(std::conj(lc(r)) * rb(col));
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

ConstraintEval ConstraintEngine::constraintSup(const Eigen::VectorXd& chi,
                                               const Eigen::VectorXd& kappa,
                                               bool want_subgradients) const {
  const int n = static_cast<int>(omegas_.size());
  std::vector<double> vals(n);
  for (int i = 0; i < n; ++i) {
    const FactorValues f = multiplier_.factors(chi, omegas_[i]);
    Eigen::MatrixXcd G;
    if (controller_.empty()) {
      G = open_cache_[i].topLeftCorner(plant_.nq + plant_.nz,
                                       plant_.np + plant_.nw);
    } else {
      const StateSpaceSystem K = controller_.realize(kappa);
      const KFreq kf = controllerFreq(K, omegas_[i], false);
      G = lftLowerResponse(open_cache_[i], plant_.ny, plant_.nu, kf.K);
    }
    if (!G.allFinite()) {
      vals[i] = kIllPosedValue;
      continue;
    }
    vals[i] = sigmaOfP(assembleP(f, G), omegas_[i]);
  }

  // Local maxima (plateau-tolerant), boundaries included.
  std::vector<int> peaks;
  for (int i = 0; i < n; ++i) {
    const double left = (i > 0) ? vals[i - 1] : -1.0;
    const double right = (i + 1 < n) ? vals[i + 1] : -1.0;
    if (vals[i] >= left && vals[i] >= right) peaks.push_back(i);
  }
  std::sort(peaks.begin(), peaks.end(),
            [&vals](int a, int b) { return vals[a] > vals[b]; });
  if (static_cast<int>(peaks.size()) > grid_.peak_count)
    peaks.resize(grid_.peak_count);

  double sup = *std::max_element(vals.begin(), vals.end());
  std::vector<ActiveFrequency> refined;
  for (int idx : peaks) {
    const double lo = std::log(omegas_[std::max(idx - 1, 0)]);
    const double hi = std::log(omegas_[std::min(idx + 1, n - 1)]);
    // Golden-section maximization on the log axis.
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = sigmaSect(chi, kappa, std::exp(x1));
    double f2 = sigmaSect(chi, kappa, std::exp(x2));
    while (b - a > grid_.refine_rel_tol) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + gr * (b - a);
        f2 = sigmaSect(chi, kappa, std::exp(x2));
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - gr * (b - a);
        f1 = sigmaSect(chi, kappa, std::exp(x1));
      }
    }
    ActiveFrequency af;
    af.omega = std::exp(0.5 * (a + b));
    af.sigma = std::max({f1, f2, vals[idx]});
    // Keep the grid point when refinement did not improve on it.
    if (vals[idx] >= af.sigma) af.omega = omegas_[idx];
    refined.push_back(af);
    sup = std::max(sup, af.sigma);
  }

  ConstraintEval out;
  out.sigma_at_infinity = sigmaSectLimit(chi, kappa);
  // The asymptotic point only reports genuine violation; the constraint is
  // posed over finite frequencies and approaches 1 from below structurally
  // whenever the performance channel is strictly proper.
  const bool inf_active = out.sigma_at_infinity > 1.0 + 1e-9 &&
                          out.sigma_at_infinity > sup;
  if (inf_active) sup = out.sigma_at_infinity;
  out.value = sup;

  for (const auto& af : refined) {
    if (af.sigma >= sup * (1.0 - grid_.activity_rel_tol))
      out.active.push_back(af);
  }
  if (inf_active) {
    ActiveFrequency af;
    af.omega = std::numeric_limits<double>::infinity();
    af.sigma = out.sigma_at_infinity;
    out.active.push_back(af);
  }
  // Highest value first; deterministic tie-break on omega.
  std::sort(out.active.begin(), out.active.end(),
            [](const ActiveFrequency& a, const ActiveFrequency& b) {
              if (a.sigma != b.sigma) return a.sigma > b.sigma;
              return a.omega < b.omega;
            });
  if (out.active.empty()) {
    // Flat sweep with no refined peak above tolerance: fall back to argmax.
    const int arg = static_cast<int>(
        std::max_element(vals.begin(), vals.end()) - vals.begin());
    ActiveFrequency af;
    af.omega = omegas_[arg];
    af.sigma = vals[arg];
    out.active.push_back(af);
  }

  if (want_subgradients) {
    for (auto& af : out.active) {
      const bool at_inf = std::isinf(af.omega);
      bool cl = false;
      af.subgradients = sigmaSectGradients(chi, kappa, af.omega, at_inf, &cl);
      af.clustered = cl;
    }
  }
  return out;
}

double ConstraintEngine::fdiResidualAt(const Eigen::VectorXd& chi,
                                       const Eigen::VectorXd& kappa,
                                       double omega) const {
  const FactorValues f = multiplier_.factors(chi, omega);
  return fdiResidual(f, closedResponse(kappa, omega));
}

Eigen::MatrixXd ConstraintEngine::closedLoopA(
    const Eigen::VectorXd& kappa) const {
  if (controller_.empty()) return plant_.sys.A;
  const StateSpaceSystem K = controller_.realize(kappa);
  const int nG = plant_.sys.order(), nK = K.order();
  const auto Bu = plant_.sys.B.rightCols(plant_.nu);
  const auto Cy = plant_.sys.C.bottomRows(plant_.ny);
  const auto Dyu = plant_.sys.D.bottomRightCorner(plant_.ny, plant_.nu);
  const Eigen::MatrixXd M =
      (Eigen::MatrixXd::Identity(plant_.nu, plant_.nu) - K.D * Dyu)
          .partialPivLu()
          .inverse();
  Eigen::MatrixXd A(nG + nK, nG + nK);
  A.topLeftCorner(nG, nG) = plant_.sys.A + Bu * M * K.D * Cy;
  A.topRightCorner(nG, nK) = Bu * M * K.C;
  A.bottomLeftCorner(nK, nG) = K.B * (Cy + Dyu * M * K.D * Cy);
  A.bottomRightCorner(nK, nK) = K.A + K.B * Dyu * M * K.C;
  return A;
}

double ConstraintEngine::spectralAbscissa(const Eigen::VectorXd& kappa) const {
  const Eigen::MatrixXd A = closedLoopA(kappa);
  if (A.rows() == 0) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXcd ev = A.eigenvalues();
  double alpha = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < ev.size(); ++i) alpha = std::max(alpha, ev(i).real());
  return alpha;
}

std::vector<Eigen::VectorXd> ConstraintEngine::abscissaSubgradients(
    const Eigen::VectorXd& kappa, double* alpha_out) const {
  const int nchi = chiLen();
  const int nkap = kappaLen();
  const Eigen::MatrixXd A = closedLoopA(kappa);
  std::vector<Eigen::VectorXd> grads;
  if (A.rows() == 0 || nkap == 0) {
    if (alpha_out) *alpha_out = spectralAbscissa(kappa);
    return grads;
  }
  Eigen::EigenSolver<Eigen::MatrixXd> es(A);
  Eigen::EigenSolver<Eigen::MatrixXd> esT(A.transpose());
  const Eigen::VectorXcd ev = es.eigenvalues();
  double alpha = ev(0).real();
  for (int i = 1; i < ev.size(); ++i) alpha = std::max(alpha, ev(i).real());
  if (alpha_out) *alpha_out = alpha;

  const StateSpaceSystem K = controller_.realize(kappa);
  const int nG = plant_.sys.order(), nK = K.order();
  const auto Bu = plant_.sys.B.rightCols(plant_.nu);
  const auto Cy = plant_.sys.C.bottomRows(plant_.ny);
  const auto Dyu = plant_.sys.D.bottomRightCorner(plant_.ny, plant_.nu);
  const Eigen::MatrixXd M =
      (Eigen::MatrixXd::Identity(plant_.nu, plant_.nu) - K.D * Dyu)
          .partialPivLu()
          .inverse();

  const double tol = 1e-9 * std::max(1.0, std::abs(alpha));
  for (int i = 0; i < ev.size(); ++i) {
    if (alpha - ev(i).real() > tol) continue;
    if (ev(i).imag() < 0.0) continue;  // conjugate gives the same gradient
    const Eigen::VectorXcd v = es.eigenvectors().col(i);
    // Left eigenvector: conjugate of the A^T eigenvector at lambda-bar.
    int jbest = 0;
    double dbest = std::numeric_limits<double>::max();
    for (int j = 0; j < ev.size(); ++j) {
      const double d = std::abs(esT.eigenvalues()(j) - std::conj(ev(i)));
      if (d < dbest) {
        dbest = d;
        jbest = j;
      }
    }
    const Eigen::VectorXcd w = esT.eigenvectors().col(jbest).conjugate();
    const cd wv = w.dot(v);  // w^H v
    if (std::abs(wv) < 1e-12) continue;  // near-defective; skip

    // Split the vectors over (plant, controller) states.
    const Eigen::VectorXcd vG = v.head(nG), vK = v.tail(nK);
    const Eigen::VectorXcd wG = w.head(nG), wK = w.tail(nK);

    // Common complex row/col folds so each entry gradient is O(1).
    const Eigen::RowVectorXcd wBuM = (wG.adjoint() * Bu) * M;
    const Eigen::RowVectorXcd wKDyuM = (wK.adjoint() * K.B * Dyu) * M;
    const Eigen::VectorXcd Cyv = Cy * vG;
    const Eigen::VectorXcd MDkCyv = M * (K.D * Cyv);
    const Eigen::VectorXcd MCkv = M * (K.C * vK);

    Eigen::VectorXd g = Eigen::VectorXd::Zero(nchi + nkap);
    int j = nchi;
    const auto& st = controller_;
    for (int r = 0; r < st.order; ++r)
      for (int c = 0; c < st.order; ++c)
        if (st.maskA(r, c))
          g(j++) = std::real(std::conj(wK(r)) * vK(c) / wv);
    for (int r = 0; r < st.order; ++r)
      for (int c = 0; c < st.ny; ++c)
        if (st.maskB(r, c)) {
          // dA21 = E (I + Dyu M Dk) Cy, dA22 = E Dyu M Ck.
          const cd term = std::conj(wK(r)) *
                          (Cyv(c) + (Dyu * MDkCyv)(c) + (Dyu * MCkv)(c));
          g(j++) = std::real(term / wv);
        }
    for (int r = 0; r < st.nu; ++r)
      for (int c = 0; c < st.order; ++c)
        if (st.maskC(r, c)) {
          const cd term = (wBuM(r) + wKDyuM(r)) * vK(c);
          g(j++) = std::real(term / wv);
        }
    for (int r = 0; r < st.nu; ++r)
      for (int c = 0; c < st.ny; ++c)
        if (st.maskD(r, c)) {
          // dM = M E Dyu M enters through every M; group by rows/cols.
          const cd direct = (wBuM(r) + wKDyuM(r)) * Cyv(c);
          const cd through =
              (wBuM(r) + wKDyuM(r)) * ((Dyu * MDkCyv)(c) + (Dyu * MCkv)(c));
          g(j++) = std::real((direct + through) / wv);
        }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace robh2
