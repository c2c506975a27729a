#include "robh2/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>

namespace robh2 {

StateSpaceSystem::StateSpaceSystem(Eigen::MatrixXd A_, Eigen::MatrixXd B_,
                                   Eigen::MatrixXd C_, Eigen::MatrixXd D_)
    : A(std::move(A_)), B(std::move(B_)), C(std::move(C_)), D(std::move(D_)) {
  if (A.rows() != A.cols()) throw DimensionMismatch("A must be square");
  if (B.rows() != A.rows()) throw DimensionMismatch("B rows must match A");
  if (C.cols() != A.rows()) throw DimensionMismatch("C cols must match A");
  if (D.rows() != C.rows() || D.cols() != B.cols())
    throw DimensionMismatch("D must be conformable with B and C");
}

StateSpaceSystem StateSpaceSystem::gain(const Eigen::MatrixXd& D) {
  const int p = static_cast<int>(D.rows());
  const int m = static_cast<int>(D.cols());
  return StateSpaceSystem(Eigen::MatrixXd::Zero(0, 0),
                          Eigen::MatrixXd::Zero(0, m),
                          Eigen::MatrixXd::Zero(p, 0), D);
}

StateSpaceSystem StateSpaceSystem::fromTransfer(const Eigen::VectorXd& num,
                                                const Eigen::VectorXd& den) {
  if (den.size() == 0 || den(0) == 0.0)
    throw DimensionMismatch("denominator leading coefficient must be nonzero");
  if (num.size() > den.size())
    throw DimensionMismatch("transfer function must be proper");
  const int n = static_cast<int>(den.size()) - 1;
  // Monic denominator, numerator padded to the same length.
  Eigen::VectorXd a = den / den(0);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n + 1);
  b.tail(num.size()) = num / den(0);

  if (n == 0) return gain(Eigen::MatrixXd::Constant(1, 1, b(0)));

  // Controllable canonical form.
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  A.topRightCorner(n - 1, n - 1).setIdentity();
  for (int i = 0; i < n; ++i) A(n - 1, i) = -a(n - i);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
  B(n - 1, 0) = 1.0;
  Eigen::MatrixXd C(1, n);
  const double d = b(0);
  for (int i = 0; i < n; ++i) C(0, i) = b(n - i) - d * a(n - i);
  return StateSpaceSystem(A, B, C, Eigen::MatrixXd::Constant(1, 1, d));
}

StateSpaceSystem blockDiag(const StateSpaceSystem& s1,
                           const StateSpaceSystem& s2) {
  const int n1 = s1.order(), n2 = s2.order();
  const int m1 = s1.inputs(), m2 = s2.inputs();
  const int p1 = s1.outputs(), p2 = s2.outputs();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n1 + n2, n1 + n2);
  A.topLeftCorner(n1, n1) = s1.A;
  A.bottomRightCorner(n2, n2) = s2.A;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n1 + n2, m1 + m2);
  B.topLeftCorner(n1, m1) = s1.B;
  B.bottomRightCorner(n2, m2) = s2.B;
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(p1 + p2, n1 + n2);
  C.topLeftCorner(p1, n1) = s1.C;
  C.bottomRightCorner(p2, n2) = s2.C;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(p1 + p2, m1 + m2);
  D.topLeftCorner(p1, m1) = s1.D;
  D.bottomRightCorner(p2, m2) = s2.D;
  return StateSpaceSystem(A, B, C, D);
}

Eigen::MatrixXcd freqResponse(const StateSpaceSystem& sys, double omega) {
  const int n = sys.order();
  if (n == 0) return sys.D.cast<std::complex<double>>();
  const std::complex<double> jw(0.0, omega);
  Eigen::MatrixXcd M =
      jw * Eigen::MatrixXcd::Identity(n, n) - sys.A.cast<std::complex<double>>();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
  Eigen::MatrixXcd X = lu.solve(sys.B.cast<std::complex<double>>());
  const double bnorm = sys.B.norm();
  if (bnorm > 0.0) {
    const double resid = (M * X - sys.B.cast<std::complex<double>>()).norm();
    // NaN-safe: a singular solve must not slip through the comparison.
    if (!(resid <= 1e-8 * bnorm))
      throw NearSingularResolvent("resolvent solve inaccurate at omega = " +
                                  std::to_string(omega));
  }
  return sys.C.cast<std::complex<double>>() * X +
         sys.D.cast<std::complex<double>>();
}

Stability checkStability(const StateSpaceSystem& sys, double eps_stab) {
  if (sys.order() == 0)
    return {true, -std::numeric_limits<double>::infinity()};
  Eigen::VectorXcd ev = sys.A.eigenvalues();
  double alpha = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < ev.size(); ++i) alpha = std::max(alpha, ev(i).real());
  return {alpha < -eps_stab, alpha};
}

namespace {

// Squared Frobenius norm of the frequency response.
double responsePower(const StateSpaceSystem& sys, double omega) {
  return freqResponse(sys, omega).squaredNorm();
}

template <typename F>
double adaptiveSimpson(const F& f, double a, double b, double fa, double fm,
                       double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptiveSimpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptiveSimpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double h2Norm(const StateSpaceSystem& sys) {
  if (sys.D.cwiseAbs().maxCoeff() != 0.0)
    throw InfiniteH2("direct feedthrough makes the H2 norm infinite");
  const Stability st = checkStability(sys);
  if (!st.stable)
    throw UnstableSystem("H2 norm requires a stable system (abscissa " +
                         std::to_string(st.spectral_abscissa) + ")");
  if (sys.order() == 0) return 0.0;

  const double wmin = 1e-4, wmax = 1e5;
  // Integrate f(w) = tr(H^H H) over [0, inf); response is conjugate
  // symmetric so the full-line integral is twice the half-line one.
  const auto f = [&sys](double w) { return responsePower(sys, w); };

  // Head [0, wmin]: the integrand is flat at this scale.
  const double head = 0.5 * (f(0.0) + f(wmin)) * wmin;

  // Log-domain adaptive Simpson over [wmin, wmax], seeded piecewise so
  // narrow resonances are not stepped over.
  const auto g = [&f](double t) {
    const double w = std::exp(t);
    return f(w) * w;
  };
  const double t0 = std::log(wmin), t1 = std::log(wmax);
  const int seed_segments = 96;
  double body = 0.0;
  double scale = std::max(f(0.0) * wmin, 1e-300);
  for (int k = 0; k < seed_segments; ++k) {
    const double a = t0 + (t1 - t0) * k / seed_segments;
    const double b = t0 + (t1 - t0) * (k + 1) / seed_segments;
    const double ga = g(a), gb = g(b), gm = g(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (ga + 4.0 * gm + gb);
    body += adaptiveSimpson(g, a, b, ga, gm, gb, whole,
                            1e-8 * scale / seed_segments + 1e-14, 42);
  }

  // Tail: fit f ~ c w^-q between wmax/4 and wmax, integrate analytically.
  const double fW = f(wmax);
  double tail = 0.0;
  if (fW > 0.0) {
    const double fQ = f(wmax / 4.0);
    double q = (fQ > 0.0) ? std::log(fQ / fW) / std::log(4.0) : 2.0;
    q = std::min(std::max(q, 1.5), 12.0);
    tail = fW * wmax / (q - 1.0);
  }

  const double integral = (head + body + tail) / M_PI;
  return std::sqrt(std::max(integral, 0.0));
}

StateSpaceSystem padeDelay(double tau, int order) {
  if (tau < 0.0) throw DimensionMismatch("delay must be nonnegative");
  if (order < 1) throw DimensionMismatch("Pade order must be >= 1");
  if (tau == 0.0) return StateSpaceSystem::gain(Eigen::MatrixXd::Identity(1, 1));

  // Diagonal [n/n] Pade of exp(-x): N(-x)/N(x) with
  // N(x) = sum_k n!(2n-k)! / ((2n)! k! (n-k)!) x^k.
  const int n = order;
  Eigen::VectorXd c(n + 1);
  c(0) = 1.0;
  for (int k = 1; k <= n; ++k)
    c(k) = c(k - 1) * static_cast<double>(n - k + 1) /
           (static_cast<double>(k) * (2.0 * n - k + 1.0));
  // Coefficients in s, highest power first: x = tau*s.
  Eigen::VectorXd num(n + 1), den(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double pk = c(k) * std::pow(tau, k);
    den(n - k) = pk;
    num(n - k) = (k % 2 == 0) ? pk : -pk;
  }
  return StateSpaceSystem::fromTransfer(num, den);
}

}  // namespace robh2
