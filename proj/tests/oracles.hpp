#pragma once

// Test-only oracles. These deliberately avoid the library's analytic paths
// so the tests check two independent routes.

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "robh2/pole_residue.hpp"
#include "robh2/state_space.hpp"

namespace oracles {

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

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptiveSimpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

/// (1/2pi) Int_{-inf}^{inf} tr Y(i w) dw by quadrature over a wide log grid
/// with a fitted power-law tail (numerical route of the trace-integral
/// identity).
inline double traceIntegralQuadrature(const robh2::YParam& y) {
  const auto f = [&y](double w) { return std::real(y.evalY(w).trace()); };
  const double wmin = 1e-5, wmax = 1e6;
  // Even integrand: full line = 2 * half line; (1/2pi) * 2 = 1/pi.
  const double head = 0.5 * (f(0.0) + f(wmin)) * wmin;
  const auto g = [&f](double t) {
    const double w = std::exp(t);
    return f(w) * w;
  };
  double body = 0.0;
  const double t0 = std::log(wmin), t1 = std::log(wmax);
  const int segments = 160;
  for (int k = 0; k < segments; ++k) {
    const double a = t0 + (t1 - t0) * k / segments;
    const double b = t0 + (t1 - t0) * (k + 1) / segments;
    body += integrate(g, a, b, 1e-10);
  }
  // tr Y decays like c / w^2 for this family.
  const double fW = f(wmax), fQ = f(wmax / 4.0);
  double tail = 0.0;
  if (fW != 0.0 && fQ * fW > 0.0) {
    double q = std::log(std::abs(fQ / fW)) / std::log(4.0);
    q = std::min(std::max(q, 1.5), 12.0);
    tail = fW * wmax / (q - 1.0);
  }
  return (head + body + tail) / M_PI;
}

/// Central finite differences of a scalar function.
inline Eigen::VectorXd finiteDifferenceGradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    Eigen::VectorXd xp = x, xm = x;
    const double hi = h * std::max(1.0, std::abs(x(i)));
    xp(i) += hi;
    xm(i) -= hi;
    g(i) = (f(xp) - f(xm)) / (2.0 * hi);
  }
  return g;
}

/// Random stable state-space system with the given dimensions.
inline robh2::StateSpaceSystem randomStableSystem(std::mt19937_64& rng, int n,
                                                  int m, int p,
                                                  bool strictly_proper = false) {
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd A(n, n), B(n, m), C(p, n), D(p, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = N(rng);
  // Shift until Hurwitz.
  for (int tries = 0; tries < 64; ++tries) {
    Eigen::VectorXcd ev = A.eigenvalues();
    double alpha = -1e300;
    for (int i = 0; i < n; ++i) alpha = std::max(alpha, ev(i).real());
    if (alpha < -0.1) break;
    A.diagonal().array() -= (alpha + 0.5);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) B(i, j) = N(rng);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < n; ++j) C(i, j) = N(rng);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < m; ++j) D(i, j) = strictly_proper ? 0.0 : 0.3 * N(rng);
  return robh2::StateSpaceSystem(A, B, C, D);
}

}  // namespace oracles
