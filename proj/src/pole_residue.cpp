#include "robh2/pole_residue.hpp"

#include <cmath>
#include <complex>

namespace robh2 {

namespace {
using cd = std::complex<double>;
}

Eigen::MatrixXd PoleResidueSum::Xi(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                   int i) const {
  const int m = size, off = i * termLen();
  Eigen::MatrixXd X(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) X(r, c) = chi(off + r * m + c);
  return X;
}

Eigen::MatrixXd PoleResidueSum::Zi(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                   int i) const {
  const int m = size, off = i * termLen() + m * m;
  Eigen::MatrixXd Z(m, m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) Z(r, c) = chi(off + r * m + c);
  return Z;
}

double PoleResidueSum::ai(const Eigen::Ref<const Eigen::VectorXd>& chi,
                          int i) const {
  return std::exp(chi(i * termLen() + 2 * size * size));
}

double PoleResidueSum::bi(const Eigen::Ref<const Eigen::VectorXd>& chi,
                          int i) const {
  return chi(i * termLen() + 2 * size * size + 1);
}

Eigen::MatrixXcd PoleResidueSum::eval(
    const Eigen::Ref<const Eigen::VectorXd>& chi, double omega) const {
  Eigen::MatrixXcd F = Eigen::MatrixXcd::Zero(size, size);
  for (int i = 0; i < terms; ++i) {
    const double a = ai(chi, i), b = bi(chi, i);
    const cd den(a * a + b * b - omega * omega, 2.0 * a * omega);
    const cd sa(a, omega);  // s + a at s = i omega
    F += (Xi(chi, i) * sa + Zi(chi, i) * b) / den;
  }
  return F;
}

Eigen::MatrixXcd PoleResidueSum::evalDeriv(
    const Eigen::Ref<const Eigen::VectorXd>& chi, double omega, int k) const {
  const int m = size, tl = termLen();
  const int i = k / tl, within = k % tl;
  const double a = ai(chi, i), b = bi(chi, i);
  const cd den(a * a + b * b - omega * omega, 2.0 * a * omega);
  const cd sa(a, omega);

  Eigen::MatrixXcd dF = Eigen::MatrixXcd::Zero(m, m);
  if (within < m * m) {
    dF(within / m, within % m) = sa / den;
  } else if (within < 2 * m * m) {
    const int e = within - m * m;
    dF(e / m, e % m) = b / den;
  } else if (within == 2 * m * m) {
    // d/d alpha = a * d/d a, with d(num)/da = X_i and d(den)/da = 2(s + a).
    const Eigen::MatrixXcd num = Xi(chi, i) * sa + Zi(chi, i) * b;
    dF = a * (Xi(chi, i).cast<cd>() / den - num * (2.0 * sa) / (den * den));
  } else {
    const Eigen::MatrixXcd num = Xi(chi, i) * sa + Zi(chi, i) * b;
    dF = Zi(chi, i).cast<cd>() / den - num * (2.0 * b) / (den * den);
  }
  return dF;
}

std::vector<int> PoleResidueSum::diagXIndices() const {
  std::vector<int> idx;
  for (int i = 0; i < terms; ++i)
    for (int r = 0; r < size; ++r) idx.push_back(i * termLen() + r * size + r);
  return idx;
}

std::vector<int> PoleResidueSum::alphaIndices() const {
  std::vector<int> idx;
  for (int i = 0; i < terms; ++i) idx.push_back(i * termLen() + 2 * size * size);
  return idx;
}

std::vector<int> PoleResidueSum::bIndices() const {
  std::vector<int> idx;
  for (int i = 0; i < terms; ++i)
    idx.push_back(i * termLen() + 2 * size * size + 1);
  return idx;
}

void PoleResidueSum::validatePoles(
    const Eigen::Ref<const Eigen::VectorXd>& chi, double tol) const {
  for (int i = 0; i < terms; ++i)
    for (int j = i + 1; j < terms; ++j) {
      if (std::abs(ai(chi, i) - ai(chi, j)) <= tol &&
          std::abs(std::abs(bi(chi, i)) - std::abs(bi(chi, j))) <= tol)
        throw DegeneratePoles("pole pairs " + std::to_string(i) + " and " +
                              std::to_string(j) + " coincide");
    }
}

YParam YParam::fromVector(int terms, int size, Eigen::VectorXd v) {
  YParam y;
  y.family = PoleResidueSum{terms, size};
  if (v.size() != y.family.paramLen())
    throw DimensionMismatch("YParam vector has wrong length");
  y.raw = std::move(v);
  return y;
}

YParam YParam::make(const std::vector<Eigen::MatrixXd>& X,
                    const std::vector<Eigen::MatrixXd>& Z,
                    const std::vector<double>& a,
                    const std::vector<double>& b) {
  const int N = static_cast<int>(X.size());
  if (N == 0 || Z.size() != X.size() || a.size() != X.size() ||
      b.size() != X.size())
    throw DimensionMismatch("YParam::make needs matching summand lists");
  const int m = static_cast<int>(X[0].rows());
  PoleResidueSum fam{N, m};
  Eigen::VectorXd v(fam.paramLen());
  for (int i = 0; i < N; ++i) {
    if (X[i].rows() != m || X[i].cols() != m || Z[i].rows() != m ||
        Z[i].cols() != m)
      throw DimensionMismatch("YParam matrices must be m x m");
    if (!(a[i] > 0.0)) throw DimensionMismatch("YParam requires a_i > 0");
    const int off = i * fam.termLen();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c) {
        v(off + r * m + c) = X[i](r, c);
        v(off + m * m + r * m + c) = Z[i](r, c);
      }
    v(off + 2 * m * m) = std::log(a[i]);
    v(off + 2 * m * m + 1) = b[i];
  }
  YParam y;
  y.family = fam;
  y.raw = std::move(v);
  y.validate();
  return y;
}

Eigen::MatrixXcd YParam::evalPsiY(double omega) const {
  return family.eval(raw, omega);
}

Eigen::MatrixXcd YParam::evalY(double omega) const {
  const Eigen::MatrixXcd p = evalPsiY(omega);
  return p + p.adjoint();
}

void YParam::validate() const { family.validatePoles(raw); }

double yTraceIntegral(const YParam& y) {
  double s = 0.0;
  for (int i = 0; i < y.terms(); ++i) s += y.family.Xi(y.raw, i).trace();
  return s;
}

Eigen::VectorXd yTraceIntegralGradient(const YParam& y) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(y.family.paramLen());
  for (int k : y.family.diagXIndices()) g(k) = 1.0;
  return g;
}

}  // namespace robh2
