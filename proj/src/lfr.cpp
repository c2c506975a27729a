#include "robh2/lfr.hpp"

#include <Eigen/SVD>

namespace robh2 {

std::string toString(UncertaintyClass c) {
  switch (c) {
    case UncertaintyClass::LtiReDr: return "lti_re_dr";
    case UncertaintyClass::LtvReDr: return "ltv_re_dr";
    case UncertaintyClass::LtvRbTd: return "ltv_rb_td";
  }
  return "?";
}

UncertaintyClass uncertaintyClassFromString(const std::string& s) {
  if (s == "lti_re_dr") return UncertaintyClass::LtiReDr;
  if (s == "ltv_re_dr") return UncertaintyClass::LtvReDr;
  if (s == "ltv_rb_td") return UncertaintyClass::LtvRbTd;
  throw SchemaError("unknown uncertainty class '" + s + "'");
}

void UncertaintyBlock::validate() const {
  if (dim < 1) throw DimensionMismatch("uncertainty block dim must be >= 1");
  if (bound < 0.0)
    throw DimensionMismatch("uncertainty block bound must be >= 0");
}

void LfrPlant::validate() const {
  if (np < 0 || nw < 0 || nu < 0 || nq < 0 || nz < 0 || ny < 0)
    throw DimensionMismatch("channel widths must be nonnegative");
  if (np + nw + nu != sys.inputs())
    throw DimensionMismatch("input partition does not match system inputs");
  if (nq + nz + ny != sys.outputs())
    throw DimensionMismatch("output partition does not match system outputs");
  int p = 0;
  for (const auto& b : blocks) {
    b.validate();
    p += b.dim;
  }
  if (p != np || p != nq)
    throw DimensionMismatch("sum of block dims must equal (np, nq)");
}

namespace {

// Closes the trailing (y_rows, u_cols) channels of G with u = K y.
StateSpaceSystem closeTrailing(const StateSpaceSystem& G, int y_rows,
                               int u_cols, const StateSpaceSystem& K) {
  if (K.inputs() != y_rows || K.outputs() != u_cols)
    throw DimensionMismatch("controller dimensions do not match loop channels");
  const int m1 = G.inputs() - u_cols;   // retained inputs
  const int p1 = G.outputs() - y_rows;  // retained outputs
  if (m1 < 0 || p1 < 0)
    throw DimensionMismatch("loop channels exceed system dimensions");
  const int nG = G.order(), nK = K.order();

  const auto B1 = G.B.leftCols(m1), B2 = G.B.rightCols(u_cols);
  const auto C1 = G.C.topRows(p1), C2 = G.C.bottomRows(y_rows);
  const auto D11 = G.D.topLeftCorner(p1, m1);
  const auto D12 = G.D.topRightCorner(p1, u_cols);
  const auto D21 = G.D.bottomLeftCorner(y_rows, m1);
  const auto D22 = G.D.bottomRightCorner(y_rows, u_cols);

  // u = M (C_K x_K + D_K y_open), M = (I - D_K D22)^{-1}.
  Eigen::MatrixXd L =
      Eigen::MatrixXd::Identity(u_cols, u_cols) - K.D * D22;
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(L);
    const double smin = svd.singularValues().minCoeff();
    const double smax = svd.singularValues().maxCoeff();
    if (smin <= 0.0 || smax / smin > 1e12)
      throw IllPosedLoop("feedthrough loop I - D_yu D_K is singular");
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
  const Eigen::MatrixXd M = lu.inverse();

  const Eigen::MatrixXd MDk = M * K.D;
  const Eigen::MatrixXd MCk = M * K.C;

  Eigen::MatrixXd A(nG + nK, nG + nK);
  A.topLeftCorner(nG, nG) = G.A + B2 * MDk * C2;
  A.topRightCorner(nG, nK) = B2 * MCk;
  A.bottomLeftCorner(nK, nG) = K.B * (C2 + D22 * MDk * C2);
  A.bottomRightCorner(nK, nK) = K.A + K.B * D22 * MCk;

  Eigen::MatrixXd B(nG + nK, m1);
  B.topRows(nG) = B1 + B2 * MDk * D21;
  B.bottomRows(nK) = K.B * (D21 + D22 * MDk * D21);

  Eigen::MatrixXd C(p1, nG + nK);
  C.leftCols(nG) = C1 + D12 * MDk * C2;
  C.rightCols(nK) = D12 * MCk;

  Eigen::MatrixXd D = D11 + D12 * MDk * D21;
  return StateSpaceSystem(A, B, C, D);
}

// Moves the first (rows, cols) channels of G to the end.
StateSpaceSystem rotateLeadingToTrailing(const StateSpaceSystem& G, int rows,
                                         int cols) {
  const int p = G.outputs(), m = G.inputs();
  Eigen::MatrixXd C(p, G.order()), D(p, m);
  C.topRows(p - rows) = G.C.bottomRows(p - rows);
  C.bottomRows(rows) = G.C.topRows(rows);
  Eigen::MatrixXd Dr(p, m);
  Dr.topRows(p - rows) = G.D.bottomRows(p - rows);
  Dr.bottomRows(rows) = G.D.topRows(rows);
  Eigen::MatrixXd B(G.order(), m);
  B.leftCols(m - cols) = G.B.rightCols(m - cols);
  B.rightCols(cols) = G.B.leftCols(cols);
  D.leftCols(m - cols) = Dr.rightCols(m - cols);
  D.rightCols(cols) = Dr.leftCols(cols);
  return StateSpaceSystem(G.A, B, C, D);
}

}  // namespace

StateSpaceSystem lftLower(const StateSpaceSystem& G, const StateSpaceSystem& K) {
  return closeTrailing(G, K.inputs(), K.outputs(), K);
}

StateSpaceSystem lftLower(const LfrPlant& G, const StateSpaceSystem& K) {
  if (K.inputs() != G.ny || K.outputs() != G.nu)
    throw DimensionMismatch("controller does not match (y, u) channel widths");
  return closeTrailing(G.sys, G.ny, G.nu, K);
}

StateSpaceSystem lftUpper(const StateSpaceSystem& G, const StateSpaceSystem& delta) {
  const StateSpaceSystem rotated =
      rotateLeadingToTrailing(G, delta.inputs(), delta.outputs());
  return closeTrailing(rotated, delta.inputs(), delta.outputs(), delta);
}

StateSpaceSystem lftUpper(const LfrPlant& G, const StateSpaceSystem& delta) {
  if (delta.inputs() != G.nq || delta.outputs() != G.np)
    throw DimensionMismatch("uncertainty does not match (q, p) channel widths");
  return lftUpper(G.sys, delta);
}

Eigen::MatrixXcd lftLowerResponse(const Eigen::MatrixXcd& G, int ny, int nu,
                                  const Eigen::MatrixXcd& K) {
  const int p1 = static_cast<int>(G.rows()) - ny;
  const int m1 = static_cast<int>(G.cols()) - nu;
  if (p1 < 0 || m1 < 0 || K.rows() != nu || K.cols() != ny)
    throw DimensionMismatch("frequency-level LFT dimensions mismatch");
  if (nu == 0 || ny == 0) return G.topLeftCorner(p1, m1);
  const auto G11 = G.topLeftCorner(p1, m1);
  const auto G12 = G.topRightCorner(p1, nu);
  const auto G21 = G.bottomLeftCorner(ny, m1);
  const auto G22 = G.bottomRightCorner(ny, nu);
  Eigen::MatrixXcd L = Eigen::MatrixXcd::Identity(ny, ny) - G22 * K;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(L);
  return G11 + G12 * K * lu.solve(G21);
}

}  // namespace robh2
