#include "robh2/controller.hpp"

namespace robh2 {

namespace {
using BoolMat = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Fn>
void forEachMatrix(const ControllerStructure& s, Fn&& fn) {
  fn(s.maskA, s.baseA);
  fn(s.maskB, s.baseB);
  fn(s.maskC, s.baseC);
  fn(s.maskD, s.baseD);
}
}  // namespace

ControllerStructure ControllerStructure::full(int order, int ny, int nu) {
  ControllerStructure s;
  s.order = order;
  s.ny = ny;
  s.nu = nu;
  s.maskA = BoolMat::Constant(order, order, true);
  s.maskB = BoolMat::Constant(order, ny, true);
  s.maskC = BoolMat::Constant(nu, order, true);
  s.maskD = BoolMat::Constant(nu, ny, true);
  s.baseA = Eigen::MatrixXd::Zero(order, order);
  s.baseB = Eigen::MatrixXd::Zero(order, ny);
  s.baseC = Eigen::MatrixXd::Zero(nu, order);
  s.baseD = Eigen::MatrixXd::Zero(nu, ny);
  return s;
}

ControllerStructure ControllerStructure::none() { return full(0, 0, 0); }

ControllerStructure ControllerStructure::fixed(const StateSpaceSystem& K) {
  ControllerStructure s;
  s.order = K.order();
  s.ny = K.inputs();
  s.nu = K.outputs();
  s.maskA = BoolMat::Constant(s.order, s.order, false);
  s.maskB = BoolMat::Constant(s.order, s.ny, false);
  s.maskC = BoolMat::Constant(s.nu, s.order, false);
  s.maskD = BoolMat::Constant(s.nu, s.ny, false);
  s.baseA = K.A;
  s.baseB = K.B;
  s.baseC = K.C;
  s.baseD = K.D;
  return s;
}

int ControllerStructure::kappaLen() const {
  int n = 0;
  forEachMatrix(*this, [&n](const BoolMat& m, const Eigen::MatrixXd&) {
    n += static_cast<int>(m.cast<int>().sum());
  });
  return n;
}

StateSpaceSystem ControllerStructure::realize(
    const Eigen::VectorXd& kappa) const {
  if (kappa.size() != kappaLen())
    throw DimensionMismatch("kappa has wrong length for controller template");
  Eigen::MatrixXd A = baseA, B = baseB, C = baseC, D = baseD;
  int k = 0;
  auto fill = [&kappa, &k](const BoolMat& mask, Eigen::MatrixXd& M) {
    for (int r = 0; r < mask.rows(); ++r)
      for (int c = 0; c < mask.cols(); ++c)
        if (mask(r, c)) M(r, c) = kappa(k++);
  };
  fill(maskA, A);
  fill(maskB, B);
  fill(maskC, C);
  fill(maskD, D);
  return StateSpaceSystem(A, B, C, D);
}

Eigen::VectorXd ControllerStructure::extract(const StateSpaceSystem& K) const {
  if (K.order() != order || K.inputs() != ny || K.outputs() != nu)
    throw DimensionMismatch("controller does not conform to template");
  Eigen::VectorXd kappa(kappaLen());
  int k = 0;
  auto pick = [&kappa, &k](const BoolMat& mask, const Eigen::MatrixXd& M) {
    for (int r = 0; r < mask.rows(); ++r)
      for (int c = 0; c < mask.cols(); ++c)
        if (mask(r, c)) kappa(k++) = M(r, c);
  };
  pick(maskA, K.A);
  pick(maskB, K.B);
  pick(maskC, K.C);
  pick(maskD, K.D);
  return kappa;
}

void ControllerStructure::validate() const {
  if (order < 0 || ny < 0 || nu < 0)
    throw DimensionMismatch("controller dimensions must be nonnegative");
  if (maskA.rows() != order || maskA.cols() != order || baseA.rows() != order ||
      maskB.rows() != order || maskB.cols() != ny || maskC.rows() != nu ||
      maskC.cols() != order || maskD.rows() != nu || maskD.cols() != ny)
    throw DimensionMismatch("controller mask shapes are inconsistent");
}

}  // namespace robh2
