#include "robh2/multiplier.hpp"

#include <cmath>

namespace robh2 {

namespace {
using cd = std::complex<double>;

FactorValues placeBlocks(const std::vector<FactorValues>& parts) {
  int q = 0, p = 0, r = 0;
  for (const auto& f : parts) {
    q += static_cast<int>(f.sigma.cols());
    p += static_cast<int>(f.phi.rows());
    r += static_cast<int>(f.sigma.rows());
  }
  FactorValues out;
  out.sigma = Eigen::MatrixXcd::Zero(r, q);
  out.phi = Eigen::MatrixXcd::Zero(p, q);
  out.psi = Eigen::MatrixXcd::Zero(p, p);
  int qo = 0, po = 0, ro = 0;
  for (const auto& f : parts) {
    const int nq = static_cast<int>(f.sigma.cols());
    const int np = static_cast<int>(f.phi.rows());
    const int nr = static_cast<int>(f.sigma.rows());
    out.sigma.block(ro, qo, nr, nq) = f.sigma;
    out.phi.block(po, qo, np, nq) = f.phi;
    out.psi.block(po, po, np, np) = f.psi;
    qo += nq;
    po += np;
    ro += nr;
  }
  return out;
}

class H2PerformanceAtom : public MultiplierAtom {
 public:
  H2PerformanceAtom(int nz, PoleResidueSum family)
      : nz_(nz), family_(family) {}

  int qDim() const override { return nz_; }
  int pDim() const override { return family_.size; }
  int sigmaRows() const override { return nz_; }
  int paramLen() const override { return family_.paramLen(); }
  std::string tag() const override { return "h2_performance"; }

  FactorValues eval(const Eigen::Ref<const Eigen::VectorXd>& chi,
                    double omega) const override {
    FactorValues f;
    f.sigma = Eigen::MatrixXcd::Identity(nz_, nz_);
    f.phi = Eigen::MatrixXcd::Zero(family_.size, nz_);
    f.psi = -family_.eval(chi, omega);
    return f;
  }

  FactorValues evalDeriv(const Eigen::Ref<const Eigen::VectorXd>& chi,
                         double omega, int k) const override {
    FactorValues f = zero();
    f.psi = -family_.evalDeriv(chi, omega, k);
    return f;
  }

  FactorValues evalLimit(
      const Eigen::Ref<const Eigen::VectorXd>&) const override {
    FactorValues f = zero();
    f.sigma = Eigen::MatrixXcd::Identity(nz_, nz_);
    return f;
  }

  FactorValues evalDerivLimit(const Eigen::Ref<const Eigen::VectorXd>&,
                              int) const override {
    return zero();
  }

  std::vector<int> objectiveDiagIndices() const override {
    return family_.diagXIndices();
  }
  std::vector<int> poleAlphaIndices() const override {
    return family_.alphaIndices();
  }
  std::vector<int> poleBIndices() const override { return family_.bIndices(); }

 private:
  FactorValues zero() const {
    return {Eigen::MatrixXcd::Zero(nz_, nz_),
            Eigen::MatrixXcd::Zero(family_.size, nz_),
            Eigen::MatrixXcd::Zero(family_.size, family_.size)};
  }
  int nz_;
  PoleResidueSum family_;
};

class DynamicDAtom : public MultiplierAtom {
 public:
  explicit DynamicDAtom(PoleResidueSum family) : family_(family) {}

  int qDim() const override { return family_.size; }
  int pDim() const override { return family_.size; }
  int sigmaRows() const override { return family_.size; }
  int paramLen() const override { return family_.paramLen(); }
  std::string tag() const override { return "lti_re_dr_dynamic"; }

  FactorValues eval(const Eigen::Ref<const Eigen::VectorXd>& chi,
                    double omega) const override {
    const Eigen::MatrixXcd D = family_.eval(chi, omega);
    FactorValues f;
    f.sigma = D;
    f.phi = Eigen::MatrixXcd::Zero(family_.size, family_.size);
    f.psi = -0.5 * D.adjoint() * D;
    return f;
  }

  FactorValues evalDeriv(const Eigen::Ref<const Eigen::VectorXd>& chi,
                         double omega, int k) const override {
    const Eigen::MatrixXcd D = family_.eval(chi, omega);
    const Eigen::MatrixXcd dD = family_.evalDeriv(chi, omega, k);
    FactorValues f;
    f.sigma = dD;
    f.phi = Eigen::MatrixXcd::Zero(family_.size, family_.size);
    f.psi = -0.5 * (dD.adjoint() * D + D.adjoint() * dD);
    return f;
  }

  FactorValues evalLimit(
      const Eigen::Ref<const Eigen::VectorXd>&) const override {
    const int m = family_.size;
    return {Eigen::MatrixXcd::Zero(m, m), Eigen::MatrixXcd::Zero(m, m),
            Eigen::MatrixXcd::Zero(m, m)};
  }

  FactorValues evalDerivLimit(const Eigen::Ref<const Eigen::VectorXd>& chi,
                              int) const override {
    return evalLimit(chi);
  }
  std::vector<int> poleAlphaIndices() const override {
    return family_.alphaIndices();
  }
  std::vector<int> poleBIndices() const override { return family_.bIndices(); }

 private:
  PoleResidueSum family_;
};

class ConstantDWAtom : public MultiplierAtom {
 public:
  explicit ConstantDWAtom(int k) : k_(k) {}

  int qDim() const override { return k_; }
  int pDim() const override { return k_; }
  int sigmaRows() const override { return k_; }
  int paramLen() const override { return k_ * k_ + k_ * (k_ - 1) / 2; }
  std::string tag() const override { return "ltv_re_dr_constant"; }

  Eigen::MatrixXd Dmat(const Eigen::Ref<const Eigen::VectorXd>& chi) const {
    Eigen::MatrixXd D(k_, k_);
    for (int r = 0; r < k_; ++r)
      for (int c = 0; c < k_; ++c) D(r, c) = chi(r * k_ + c);
    return D;
  }

  Eigen::MatrixXd Wmat(const Eigen::Ref<const Eigen::VectorXd>& chi) const {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(k_, k_);
    int idx = k_ * k_;
    for (int r = 0; r < k_; ++r)
      for (int c = r + 1; c < k_; ++c) {
        W(r, c) = chi(idx);
        W(c, r) = -chi(idx);
        ++idx;
      }
    return W;
  }

  FactorValues eval(const Eigen::Ref<const Eigen::VectorXd>& chi,
                    double) const override {
    const Eigen::MatrixXd D = Dmat(chi);
    FactorValues f;
    f.sigma = D.cast<cd>();
    f.phi = Wmat(chi).cast<cd>();
    f.psi = (-0.5 * D.transpose() * D).cast<cd>();
    return f;
  }

  FactorValues evalDeriv(const Eigen::Ref<const Eigen::VectorXd>& chi,
                         double, int k) const override {
    FactorValues f;
    f.sigma = Eigen::MatrixXcd::Zero(k_, k_);
    f.phi = Eigen::MatrixXcd::Zero(k_, k_);
    f.psi = Eigen::MatrixXcd::Zero(k_, k_);
    if (k < k_ * k_) {
      const int r = k / k_, c = k % k_;
      Eigen::MatrixXd E = Eigen::MatrixXd::Zero(k_, k_);
      E(r, c) = 1.0;
      const Eigen::MatrixXd D = Dmat(chi);
      f.sigma = E.cast<cd>();
      f.psi = (-0.5 * (E.transpose() * D + D.transpose() * E)).cast<cd>();
    } else {
      int idx = k_ * k_;
      for (int r = 0; r < k_; ++r)
        for (int c = r + 1; c < k_; ++c) {
          if (idx == k) {
            f.phi(r, c) = 1.0;
            f.phi(c, r) = -1.0;
          }
          ++idx;
        }
    }
    return f;
  }

  FactorValues evalLimit(
      const Eigen::Ref<const Eigen::VectorXd>& chi) const override {
    return eval(chi, 0.0);
  }

  FactorValues evalDerivLimit(const Eigen::Ref<const Eigen::VectorXd>& chi,
                              int k) const override {
    return evalDeriv(chi, 0.0, k);
  }

 private:
  int k_;
};

class DelayCoverAtom : public MultiplierAtom {
 public:
  DelayCoverAtom(double tau_max, PoleResidueSum family)
      : tau_max_(tau_max), family_(family) {}

  int qDim() const override { return 1; }
  int pDim() const override { return 1; }
  int sigmaRows() const override { return 1; }
  int paramLen() const override { return family_.paramLen(); }
  std::string tag() const override { return "ltv_rb_td_cover"; }

  FactorValues eval(const Eigen::Ref<const Eigen::VectorXd>& chi,
                    double omega) const override {
    const cd d = family_.eval(chi, omega)(0, 0);
    const cd w = delayCoverWeight(tau_max_, omega);
    FactorValues f;
    f.sigma = Eigen::MatrixXcd::Constant(1, 1, w * d);
    f.phi = Eigen::MatrixXcd::Zero(1, 1);
    f.psi = Eigen::MatrixXcd::Constant(1, 1, -0.5 * std::norm(d));
    return f;
  }

  FactorValues evalDeriv(const Eigen::Ref<const Eigen::VectorXd>& chi,
                         double omega, int k) const override {
    const cd d = family_.eval(chi, omega)(0, 0);
    const cd dd = family_.evalDeriv(chi, omega, k)(0, 0);
    const cd w = delayCoverWeight(tau_max_, omega);
    FactorValues f;
    f.sigma = Eigen::MatrixXcd::Constant(1, 1, w * dd);
    f.phi = Eigen::MatrixXcd::Zero(1, 1);
    f.psi = Eigen::MatrixXcd::Constant(1, 1, -std::real(std::conj(d) * dd));
    return f;
  }

  FactorValues evalLimit(
      const Eigen::Ref<const Eigen::VectorXd>&) const override {
    return {Eigen::MatrixXcd::Zero(1, 1), Eigen::MatrixXcd::Zero(1, 1),
            Eigen::MatrixXcd::Zero(1, 1)};
  }

  FactorValues evalDerivLimit(const Eigen::Ref<const Eigen::VectorXd>& chi,
                              int) const override {
    return evalLimit(chi);
  }
  std::vector<int> poleAlphaIndices() const override {
    return family_.alphaIndices();
  }
  std::vector<int> poleBIndices() const override { return family_.bIndices(); }

 private:
  double tau_max_;
  PoleResidueSum family_;
};

}  // namespace

Multiplier::Multiplier(std::vector<std::shared_ptr<const MultiplierAtom>> atoms,
                       Eigen::VectorXd chi0)
    : atoms_(std::move(atoms)), chi0_(std::move(chi0)) {
  int len = 0;
  for (const auto& a : atoms_) len += a->paramLen();
  if (len != chi0_.size())
    throw DimensionMismatch("multiplier parameter vector has wrong length");
}

int Multiplier::qDim() const {
  int n = 0;
  for (const auto& a : atoms_) n += a->qDim();
  return n;
}

int Multiplier::pDim() const {
  int n = 0;
  for (const auto& a : atoms_) n += a->pDim();
  return n;
}

int Multiplier::sigmaRows() const {
  int n = 0;
  for (const auto& a : atoms_) n += a->sigmaRows();
  return n;
}

std::string Multiplier::structureTag() const {
  std::string s;
  for (const auto& a : atoms_) {
    if (!s.empty()) s += "+";
    s += a->tag();
  }
  return s.empty() ? "empty" : s;
}

FactorValues Multiplier::factors(const Eigen::Ref<const Eigen::VectorXd>& chi,
                                 double omega) const {
  std::vector<FactorValues> parts;
  parts.reserve(atoms_.size());
  int off = 0;
  for (const auto& a : atoms_) {
    parts.push_back(a->eval(chi.segment(off, a->paramLen()), omega));
    off += a->paramLen();
  }
  return placeBlocks(parts);
}

FactorValues Multiplier::factorDerivs(
    const Eigen::Ref<const Eigen::VectorXd>& chi, double omega, int k) const {
  std::vector<FactorValues> parts;
  parts.reserve(atoms_.size());
  int off = 0;
  for (const auto& a : atoms_) {
    const int len = a->paramLen();
    if (k >= off && k < off + len) {
      parts.push_back(a->evalDeriv(chi.segment(off, len), omega, k - off));
    } else {
      parts.push_back({Eigen::MatrixXcd::Zero(a->sigmaRows(), a->qDim()),
                       Eigen::MatrixXcd::Zero(a->pDim(), a->qDim()),
                       Eigen::MatrixXcd::Zero(a->pDim(), a->pDim())});
    }
    off += len;
  }
  return placeBlocks(parts);
}

FactorValues Multiplier::factorsLimit(
    const Eigen::Ref<const Eigen::VectorXd>& chi) const {
  std::vector<FactorValues> parts;
  parts.reserve(atoms_.size());
  int off = 0;
  for (const auto& a : atoms_) {
    parts.push_back(a->evalLimit(chi.segment(off, a->paramLen())));
    off += a->paramLen();
  }
  return placeBlocks(parts);
}

FactorValues Multiplier::factorDerivsLimit(
    const Eigen::Ref<const Eigen::VectorXd>& chi, int k) const {
  std::vector<FactorValues> parts;
  parts.reserve(atoms_.size());
  int off = 0;
  for (const auto& a : atoms_) {
    const int len = a->paramLen();
    if (k >= off && k < off + len) {
      parts.push_back(a->evalDerivLimit(chi.segment(off, len), k - off));
    } else {
      parts.push_back({Eigen::MatrixXcd::Zero(a->sigmaRows(), a->qDim()),
                       Eigen::MatrixXcd::Zero(a->pDim(), a->qDim()),
                       Eigen::MatrixXcd::Zero(a->pDim(), a->pDim())});
    }
    off += len;
  }
  return placeBlocks(parts);
}

Eigen::MatrixXcd Multiplier::assembled(
    const Eigen::Ref<const Eigen::VectorXd>& chi, double omega) const {
  return assembleMultiplier(factors(chi, omega));
}

std::vector<int> Multiplier::objectiveDiagIndices() const {
  std::vector<int> idx;
  int off = 0;
  for (const auto& a : atoms_) {
    for (int k : a->objectiveDiagIndices()) idx.push_back(off + k);
    off += a->paramLen();
  }
  return idx;
}

std::vector<int> Multiplier::poleAlphaIndices() const {
  std::vector<int> idx;
  int off = 0;
  for (const auto& a : atoms_) {
    for (int k : a->poleAlphaIndices()) idx.push_back(off + k);
    off += a->paramLen();
  }
  return idx;
}

std::vector<int> Multiplier::poleBIndices() const {
  std::vector<int> idx;
  int off = 0;
  for (const auto& a : atoms_) {
    for (int k : a->poleBIndices()) idx.push_back(off + k);
    off += a->paramLen();
  }
  return idx;
}

int Multiplier::atomOffset(int i) const {
  int off = 0;
  for (int j = 0; j < i; ++j) off += atoms_[static_cast<size_t>(j)]->paramLen();
  return off;
}

Multiplier compose(const Multiplier& a, const Multiplier& b) {
  std::vector<std::shared_ptr<const MultiplierAtom>> atoms = a.atoms();
  for (const auto& atom : b.atoms()) atoms.push_back(atom);
  Eigen::VectorXd chi(a.paramLen() + b.paramLen());
  chi << a.defaultParams(), b.defaultParams();
  return Multiplier(std::move(atoms), std::move(chi));
}

Eigen::MatrixXcd assembleMultiplier(const FactorValues& f) {
  const int nq = static_cast<int>(f.sigma.cols());
  const int np = static_cast<int>(f.phi.rows());
  Eigen::MatrixXcd Pi(nq + np, nq + np);
  Pi.topLeftCorner(nq, nq) = f.sigma.adjoint() * f.sigma;
  Pi.topRightCorner(nq, np) = f.phi.adjoint();
  Pi.bottomLeftCorner(np, nq) = f.phi;
  Pi.bottomRightCorner(np, np) = f.psi + f.psi.adjoint();
  return Pi;
}

Multiplier makeH2Performance(const YParam& y, int nz) {
  y.validate();
  auto atom = std::make_shared<const H2PerformanceAtom>(nz, y.family);
  return Multiplier({atom}, y.raw);
}

Multiplier makeLtvReDrConstant(const Eigen::MatrixXd& D,
                               const Eigen::VectorXd& w_upper) {
  const int k = static_cast<int>(D.rows());
  if (D.cols() != k) throw DimensionMismatch("D must be square");
  if (w_upper.size() != k * (k - 1) / 2)
    throw DimensionMismatch("W upper triangle has wrong length");
  Eigen::VectorXd chi(k * k + k * (k - 1) / 2);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) chi(r * k + c) = D(r, c);
  chi.tail(w_upper.size()) = w_upper;
  auto atom = std::make_shared<const ConstantDWAtom>(k);
  return Multiplier({atom}, std::move(chi));
}

Multiplier makeLtiReDrDynamic(int size, int terms,
                              const Eigen::VectorXd& chi_d) {
  PoleResidueSum family{terms, size};
  if (chi_d.size() != family.paramLen())
    throw DimensionMismatch("dynamic D parameter vector has wrong length");
  family.validatePoles(chi_d);
  auto atom = std::make_shared<const DynamicDAtom>(family);
  return Multiplier({atom}, chi_d);
}

Multiplier makeDelayCovering(double tau_max, int terms,
                             const Eigen::VectorXd& chi_d) {
  if (!(tau_max > 0.0))
    throw DimensionMismatch("delay covering requires tau_max > 0");
  PoleResidueSum family{terms, 1};
  if (chi_d.size() != family.paramLen())
    throw DimensionMismatch("delay scaling parameter vector has wrong length");
  auto atom = std::make_shared<const DelayCoverAtom>(tau_max, family);
  return Multiplier({atom}, chi_d);
}

std::complex<double> delayCoverWeight(double tau_max, double omega) {
  const cd u(0.0, tau_max * omega);
  return 2.1 * u * (u + 2.0) / (u * u + 2.4 * u + 4.0);
}

double iqcPointwise(const Multiplier& pi, double omega,
                    const Eigen::VectorXcd& qhat,
                    const Eigen::VectorXcd& phat) {
  if (qhat.size() != pi.qDim() || phat.size() != pi.pDim())
    throw DimensionMismatch("IQC signal dimensions do not match multiplier");
  Eigen::VectorXcd v(qhat.size() + phat.size());
  v << qhat, phat;
  const Eigen::MatrixXcd Pi = pi.assembled(omega);
  return std::real(std::complex<double>(v.adjoint() * Pi * v));
}

}  // namespace robh2
