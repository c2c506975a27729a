#include "robh2/json_io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace robh2 {

namespace {
using nlohmann::json;

json matrixToJson(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrixFromJson(const json& j, const std::string& path) {
  if (!j.is_array())
    throw SchemaError(path + ": expected an array of rows");
  const int rows = static_cast<int>(j.size());
  int cols = -1;
  Eigen::MatrixXd M;
  for (int r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array())
      throw SchemaError(path + "[" + std::to_string(r) + "]: expected a row array");
    if (cols < 0) {
      cols = static_cast<int>(row.size());
      M.resize(rows, cols);
    }
    if (static_cast<int>(row.size()) != cols)
      throw SchemaError(path + "[" + std::to_string(r) + "]: ragged row");
    for (int c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw SchemaError(path + "[" + std::to_string(r) + "][" +
                          std::to_string(c) + "]: expected a number");
      const double v = row[c].get<double>();
      if (!std::isfinite(v))
        throw SchemaError(path + "[" + std::to_string(r) + "][" +
                          std::to_string(c) + "]: matrix entries must be finite");
      M(r, c) = v;
    }
  }
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  return M;
}

json vectorToJson(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vectorFromJson(const json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path + ": expected an array");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number())
      throw SchemaError(path + "[" + std::to_string(i) + "]: expected a number");
    v(static_cast<int>(i)) = j[i].get<double>();
  }
  return v;
}

const json& require(const json& j, const std::string& key,
                    const std::string& path) {
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(path + ": missing field '" + key + "'");
  return *it;
}

double requireNumber(const json& j, const std::string& key,
                     const std::string& path, double fallback,
                     bool optional = false) {
  const auto it = j.find(key);
  if (it == j.end()) {
    if (optional) return fallback;
    throw SchemaError(path + ": missing field '" + key + "'");
  }
  if (!it->is_number())
    throw SchemaError(path + "." + key + ": expected a number");
  return it->get<double>();
}

Eigen::VectorXd defaultFamilyParams(int terms, int size) {
  PoleResidueSum fam{terms, size};
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(fam.paramLen());
  for (int t = 0; t < terms; ++t) {
    const int off = t * fam.termLen();
    for (int r = 0; r < size; ++r) chi(off + r * size + r) = 1.0;
    chi(off + 2 * size * size) = 0.3 * t;
  }
  return chi;
}

Multiplier multiplierForBlock(const UncertaintyBlock& b, int order) {
  switch (b.cls) {
    case UncertaintyClass::LtiReDr:
      return makeLtiReDrDynamic(b.dim, order, defaultFamilyParams(order, b.dim));
    case UncertaintyClass::LtvReDr:
      return makeLtvReDrConstant(
          Eigen::MatrixXd::Identity(b.dim, b.dim),
          Eigen::VectorXd::Zero(b.dim * (b.dim - 1) / 2));
    case UncertaintyClass::LtvRbTd:
      return makeDelayCovering(b.bound, order, defaultFamilyParams(order, 1));
  }
  throw SchemaError("unknown uncertainty class");
}

json controllerToJson(const ControllerStructure& st) {
  json j;
  j["order"] = st.order;
  if (st.empty()) {
    j["mask"] = "none";
    return j;
  }
  const bool all_free = st.kappaLen() ==
                        st.order * st.order + st.order * st.ny +
                            st.nu * st.order + st.nu * st.ny;
  if (all_free) {
    j["mask"] = "full";
  } else if (st.kappaLen() == 0) {
    j["mask"] = "none";
    j["K"] = {{"A", matrixToJson(st.baseA)},
              {"B", matrixToJson(st.baseB)},
              {"C", matrixToJson(st.baseC)},
              {"D", matrixToJson(st.baseD)}};
  } else {
    auto maskJson = [](const Eigen::Matrix<bool, Eigen::Dynamic,
                                           Eigen::Dynamic>& m) {
      json rows = json::array();
      for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
      }
      return rows;
    };
    j["mask"] = {{"A", maskJson(st.maskA)},
                 {"B", maskJson(st.maskB)},
                 {"C", maskJson(st.maskC)},
                 {"D", maskJson(st.maskD)}};
  }
  return j;
}

Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> maskFromJson(
    const json& j, int rows, int cols, const std::string& path) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows)
    throw SchemaError(path + ": expected " + std::to_string(rows) + " rows");
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != cols)
      throw SchemaError(path + "[" + std::to_string(r) + "]: expected " +
                        std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) m(r, c) = j[r][c].get<bool>();
  }
  return m;
}

}  // namespace

json problemToJson(const SynthesisProblem& p) {
  json j;
  j["schema_version"] = 1;
  j["plant"] = {{"A", matrixToJson(p.plant.sys.A)},
                {"B", matrixToJson(p.plant.sys.B)},
                {"C", matrixToJson(p.plant.sys.C)},
                {"D", matrixToJson(p.plant.sys.D)},
                {"dims",
                 {{"np", p.plant.np},
                  {"nw", p.plant.nw},
                  {"nu", p.plant.nu},
                  {"nq", p.plant.nq},
                  {"nz", p.plant.nz},
                  {"ny", p.plant.ny}}}};
  json unc = json::array();
  for (size_t i = 0; i < p.plant.blocks.size(); ++i) {
    const auto& b = p.plant.blocks[i];
    json e = {{"class", toString(b.cls)}, {"dim", b.dim}, {"bound", b.bound}};
    // Persist the multiplier order for pole-residue based blocks.
    const auto& m = p.block_multipliers[i];
    if (!m.poleAlphaIndices().empty())
      e["order"] = static_cast<int>(m.poleAlphaIndices().size());
    unc.push_back(std::move(e));
  }
  j["uncertainty"] = unc;
  json zch = json::array(), wch = json::array();
  for (int i = 0; i < p.plant.nz; ++i) zch.push_back(i);
  for (int i = 0; i < p.plant.nw; ++i) wch.push_back(i);
  j["performance"] = {{"type", "h2"},
                      {"z_channels", zch},
                      {"w_channels", wch},
                      {"Y", {{"N", p.performance.terms()},
                             {"size", p.performance.size()}}}};
  j["controller"] = controllerToJson(p.controller);
  j["solver"] = {{"starts", p.options.starts},
                 {"seed", p.options.seed},
                 {"max_iter", p.options.max_iter},
                 {"tol_stat", p.options.tol_stat},
                 {"eps_feas", p.options.eps_feas},
                 {"grid",
                  {{"wmin", p.options.grid.wmin},
                   {"wmax", p.options.grid.wmax},
                   {"points", p.options.grid.points}}}};
  return j;
}

SynthesisProblem problemFromJson(const json& j) {
  if (!j.is_object()) throw SchemaError("problem file: expected an object");
  const int version = j.contains("schema_version")
                          ? j["schema_version"].get<int>()
                          : 1;
  if (version != 1)
    throw SchemaError("schema_version " + std::to_string(version) +
                      " not supported");

  SynthesisProblem p;
  const json& jp = require(j, "plant", "problem");
  const json& dims = require(jp, "dims", "plant");
  p.plant.np = static_cast<int>(requireNumber(dims, "np", "plant.dims", 0));
  p.plant.nw = static_cast<int>(requireNumber(dims, "nw", "plant.dims", 0));
  p.plant.nu = static_cast<int>(requireNumber(dims, "nu", "plant.dims", 0));
  p.plant.nq = static_cast<int>(requireNumber(dims, "nq", "plant.dims", 0));
  p.plant.nz = static_cast<int>(requireNumber(dims, "nz", "plant.dims", 0));
  p.plant.ny = static_cast<int>(requireNumber(dims, "ny", "plant.dims", 0));
  try {
    p.plant.sys = StateSpaceSystem(matrixFromJson(require(jp, "A", "plant"), "plant.A"),
                                   matrixFromJson(require(jp, "B", "plant"), "plant.B"),
                                   matrixFromJson(require(jp, "C", "plant"), "plant.C"),
                                   matrixFromJson(require(jp, "D", "plant"), "plant.D"));
  } catch (const DimensionMismatch& e) {
    throw SchemaError(std::string("plant: ") + e.what());
  }

  if (j.contains("uncertainty")) {
    const json& ju = j["uncertainty"];
    if (!ju.is_array()) throw SchemaError("uncertainty: expected an array");
    for (size_t i = 0; i < ju.size(); ++i) {
      const std::string path = "uncertainty[" + std::to_string(i) + "]";
      const json& e = ju[i];
      UncertaintyBlock b;
      b.cls = uncertaintyClassFromString(
          require(e, "class", path).get<std::string>());
      b.dim = static_cast<int>(requireNumber(e, "dim", path, 1));
      b.bound = requireNumber(e, "bound", path, 1.0);
      const int order =
          static_cast<int>(requireNumber(e, "order", path, 1.0, true));
      if (order < 1) throw SchemaError(path + ".order: must be >= 1");
      b.validate();
      p.plant.blocks.push_back(b);
      p.block_multipliers.push_back(multiplierForBlock(b, order));
    }
  }

  const json& perf = require(j, "performance", "problem");
  if (require(perf, "type", "performance").get<std::string>() != "h2")
    throw SchemaError("performance.type: only 'h2' is supported");
  auto channelList = [](const json& e, const std::string& path, int width) {
    std::vector<int> ch;
    if (!e.is_array()) throw SchemaError(path + ": expected an array");
    for (const auto& v : e) {
      const int c = v.get<int>();
      if (c < 0 || c >= width)
        throw SchemaError(path + ": channel index out of range");
      ch.push_back(c);
    }
    return ch;
  };
  const auto zch = channelList(require(perf, "z_channels", "performance"),
                               "performance.z_channels", p.plant.nz);
  const auto wch = channelList(require(perf, "w_channels", "performance"),
                               "performance.w_channels", p.plant.nw);

  // Reduce the plant to the selected performance channels.
  if (static_cast<int>(zch.size()) != p.plant.nz ||
      static_cast<int>(wch.size()) != p.plant.nw) {
    const auto& s = p.plant.sys;
    Eigen::MatrixXd B(s.B.rows(),
                      p.plant.np + static_cast<int>(wch.size()) + p.plant.nu);
    Eigen::MatrixXd D1(s.D.rows(), B.cols());
    B.leftCols(p.plant.np) = s.B.leftCols(p.plant.np);
    D1.leftCols(p.plant.np) = s.D.leftCols(p.plant.np);
    for (size_t i = 0; i < wch.size(); ++i) {
      B.col(p.plant.np + static_cast<int>(i)) = s.B.col(p.plant.np + wch[i]);
      D1.col(p.plant.np + static_cast<int>(i)) = s.D.col(p.plant.np + wch[i]);
    }
    B.rightCols(p.plant.nu) = s.B.rightCols(p.plant.nu);
    D1.rightCols(p.plant.nu) = s.D.rightCols(p.plant.nu);
    const int outs = p.plant.nq + static_cast<int>(zch.size()) + p.plant.ny;
    Eigen::MatrixXd C(outs, s.C.cols()), D2(outs, D1.cols());
    C.topRows(p.plant.nq) = s.C.topRows(p.plant.nq);
    D2.topRows(p.plant.nq) = D1.topRows(p.plant.nq);
    for (size_t i = 0; i < zch.size(); ++i) {
      C.row(p.plant.nq + static_cast<int>(i)) = s.C.row(p.plant.nq + zch[i]);
      D2.row(p.plant.nq + static_cast<int>(i)) = D1.row(p.plant.nq + zch[i]);
    }
    C.bottomRows(p.plant.ny) = s.C.bottomRows(p.plant.ny);
    D2.bottomRows(p.plant.ny) = D1.bottomRows(p.plant.ny);
    p.plant.sys = StateSpaceSystem(s.A, B, C, D2);
    p.plant.nw = static_cast<int>(wch.size());
    p.plant.nz = static_cast<int>(zch.size());
  }

  const json& y = require(perf, "Y", "performance");
  const int N = static_cast<int>(requireNumber(y, "N", "performance.Y", 1));
  const int m = static_cast<int>(requireNumber(y, "size", "performance.Y", 1));
  if (N < 1 || m < 1) throw SchemaError("performance.Y: N and size must be >= 1");
  if (m != p.plant.nw)
    throw SchemaError("performance.Y.size must equal the number of w channels");
  p.performance = YParam::fromVector(N, m, defaultFamilyParams(N, m));

  const json& ctrl = require(j, "controller", "problem");
  const int order =
      static_cast<int>(requireNumber(ctrl, "order", "controller", 0));
  if (order < 0) throw SchemaError("controller.order: must be >= 0");
  const json& mask = require(ctrl, "mask", "controller");
  if (ctrl.contains("K")) {
    const json& k = ctrl["K"];
    StateSpaceSystem K(matrixFromJson(require(k, "A", "controller.K"), "controller.K.A"),
                       matrixFromJson(require(k, "B", "controller.K"), "controller.K.B"),
                       matrixFromJson(require(k, "C", "controller.K"), "controller.K.C"),
                       matrixFromJson(require(k, "D", "controller.K"), "controller.K.D"));
    if (K.inputs() != p.plant.ny || K.outputs() != p.plant.nu)
      throw SchemaError("controller.K: dimensions do not match (y, u)");
    p.controller = ControllerStructure::fixed(K);
  } else if (mask.is_string() && mask.get<std::string>() == "none") {
    if (p.plant.nu != 0 || p.plant.ny != 0)
      p.controller = ControllerStructure::fixed(StateSpaceSystem::gain(
          Eigen::MatrixXd::Zero(p.plant.nu, p.plant.ny)));
    else
      p.controller = ControllerStructure::none();
  } else if (mask.is_string() && mask.get<std::string>() == "full") {
    p.controller = ControllerStructure::full(order, p.plant.ny, p.plant.nu);
  } else if (mask.is_object()) {
    ControllerStructure st = ControllerStructure::full(order, p.plant.ny, p.plant.nu);
    st.maskA = maskFromJson(require(mask, "A", "controller.mask"), order, order,
                            "controller.mask.A");
    st.maskB = maskFromJson(require(mask, "B", "controller.mask"), order,
                            p.plant.ny, "controller.mask.B");
    st.maskC = maskFromJson(require(mask, "C", "controller.mask"), p.plant.nu,
                            order, "controller.mask.C");
    st.maskD = maskFromJson(require(mask, "D", "controller.mask"), p.plant.nu,
                            p.plant.ny, "controller.mask.D");
    p.controller = st;
  } else {
    throw SchemaError("controller.mask: expected 'full', 'none' or mask object");
  }

  if (j.contains("solver")) {
    const json& s = j["solver"];
    p.options.starts =
        static_cast<int>(requireNumber(s, "starts", "solver", 20, true));
    p.options.seed = static_cast<unsigned long long>(
        requireNumber(s, "seed", "solver", 0, true));
    p.options.max_iter =
        static_cast<int>(requireNumber(s, "max_iter", "solver", 500, true));
    p.options.tol_stat = requireNumber(s, "tol_stat", "solver", 1e-6, true);
    p.options.eps_feas = requireNumber(s, "eps_feas", "solver", 1e-6, true);
    if (s.contains("grid")) {
      const json& g = s["grid"];
      p.options.grid.wmin = requireNumber(g, "wmin", "solver.grid", 1e-4, true);
      p.options.grid.wmax = requireNumber(g, "wmax", "solver.grid", 1e5, true);
      p.options.grid.points =
          static_cast<int>(requireNumber(g, "points", "solver.grid", 400, true));
    }
  }

  try {
    p.validate();
  } catch (const DimensionMismatch& e) {
    throw SchemaError(std::string("problem validation: ") + e.what());
  }
  return p;
}

SynthesisProblem loadProblem(const std::string& uri) {
  if (uri.rfind("demo:", 0) == 0) {
    const std::string name = uri.substr(5);
    if (name == "paganini") return buildPaganiniSiso();
    if (name == "delaymiso") return buildDelayMiso(DenominatorReading::Corrected);
    if (name == "delaymiso-literal")
      return buildDelayMiso(DenominatorReading::Literal);
    if (name == "delaymiso-nominal") return buildDelayMisoNominal();
    throw SchemaError("unknown demo problem '" + name + "'");
  }
  std::ifstream in(uri);
  if (!in) throw SchemaError("cannot open problem file '" + uri + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError("parse error in '" + uri + "': " + e.what());
  }
  return problemFromJson(j);
}

json resultToJson(const SynthesisResult& r, const SynthesisProblem& problem,
                  double wall_s) {
  json j;
  j["schema_version"] = 1;
  j["status"] = toString(r.status);
  j["analysis_mode"] = r.analysis_mode;
  if (std::isfinite(r.gamma))
    j["gamma"] = r.gamma;
  else
    j["gamma"] = nullptr;
  j["trace_integral"] = r.trace_integral;
  j["constraint_value"] = r.constraint_value;
  j["fdi_margin"] = r.fdi_margin;
  j["chi"] = vectorToJson(r.chi);
  j["kappa"] = vectorToJson(r.kappa);
  j["K"] = {{"A", matrixToJson(r.K.A)},
            {"B", matrixToJson(r.K.B)},
            {"C", matrixToJson(r.K.C)},
            {"D", matrixToJson(r.K.D)}};
  json act = json::array();
  for (const auto& a : r.active) {
    json e;
    e["omega"] = std::isinf(a.omega) ? json(nullptr) : json(a.omega);
    e["sigma"] = a.sigma;
    act.push_back(std::move(e));
  }
  j["active_frequencies"] = act;
  json starts = json::array();
  for (const auto& s : r.start_logs) {
    json e = {{"start", s.start},
              {"iterations", s.iterations},
              {"stationarity", s.stationarity},
              {"constraint_value",
               std::isfinite(s.constraint_value) ? json(s.constraint_value)
                                                 : json(nullptr)},
              {"gamma", std::isfinite(s.gamma) ? json(s.gamma) : json(nullptr)},
              {"feasible", s.feasible}};
    if (!s.note.empty()) e["note"] = s.note;
    starts.push_back(std::move(e));
  }
  j["starts"] = starts;
  j["problem"] = problemToJson(problem);
  j["timing"] = {{"wall_s", wall_s}};
  return j;
}

SynthesisResult resultFromJson(const json& j, SynthesisProblem* problem_out) {
  SynthesisResult r;
  const std::string st = require(j, "status", "result").get<std::string>();
  if (st == "FEASIBLE")
    r.status = SolveStatus::Feasible;
  else if (st == "MARGINAL")
    r.status = SolveStatus::Marginal;
  else if (st == "INFEASIBLE")
    r.status = SolveStatus::Infeasible;
  else
    throw SchemaError("result.status: unknown value '" + st + "'");
  r.analysis_mode = j.value("analysis_mode", false);
  r.gamma = j.contains("gamma") && j["gamma"].is_number()
                ? j["gamma"].get<double>()
                : std::numeric_limits<double>::quiet_NaN();
  r.trace_integral = j.value("trace_integral", 0.0);
  r.constraint_value = j.value("constraint_value", 0.0);
  r.fdi_margin = j.value("fdi_margin", 0.0);
  r.chi = vectorFromJson(require(j, "chi", "result"), "result.chi");
  r.kappa = vectorFromJson(require(j, "kappa", "result"), "result.kappa");
  const json& k = require(j, "K", "result");
  r.K = StateSpaceSystem(matrixFromJson(require(k, "A", "result.K"), "result.K.A"),
                         matrixFromJson(require(k, "B", "result.K"), "result.K.B"),
                         matrixFromJson(require(k, "C", "result.K"), "result.K.C"),
                         matrixFromJson(require(k, "D", "result.K"), "result.K.D"));
  if (problem_out)
    *problem_out = problemFromJson(require(j, "problem", "result"));
  return r;
}

void writeTraceCsv(std::ostream& os, const ConstraintEngine& engine,
                   const SynthesisProblem& problem,
                   const SynthesisResult& result) {
  os << "omega,sigma_sect,fdi_residual,traceY\n";
  const int ylen = problem.performance.family.paramLen();
  const YParam y = YParam::fromVector(problem.performance.terms(),
                                      problem.performance.size(),
                                      result.chi.tail(ylen));
  for (double w : engine.baseOmegas()) {
    const double sigma = engine.sigmaSect(result.chi, result.kappa, w);
    const double fdi = engine.fdiResidualAt(result.chi, result.kappa, w);
    const double ty = std::real(y.evalY(w).trace());
    os << w << "," << sigma << "," << fdi << "," << ty << "\n";
  }
}

json reportToJson(const SampleReport& rep) {
  json j;
  j["schema_version"] = 1;
  j["worst"] = std::isfinite(rep.worst) ? json(rep.worst) : json(nullptr);
  j["mean"] = std::isfinite(rep.mean) ? json(rep.mean) : json(nullptr);
  j["gamma"] = std::isfinite(rep.gamma) ? json(rep.gamma) : json(nullptr);
  j["gap"] = std::isfinite(rep.gap) ? json(rep.gap) : json(nullptr);
  j["relative_gap"] =
      std::isfinite(rep.relative_gap) ? json(rep.relative_gap) : json(nullptr);
  j["any_unstable"] = rep.any_unstable;
  j["certificate_violation"] = rep.certificate_violation;
  j["note"] = rep.note;
  json entries = json::array();
  for (const auto& e : rep.entries) {
    entries.push_back({{"sample", e.description},
                       {"stable", e.stable},
                       {"h2", e.stable ? json(e.h2) : json(nullptr)}});
  }
  j["samples"] = entries;
  return j;
}

void writeReportCsv(std::ostream& os, const SampleReport& rep) {
  os << "sample,stable,h2\n";
  for (const auto& e : rep.entries) {
    os << "\"" << e.description << "\"," << (e.stable ? 1 : 0) << ",";
    if (e.stable)
      os << e.h2;
    os << "\n";
  }
}

}  // namespace robh2
