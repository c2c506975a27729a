#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "robh2/json_io.hpp"

namespace {

using namespace robh2;

struct CommonFlags {
  std::string uri;
  std::string out = "result.json";
  std::string export_csv;
  int starts = -1;
  long long seed = -1;
  int max_iter = -1;
  double tol = -1.0;
  double eps_feas = -1.0;
  std::string grid;
  int jobs = -1;
  std::string reading = "corrected";
};

void addCommon(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("problem", f.uri, "problem file or demo:<name>")->required();
  cmd->add_option("--out", f.out, "result JSON path");
  cmd->add_option("--export", f.export_csv, "per-frequency trace CSV path");
  cmd->add_option("--starts", f.starts, "number of random starts");
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_option("--max-iter", f.max_iter, "iteration cap per start");
  cmd->add_option("--tol", f.tol, "stationarity tolerance");
  cmd->add_option("--eps-feas", f.eps_feas, "feasibility margin");
  cmd->add_option("--grid", f.grid, "frequency grid wmin:wmax:points");
  cmd->add_option("--jobs", f.jobs, "parallel starts (0 = auto)");
  cmd->add_option("--denominator-reading", f.reading,
                  "delaymiso denominator reading: corrected|literal")
      ->check(CLI::IsMember({"corrected", "literal"}));
}

SynthesisProblem loadWithFlags(const CommonFlags& f) {
  std::string uri = f.uri;
  if (uri == "demo:delaymiso" && f.reading == "literal")
    uri = "demo:delaymiso-literal";
  SynthesisProblem p = loadProblem(uri);
  if (f.starts >= 0) {
    if (f.starts == 0) throw SchemaError("--starts must be positive");
    p.options.starts = f.starts;
  }
  if (f.seed >= 0)
    p.options.seed = static_cast<unsigned long long>(f.seed);
  if (f.max_iter >= 0) p.options.max_iter = f.max_iter;
  if (f.tol >= 0.0) p.options.tol_stat = f.tol;
  if (f.eps_feas >= 0.0) p.options.eps_feas = f.eps_feas;
  if (!f.grid.empty()) {
    const auto c1 = f.grid.find(':');
    const auto c2 = f.grid.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw SchemaError("--grid expects wmin:wmax:points");
    p.options.grid.wmin = std::stod(f.grid.substr(0, c1));
    p.options.grid.wmax = std::stod(f.grid.substr(c1 + 1, c2 - c1 - 1));
    p.options.grid.points = std::stoi(f.grid.substr(c2 + 1));
  }
  if (f.jobs >= 0) {
    p.options.jobs = f.jobs;
  } else if (const char* env = std::getenv("IQC_H2_JOBS")) {
    p.options.jobs = std::atoi(env);
  }
  return p;
}

void writeOutputs(const CommonFlags& f, const SynthesisProblem& p,
                  const SynthesisResult& r, double wall_s) {
  {
    std::ofstream out(f.out);
    if (!out) throw SchemaError("cannot write '" + f.out + "'");
    out << resultToJson(r, p, wall_s).dump(2) << "\n";
  }
  if (!f.export_csv.empty()) {
    ConstraintEngine eng(p.plant, p.augmented(), p.controller, p.options.grid);
    std::ofstream out(f.export_csv);
    if (!out) throw SchemaError("cannot write '" + f.export_csv + "'");
    writeTraceCsv(out, eng, p, r);
  }
}

void printSummary(const SynthesisResult& r) {
  std::cout << "status            " << toString(r.status) << "\n";
  if (std::isfinite(r.gamma))
    std::cout << "gamma             " << r.gamma << "\n";
  std::cout << "constraint value  " << r.constraint_value << "\n";
  std::cout << "fdi margin        " << r.fdi_margin << "\n";
  int feas = 0;
  for (const auto& s : r.start_logs) feas += s.feasible ? 1 : 0;
  std::cout << "feasible starts   " << feas << "/" << r.start_logs.size()
            << "\n";
}

int exitFor(const SynthesisResult& r) {
  if (r.status == SolveStatus::Feasible) return 0;
  if (r.status == SolveStatus::Marginal) {
    std::cerr << "warning: marginally infeasible solution (constraint "
              << r.constraint_value << "); certificate retained\n";
    return 1;
  }
  return 3;
}

int runAnalyze(const CommonFlags& f) {
  SynthesisProblem p = loadWithFlags(f);
  const auto t0 = std::chrono::steady_clock::now();
  SynthesisResult r = analyze(p);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  printSummary(r);
  writeOutputs(f, p, r, wall);
  return exitFor(r);
}

int runSynthesize(const CommonFlags& f, const std::string& hot_start,
                  double hot_perturb) {
  SynthesisProblem p = loadWithFlags(f);
  if (!hot_start.empty()) {
    std::ifstream in(hot_start);
    if (!in) throw SchemaError("cannot open hot-start file '" + hot_start + "'");
    nlohmann::json j = nlohmann::json::parse(in);
    SynthesisResult nominal = resultFromJson(j);
    p.options.hot_start = true;
    p.options.hot_kappa = p.controller.extract(nominal.K);
    p.options.hot_perturbation = hot_perturb;
  }
  const auto t0 = std::chrono::steady_clock::now();
  SynthesisResult r = synthesize(p);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  printSummary(r);
  writeOutputs(f, p, r, wall);
  return exitFor(r);
}

int runVerify(const std::string& result_path, int samples, long long seed,
              const std::string& out, const std::string& export_csv) {
  std::ifstream in(result_path);
  if (!in) throw SchemaError("cannot open result file '" + result_path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("parse error in '" + result_path + "': " + e.what());
  }
  SynthesisProblem p;
  SynthesisResult r = resultFromJson(j, &p);
  if (r.status == SolveStatus::Infeasible) {
    std::cerr << "result is INFEASIBLE; nothing to verify\n";
    return 2;
  }
  SampleSpec spec;
  std::vector<UncertaintySample> set =
      sampleUncertainty(p, spec, seed >= 0 ? seed : 0);
  if (samples > 0) {
    if (samples < static_cast<int>(set.size())) {
      set.resize(static_cast<size_t>(samples));
    } else if (samples > static_cast<int>(set.size())) {
      SampleSpec extra = spec;
      extra.random_samples = samples - static_cast<int>(set.size());
      auto full = sampleUncertainty(p, extra, seed >= 0 ? seed : 0);
      set = std::move(full);
    }
  }
  SampleReport rep = verifySamples(r, set);
  std::cout << "samples           " << rep.entries.size() << "\n";
  std::cout << "worst h2          " << rep.worst << "\n";
  std::cout << "mean h2           " << rep.mean << "\n";
  std::cout << "gamma             " << rep.gamma << "\n";
  std::cout << "gap               " << rep.gap << "\n";
  std::cout << "relative gap      " << rep.relative_gap << "\n";
  if (rep.any_unstable) std::cout << "flag              FAIL (unstable sample)\n";
  if (rep.certificate_violation)
    std::cout << "flag              CERTIFICATE_VIOLATION\n";
  if (!out.empty()) {
    std::ofstream o(out);
    if (!o) throw SchemaError("cannot write '" + out + "'");
    o << reportToJson(rep).dump(2) << "\n";
  }
  if (!export_csv.empty()) {
    std::ofstream o(export_csv);
    if (!o) throw SchemaError("cannot write '" + export_csv + "'");
    writeReportCsv(o, rep);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robust H2 certification and synthesis in the frequency domain"};
  app.require_subcommand(1);

  CommonFlags fa, fs;
  std::string hot_start;
  double hot_perturb = 0.1;
  std::string verify_result, verify_out, verify_csv;
  int verify_samples = 0;
  long long verify_seed = -1;

  CLI::App* analyze_cmd =
      app.add_subcommand("analyze", "certify a bound for a fixed controller");
  addCommon(analyze_cmd, fa);
  CLI::App* synth_cmd =
      app.add_subcommand("synthesize", "synthesize a structured controller");
  addCommon(synth_cmd, fs);
  synth_cmd->add_option("--hot-start", hot_start,
                        "result JSON whose controller seeds the starts");
  synth_cmd->add_option("--hot-perturb", hot_perturb,
                        "relative perturbation for hot starts");
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "sampled verification of a result");
  verify_cmd->add_option("result", verify_result, "result JSON path")
      ->required();
  verify_cmd->add_option("--samples", verify_samples,
                         "total sample count (grid + random fill)");
  verify_cmd->add_option("--seed", verify_seed, "random sample seed");
  verify_cmd->add_option("--out", verify_out, "report JSON path");
  verify_cmd->add_option("--export", verify_csv, "report CSV path");

  try {
    app.parse(argc, argv);
    if (analyze_cmd->parsed()) return runAnalyze(fa);
    if (synth_cmd->parsed()) return runSynthesize(fs, hot_start, hot_perturb);
    if (verify_cmd->parsed())
      return runVerify(verify_result, verify_samples, verify_seed, verify_out,
                       verify_csv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NoFeasibleMultiplier& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NoFeasibleStart& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  }
  return 2;
}
