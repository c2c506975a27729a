#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "robh2/problems.hpp"

namespace robh2 {

/// Problem file schema (schema_version 1); see docs/formats.md.
nlohmann::json problemToJson(const SynthesisProblem& problem);
/// Throws SchemaError with a field path on validation failure.
SynthesisProblem problemFromJson(const nlohmann::json& j);

/// Resolves "demo:<name>" URIs to built-in problems, everything else as a
/// file path.
SynthesisProblem loadProblem(const std::string& uri);

nlohmann::json resultToJson(const SynthesisResult& result,
                            const SynthesisProblem& problem, double wall_s);
/// Rebuilds the result and (from the embedded echo) the problem.
SynthesisResult resultFromJson(const nlohmann::json& j,
                               SynthesisProblem* problem_out = nullptr);

/// Per-frequency trace "omega,sigma_sect,fdi_residual,traceY" over the
/// base grid at the result's parameters.
void writeTraceCsv(std::ostream& os, const ConstraintEngine& engine,
                   const SynthesisProblem& problem,
                   const SynthesisResult& result);

nlohmann::json reportToJson(const SampleReport& report);
void writeReportCsv(std::ostream& os, const SampleReport& report);

}  // namespace robh2
