#pragma once

// Text, CSV and JSON renderings of analysis, design and simulation results.
// CSV and JSON carry the same fields; numbers use '.' as decimal separator
// and 10 significant digits regardless of the global locale.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "goldsci/design.hpp"
#include "goldsci/sci.hpp"
#include "goldsci/simulate.hpp"

namespace goldsci::report {

std::string format_number(double x);

enum class Format { Text, Csv, Json };
Format parse_format(std::string_view name);

struct AnalysisRow {
  SciResult sci;
  SuccessOutcome outcome;
};

struct Analysis {
  std::string variance_mode;  // "known-sigma" or "pooled"
  double iu_filter_threshold;  // z (se_EP - se_ER) + delta0, on X_R - X_P
  double superiority_threshold;  // z se_RP, on X_R - X_P
  std::vector<AnalysisRow> rows;
};

Analysis analyze_trial(const TrialData& trial, const DesignParams& params, std::span<const Method> methods);
void write_analysis(std::ostream& os, const Analysis& a, Format f);

struct DesignRow {
  std::string scenario;
  OptimizationResult result;
};
void write_design(std::ostream& os, std::span<const DesignRow> rows, Format f);

void write_simulation(std::ostream& os, std::span<const SimulationSummary> rows, Format f);

}  // namespace goldsci::report
