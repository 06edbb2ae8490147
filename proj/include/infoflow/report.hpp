#pragma once

#include <string>

#include <json.hpp>

#include "infoflow/config.hpp"
#include "infoflow/flow.hpp"

namespace infoflow {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "1.0.0";

/// Deterministic JSON text: keys in insertion order, 2-space indent, arrays of
/// scalars on one line, floating-point values as %.17g, non-finite as null.
std::string dump_json(const Json& value);

/// A report in both machine-readable forms.
struct Report {
  Json json;
  std::string csv;

  std::string render(OutputFormat format) const;
};

/// Config echo as JSON; run.threads and the output block are omitted so the
/// report does not depend on them.
Json config_json(const AnalysisConfig& config);

Json trace_json(const FlowTrace& trace);
/// position,layer_0,...,layer_L with sets written as "[1 3]".
std::string trace_csv(const FlowTrace& trace);

Json cost_json(const CostReport& cost);
/// position,layer,rule,set_size,kappa,exponent
std::string cost_csv(const CostReport& cost);

/// The fixed input of the config, or the seeded sample with index 0.
Sequence reference_input(const AnalysisConfig& config);

/// Trees, flow, cost and estimator sections for one config; CSV carries the
/// reference cost table.
Report run_analysis(const AnalysisConfig& config);
/// Information-flow grid on the reference input.
Report run_simulation(const AnalysisConfig& config);
/// Built-in tree bundle statistics and the sampled coverage check.
Report run_tree_check(const AnalysisConfig& config);

}  // namespace infoflow
