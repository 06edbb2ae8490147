#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "infoflow/core.hpp"
#include "infoflow/flow.hpp"
#include "infoflow/targets.hpp"

namespace infoflow {

enum class OutputFormat { kJson, kCsv };

std::string to_string(OutputFormat format);
OutputFormat parse_output_format(const std::string& name);

struct RunConfig {
  int n_samples = 1000;
  uint64_t seed = 0;
  std::optional<int> beta1;
  double hardness_constant = 1.0 / 6.0;  // C
  double tree_size_constant = 1.0;       // C0
  int threads = 1;

  bool operator==(const RunConfig&) const = default;
};

struct OutputConfig {
  OutputFormat format = OutputFormat::kJson;
  std::string path;  // empty: stdout

  bool operator==(const OutputConfig&) const = default;
};

/// One analysis: target, architecture, rule assignment, run and output
/// settings, and an optional fixed input sequence.
struct AnalysisConfig {
  TargetSpec target;
  ArchitectureConfig arch;
  RuleAssignment rules;
  std::optional<std::vector<std::vector<double>>> input;  // rows = tokens
  RunConfig run;
  OutputConfig output;

  /// The fixed input as a sequence on the target's domain.
  std::optional<Sequence> input_sequence() const;

  bool operator==(const AnalysisConfig&) const;
};

/// Parses the key-value format described in the README. Throws ConfigError
/// listing every problem found, each prefixed with its line and key.
AnalysisConfig parse_config(const std::string& text);
AnalysisConfig load_config(const std::string& path);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const AnalysisConfig& config);

/// Score name as written in configs, resolved against the target's matrices:
/// neg_min_cross_inner, neg_min_within, bilinear_max:A<i>,
/// bilinear_max_within:A<i>, f_value:<form>.
ScoreFunction parse_score(const std::string& name, const TargetSpec& target);

/// Rule text: "global", "max <score>...", "specific <position>...".
UpdateRule parse_rule(const std::string& text, const TargetSpec& target);
std::string rule_text(const UpdateRule& rule);

/// Fixed 17-significant-digit decimal (printf "%.17g"); round-trips doubles.
std::string format_number(double value);

}  // namespace infoflow
