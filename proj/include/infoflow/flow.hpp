#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "infoflow/core.hpp"
#include "infoflow/targets.hpp"

namespace infoflow {

/// How the information set at one site is formed from the previous layer.
struct UpdateRule {
  enum class Kind {
    kMaxPosition,        // union of each head's argmax source set plus the residual
    kGlobal,             // all input positions
    kSpecificPositions,  // union of the sets at content-independent positions
  };

  Kind kind = Kind::kGlobal;
  std::vector<ScoreFunction> scores;  // one per head (max-position only)
  IndexSet fixed;                     // specific positions only

  static UpdateRule max_position(std::vector<ScoreFunction> scores);
  static UpdateRule global();
  static UpdateRule specific_positions(IndexSet fixed);

  /// "max(neg_min_cross_inner)", "global", "specific{1,2,3}".
  std::string describe() const;

  bool operator==(const UpdateRule&) const = default;
};

std::string to_string(UpdateRule::Kind kind);

/// Rules keyed by (position, layer), where `layer` in [1, L] is the layer the
/// rule produces. Sites without a rule keep their previous set.
class RuleAssignment {
 public:
  void set(int position, int layer, UpdateRule rule);
  /// Same rule for positions 1..T at `layer`.
  void set_tokens(int layer, int seq_len, const UpdateRule& rule);
  /// Rule for the classification token (position T+1).
  void set_cls(int layer, int seq_len, const UpdateRule& rule);

  /// Optional pruning: after the update the site keeps only `keep`.
  void prune(int position, int layer, IndexSet keep);

  const UpdateRule* find(int position, int layer) const;
  const IndexSet* pruning(int position, int layer) const;
  const std::map<std::pair<int, int>, UpdateRule>& rules() const { return rules_; }
  const std::map<std::pair<int, int>, IndexSet>& prunings() const { return prune_; }

  /// Throws ConfigError naming every offending site: layers outside [1, L],
  /// positions outside [1, T+1], head-count mismatches, specific-position
  /// rules without positional encoding, fixed positions outside [1, T].
  void validate(const ArchitectureConfig& arch) const;

  bool operator==(const RuleAssignment&) const = default;

 private:
  std::map<std::pair<int, int>, UpdateRule> rules_;
  std::map<std::pair<int, int>, IndexSet> prune_;
};

/// The (T+1) x (L+1) grid of information sets I(t, l).
class FlowTrace {
 public:
  struct Site {
    std::optional<UpdateRule::Kind> rule;  // empty when the site persisted
    std::string rule_label;
    std::vector<int> sources;  // per head; 0 when a head had no admissible source
    bool tie = false;          // some head's argmax tied across different sets
  };

  /// Layer-0 slice: I(t,0) = {t} for t <= T, I(T+1,0) = {}.
  static FlowTrace init(int seq_len);
  /// Arbitrary grid (layers x (T+1) sets), used for counting experiments.
  static FlowTrace from_sets(int seq_len, std::vector<std::vector<IndexSet>> sets);

  int seq_len() const { return seq_len_; }
  int cls() const { return seq_len_ + 1; }
  /// Highest layer computed so far.
  int top_layer() const { return static_cast<int>(sets_.size()) - 1; }

  const IndexSet& at(int position, int layer) const;
  const Site& site(int position, int layer) const;
  bool any_tie() const;

  bool operator==(const FlowTrace&) const;

 private:
  friend FlowTrace step(const FlowTrace&, int, const RuleAssignment&, const Sequence&);

  int seq_len_ = 0;
  std::vector<std::vector<IndexSet>> sets_;  // [layer][position - 1]
  std::vector<std::vector<Site>> sites_;     // [layer][position - 1]
};

inline FlowTrace init_state(int seq_len) { return FlowTrace::init(seq_len); }

/// Extends `trace` from layer l to l+1. Max-position heads take
/// argmax_{s in [1,T]} score(X[I(t,l)], X[I(s,l)]); sources with empty sets (or
/// all sources, when a cross-pair score meets an empty query) score -inf and
/// never win; ties go to the smallest s and are flagged when the tied
/// sources carry different sets.
FlowTrace step(const FlowTrace& trace, int layer, const RuleAssignment& rules, const Sequence& x);

/// Validates the rules against `arch` and applies every layer.
FlowTrace run(const ArchitectureConfig& arch, const RuleAssignment& rules, const Sequence& x);

struct LearnResult {
  int samples = 0;
  int learned = 0;
  int excluded_ties = 0;  // active-set ties (target ambiguous)
  int flow_ties = 0;      // samples whose trace had an argmax tie (still counted)
  /// learned / (samples - excluded_ties); 1.0 when nothing is counted.
  double fraction() const;
};

/// Fraction of sampled X whose active index set lies in I(T+1, L).
LearnResult learns_fraction(const TargetSpec& target, const ArchitectureConfig& arch,
                            const RuleAssignment& rules, int n_samples, uint64_t seed,
                            int threads = 1);

/// Total comparison count of the model with 0^beta1 = 0:
///   sum_{t<=T} sum_{l=1}^{L-1} (|I(t,l)|^b - 1 + h_l (T-1))
/// + sum_{l=1}^{L} (|I(T+1,l)|^b - 1 + h_l (T-1)).
long long model_comparison_count(const FlowTrace& trace, const ArchitectureConfig& arch,
                                 int beta1);

struct SiteCost {
  int position = 0;
  int layer = 0;  // the layer produced by the update
  UpdateRule::Kind rule = UpdateRule::Kind::kGlobal;
  long long set_size = 0;  // effective size entering kappa
  double kappa = 0.0;      // set_size * d / E_layer
  double exponent = 0.0;   // max(kappa - 1, 0)
};

/// Per-site parameter-cost exponents: Theta(eps^-e) parameters, constants
/// dropped. The FFN smoothness term is excluded.
struct CostReport {
  std::vector<SiteCost> sites;
  double max_exponent = 0.0;
  double exponent_sum = 0.0;
};

CostReport cost_exponents(const FlowTrace& trace, const ArchitectureConfig& arch,
                          const RuleAssignment& rules, int token_dim);

}  // namespace infoflow
