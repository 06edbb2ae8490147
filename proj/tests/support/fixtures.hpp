#pragma once

// Shared inputs for unit and acceptance tests.

#include "infoflow/core.hpp"
#include "infoflow/flow.hpp"
#include "infoflow/targets.hpp"

namespace fixture {

using namespace infoflow;

/// Four 2-d tokens whose closest-to-opposite pair is (1,3).
inline Sequence worked_example() {
  return Sequence({Token{0.0, -1.0}, Token{0.7, 0.7}, Token{0.0, 1.0}, Token{-0.2, -0.9}},
                  Domain::kSymmetric);
}

inline ArchitectureConfig worked_example_arch() { return ArchitectureConfig::uniform(2, 1, 2, 2, 4); }

/// Layer 1: every token attends to its most opposite partner. Layer 2: the
/// classification token picks the source set holding the global min pair.
inline RuleAssignment worked_example_rules() {
  RuleAssignment r;
  r.set_tokens(1, 4, UpdateRule::max_position({ScoreFunction::neg_min_cross_inner()}));
  r.set_cls(2, 4, UpdateRule::max_position({ScoreFunction::neg_min_within()}));
  return r;
}

/// Two-layer rules for the intrinsic target with h1 first-layer heads
/// (partner search under A_1..A_h1) and h2 readout heads (A_1..A_h2).
inline RuleAssignment intrinsic_rules(const TargetSpec& target, int seq_len, int h1, int h2) {
  RuleAssignment r;
  std::vector<ScoreFunction> first, second;
  for (int i = 0; i < h1; ++i)
    first.push_back(ScoreFunction::bilinear_max(target.matrices[static_cast<size_t>(i)],
                                                "bilinear_max:A" + std::to_string(i + 1)));
  for (int i = 0; i < h2; ++i)
    second.push_back(ScoreFunction::bilinear_max_within(
        target.matrices[static_cast<size_t>(i)], "bilinear_max_within:A" + std::to_string(i + 1)));
  r.set_tokens(1, seq_len, UpdateRule::max_position(first));
  r.set_cls(2, seq_len, UpdateRule::max_position(second));
  return r;
}

inline ArchitectureConfig two_layer_arch(int h1, int h2, int token_dim, int seq_len) {
  ArchitectureConfig a;
  a.layers = 2;
  a.heads = {h1, h2};
  a.per_head = {token_dim, token_dim};
  a.embed = {h1 * token_dim, h2 * token_dim};
  a.token_dim = token_dim;
  a.seq_len = seq_len;
  return a;
}

}  // namespace fixture
