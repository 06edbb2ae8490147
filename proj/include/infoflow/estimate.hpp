#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "infoflow/core.hpp"
#include "infoflow/flow.hpp"
#include "infoflow/targets.hpp"

namespace infoflow {

/// The model comparison count with every information set (CLS included) of
/// size M. Saturates at LLONG_MAX.
long long uniform_comparison_count(const ArchitectureConfig& arch, long long set_size, int beta1);

/// Smallest M >= 1 whose uniform comparison count reaches `target_count`.
long long required_M(long long target_count, const ArchitectureConfig& arch, int beta1);

struct RateEstimate {
  std::string target_id;
  int beta1 = 1;
  int order = 1;
  /// Comparison floor of the target used in step one; absent when the
  /// target has no closed-form bound (step one then degenerates to M = 1).
  std::optional<long long> target_count;
  long long required_M = 1;
  int min_embed = 0;
  /// max(M d / min_l E_l - 1, 0)
  double lower_exponent = 0.0;
  /// Largest per-site cost exponent over the sampled learning traces.
  double upper_exponent = 0.0;
  long long max_model_count = 0;
  LearnResult learn;
  bool learned() const { return learn.fraction() == 1.0; }
};

/// Two-step estimate: a comparison-count lower bound on M, then the cost of
/// an explicit rule assignment checked for learnability on samples.
RateEstimate rate_bounds(const TargetSpec& target, const ArchitectureConfig& arch,
                         const RuleAssignment& rules, int n_samples, uint64_t seed,
                         std::optional<int> beta1_override = std::nullopt, int threads = 1);

struct IntrinsicPrediction {
  /// h1 >= D: the first layer's h1 T^2 comparisons can match the target's D T^2.
  bool comparisons_suffice = false;
  /// h2 >= D: one second-layer head per component pair.
  bool readout_suffices = false;
  bool feasible() const { return comparisons_suffice && readout_suffices; }
  /// Model comparison count with |I(t,1)| <= h1+1, |I(T+1,1)| <= h1,
  /// |I(T+1,2)| <= h1 h2 + h1 + h2.
  long long model_ceiling = 0;
  /// D (T^2 - 1): the pair-tree bundle's comparison count.
  long long target_upper = 0;
  /// T > 2 (h1+1)(h2+1); outside it lower-order terms can dominate the count.
  bool asymptotic_regime = false;
};

IntrinsicPrediction predict_intrinsic(int components, int seq_len, int h1, int h2, int beta1 = 2);

struct HardnessPrediction {
  /// C T^((beta'-1)/beta1) / (L E)
  double exponent = 0.0;
  /// T^(2/3) / (6 L E), the triangle-center instantiation.
  double triangle_exponent = 0.0;
  /// beta' > 2: the exponent grows without bound in T.
  bool hard = false;
  double constant = 0.0;
};

inline constexpr double kDefaultHardnessConstant = 1.0 / 6.0;
inline constexpr double kDefaultTreeSizeConstant = 1.0;

HardnessPrediction predict_higher_order(int beta_prime, int beta1, int seq_len, int layers,
                                        int embed, double constant = kDefaultHardnessConstant);

}  // namespace infoflow
