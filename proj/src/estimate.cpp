#include "infoflow/estimate.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <vector>

#include "infoflow/trees.hpp"
#include "parallel.hpp"

namespace infoflow {

namespace {

long long sat_add(long long a, long long b) {
  long long r;
  return __builtin_add_overflow(a, b, &r) ? LLONG_MAX : r;
}

long long sat_mul(long long a, long long b) {
  long long r;
  return __builtin_mul_overflow(a, b, &r) ? LLONG_MAX : r;
}

long long sat_pow(long long base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) r = sat_mul(r, base);
  return r;
}

}  // namespace

long long uniform_comparison_count(const ArchitectureConfig& arch, long long set_size, int beta1) {
  const long long T = arch.seq_len;
  const long long per_set = sat_pow(set_size, beta1) - 1;
  long long total = 0;
  for (int l = 1; l <= arch.layers; ++l) {
    const long long site = sat_add(per_set, sat_mul(arch.heads_at(l), T - 1));
    // T token sites for l < L, plus the CLS site at every layer.
    const long long copies = (l < arch.layers ? T : 0) + 1;
    total = sat_add(total, sat_mul(copies, site));
  }
  return total;
}

long long required_M(long long target_count, const ArchitectureConfig& arch, int beta1) {
  arch.validate();
  if (beta1 < 1) throw ConfigError("required_M: beta1 must be >= 1");
  if (target_count < 0) throw ConfigError("required_M: target count must be >= 0");
  auto enough = [&](long long m) { return uniform_comparison_count(arch, m, beta1) >= target_count; };
  if (enough(1)) return 1;
  long long hi = 2;
  while (!enough(hi)) hi *= 2;
  long long lo = hi / 2;  // enough(lo) is false
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (enough(mid) ? hi : lo) = mid;
  }
  return hi;
}

RateEstimate rate_bounds(const TargetSpec& target, const ArchitectureConfig& arch,
                         const RuleAssignment& rules, int n_samples, uint64_t seed,
                         std::optional<int> beta1_override, int threads) {
  rules.validate(arch);
  RateEstimate est;
  est.target_id = target.id();
  est.beta1 = beta1_override.value_or(target_beta1(target));
  est.order = target_beta1(target);
  try {
    est.target_count = target_lower_bound(target, arch.seq_len);
  } catch (const UnsupportedError&) {
    est.target_count.reset();
  }
  est.required_M = required_M(est.target_count.value_or(0), arch, est.beta1);
  est.min_embed = arch.min_embed();
  const long long numer = est.required_M * arch.token_dim;
  est.lower_exponent =
      numer > est.min_embed ? static_cast<double>(numer - est.min_embed) / est.min_embed : 0.0;

  est.learn = learns_fraction(target, arch, rules, n_samples, seed, threads);

  std::vector<double> upper(static_cast<size_t>(std::max(n_samples, 0)), 0.0);
  std::vector<long long> counts(upper.size(), 0);
  detail::parallel_for(n_samples, threads, [&](int64_t i) {
    Rng rng = Rng::for_item(seed, static_cast<uint64_t>(i));
    const Sequence x = sample_for(target, arch.seq_len, rng);
    const FlowTrace trace = run(arch, rules, x);
    upper[static_cast<size_t>(i)] = cost_exponents(trace, arch, rules, arch.token_dim).max_exponent;
    counts[static_cast<size_t>(i)] = model_comparison_count(trace, arch, est.beta1);
  });
  for (double u : upper) est.upper_exponent = std::max(est.upper_exponent, u);
  for (long long c : counts) est.max_model_count = std::max(est.max_model_count, c);
  return est;
}

IntrinsicPrediction predict_intrinsic(int components, int seq_len, int h1, int h2, int beta1) {
  if (components < 1) throw ConfigError("predict_intrinsic: D must be >= 1");
  if (seq_len < 1 || h1 < 1 || h2 < 1 || beta1 < 1)
    throw ConfigError("predict_intrinsic: T, h1, h2 and beta1 must be >= 1");
  const long long T = seq_len;
  IntrinsicPrediction p;
  p.comparisons_suffice = h1 >= components;
  p.readout_suffices = h2 >= components;
  const long long tok1 = sat_pow(h1 + 1, beta1) - 1 + h1 * (T - 1);
  const long long cls1 = sat_pow(h1, beta1) - 1 + h1 * (T - 1);
  const long long cls2 = sat_pow(static_cast<long long>(h1) * h2 + h1 + h2, beta1) - 1 + h2 * (T - 1);
  p.model_ceiling = sat_add(sat_add(sat_mul(T, tok1), cls1), cls2);
  p.target_upper = static_cast<long long>(components) * (T * T - 1);
  p.asymptotic_regime = T > 2LL * (h1 + 1) * (h2 + 1);
  return p;
}

HardnessPrediction predict_higher_order(int beta_prime, int beta1, int seq_len, int layers,
                                        int embed, double constant) {
  if (beta_prime < 1 || beta1 < 1 || seq_len < 1 || layers < 1 || embed < 1)
    throw ConfigError("predict_higher_order: all sizes must be >= 1");
  if (!(constant > 0.0)) throw ConfigError("predict_higher_order: C must be > 0");
  HardnessPrediction p;
  const double T = seq_len;
  const double LE = static_cast<double>(layers) * embed;
  p.constant = constant;
  p.exponent = std::max(constant * std::pow(T, static_cast<double>(beta_prime - 1) / beta1) / LE, 0.0);
  p.triangle_exponent = std::cbrt(T) * std::cbrt(T) / (6.0 * LE);
  p.hard = beta_prime > 2;
  return p;
}

}  // namespace infoflow
