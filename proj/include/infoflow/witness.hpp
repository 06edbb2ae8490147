#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "infoflow/core.hpp"

namespace infoflow {

// ------------------------------------------------------------------
// Two-layer softmax transformer computing min_{s,t} 2(1 + x(s).x(t)) on
// [-1,1]^3. Tokens are embedded as (x/3, 0) in R^6; the inner-product
// feed-forward block is the exact map G((u, v)) = (u.v, 1/2, 0, 0, 0, 0).

using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

struct MinPairConstruction {
  double beta = 1.0;  // softmax scaling factor
  Mat6 query1, key1, value1, output1;
  Mat6 query2, key2, value2, output2;

  static MinPairConstruction build(double beta);
};

/// Unscaled first-layer scores (W_Q x_1(t))^T (W_K x_1(s)), rows t, columns s.
Eigen::MatrixXd first_layer_scores(const MinPairConstruction& cons, const Sequence& x);

/// Full forward pass; returns 2 + 18 (c_2')_4. Finite for beta <= 1e4.
double min_pair_forward(const MinPairConstruction& cons, const Sequence& x);

struct ErrorPoint {
  double beta = 0.0;
  double sup_error = 0.0;
};

/// sup over seeded unit-ball samples of |forward - exact target| for each beta.
std::vector<ErrorPoint> min_pair_error_curve(const std::vector<double>& betas, int seq_len,
                                             int n_samples, uint64_t seed, int threads = 1);

// ------------------------------------------------------------------
// Bit-packing encoder/decoder: m coordinates truncated to L bits, the m*L
// digits laid out coordinate-major and split into n latent coordinates of
// q = ceil(mL/n) bits each (zero padded).

class BinaryCodec {
 public:
  BinaryCodec(int input_dim, int latent_dim, int bits);

  int input_dim() const { return m_; }
  int latent_dim() const { return n_; }
  int bits() const { return bits_; }
  /// Bits stored per latent coordinate.
  int bits_per_latent() const { return (m_ * bits_ + n_ - 1) / n_; }

 private:
  int m_;
  int n_;
  int bits_;
};

/// Truncation depth ceil(log2(2m / eps)) giving ||V - V^(L)||_inf <= eps / (2m).
int bits_for_accuracy(int input_dim, double eps);

/// One latent coordinate 0.b_1 b_2 ... b_q held exactly.
struct DyadicCode {
  std::vector<uint8_t> bits;
  /// Nearest double (exact while q <= 53).
  double value() const;
  bool operator==(const DyadicCode&) const = default;
};

using Latent = std::vector<DyadicCode>;

/// L-bit truncation V^(L) of each coordinate.
std::vector<double> truncate_bits(const BinaryCodec& codec, std::span<const double> v);
/// Throws DomainError when V leaves [0,1]^m or has the wrong length.
Latent encode(const BinaryCodec& codec, std::span<const double> v);
std::vector<double> decode(const BinaryCodec& codec, const Latent& latent);
/// Reads q-bit latent codes back from doubles (requires q <= 52).
Latent latent_from_values(const BinaryCodec& codec, std::span<const double> values);

struct CodecOrders {
  double encoder = 0.0;  // m 2^L
  double decoder = 0.0;  // 2^ceil(mL/n)
};

CodecOrders codec_parameter_formula(const BinaryCodec& codec);

// ------------------------------------------------------------------
// Pigeonhole search for two scalar sequences whose k-th largest values differ
// by at least 4 eps while their softmax-attention summaries nearly coincide.

/// Nondecreasing attention score rho(x) = slope * x.
struct ScoreMap {
  double slope = 1.0;
  static ScoreMap parse(const std::string& name);  // identity | constant | linear:c
  double operator()(double x) const { return slope * x; }
  std::string name() const;
};

/// Feature map f_1 : [0,1] -> [0,1]^n.
struct FeatureMap {
  enum class Kind { kIdentity, kPowers };  // (x) | (x, x^2, ..., x^n)
  Kind kind = Kind::kIdentity;
  int dim = 1;
  static FeatureMap parse(const std::string& name, int dim);  // identity | powers
  std::vector<double> operator()(double x) const;
  std::string name() const;
};

struct AdversarialSearchSpec {
  int seq_len = 0;  // T
  int k = 2;
  int feature_dim = 1;  // n
  double epsilon = 0.0;
  ScoreMap rho;
  FeatureMap features;

  int free_count() const { return seq_len - k + 1; }  // m = T - k + 1
  long long grid_size() const;                         // N = floor(1 / (16 m eps))
  double spacing() const { return 4.0 * epsilon; }      // Delta
  double grid_offset(int j) const;                     // alpha_j = (j - 1) / (2m)
  double cube_side() const;                            // eta = 4 m N^(-m/(n+1))
  /// (m / eta + 1)^(n+1), the pigeonhole bucket count.
  double bucket_count() const;
  /// Throws ConfigError unless 2 <= k <= T-1, n == feature dim, 0 < eps < 1/(64m)
  /// and N^m <= 1e7.
  void validate() const;
};

inline constexpr long long kMaxEnumeration = 10'000'000;

struct AdversarialPair {
  Sequence x;
  Sequence y;
  std::vector<double> z{};      // colliding grid subsequences
  std::vector<double> z_prime{};
  std::vector<int> differing{}; // J (1-based)
  int j_star = 0;               // max J
  double target_gap = 0.0;      // |F_k(X) - F_k(Y)|, recomputed from X and Y
  double summed_gap_inf = 0.0;  // ||S(z) - S(z')||_inf
  double summed_gap_l2 = 0.0;
  double bucket_diagonal = 0.0;         // eta sqrt(n+1)
  double representation_gap_inf = 0.0;  // ||A(X) - A(Y)||_inf, recomputed
  double representation_bound = 0.0;   // 2 eta / (k - 1)
  long long enumerated = 0;
  bool pigeonhole_guaranteed = false;   // bucket_count < N^m
};

/// Attention summary sum_t a(x(t)) / sum_t b(x(t)) with a = lambda f_1,
/// b = lambda, lambda(x) = exp(rho(x) - rho(1)).
std::vector<double> attention_summary(const AdversarialSearchSpec& spec, const Sequence& x);

/// Enumerates G_1 x ... x G_m in lexicographic order and returns the first
/// bucket collision, extended to full sequences. Empty when no two grid
/// subsequences share an eta-cube.
std::optional<AdversarialPair> adversarial_pair_search(const AdversarialSearchSpec& spec);

}  // namespace infoflow
