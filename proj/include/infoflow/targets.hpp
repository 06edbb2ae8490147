#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "infoflow/core.hpp"

namespace infoflow {

/// Linear scalar form f(x) = w . x over a token. Covers the named forms used
/// by retrieval targets and value scores: identity, negate, coord:k,
/// neg_coord:k and linear:w1,w2,...
class ScalarForm {
 public:
  static ScalarForm identity();
  static ScalarForm negate();
  static ScalarForm coord(int k, bool negated = false);
  static ScalarForm linear(std::vector<double> weights);
  static ScalarForm parse(const std::string& name);

  double operator()(const Token& x) const;
  /// Gradient with respect to the token (constant for linear forms).
  std::vector<double> gradient(int dim) const;
  /// Number of leading coordinates the form reads.
  int support() const { return static_cast<int>(weights_.size()); }
  const std::string& name() const { return name_; }

  bool operator==(const ScalarForm& other) const { return name_ == other.name_; }

 private:
  ScalarForm(std::string name, std::vector<double> weights)
      : name_(std::move(name)), weights_(std::move(weights)) {}

  std::string name_;
  std::vector<double> weights_;
};

enum class TargetKind {
  kDRetrieval,      // F = sum_i max_t f_i(x(t))
  kMinPairShifted,  // F = min_{s,t} 2(1 + x(s).x(t))
  kIntrinsic,       // F = sum_i max_{s,t} x(s)^T A_i x(t)
  kTriangleCenter,  // F = min_{t1,t2,t3} |x(t1)+x(t2)+x(t3)|^2
  kPositionSum,     // F = sum_{j in P} sum_c x(j)_c
  kKthLargest,      // F = k-th largest of a scalar sequence
};

std::string to_string(TargetKind kind);
TargetKind parse_target_kind(const std::string& name);

struct TargetSpec {
  TargetKind kind = TargetKind::kMinPairShifted;
  int token_dim = 1;
  Domain domain = Domain::kUnit;
  std::vector<ScalarForm> forms;          // d_retrieval
  std::vector<Eigen::MatrixXd> matrices;  // intrinsic, row-major A_i
  IndexSet fixed_positions;               // position_sum
  int k = 0;                              // kth_largest

  static TargetSpec d_retrieval(std::vector<ScalarForm> forms, int token_dim, Domain domain);
  static TargetSpec min_pair_shifted(int token_dim, Domain domain = Domain::kSymmetric);
  static TargetSpec intrinsic(std::vector<Eigen::MatrixXd> matrices, Domain domain);
  /// D seeded random orthogonal matrices of size d x d.
  static TargetSpec random_intrinsic(int count, int token_dim, Domain domain, uint64_t seed);
  static TargetSpec triangle_center(int token_dim, Domain domain = Domain::kSymmetric);
  static TargetSpec position_sum(IndexSet positions, int token_dim, Domain domain);
  static TargetSpec kth_largest(int k, Domain domain = Domain::kUnit);

  /// Throws ConfigError on a malformed spec.
  void validate() const;
  /// Throws ConfigError when X does not match the target's d or domain
  /// (or k / fixed positions exceed T).
  void check_sequence(const Sequence& x) const;

  /// Number of components D (retrieval forms or matrices); 1 otherwise.
  int components() const;
  /// Analytic D_0: the a.e. maximum size of the active index set.
  int max_active() const;
  /// Short identifier such as "intrinsic(D=3,d=4)".
  std::string id() const;

  bool operator==(const TargetSpec& other) const;
};

/// Exact value by direct enumeration.
double evaluate(const TargetSpec& target, const Sequence& x);

/// Tolerances below which a point is treated as ambiguous. `value_gap` bounds
/// the distance between the optimal candidate and the best candidate touching
/// a different index set; `gradient` bounds the norm of an active partial
/// derivative.
struct TieTolerance {
  double value_gap = 1e-12;
  double gradient = 1e-12;
};

struct ActiveSet {
  IndexSet indices;
  /// Set when the arg-optimizer is not separated by more than the tolerance
  /// or an active derivative nearly vanishes. Ties resolve to the
  /// lexicographically smallest optimal tuple.
  bool tie = false;
  /// Separation to the runner-up candidate (infinity when there is none).
  double gap = std::numeric_limits<double>::infinity();
};

ActiveSet active_index_set(const TargetSpec& target, const Sequence& x,
                           const TieTolerance& tol = {});

/// Per-token analytic gradient of the target at X (rows = positions).
std::vector<std::vector<double>> target_gradient(const TargetSpec& target, const Sequence& x);

/// Independent oracle: central differences of `evaluate`, position kept iff
/// the gradient norm exceeds `tol`.
IndexSet active_index_set_fd(const TargetSpec& target, const Sequence& x, double h, double tol);

/// Maximum |active set| over seeded samples; a lower bound on D_0.
int d0_estimate(const TargetSpec& target, int seq_len, int n_samples, uint64_t seed);

/// Draws a sequence on the target's own d and domain.
Sequence sample_for(const TargetSpec& target, int seq_len, Rng& rng);

enum class ScoreKind {
  kNegMinCrossInner,   // -min_{i in I, j in J} x(i).x(j)
  kBilinearMax,        // max_{i in I, j in J} x(i)^T A x(j)
  kBilinearMaxWithin,  // max over ordered pairs of I u J of x(a)^T A x(b)
  kFValue,             // max_{j in J} f(x(j))
  kNegMinWithin,       // -min over ordered pairs of I u J of x(a).x(b)
};

/// Attention score A(X[I], X[J]) of one head; I is the query's set and J the
/// source's.
struct ScoreFunction {
  ScoreKind kind = ScoreKind::kNegMinCrossInner;
  Eigen::MatrixXd matrix;
  ScalarForm form = ScalarForm::identity();
  /// Label used in reports and configs (e.g. "bilinear_max:A2").
  std::string label;

  static ScoreFunction neg_min_cross_inner();
  static ScoreFunction neg_min_within();
  static ScoreFunction bilinear_max(Eigen::MatrixXd a, std::string label = "bilinear_max");
  static ScoreFunction bilinear_max_within(Eigen::MatrixXd a,
                                           std::string label = "bilinear_max_within");
  static ScoreFunction f_value(ScalarForm f);

  /// Cross-pair families need a nonempty query set.
  bool needs_query() const;

  bool operator==(const ScoreFunction& other) const;
};

/// Throws DomainError when J is empty, or I is empty for a cross family.
double score(const ScoreFunction& fn, const Sequence& x, const IndexSet& query,
             const IndexSet& source);

}  // namespace infoflow
