#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "infoflow/core.hpp"
#include "infoflow/targets.hpp"

namespace infoflow {

/// Comparison function f_in evaluated on X[I] for a leaf tuple I.
struct ComparisonFn {
  enum class Kind {
    kForm,           // f(x(i_1)) on a single-entry tuple
    kBilinear,       // x(i_1)^T A x(i_2)
    kNegShiftedDot,  // -2(1 + x(i_1).x(i_2))
    kNegSumSquared,  // -|sum_j x(i_j)|^2
  };
  Kind kind = Kind::kForm;
  ScalarForm form = ScalarForm::identity();
  Eigen::MatrixXd matrix;

  static ComparisonFn of_form(ScalarForm f);
  static ComparisonFn bilinear(Eigen::MatrixXd a);
  static ComparisonFn neg_shifted_dot();
  static ComparisonFn neg_sum_squared();

  double operator()(const Sequence& x, const OrderedIndexTuple& tuple) const;
  std::string name() const;
};

/// Full binary tree with indexed leaves. All internal nodes share one
/// comparison function.
class TreeOfComparison {
 public:
  /// Balanced tree of minimal height whose in-order leaves follow `leaves`.
  static TreeOfComparison build_balanced(std::vector<OrderedIndexTuple> leaves, ComparisonFn fn);

  struct Result {
    OrderedIndexTuple root;
    /// Some internal node compared equal scores on different index sets.
    bool tie = false;
  };

  /// Bottom-up tournament: the child with strictly larger f wins, the left
  /// child wins ties.
  Result evaluate(const Sequence& x) const;

  int leaf_count() const { return static_cast<int>(leaves_.size()); }
  int internal_count() const { return static_cast<int>(nodes_.size()) - leaf_count(); }
  int height() const;
  /// max_leaf |I_l|
  int dimension() const;
  /// Largest position referenced by any leaf.
  int max_position() const;
  const std::vector<OrderedIndexTuple>& leaves() const { return leaves_; }
  const ComparisonFn& fn() const { return fn_; }

  /// Structural check: every internal node has two children and every leaf
  /// is reachable exactly once.
  bool is_full_binary() const;

 private:
  struct Node {
    int left = -1;   // internal: child node ids
    int right = -1;
    int leaf = -1;   // leaf: index into leaves_
  };

  int build(int first, int last);

  std::vector<OrderedIndexTuple> leaves_;
  std::vector<Node> nodes_;
  int root_ = -1;
  ComparisonFn fn_;
};

inline TreeOfComparison build_balanced(std::vector<OrderedIndexTuple> leaves, ComparisonFn fn) {
  return TreeOfComparison::build_balanced(std::move(leaves), std::move(fn));
}

struct TreeBundle {
  std::vector<TreeOfComparison> trees;
  int beta1 = 1;       // dimension bound
  int order = 1;       // beta' (size exponent)

  int dimension() const;
  /// N' = sum_j (N_leaf(T_j) - 1)
  long long number_of_comparison() const;
};

/// Built-in constructions: D-retrieval (D trees, T singleton leaves),
/// intrinsic (D trees, T^2 pair leaves), min_pair_shifted (one tree, T^2 pair
/// leaves), triangle (one tree, T^3 triple leaves). Throws UnsupportedError for
/// position_sum and kth_largest.
TreeBundle trees_for_target(const TargetSpec& target, int seq_len);

long long number_of_comparison_upper(const TreeBundle& bundle);

/// Closed-form lower bound on the target's Number of Comparison, clamped at
/// zero: D(T-D) for D-retrieval, C(T,3)-3 for triangle, D(T-D) for intrinsic
/// (a conservative floor; min_pair_shifted is treated as intrinsic with D=1).
long long target_lower_bound(const TargetSpec& target, int seq_len);

/// Dimension of Comparison beta_1 of a built-in target (1 when there is no
/// construction).
int target_beta1(const TargetSpec& target);

struct CoverageResult {
  int samples = 0;
  int covered = 0;
  int excluded_ties = 0;
  /// covered / (samples - excluded_ties); 1.0 when nothing is counted.
  double fraction() const;
};

/// Fraction of samples where the active index set lies inside the union of the
/// bundle's roots. Samples whose active set or tournament is tie-flagged are
/// excluded and counted separately. Deterministic for any thread count.
CoverageResult verify_cover(const TargetSpec& target, const TreeBundle& bundle, int seq_len,
                            int n_samples, uint64_t seed, int threads = 1);

}  // namespace infoflow
