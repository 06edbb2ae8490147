#include "infoflow/trees.hpp"

#include <algorithm>
#include <functional>

#include "parallel.hpp"

namespace infoflow {

ComparisonFn ComparisonFn::of_form(ScalarForm f) {
  ComparisonFn fn;
  fn.kind = Kind::kForm;
  fn.form = std::move(f);
  return fn;
}

ComparisonFn ComparisonFn::bilinear(Eigen::MatrixXd a) {
  ComparisonFn fn;
  fn.kind = Kind::kBilinear;
  fn.matrix = std::move(a);
  return fn;
}

ComparisonFn ComparisonFn::neg_shifted_dot() {
  ComparisonFn fn;
  fn.kind = Kind::kNegShiftedDot;
  return fn;
}

ComparisonFn ComparisonFn::neg_sum_squared() {
  ComparisonFn fn;
  fn.kind = Kind::kNegSumSquared;
  return fn;
}

double ComparisonFn::operator()(const Sequence& x, const OrderedIndexTuple& tuple) const {
  switch (kind) {
    case Kind::kForm:
      return form(x.at(tuple[0]));
    case Kind::kBilinear: {
      const Token& a = x.at(tuple[0]);
      const Token& b = x.at(tuple[tuple.size() > 1 ? 1 : 0]);
      double acc = 0.0;
      for (int r = 0; r < a.dim(); ++r)
        for (int c = 0; c < b.dim(); ++c) acc += a[r] * matrix(r, c) * b[c];
      return acc;
    }
    case Kind::kNegShiftedDot:
      return -2.0 * (1.0 + dot(x.at(tuple[0]), x.at(tuple[tuple.size() > 1 ? 1 : 0])));
    case Kind::kNegSumSquared: {
      double n2 = 0.0;
      for (int k = 0; k < x.dim(); ++k) {
        double s = 0.0;
        for (int t : tuple) s += x.at(t)[k];
        n2 += s * s;
      }
      return -n2;
    }
  }
  return 0.0;
}

std::string ComparisonFn::name() const {
  switch (kind) {
    case Kind::kForm: return "form:" + form.name();
    case Kind::kBilinear: return "bilinear";
    case Kind::kNegShiftedDot: return "neg_shifted_dot";
    case Kind::kNegSumSquared: return "neg_sum_squared";
  }
  return "unknown";
}

TreeOfComparison TreeOfComparison::build_balanced(std::vector<OrderedIndexTuple> leaves,
                                                  ComparisonFn fn) {
  if (leaves.empty()) throw ConfigError("build_balanced: a tree needs at least one leaf");
  TreeOfComparison tree;
  tree.leaves_ = std::move(leaves);
  tree.fn_ = std::move(fn);
  tree.nodes_.reserve(2 * tree.leaves_.size() - 1);
  tree.root_ = tree.build(0, static_cast<int>(tree.leaves_.size()));
  return tree;
}

// Children are always pushed before their parent, so a forward sweep over
// nodes_ is a valid bottom-up order.
int TreeOfComparison::build(int first, int last) {
  if (last - first == 1) {
    nodes_.push_back(Node{-1, -1, first});
    return static_cast<int>(nodes_.size()) - 1;
  }
  const int mid = first + (last - first + 1) / 2;
  const int left = build(first, mid);
  const int right = build(mid, last);
  nodes_.push_back(Node{left, right, -1});
  return static_cast<int>(nodes_.size()) - 1;
}

TreeOfComparison::Result TreeOfComparison::evaluate(const Sequence& x) const {
  if (max_position() > x.length())
    throw DomainError("tree references position " + std::to_string(max_position()) +
                      " beyond T = " + std::to_string(x.length()));
  std::vector<int> winner(nodes_.size());
  std::vector<double> value(nodes_.size());
  bool tie = false;
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.leaf >= 0) {
      winner[i] = n.leaf;
      value[i] = fn_(x, leaves_[static_cast<size_t>(n.leaf)]);
      continue;
    }
    const auto l = static_cast<size_t>(n.left);
    const auto r = static_cast<size_t>(n.right);
    if (value[r] > value[l]) {
      winner[i] = winner[r];
      value[i] = value[r];
    } else {
      if (value[r] == value[l] &&
          leaves_[static_cast<size_t>(winner[l])].as_set() !=
              leaves_[static_cast<size_t>(winner[r])].as_set())
        tie = true;
      winner[i] = winner[l];
      value[i] = value[l];
    }
  }
  return Result{leaves_[static_cast<size_t>(winner[static_cast<size_t>(root_)])], tie};
}

int TreeOfComparison::height() const {
  std::vector<int> h(nodes_.size(), 0);
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.leaf < 0)
      h[i] = 1 + std::max(h[static_cast<size_t>(n.left)], h[static_cast<size_t>(n.right)]);
  }
  return h[static_cast<size_t>(root_)];
}

int TreeOfComparison::dimension() const {
  int d = 0;
  for (const auto& leaf : leaves_) d = std::max(d, leaf.size());
  return d;
}

int TreeOfComparison::max_position() const {
  int m = 0;
  for (const auto& leaf : leaves_)
    for (int t : leaf) m = std::max(m, t);
  return m;
}

bool TreeOfComparison::is_full_binary() const {
  std::vector<int> leaf_hits(leaves_.size(), 0);
  std::vector<int> parents(nodes_.size(), 0);
  for (const Node& n : nodes_) {
    if (n.leaf >= 0) {
      if (n.left != -1 || n.right != -1) return false;
      ++leaf_hits[static_cast<size_t>(n.leaf)];
    } else {
      if (n.left < 0 || n.right < 0) return false;
      ++parents[static_cast<size_t>(n.left)];
      ++parents[static_cast<size_t>(n.right)];
    }
  }
  for (size_t i = 0; i < nodes_.size(); ++i) {
    const int expected = static_cast<int>(i) == root_ ? 0 : 1;
    if (parents[i] != expected) return false;
  }
  return std::all_of(leaf_hits.begin(), leaf_hits.end(), [](int c) { return c == 1; });
}

int TreeBundle::dimension() const {
  int d = 0;
  for (const auto& t : trees) d = std::max(d, t.dimension());
  return d;
}

long long TreeBundle::number_of_comparison() const {
  long long n = 0;
  for (const auto& t : trees) n += t.leaf_count() - 1;
  return n;
}

long long number_of_comparison_upper(const TreeBundle& bundle) {
  return bundle.number_of_comparison();
}

namespace {

std::vector<OrderedIndexTuple> singleton_leaves(int T) {
  std::vector<OrderedIndexTuple> leaves;
  for (int t = 1; t <= T; ++t) leaves.push_back(OrderedIndexTuple{t});
  return leaves;
}

std::vector<OrderedIndexTuple> pair_leaves(int T) {
  std::vector<OrderedIndexTuple> leaves;
  leaves.reserve(static_cast<size_t>(T) * static_cast<size_t>(T));
  for (int s = 1; s <= T; ++s)
    for (int t = 1; t <= T; ++t) leaves.push_back(OrderedIndexTuple{s, t});
  return leaves;
}

std::vector<OrderedIndexTuple> triple_leaves(int T) {
  std::vector<OrderedIndexTuple> leaves;
  leaves.reserve(static_cast<size_t>(T) * static_cast<size_t>(T) * static_cast<size_t>(T));
  for (int a = 1; a <= T; ++a)
    for (int b = 1; b <= T; ++b)
      for (int c = 1; c <= T; ++c) leaves.push_back(OrderedIndexTuple{a, b, c});
  return leaves;
}

}  // namespace

TreeBundle trees_for_target(const TargetSpec& target, int seq_len) {
  if (seq_len < 1) throw ConfigError("trees_for_target: T must be >= 1");
  TreeBundle bundle;
  bundle.beta1 = bundle.order = target_beta1(target);
  switch (target.kind) {
    case TargetKind::kDRetrieval:
      for (const auto& f : target.forms)
        bundle.trees.push_back(build_balanced(singleton_leaves(seq_len), ComparisonFn::of_form(f)));
      break;
    case TargetKind::kIntrinsic:
      for (const auto& a : target.matrices)
        bundle.trees.push_back(build_balanced(pair_leaves(seq_len), ComparisonFn::bilinear(a)));
      break;
    case TargetKind::kMinPairShifted:
      bundle.trees.push_back(build_balanced(pair_leaves(seq_len), ComparisonFn::neg_shifted_dot()));
      break;
    case TargetKind::kTriangleCenter:
      bundle.trees.push_back(
          build_balanced(triple_leaves(seq_len), ComparisonFn::neg_sum_squared()));
      break;
    case TargetKind::kPositionSum:
    case TargetKind::kKthLargest:
      throw UnsupportedError("no comparison-tree construction for target " + target.id());
  }
  return bundle;
}

int target_beta1(const TargetSpec& target) {
  switch (target.kind) {
    case TargetKind::kIntrinsic:
    case TargetKind::kMinPairShifted: return 2;
    case TargetKind::kTriangleCenter: return 3;
    default: return 1;
  }
}

long long target_lower_bound(const TargetSpec& target, int seq_len) {
  const long long T = seq_len;
  const long long D = target.components();
  long long bound = 0;
  switch (target.kind) {
    case TargetKind::kDRetrieval:
    case TargetKind::kIntrinsic:
    case TargetKind::kMinPairShifted:
      bound = D * (T - D);
      break;
    case TargetKind::kTriangleCenter:
      bound = T * (T - 1) * (T - 2) / 6 - 3;
      break;
    case TargetKind::kPositionSum:
    case TargetKind::kKthLargest:
      throw UnsupportedError("no comparison lower bound for target " + target.id());
  }
  return std::max(bound, 0LL);
}

double CoverageResult::fraction() const {
  const int counted = samples - excluded_ties;
  return counted > 0 ? static_cast<double>(covered) / counted : 1.0;
}

CoverageResult verify_cover(const TargetSpec& target, const TreeBundle& bundle, int seq_len,
                            int n_samples, uint64_t seed, int threads) {
  for (const auto& tree : bundle.trees)
    if (tree.max_position() > seq_len)
      throw ConfigError("verify_cover: bundle was built for a longer sequence");
  // 0 = not covered, 1 = covered, 2 = tie-excluded
  std::vector<int> outcome(static_cast<size_t>(std::max(n_samples, 0)));
  detail::parallel_for(n_samples, threads, [&](int64_t i) {
    Rng rng = Rng::for_item(seed, static_cast<uint64_t>(i));
    const Sequence x = sample_for(target, seq_len, rng);
    const ActiveSet active = active_index_set(target, x);
    bool tie = active.tie;
    IndexSet roots;
    for (const auto& tree : bundle.trees) {
      auto r = tree.evaluate(x);
      tie = tie || r.tie;
      roots = roots.united(r.root.as_set());
    }
    outcome[static_cast<size_t>(i)] = tie ? 2 : (active.indices.is_subset_of(roots) ? 1 : 0);
  });
  CoverageResult res;
  res.samples = n_samples;
  for (int o : outcome) {
    if (o == 2) ++res.excluded_ties;
    if (o == 1) ++res.covered;
  }
  return res;
}

}  // namespace infoflow
