#include <gtest/gtest.h>

#include <cmath>

#include "infoflow/targets.hpp"
#include "oracles.hpp"

using namespace infoflow;

namespace {

Sequence scalars(std::vector<double> v, Domain dom = Domain::kUnit) {
  std::vector<Token> tokens;
  for (double c : v) tokens.push_back(Token{c});
  return Sequence(std::move(tokens), dom);
}

Sequence worked_example() {
  return Sequence({Token{0.0, -1.0}, Token{0.7, 0.7}, Token{0.0, 1.0}, Token{-0.2, -0.9}},
                  Domain::kSymmetric);
}

std::vector<TargetSpec> all_targets(int d) {
  return {
      TargetSpec::d_retrieval({ScalarForm::coord(1), ScalarForm::coord(2, true)}, d, Domain::kUnit),
      TargetSpec::min_pair_shifted(d),
      TargetSpec::random_intrinsic(2, d, Domain::kUnit, 11),
      TargetSpec::triangle_center(d),
      TargetSpec::position_sum(IndexSet{1, 3}, d, Domain::kUnit),
      TargetSpec::kth_largest(2),
  };
}

}  // namespace

TEST(Evaluate, TriangleSingleToken) {
  auto t = TargetSpec::triangle_center(2);
  EXPECT_DOUBLE_EQ(evaluate(t, Sequence({Token{1.0, 0.0}}, Domain::kSymmetric)), 9.0);
}

TEST(Evaluate, TriangleThreeTokens) {
  auto t = TargetSpec::triangle_center(2);
  Sequence x({Token{0.6, 0.0}, Token{-0.5, 0.0}, Token{0.0, 0.1}}, Domain::kSymmetric);
  EXPECT_NEAR(evaluate(t, x), 0.02, 1e-15);
  EXPECT_EQ(active_index_set(t, x).indices, (IndexSet{1, 2, 3}));
  EXPECT_EQ(active_index_set_fd(t, x, 1e-5, 1e-3), (IndexSet{1, 2, 3}));
}

TEST(Evaluate, KthLargest) {
  EXPECT_DOUBLE_EQ(evaluate(TargetSpec::kth_largest(2), scalars({0.1, 0.3, 0.4, 0.2})), 0.3);
  EXPECT_EQ(active_index_set(TargetSpec::kth_largest(2), scalars({0.1, 0.3, 0.4, 0.2})).indices,
            (IndexSet{2}));
}

TEST(Evaluate, MinPairOpposite) {
  auto t = TargetSpec::min_pair_shifted(3);
  Sequence x({Token{1.0, 0.0, 0.0}, Token{-1.0, 0.0, 0.0}}, Domain::kSymmetric);
  EXPECT_DOUBLE_EQ(evaluate(t, x), 0.0);
}

TEST(Evaluate, MatchesOracleForAllTargets) {
  for (int seed = 0; seed < 200; ++seed) {
    Rng rng(static_cast<uint64_t>(seed));
    const int T = 1 + seed % 8;
    for (const auto& target : all_targets(3)) {
      if (target.kind == TargetKind::kPositionSum && T < 3) continue;
      if (target.kind == TargetKind::kKthLargest && T < 2) continue;
      const Sequence x = sample_for(target, T, rng);
      EXPECT_NEAR(evaluate(target, x), oracle::evaluate(target, x), 1e-12)
          << target.id() << " T=" << T << " seed=" << seed;
    }
  }
}

TEST(Evaluate, MinPairNonnegativeOnUnitBall) {
  auto t = TargetSpec::min_pair_shifted(3);
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) EXPECT_GE(evaluate(t, sample_unit_ball(1 + i % 8, 3, rng)), 0.0);
}

TEST(Evaluate, RejectsMismatchedInput) {
  auto t = TargetSpec::min_pair_shifted(3);
  EXPECT_THROW(evaluate(t, worked_example()), ConfigError);
  auto u = TargetSpec::triangle_center(2, Domain::kSymmetric);
  EXPECT_THROW(evaluate(u, Sequence({Token{0.5, 0.5}}, Domain::kUnit)), ConfigError);
  EXPECT_THROW(evaluate(TargetSpec::kth_largest(5), scalars({0.1, 0.2})), ConfigError);
  EXPECT_THROW(evaluate(TargetSpec::position_sum(IndexSet{4}, 1, Domain::kUnit), scalars({0.1, 0.2})),
               ConfigError);
}

TEST(TargetSpec, ValidatesInvariants) {
  EXPECT_THROW(TargetSpec::d_retrieval({}, 2, Domain::kUnit), ConfigError);
  EXPECT_THROW(TargetSpec::d_retrieval({ScalarForm::identity(), ScalarForm::identity()}, 1, Domain::kUnit),
               ConfigError);
  EXPECT_THROW(TargetSpec::intrinsic({}, Domain::kUnit), ConfigError);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(TargetSpec::intrinsic({a, a}, Domain::kUnit), ConfigError);
  EXPECT_THROW(TargetSpec::intrinsic({Eigen::MatrixXd::Identity(2, 3)}, Domain::kUnit), ConfigError);
  EXPECT_THROW(TargetSpec::kth_largest(0), ConfigError);
}

TEST(TargetSpec, RandomIntrinsicIsSeededAndOrthogonal) {
  auto a = TargetSpec::random_intrinsic(3, 4, Domain::kUnit, 5);
  auto b = TargetSpec::random_intrinsic(3, 4, Domain::kUnit, 5);
  EXPECT_TRUE(a == b);
  for (const auto& m : a.matrices)
    EXPECT_LT((m.transpose() * m - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ActiveSet, WorkedExample) {
  auto t = TargetSpec::min_pair_shifted(2);
  const ActiveSet a = active_index_set(t, worked_example());
  EXPECT_EQ(a.indices, (IndexSet{1, 3}));
  EXPECT_FALSE(a.tie);
}

TEST(ActiveSet, MaxRetrievalScalar) {
  auto t = TargetSpec::d_retrieval({ScalarForm::identity()}, 1, Domain::kUnit);
  EXPECT_EQ(active_index_set(t, scalars({0.1, 0.3, 0.4, 0.2})).indices, (IndexSet{3}));
}

TEST(ActiveSet, PositionSumIsFixed) {
  auto t = TargetSpec::position_sum(IndexSet{1, 2, 3}, 2, Domain::kUnit);
  Rng rng(9);
  const Sequence x = sample_for(t, 10, rng);
  EXPECT_EQ(active_index_set(t, x).indices, (IndexSet{1, 2, 3}));
  for (double h : {1e-3, 1e-5, 1e-7}) EXPECT_EQ(active_index_set_fd(t, x, h, 1e-3), (IndexSet{1, 2, 3}));
}

TEST(ActiveSet, TieIsFlaggedAndResolvedLexicographically) {
  auto t = TargetSpec::d_retrieval({ScalarForm::identity()}, 1, Domain::kUnit);
  const ActiveSet a = active_index_set(t, scalars({0.4, 0.1, 0.4}));
  EXPECT_TRUE(a.tie);
  EXPECT_EQ(a.indices, (IndexSet{1}));
}

TEST(ActiveSet, BoundedByD0) {
  for (const auto& target : all_targets(2)) {
    for (int i = 0; i < 300; ++i) {
      Rng rng = Rng::for_item(21, static_cast<uint64_t>(i));
      const int T = 3 + i % 6;
      const Sequence x = sample_for(target, T, rng);
      const IndexSet s = active_index_set(target, x).indices;
      EXPECT_LE(s.size(), target.max_active()) << target.id();
      if (!s.empty()) EXPECT_LE(s.max(), T);
    }
  }
}

TEST(ActiveSet, AnalyticGradientMatchesCentralDifferences) {
  for (const auto& target : all_targets(3)) {
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
      Rng rng = Rng::for_item(4, static_cast<uint64_t>(i));
      const Sequence x = sample_for(target, 5, rng);
      const ActiveSet a = active_index_set(target, x, TieTolerance{1e-4, 1e-4});
      if (a.tie) continue;
      ++checked;
      const auto g = target_gradient(target, x);
      for (int t = 1; t <= x.length(); ++t)
        for (int c = 0; c < x.dim(); ++c)
          EXPECT_NEAR(g[static_cast<size_t>(t - 1)][static_cast<size_t>(c)],
                      oracle::partial(target, x, t, c, 1e-6), 1e-5)
              << target.id();
    }
    EXPECT_GT(checked, 150) << target.id();
  }
}

TEST(ActiveSet, MinPairCrossOracleAgreement) {
  auto t = TargetSpec::min_pair_shifted(3);
  int disagreements = 0;
  for (int i = 0; i < 1000; ++i) {
    Rng rng = Rng::for_item(8, static_cast<uint64_t>(i));
    const Sequence x = sample_for(t, 6, rng);
    const ActiveSet a = active_index_set(t, x, TieTolerance{1e-4, 1e-3});
    if (a.indices != active_index_set_fd(t, x, 1e-5, 1e-3)) {
      ++disagreements;
      EXPECT_TRUE(a.tie);
    }
  }
  EXPECT_LE(disagreements, 10);
}

TEST(D0Estimate, KnownValues) {
  EXPECT_EQ(d0_estimate(TargetSpec::min_pair_shifted(3), 8, 500, 1), 2);
  EXPECT_EQ(d0_estimate(TargetSpec::position_sum(IndexSet{1, 2, 3}, 2, Domain::kUnit), 8, 10, 1), 3);
  EXPECT_EQ(d0_estimate(TargetSpec::triangle_center(2), 6, 500, 1), 3);
}

TEST(Score, WorkedExampleValues) {
  const Sequence x = worked_example();
  EXPECT_DOUBLE_EQ(score(ScoreFunction::neg_min_cross_inner(), x, IndexSet{1}, IndexSet{3}), 1.0);
  EXPECT_DOUBLE_EQ(score(ScoreFunction::neg_min_within(), x, IndexSet{}, IndexSet{1, 3}), 1.0);
}

TEST(Score, FValueAndBilinear) {
  const Sequence x = scalars({0.1, 0.3, 0.4, 0.2});
  EXPECT_DOUBLE_EQ(score(ScoreFunction::f_value(ScalarForm::identity()), x, IndexSet{}, IndexSet{2}), 0.3);
  Eigen::MatrixXd a(1, 1);
  a << 2.0;
  EXPECT_DOUBLE_EQ(score(ScoreFunction::bilinear_max(a), x, IndexSet{1}, IndexSet{2, 3}), 2.0 * 0.1 * 0.4);
  EXPECT_DOUBLE_EQ(score(ScoreFunction::bilinear_max_within(a), x, IndexSet{}, IndexSet{2, 3}),
                   2.0 * 0.4 * 0.4);
}

TEST(Score, EmptySetsAreDomainErrors) {
  const Sequence x = worked_example();
  EXPECT_THROW(score(ScoreFunction::neg_min_within(), x, IndexSet{1}, IndexSet{}), DomainError);
  EXPECT_THROW(score(ScoreFunction::neg_min_cross_inner(), x, IndexSet{}, IndexSet{1}), DomainError);
}

TEST(ScalarForm, ParseNames) {
  for (std::string n : {"identity", "negate", "coord:2", "neg_coord:1", "linear:0.5,-1"})
    EXPECT_EQ(ScalarForm::parse(n).name(), n);
  EXPECT_THROW(ScalarForm::parse("square"), ConfigError);
  EXPECT_THROW(ScalarForm::parse("coord:x"), ConfigError);
  EXPECT_DOUBLE_EQ(ScalarForm::parse("linear:0.5,-1")(Token{0.4, 0.3}), 0.2 - 0.3);
}

TEST(TargetKind, ParseRoundTrip) {
  for (const auto& t : all_targets(2)) EXPECT_EQ(parse_target_kind(to_string(t.kind)), t.kind);
  EXPECT_THROW(parse_target_kind("sorting"), ConfigError);
}
