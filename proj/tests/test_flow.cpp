#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "infoflow/flow.hpp"
#include "oracles.hpp"

using namespace infoflow;

namespace {

std::vector<std::vector<long long>> size_grid(const FlowTrace& trace) {
  std::vector<std::vector<long long>> sizes;
  for (int l = 0; l <= trace.top_layer(); ++l) {
    std::vector<long long> row;
    for (int t = 1; t <= trace.cls(); ++t) row.push_back(trace.at(t, l).size());
    sizes.push_back(row);
  }
  return sizes;
}

}  // namespace

TEST(FlowTrace, InitialSlice) {
  const FlowTrace f = FlowTrace::init(3);
  EXPECT_EQ(f.top_layer(), 0);
  for (int t = 1; t <= 3; ++t) EXPECT_EQ(f.at(t, 0), (IndexSet{t}));
  EXPECT_TRUE(f.at(4, 0).empty());
}

TEST(Flow, WorkedExampleGrid) {
  const FlowTrace f = run(fixture::worked_example_arch(), fixture::worked_example_rules(),
                          fixture::worked_example());
  EXPECT_EQ(f.at(1, 1), (IndexSet{1, 3}));
  EXPECT_EQ(f.at(2, 1), (IndexSet{2, 4}));
  EXPECT_EQ(f.at(3, 1), (IndexSet{1, 3}));
  EXPECT_EQ(f.at(4, 1), (IndexSet{3, 4}));
  EXPECT_TRUE(f.at(5, 1).empty());
  EXPECT_EQ(f.at(5, 2), (IndexSet{1, 3}));
  EXPECT_EQ(f.site(1, 1).sources, (std::vector<int>{3}));
  EXPECT_EQ(f.site(2, 1).sources, (std::vector<int>{4}));
  EXPECT_EQ(f.site(4, 1).sources, (std::vector<int>{3}));
  // Sources 1 and 3 tie with identical sets; that is not an ambiguity.
  EXPECT_EQ(f.site(5, 2).sources, (std::vector<int>{1}));
  EXPECT_FALSE(f.any_tie());
  EXPECT_EQ(model_comparison_count(f, fixture::worked_example_arch(), 2), 32);
}

TEST(Flow, UnmappedSitesPersist) {
  RuleAssignment r;
  r.set_cls(1, 3, UpdateRule::global());
  const auto arch = ArchitectureConfig::uniform(2, 1, 1, 1, 3);
  const Sequence x = sample_sequence(3, 1, Domain::kUnit, 1);
  const FlowTrace f = run(arch, r, x);
  for (int t = 1; t <= 3; ++t) EXPECT_EQ(f.at(t, 2), (IndexSet{t}));
  EXPECT_EQ(f.at(4, 1), (IndexSet{1, 2, 3}));
  EXPECT_EQ(f.at(4, 2), (IndexSet{1, 2, 3}));
  EXPECT_FALSE(f.site(4, 2).rule.has_value());
}

TEST(Flow, SpecificPositionsUnion) {
  auto arch = ArchitectureConfig::uniform(1, 1, 1, 1, 4, true);
  RuleAssignment r;
  r.set_cls(1, 4, UpdateRule::specific_positions(IndexSet{2, 4}));
  const FlowTrace f = run(arch, r, sample_sequence(4, 1, Domain::kUnit, 2));
  EXPECT_EQ(f.at(5, 1), (IndexSet{2, 4}));
}

TEST(Flow, SpecificPositionsNeedPositionalEncoding) {
  auto arch = ArchitectureConfig::uniform(1, 1, 1, 1, 4, false);
  RuleAssignment r;
  r.set_cls(1, 4, UpdateRule::specific_positions(IndexSet{2}));
  EXPECT_THROW(r.validate(arch), ConfigError);
}

TEST(Flow, HeadCountMismatchNamesSite) {
  auto arch = ArchitectureConfig::uniform(2, 2, 1, 2, 4);
  RuleAssignment r;
  r.set(2, 1,
        UpdateRule::max_position({ScoreFunction::neg_min_cross_inner(), ScoreFunction::neg_min_cross_inner(),
                                  ScoreFunction::neg_min_cross_inner()}));
  try {
    r.validate(arch);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("t=2, l=1"), std::string::npos) << e.what();
  }
}

TEST(Flow, CrossScoreWithEmptyQueryHasNoSource) {
  auto arch = ArchitectureConfig::uniform(1, 1, 2, 2, 4);
  RuleAssignment r;
  r.set_cls(1, 4, UpdateRule::max_position({ScoreFunction::neg_min_cross_inner()}));
  const FlowTrace f = run(arch, r, fixture::worked_example());
  EXPECT_TRUE(f.at(5, 1).empty());
  EXPECT_EQ(f.site(5, 1).sources, (std::vector<int>{0}));
  EXPECT_TRUE(f.site(5, 1).tie);
}

TEST(Flow, StepRequiresTopLayer) {
  const FlowTrace f = FlowTrace::init(4);
  EXPECT_ANY_THROW(step(f, 1, RuleAssignment{}, fixture::worked_example()));
}

TEST(Flow, MaxPositionSizeBound) {
  // |I(t,l+1)| <= (h_{l+1} + 1) max_s |I(s,l)| on random multi-head runs.
  auto target = TargetSpec::random_intrinsic(3, 3, Domain::kUnit, 4);
  for (int i = 0; i < 100; ++i) {
    Rng rng = Rng::for_item(6, static_cast<uint64_t>(i));
    const Sequence x = sample_for(target, 7, rng);
    RuleAssignment r = fixture::intrinsic_rules(target, 7, 3, 3);
    r.set_tokens(2, 7, r.rules().at({1, 1}));
    const auto arch = fixture::two_layer_arch(3, 3, 3, 7);
    const FlowTrace f = run(arch, r, x);
    for (int l = 1; l <= 2; ++l) {
      int prev = 0;
      for (int s = 1; s <= 7; ++s) prev = std::max(prev, f.at(s, l - 1).size());
      for (int t = 1; t <= 8; ++t) EXPECT_LE(f.at(t, l).size(), 4 * std::max(prev, 1));
    }
  }
}

TEST(Flow, Deterministic) {
  const auto x = fixture::worked_example();
  EXPECT_TRUE(run(fixture::worked_example_arch(), fixture::worked_example_rules(), x) ==
              run(fixture::worked_example_arch(), fixture::worked_example_rules(), x));
}

TEST(Flow, PruningIntersects) {
  RuleAssignment r = fixture::worked_example_rules();
  r.prune(1, 1, IndexSet{1});
  const FlowTrace f = run(fixture::worked_example_arch(), r, fixture::worked_example());
  EXPECT_EQ(f.at(1, 1), (IndexSet{1}));
}

TEST(ModelComparisonCount, MatchesOracleOnRandomGrids) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 1 + static_cast<int>(rng.next() % 9);
    const int L = 1 + static_cast<int>(rng.next() % 4);
    const int beta = 1 + static_cast<int>(rng.next() % 3);
    std::vector<std::vector<IndexSet>> sets;
    ArchitectureConfig arch;
    arch.layers = L;
    arch.token_dim = 1;
    arch.seq_len = T;
    for (int l = 1; l <= L; ++l) {
      const int h = 1 + static_cast<int>(rng.next() % 4);
      arch.heads.push_back(h);
      arch.per_head.push_back(1);
      arch.embed.push_back(h);
    }
    std::vector<std::vector<long long>> sizes(1, std::vector<long long>(static_cast<size_t>(T + 1), 0));
    sets.push_back({});
    for (int t = 1; t <= T; ++t) sets.back().push_back(IndexSet{t});
    sets.back().push_back(IndexSet{});
    for (int l = 1; l <= L; ++l) {
      std::vector<IndexSet> layer;
      std::vector<long long> row;
      for (int t = 1; t <= T + 1; ++t) {
        std::vector<int> m;
        for (int s = 1; s <= T; ++s)
          if (rng.uniform() < 0.5) m.push_back(s);
        layer.push_back(IndexSet(m));
        row.push_back(static_cast<long long>(m.size()));
      }
      sets.push_back(layer);
      sizes.push_back(row);
    }
    const FlowTrace f = FlowTrace::from_sets(T, sets);
    EXPECT_EQ(model_comparison_count(f, arch, beta), oracle::comparison_count(sizes, arch.heads, T, beta));
  }
}

TEST(ModelComparisonCount, EmptySetsCountZero) {
  const FlowTrace f = FlowTrace::init(3);
  std::vector<std::vector<IndexSet>> sets = {{IndexSet{1}, IndexSet{2}, IndexSet{3}, IndexSet{}},
                                             {IndexSet{}, IndexSet{}, IndexSet{}, IndexSet{}}};
  auto arch = ArchitectureConfig::uniform(1, 1, 1, 1, 3);
  // Only the CLS term at layer 1: 0^2 - 1 + 1 * 2.
  EXPECT_EQ(model_comparison_count(FlowTrace::from_sets(3, sets), arch, 2), 1);
  (void)f;
}

TEST(LearnsFraction, IntrinsicFullHeadsLearn) {
  auto target = TargetSpec::random_intrinsic(2, 3, Domain::kUnit, 7);
  const auto r = learns_fraction(target, fixture::two_layer_arch(2, 2, 3, 8),
                                 fixture::intrinsic_rules(target, 8, 2, 2), 300, 1);
  EXPECT_EQ(r.fraction(), 1.0);
  const auto missing = learns_fraction(target, fixture::two_layer_arch(1, 2, 3, 8),
                                       fixture::intrinsic_rules(target, 8, 1, 2), 300, 1);
  EXPECT_LT(missing.fraction(), 1.0);
}

TEST(LearnsFraction, ThreadCountInvariant) {
  auto target = TargetSpec::random_intrinsic(2, 3, Domain::kUnit, 7);
  const auto arch = fixture::two_layer_arch(1, 2, 3, 8);
  const auto rules = fixture::intrinsic_rules(target, 8, 1, 2);
  const auto a = learns_fraction(target, arch, rules, 200, 5, 1);
  const auto b = learns_fraction(target, arch, rules, 200, 5, 4);
  EXPECT_EQ(a.learned, b.learned);
  EXPECT_EQ(a.flow_ties, b.flow_ties);
  EXPECT_EQ(a.excluded_ties, b.excluded_ties);
}

TEST(CostExponents, WorkedExample) {
  const auto arch = fixture::worked_example_arch();
  const auto rules = fixture::worked_example_rules();
  const FlowTrace f = run(arch, rules, fixture::worked_example());
  const CostReport c = cost_exponents(f, arch, rules, 2);
  ASSERT_EQ(c.sites.size(), 5u);
  for (const auto& s : c.sites) {
    EXPECT_EQ(s.set_size, 2);
    EXPECT_DOUBLE_EQ(s.kappa, 2.0);
    EXPECT_DOUBLE_EQ(s.exponent, 1.0);
  }
  EXPECT_DOUBLE_EQ(c.max_exponent, 1.0);
}

TEST(CostExponents, GlobalAndSpecific) {
  auto arch = ArchitectureConfig::uniform(1, 2, 4, 2, 8, true);
  RuleAssignment r;
  r.set(1, 1, UpdateRule::global());
  r.set_cls(1, 8, UpdateRule::specific_positions(IndexSet{1, 2}));
  const FlowTrace f = run(arch, r, sample_sequence(8, 2, Domain::kUnit, 3));
  const CostReport c = cost_exponents(f, arch, r, 2);
  ASSERT_EQ(c.sites.size(), 2u);
  EXPECT_DOUBLE_EQ(c.sites[0].kappa, 8.0 * 2 / 8);  // T d / E
  EXPECT_DOUBLE_EQ(c.sites[0].exponent, 1.0);
  EXPECT_DOUBLE_EQ(c.sites[1].kappa, 2.0 * 1 * 2 / 8);  // |I'| max|I| d / E
  EXPECT_DOUBLE_EQ(c.sites[1].exponent, 0.0);
}
