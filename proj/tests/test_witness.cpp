#include <gtest/gtest.h>

#include <cmath>

#include "infoflow/targets.hpp"
#include "infoflow/witness.hpp"

using namespace infoflow;

namespace {

Sequence cube(std::vector<std::vector<double>> rows) {
  std::vector<Token> tokens;
  for (auto& r : rows) tokens.emplace_back(std::move(r));
  return Sequence(std::move(tokens), Domain::kSymmetric);
}

}  // namespace

TEST(MinPair, OppositeTokens) {
  const auto c = MinPairConstruction::build(1e3);
  EXPECT_NEAR(min_pair_forward(c, cube({{1, 0, 0}, {-1, 0, 0}})), 0.0, 0.02);
}

TEST(MinPair, SingleTokenIsExact) {
  const auto target = TargetSpec::min_pair_shifted(3);
  for (double beta : {0.5, 10.0, 1e4}) {
    const auto c = MinPairConstruction::build(beta);
    const Sequence x = cube({{0.3, -0.2, 0.5}});
    EXPECT_NEAR(min_pair_forward(c, x), evaluate(target, x), 1e-12);
  }
}

TEST(MinPair, ZeroTokens) {
  for (double beta : {1.0, 1e3}) EXPECT_NEAR(min_pair_forward(MinPairConstruction::build(beta), cube({{0, 0, 0}, {0, 0, 0}})), 2.0, 1e-12);
}

TEST(MinPair, FirstLayerScores) {
  const auto c = MinPairConstruction::build(10.0);
  Rng rng(4);
  const Sequence x = sample_unit_ball(6, 3, rng);
  const Eigen::MatrixXd s = first_layer_scores(c, x);
  for (int t = 1; t <= 6; ++t)
    for (int u = 1; u <= 6; ++u)
      EXPECT_NEAR(s(t - 1, u - 1), -dot(x.at(t), x.at(u)) / 9.0, 1e-12);
}

TEST(MinPair, FiniteAtLargeBeta) {
  const auto c = MinPairConstruction::build(1e4);
  Rng rng(5);
  for (int i = 0; i < 100; ++i)
    EXPECT_TRUE(std::isfinite(min_pair_forward(c, sample_sequence(8, 3, Domain::kSymmetric, rng))));
}

TEST(MinPair, RejectsWrongInput) {
  EXPECT_THROW(MinPairConstruction::build(0.0), ConfigError);
  const auto c = MinPairConstruction::build(1.0);
  EXPECT_THROW(min_pair_forward(c, Sequence({Token{0.1, 0.2}}, Domain::kSymmetric)), ConfigError);
  EXPECT_THROW(min_pair_forward(c, Sequence({Token{0.1, 0.2, 0.3}}, Domain::kUnit)), ConfigError);
}

TEST(MinPair, ErrorCurveShrinks) {
  const auto curve = min_pair_error_curve({10, 100, 1000}, 8, 300, 1);
  ASSERT_EQ(curve.size(), 3u);
  EXPECT_LE(curve[1].sup_error, curve[0].sup_error + 1e-6);
  EXPECT_LE(curve[2].sup_error, curve[1].sup_error + 1e-6);
  for (const auto& p : min_pair_error_curve({1, 10, 100}, 1, 50, 2)) EXPECT_NEAR(p.sup_error, 0.0, 1e-12);
  EXPECT_THROW(min_pair_error_curve({10, 5}, 4, 10, 1), ConfigError);
}

TEST(MinPair, ErrorCurveThreadInvariant) {
  const auto a = min_pair_error_curve({10, 100}, 6, 200, 3, 1);
  const auto b = min_pair_error_curve({10, 100}, 6, 200, 3, 4);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].sup_error, b[i].sup_error);
}

TEST(Codec, ConcatenatedBits) {
  const BinaryCodec c(2, 1, 3);
  EXPECT_EQ(c.bits_per_latent(), 6);
  const std::vector<double> v{0.625, 0.375};
  const Latent z = encode(c, v);
  ASSERT_EQ(z.size(), 1u);
  EXPECT_EQ(z[0].bits, (std::vector<uint8_t>{1, 0, 1, 0, 1, 1}));
  EXPECT_EQ(z[0].value(), 0.671875);
  EXPECT_EQ(decode(c, z), v);
}

TEST(Codec, ZeroAndAllOnes) {
  const BinaryCodec c(3, 2, 4);
  for (const auto& code : encode(c, std::vector<double>{0, 0, 0}))
    for (auto b : code.bits) EXPECT_EQ(b, 0);
  const double top = 1.0 - std::ldexp(1.0, -4);
  const Latent z = encode(c, std::vector<double>{top, top, top});
  // 12 assigned bits over two 6-bit codes: all ones.
  for (const auto& code : z)
    for (auto b : code.bits) EXPECT_EQ(b, 1);
}

TEST(Codec, PaddingIsZero) {
  const BinaryCodec c(1, 2, 3);  // q = 2, 3 bits assigned out of 4
  const Latent z = encode(c, std::vector<double>{1.0});
  EXPECT_EQ(z[0].bits, (std::vector<uint8_t>{1, 1}));
  EXPECT_EQ(z[1].bits, (std::vector<uint8_t>{1, 0}));
}

TEST(Codec, ThirdsTruncate) {
  const BinaryCodec c(2, 1, 3);
  const std::vector<double> v{1.0 / 3.0, 2.0 / 3.0};
  const auto back = decode(c, encode(c, v));
  EXPECT_EQ(back, (std::vector<double>{0.25, 0.625}));
  for (size_t i = 0; i < v.size(); ++i) EXPECT_LE(std::abs(back[i] - v[i]), 0.125);
}

TEST(Codec, RoundTripEqualsTruncation) {
  Rng rng(77);
  for (int i = 0; i < 2000; ++i) {
    const int m = 1 + static_cast<int>(rng.next() % 8);
    const int n = 1 + static_cast<int>(rng.next() % 4);
    const int L = 1 + static_cast<int>(rng.next() % 20);
    const BinaryCodec c(m, n, L);
    std::vector<double> v(static_cast<size_t>(m));
    for (double& x : v) x = rng.uniform();
    const auto back = decode(c, encode(c, v));
    EXPECT_EQ(back, truncate_bits(c, v));
    for (size_t j = 0; j < v.size(); ++j) EXPECT_LE(std::abs(v[j] - back[j]), std::ldexp(1.0, -L));
  }
}

TEST(Codec, LatentValuesRoundTripWhenShort) {
  const BinaryCodec c(4, 2, 5);  // q = 10
  const std::vector<double> v{0.1, 0.9, 0.5, 0.3};
  const Latent z = encode(c, v);
  std::vector<double> values;
  for (const auto& code : z) values.push_back(code.value());
  EXPECT_EQ(latent_from_values(c, values), z);
}

TEST(Codec, RejectsOutOfBox) {
  const BinaryCodec c(2, 1, 3);
  EXPECT_THROW(encode(c, std::vector<double>{0.5, 1.5}), DomainError);
  EXPECT_THROW(encode(c, std::vector<double>{0.5}), DomainError);
  EXPECT_THROW(BinaryCodec(0, 1, 1), ConfigError);
}

TEST(Codec, ParameterOrders) {
  const auto a = codec_parameter_formula(BinaryCodec(2, 1, 3));
  EXPECT_EQ(a.encoder, 16.0);
  EXPECT_EQ(a.decoder, 64.0);
  EXPECT_EQ(codec_parameter_formula(BinaryCodec(4, 2, 10)).decoder, std::ldexp(1.0, 20));
  EXPECT_LE(codec_parameter_formula(BinaryCodec(2, 6, 3)).decoder, 2.0);
  EXPECT_EQ(bits_for_accuracy(2, 0.5), 3);
}

TEST(Adversarial, FindsPairWithGaps) {
  AdversarialSearchSpec s;
  s.seq_len = 6;
  s.k = 2;
  s.feature_dim = 1;
  s.epsilon = 1.0 / 400.0;
  const auto pair = adversarial_pair_search(s);
  ASSERT_TRUE(pair.has_value());
  const TargetSpec kth = TargetSpec::kth_largest(2);
  const double fx = evaluate(kth, pair->x);
  const double fy = evaluate(kth, pair->y);
  EXPECT_EQ(fx, pair->z[static_cast<size_t>(pair->j_star - 1)]);
  EXPECT_EQ(fy, pair->z_prime[static_cast<size_t>(pair->j_star - 1)]);
  EXPECT_GE(std::abs(fx - fy), 4 * s.epsilon);
  EXPECT_LE(pair->summed_gap_l2, pair->bucket_diagonal);
  EXPECT_LE(pair->representation_gap_inf, pair->representation_bound);
  const auto ax = attention_summary(s, pair->x);
  const auto ay = attention_summary(s, pair->y);
  EXPECT_DOUBLE_EQ(std::abs(ax[0] - ay[0]), pair->representation_gap_inf);
}

TEST(Adversarial, VariantsHoldGaps) {
  for (int k : {2, 3}) {
    for (const char* rho : {"identity", "constant", "linear:3"}) {
      AdversarialSearchSpec s;
      s.seq_len = 6;
      s.k = k;
      s.feature_dim = 2;
      s.epsilon = 1.0 / 500.0;
      s.rho = ScoreMap::parse(rho);
      s.features = FeatureMap::parse("powers", 2);
      const auto pair = adversarial_pair_search(s);
      if (!pair) continue;
      const TargetSpec kth = TargetSpec::kth_largest(k);
      EXPECT_GE(std::abs(evaluate(kth, pair->x) - evaluate(kth, pair->y)), 4 * s.epsilon - 1e-15);
      EXPECT_LE(pair->summed_gap_l2, pair->bucket_diagonal);
      EXPECT_LE(pair->representation_gap_inf, pair->representation_bound);
    }
  }
}

TEST(Adversarial, RejectsDegenerateSpecs) {
  AdversarialSearchSpec s;
  s.seq_len = 6;
  s.k = 2;
  s.feature_dim = 1;
  s.epsilon = 1.0 / 320.0;  // not below 1/(64m) with m = 5
  EXPECT_THROW(adversarial_pair_search(s), ConfigError);
  s.epsilon = 1.0 / 400.0;
  s.k = 6;
  EXPECT_THROW(adversarial_pair_search(s), ConfigError);
  s.k = 2;
  s.seq_len = 12;  // m = 11, N^m far beyond the guard
  s.epsilon = 1e-5;
  EXPECT_THROW(adversarial_pair_search(s), ConfigError);
  EXPECT_THROW(ScoreMap::parse("linear:-1"), ConfigError);
}
