#include "infoflow/witness.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "infoflow/targets.hpp"
#include "parallel.hpp"

namespace infoflow {

// ---------------------------------------------------------------- min pair

MinPairConstruction MinPairConstruction::build(double beta) {
  if (!(beta > 0.0)) throw ConfigError("min-pair construction needs beta > 0");
  MinPairConstruction c;
  c.beta = beta;
  const Eigen::Matrix3d id3 = Eigen::Matrix3d::Identity();

  // W_Q^T W_K = diag(-I_3, 0)
  c.query1.setZero();
  c.query1.topLeftCorner<3, 3>() = -id3;
  c.key1.setZero();
  c.key1.topLeftCorner<3, 3>() = id3;
  c.value1.setIdentity();
  // W_O moves the first three coordinates into the last three.
  c.output1.setZero();
  c.output1.bottomLeftCorner<3, 3>() = id3;

  // W_Q^T W_K = A with A(2,1) = -2 as its only nonzero entry.
  c.query2.setIdentity();
  c.key2.setZero();
  c.key2(1, 0) = -2.0;
  c.value2.setIdentity();
  c.output2 = c.output1;
  return c;
}

namespace {

void check_min_pair_input(const Sequence& x) {
  if (x.dim() != 3 || x.domain() != Domain::kSymmetric)
    throw ConfigError("min-pair construction expects tokens in [-1,1]^3");
}

Vec6 embed(const Token& t) {
  Vec6 v = Vec6::Zero();
  for (int i = 0; i < 3; ++i) v(i) = t[i] / 3.0;
  return v;
}

/// Softmax-weighted average of values[s] under scores beta * raw[s].
Vec6 attend(const std::vector<double>& raw, double beta, const std::vector<Vec6>& values) {
  double top = -std::numeric_limits<double>::infinity();
  for (double r : raw) top = std::max(top, beta * r);
  double denom = 0.0;
  Vec6 acc = Vec6::Zero();
  for (size_t s = 0; s < raw.size(); ++s) {
    const double w = std::exp(beta * raw[s] - top);
    denom += w;
    acc += w * values[s];
  }
  return acc / denom;
}

// Exact stand-in for the inner-product feed-forward block.
Vec6 inner_product_block(const Vec6& h) {
  Vec6 out = Vec6::Zero();
  out(0) = h.head<3>().dot(h.tail<3>());
  out(1) = 0.5;
  return out;
}

}  // namespace

Eigen::MatrixXd first_layer_scores(const MinPairConstruction& cons, const Sequence& x) {
  check_min_pair_input(x);
  const int T = x.length();
  Eigen::MatrixXd scores(T, T);
  for (int t = 1; t <= T; ++t) {
    const Vec6 q = cons.query1 * embed(x.at(t));
    for (int s = 1; s <= T; ++s) scores(t - 1, s - 1) = q.dot(cons.key1 * embed(x.at(s)));
  }
  return scores;
}

double min_pair_forward(const MinPairConstruction& cons, const Sequence& x) {
  check_min_pair_input(x);
  const int T = x.length();
  std::vector<Vec6> h1(static_cast<size_t>(T));
  for (int t = 1; t <= T; ++t) h1[static_cast<size_t>(t - 1)] = embed(x.at(t));
  const Vec6 cls1 = Vec6::Zero();

  // Layer 1: every token and the CLS token attend over the T input tokens.
  std::vector<Vec6> keys(h1.size()), values(h1.size());
  for (size_t s = 0; s < h1.size(); ++s) {
    keys[s] = cons.key1 * h1[s];
    values[s] = cons.value1 * h1[s];
  }
  auto layer1 = [&](const Vec6& h) {
    const Vec6 q = cons.query1 * h;
    std::vector<double> raw(h1.size());
    for (size_t s = 0; s < h1.size(); ++s) raw[s] = q.dot(keys[s]);
    return inner_product_block(h + cons.output1 * attend(raw, cons.beta, values));
  };
  std::vector<Vec6> h2(h1.size());
  for (size_t t = 0; t < h1.size(); ++t) h2[t] = layer1(h1[t]);
  const Vec6 cls2 = layer1(cls1);

  // Layer 2: the CLS token reads out the smallest a(t).
  const Vec6 q = cons.query2 * cls2;
  std::vector<double> raw(h2.size());
  std::vector<Vec6> values2(h2.size());
  for (size_t t = 0; t < h2.size(); ++t) {
    raw[t] = q.dot(cons.key2 * h2[t]);
    values2[t] = cons.value2 * h2[t];
  }
  const Vec6 cls_out = cls2 + cons.output2 * attend(raw, cons.beta, values2);
  return 2.0 + 18.0 * cls_out(3);
}

std::vector<ErrorPoint> min_pair_error_curve(const std::vector<double>& betas, int seq_len,
                                             int n_samples, uint64_t seed, int threads) {
  if (betas.empty()) throw ConfigError("error curve needs at least one beta");
  for (size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0)) throw ConfigError("betas must be positive");
    if (i && !(betas[i] > betas[i - 1])) throw ConfigError("betas must be ascending");
  }
  if (n_samples < 1) throw ConfigError("error curve needs n_samples >= 1");
  const TargetSpec target = TargetSpec::min_pair_shifted(3, Domain::kSymmetric);
  std::vector<MinPairConstruction> cons;
  for (double b : betas) cons.push_back(MinPairConstruction::build(b));

  std::vector<std::vector<double>> err(betas.size(),
                                       std::vector<double>(static_cast<size_t>(n_samples)));
  detail::parallel_for(n_samples, threads, [&](int64_t i) {
    Rng rng = Rng::for_item(seed, static_cast<uint64_t>(i));
    const Sequence x = sample_unit_ball(seq_len, 3, rng);
    const double exact = evaluate(target, x);
    for (size_t b = 0; b < cons.size(); ++b)
      err[b][static_cast<size_t>(i)] = std::abs(min_pair_forward(cons[b], x) - exact);
  });
  std::vector<ErrorPoint> curve;
  for (size_t b = 0; b < betas.size(); ++b)
    curve.push_back({betas[b], *std::max_element(err[b].begin(), err[b].end())});
  return curve;
}

// ---------------------------------------------------------------- codec

BinaryCodec::BinaryCodec(int input_dim, int latent_dim, int bits)
    : m_(input_dim), n_(latent_dim), bits_(bits) {
  if (m_ < 1 || n_ < 1 || bits_ < 1)
    throw ConfigError("codec dimensions and bit depth must be >= 1");
  if (bits_ > 52) throw ConfigError("codec bit depth above 52 is not representable in a double");
}

int bits_for_accuracy(int input_dim, double eps) {
  if (input_dim < 1 || !(eps > 0.0)) throw ConfigError("bits_for_accuracy: need m >= 1, eps > 0");
  return static_cast<int>(std::ceil(std::log2(2.0 * input_dim / eps)));
}

double DyadicCode::value() const {
  double v = 0.0;
  for (size_t i = bits.size(); i-- > 0;) v = (v + bits[i]) * 0.5;
  return v;
}

namespace {

std::vector<uint64_t> truncated_levels(const BinaryCodec& codec, std::span<const double> v) {
  if (static_cast<int>(v.size()) != codec.input_dim())
    throw DomainError("codec input has " + std::to_string(v.size()) + " coordinates, expected " +
                      std::to_string(codec.input_dim()));
  const uint64_t top = (uint64_t{1} << codec.bits()) - 1;
  std::vector<uint64_t> levels;
  for (double c : v) {
    if (!(c >= 0.0 && c <= 1.0)) throw DomainError("codec input leaves [0,1]");
    const double scaled = std::floor(std::ldexp(c, codec.bits()));
    levels.push_back(std::min(static_cast<uint64_t>(scaled), top));
  }
  return levels;
}

}  // namespace

std::vector<double> truncate_bits(const BinaryCodec& codec, std::span<const double> v) {
  std::vector<double> out;
  for (uint64_t level : truncated_levels(codec, v))
    out.push_back(std::ldexp(static_cast<double>(level), -codec.bits()));
  return out;
}

Latent encode(const BinaryCodec& codec, std::span<const double> v) {
  const int L = codec.bits();
  const int q = codec.bits_per_latent();
  std::vector<uint8_t> stream;
  stream.reserve(static_cast<size_t>(codec.input_dim() * L));
  for (uint64_t level : truncated_levels(codec, v))
    for (int b = L - 1; b >= 0; --b) stream.push_back(static_cast<uint8_t>((level >> b) & 1u));
  Latent latent(static_cast<size_t>(codec.latent_dim()));
  for (int i = 0; i < codec.latent_dim(); ++i) {
    auto& code = latent[static_cast<size_t>(i)].bits;
    code.assign(static_cast<size_t>(q), 0);
    for (int b = 0; b < q; ++b) {
      const size_t pos = static_cast<size_t>(i) * static_cast<size_t>(q) + static_cast<size_t>(b);
      if (pos < stream.size()) code[static_cast<size_t>(b)] = stream[pos];
    }
  }
  return latent;
}

std::vector<double> decode(const BinaryCodec& codec, const Latent& latent) {
  const int L = codec.bits();
  const auto q = static_cast<size_t>(codec.bits_per_latent());
  if (static_cast<int>(latent.size()) != codec.latent_dim())
    throw DomainError("latent has the wrong number of coordinates");
  std::vector<uint8_t> stream;
  for (const auto& code : latent) {
    if (code.bits.size() != q) throw DomainError("latent code is not q-bit aligned");
    stream.insert(stream.end(), code.bits.begin(), code.bits.end());
  }
  std::vector<double> out(static_cast<size_t>(codec.input_dim()));
  for (int j = 0; j < codec.input_dim(); ++j) {
    uint64_t level = 0;
    for (int b = 0; b < L; ++b) level = (level << 1) | stream[static_cast<size_t>(j * L + b)];
    out[static_cast<size_t>(j)] = std::ldexp(static_cast<double>(level), -L);
  }
  return out;
}

Latent latent_from_values(const BinaryCodec& codec, std::span<const double> values) {
  const int q = codec.bits_per_latent();
  if (q > 52) throw ConfigError("latent codes of more than 52 bits do not fit a double");
  if (static_cast<int>(values.size()) != codec.latent_dim())
    throw DomainError("latent has the wrong number of coordinates");
  Latent latent;
  for (double v : values) {
    if (!(v >= 0.0 && v < 1.0)) throw DomainError("latent value leaves [0,1)");
    const auto level = static_cast<uint64_t>(std::floor(std::ldexp(v, q)));
    DyadicCode code;
    for (int b = q - 1; b >= 0; --b) code.bits.push_back(static_cast<uint8_t>((level >> b) & 1u));
    latent.push_back(std::move(code));
  }
  return latent;
}

CodecOrders codec_parameter_formula(const BinaryCodec& codec) {
  return {codec.input_dim() * std::ldexp(1.0, codec.bits()),
          std::ldexp(1.0, codec.bits_per_latent())};
}

// ---------------------------------------------------------------- pigeonhole

ScoreMap ScoreMap::parse(const std::string& name) {
  if (name == "identity") return ScoreMap{1.0};
  if (name == "constant") return ScoreMap{0.0};
  if (name.rfind("linear:", 0) == 0) {
    double c = 0.0;
    try {
      c = std::stod(name.substr(7));
    } catch (const std::logic_error&) {
      throw ConfigError("bad rho '" + name + "'");
    }
    if (!(c >= 0.0)) throw ConfigError("rho must be nondecreasing (linear slope >= 0)");
    return ScoreMap{c};
  }
  throw ConfigError("unknown rho '" + name + "' (expected identity, constant, linear:c)");
}

std::string ScoreMap::name() const {
  if (slope == 1.0) return "identity";
  if (slope == 0.0) return "constant";
  char buf[64];
  std::snprintf(buf, sizeof buf, "linear:%.17g", slope);
  return buf;
}

FeatureMap FeatureMap::parse(const std::string& name, int dim) {
  if (dim < 1) throw ConfigError("feature dimension must be >= 1");
  if (name == "identity") {
    if (dim != 1) throw ConfigError("identity feature map has dimension 1");
    return FeatureMap{Kind::kIdentity, 1};
  }
  if (name == "powers") return FeatureMap{Kind::kPowers, dim};
  throw ConfigError("unknown feature map '" + name + "' (expected identity or powers)");
}

std::vector<double> FeatureMap::operator()(double x) const {
  if (kind == Kind::kIdentity) return {x};
  std::vector<double> out;
  double p = 1.0;
  for (int i = 0; i < dim; ++i) out.push_back(p *= x);
  return out;
}

std::string FeatureMap::name() const { return kind == Kind::kIdentity ? "identity" : "powers"; }

long long AdversarialSearchSpec::grid_size() const {
  return static_cast<long long>(std::floor(1.0 / (16.0 * free_count() * epsilon)));
}

double AdversarialSearchSpec::grid_offset(int j) const {
  return static_cast<double>(j - 1) / (2.0 * free_count());
}

double AdversarialSearchSpec::cube_side() const {
  const double m = free_count();
  return 4.0 * m * std::pow(static_cast<double>(grid_size()), -m / (feature_dim + 1.0));
}

double AdversarialSearchSpec::bucket_count() const {
  return std::pow(free_count() / cube_side() + 1.0, feature_dim + 1.0);
}

void AdversarialSearchSpec::validate() const {
  std::vector<std::string> errors;
  if (k < 2 || k > seq_len - 1) errors.push_back("need 2 <= k <= T-1");
  if (feature_dim < 1 || features.dim != feature_dim)
    errors.push_back("feature map dimension must equal n_feat >= 1");
  if (!(rho.slope >= 0.0)) errors.push_back("rho must be nondecreasing");
  if (errors.empty()) {
    if (!(epsilon > 0.0) || !(epsilon < 1.0 / (64.0 * free_count())))
      errors.push_back("epsilon must lie in (0, 1/(64m)) with m = T-k+1 = " +
                       std::to_string(free_count()));
    else if (std::pow(static_cast<double>(grid_size()), free_count()) >
             static_cast<double>(kMaxEnumeration))
      errors.push_back("N^m exceeds the enumeration guard of 1e7");
  }
  if (!errors.empty()) {
    std::string msg = "invalid adversarial search spec:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

namespace {

double weight(const AdversarialSearchSpec& spec, double x) { return std::exp(spec.rho(x) - spec.rho(1.0)); }

struct KeyHash {
  size_t operator()(const std::vector<long long>& key) const {
    size_t h = 1469598103934665603ULL;
    for (long long v : key) h = (h ^ static_cast<size_t>(v)) * 1099511628211ULL;
    return h;
  }
};

}  // namespace

std::vector<double> attention_summary(const AdversarialSearchSpec& spec, const Sequence& x) {
  std::vector<double> num(static_cast<size_t>(spec.feature_dim), 0.0);
  double den = 0.0;
  for (const Token& tok : x.tokens()) {
    const double w = weight(spec, tok[0]);
    const auto f = spec.features(tok[0]);
    for (size_t i = 0; i < num.size(); ++i) num[i] += w * f[i];
    den += w;
  }
  for (double& v : num) v /= den;
  return num;
}

std::optional<AdversarialPair> adversarial_pair_search(const AdversarialSearchSpec& spec) {
  spec.validate();
  const int m = spec.free_count();
  const long long N = spec.grid_size();
  const double eta = spec.cube_side();
  const int dims = spec.feature_dim + 1;

  // Per-grid-point contributions a(z) (first n coords) and b(z) (last).
  std::vector<std::vector<std::vector<double>>> contrib(static_cast<size_t>(m));
  for (int j = 1; j <= m; ++j)
    for (long long q = 1; q <= N; ++q) {
      const double z = spec.grid_offset(j) + static_cast<double>(q) * spec.spacing();
      const double lam = weight(spec, z);
      std::vector<double> c;
      for (double f : spec.features(z)) c.push_back(lam * f);
      c.push_back(lam);
      contrib[static_cast<size_t>(j - 1)].push_back(std::move(c));
    }

  auto grid_point = [&](int j, long long q) {
    return spec.grid_offset(j) + static_cast<double>(q) * spec.spacing();
  };

  std::unordered_map<std::vector<long long>, std::vector<long long>, KeyHash> buckets;
  std::vector<long long> digits(static_cast<size_t>(m), 1);
  long long enumerated = 0;
  std::vector<double> sum(static_cast<size_t>(dims));
  std::vector<long long> key(static_cast<size_t>(dims));
  while (true) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int j = 0; j < m; ++j) {
      const auto& c = contrib[static_cast<size_t>(j)][static_cast<size_t>(digits[static_cast<size_t>(j)] - 1)];
      for (int i = 0; i < dims; ++i) sum[static_cast<size_t>(i)] += c[static_cast<size_t>(i)];
    }
    for (int i = 0; i < dims; ++i)
      key[static_cast<size_t>(i)] = static_cast<long long>(std::floor(sum[static_cast<size_t>(i)] / eta));
    ++enumerated;
    auto [it, inserted] = buckets.try_emplace(key, digits);
    if (!inserted) {
      const std::vector<long long>& first = it->second;
      AdversarialPair pair{.x = Sequence({Token{0.0}}, Domain::kUnit),
                           .y = Sequence({Token{0.0}}, Domain::kUnit)};
      std::vector<double> sz(static_cast<size_t>(dims), 0.0), szp(static_cast<size_t>(dims), 0.0);
      for (int j = 1; j <= m; ++j) {
        const auto qa = first[static_cast<size_t>(j - 1)];
        const auto qb = digits[static_cast<size_t>(j - 1)];
        pair.z.push_back(grid_point(j, qa));
        pair.z_prime.push_back(grid_point(j, qb));
        if (qa != qb) pair.differing.push_back(j);
        const auto& ca = contrib[static_cast<size_t>(j - 1)][static_cast<size_t>(qa - 1)];
        const auto& cb = contrib[static_cast<size_t>(j - 1)][static_cast<size_t>(qb - 1)];
        for (int i = 0; i < dims; ++i) {
          sz[static_cast<size_t>(i)] += ca[static_cast<size_t>(i)];
          szp[static_cast<size_t>(i)] += cb[static_cast<size_t>(i)];
        }
      }
      pair.j_star = pair.differing.back();
      std::vector<Token> xs, ys;
      for (int t = 1; t < spec.k; ++t) {
        xs.push_back(Token{1.0});
        ys.push_back(Token{1.0});
      }
      for (int j = 1; j <= m; ++j) {
        const bool in_j = std::find(pair.differing.begin(), pair.differing.end(), j) != pair.differing.end();
        xs.push_back(Token{in_j ? pair.z[static_cast<size_t>(j - 1)] : 0.0});
        ys.push_back(Token{in_j ? pair.z_prime[static_cast<size_t>(j - 1)] : 0.0});
      }
      pair.x = Sequence(std::move(xs), Domain::kUnit);
      pair.y = Sequence(std::move(ys), Domain::kUnit);

      const TargetSpec kth = TargetSpec::kth_largest(spec.k);
      pair.target_gap = std::abs(evaluate(kth, pair.x) - evaluate(kth, pair.y));
      double l2 = 0.0;
      for (int i = 0; i < dims; ++i) {
        const double g = std::abs(sz[static_cast<size_t>(i)] - szp[static_cast<size_t>(i)]);
        pair.summed_gap_inf = std::max(pair.summed_gap_inf, g);
        l2 += g * g;
      }
      pair.summed_gap_l2 = std::sqrt(l2);
      pair.bucket_diagonal = eta * std::sqrt(static_cast<double>(dims));
      const auto ax = attention_summary(spec, pair.x);
      const auto ay = attention_summary(spec, pair.y);
      for (size_t i = 0; i < ax.size(); ++i)
        pair.representation_gap_inf = std::max(pair.representation_gap_inf, std::abs(ax[i] - ay[i]));
      pair.representation_bound = 2.0 * eta / (spec.k - 1);
      pair.enumerated = enumerated;
      pair.pigeonhole_guaranteed =
          spec.bucket_count() < std::pow(static_cast<double>(N), static_cast<double>(m));
      return pair;
    }
    // Next subsequence in lexicographic order (last coordinate fastest).
    int j = m - 1;
    while (j >= 0 && digits[static_cast<size_t>(j)] == N) digits[static_cast<size_t>(j--)] = 1;
    if (j < 0) break;
    ++digits[static_cast<size_t>(j)];
  }
  return std::nullopt;
}

}  // namespace infoflow
