#include "infoflow/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace infoflow {

double domain_low(Domain domain) { return domain == Domain::kUnit ? 0.0 : -1.0; }
double domain_high(Domain) { return 1.0; }

std::string to_string(Domain domain) {
  return domain == Domain::kUnit ? "unit" : "symmetric";
}

Domain parse_domain(const std::string& name) {
  if (name == "unit" || name == "[0,1]") return Domain::kUnit;
  if (name == "symmetric" || name == "[-1,1]") return Domain::kSymmetric;
  throw ConfigError("unknown domain '" + name + "' (expected unit or symmetric)");
}

Token::Token(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw ConfigError("token must have dimension >= 1");
}

Token::Token(std::initializer_list<double> coords) : Token(std::vector<double>(coords)) {}

double dot(const Token& a, const Token& b) {
  double acc = 0.0;
  for (int i = 0; i < a.dim(); ++i) acc += a[i] * b[i];
  return acc;
}

Sequence::Sequence(std::vector<Token> tokens, Domain domain)
    : tokens_(std::move(tokens)), domain_(domain) {
  if (tokens_.empty()) throw ConfigError("sequence must contain at least one token");
  const int d = tokens_.front().dim();
  const double lo = domain_low(domain_);
  const double hi = domain_high(domain_);
  for (size_t t = 0; t < tokens_.size(); ++t) {
    if (tokens_[t].dim() != d) {
      throw ConfigError("token " + std::to_string(t + 1) + " has dimension " +
                        std::to_string(tokens_[t].dim()) + ", expected " + std::to_string(d));
    }
    for (double c : tokens_[t].coords()) {
      if (!(c >= lo && c <= hi)) {
        throw DomainError("token " + std::to_string(t + 1) + " leaves the " +
                          to_string(domain_) + " domain");
      }
    }
  }
}

const Token& Sequence::at(int position) const {
  if (position < 1 || position > length()) {
    throw DomainError("position " + std::to_string(position) + " outside [1," +
                      std::to_string(length()) + "]");
  }
  return tokens_[static_cast<size_t>(position - 1)];
}

Sequence Sequence::with_coordinate(int position, int coord, double value) const {
  Sequence copy = *this;
  auto& token = copy.tokens_.at(static_cast<size_t>(position - 1));
  std::vector<double> coords(token.coords().begin(), token.coords().end());
  coords.at(static_cast<size_t>(coord)) = value;
  token = Token(std::move(coords));
  return copy;
}

IndexSet::IndexSet(std::initializer_list<int> members) : IndexSet(std::vector<int>(members)) {}

IndexSet::IndexSet(std::vector<int> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (!members_.empty() && members_.front() < 1) {
    throw DomainError("index set positions are 1-based, got " + std::to_string(members_.front()));
  }
}

IndexSet IndexSet::range(int first, int last) {
  std::vector<int> members;
  for (int t = first; t <= last; ++t) members.push_back(t);
  return IndexSet(std::move(members));
}

bool IndexSet::contains(int position) const {
  return std::binary_search(members_.begin(), members_.end(), position);
}

bool IndexSet::is_subset_of(const IndexSet& other) const {
  return std::includes(other.members_.begin(), other.members_.end(), members_.begin(),
                       members_.end());
}

IndexSet IndexSet::united(const IndexSet& other) const {
  std::vector<int> out;
  out.reserve(members_.size() + other.members_.size());
  std::set_union(members_.begin(), members_.end(), other.members_.begin(), other.members_.end(),
                 std::back_inserter(out));
  IndexSet result;
  result.members_ = std::move(out);
  return result;
}

IndexSet IndexSet::intersected(const IndexSet& other) const {
  std::vector<int> out;
  std::set_intersection(members_.begin(), members_.end(), other.members_.begin(),
                        other.members_.end(), std::back_inserter(out));
  IndexSet result;
  result.members_ = std::move(out);
  return result;
}

namespace {

std::string join_braced(const std::vector<int>& values, char open, char close) {
  std::ostringstream os;
  os << open;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) os << ',';
    os << values[i];
  }
  os << close;
  return os.str();
}

}  // namespace

std::string IndexSet::to_string() const { return join_braced(members_, '{', '}'); }

OrderedIndexTuple::OrderedIndexTuple(std::initializer_list<int> entries)
    : OrderedIndexTuple(std::vector<int>(entries)) {}

OrderedIndexTuple::OrderedIndexTuple(std::vector<int> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw ConfigError("ordered index tuple must be nonempty");
  for (int e : entries_) {
    if (e < 1) throw DomainError("tuple positions are 1-based, got " + std::to_string(e));
  }
}

std::string OrderedIndexTuple::to_string() const { return join_braced(entries_, '(', ')'); }

std::vector<Token> subsequence(const Sequence& x, const OrderedIndexTuple& index) {
  std::vector<Token> out;
  out.reserve(static_cast<size_t>(index.size()));
  for (int t : index) out.push_back(x.at(t));
  return out;
}

std::vector<Token> subsequence(const Sequence& x, const IndexSet& index) {
  std::vector<Token> out;
  out.reserve(static_cast<size_t>(index.size()));
  for (int t : index) out.push_back(x.at(t));
  return out;
}

void ArchitectureConfig::validate() const {
  std::vector<std::string> errors;
  const auto L = static_cast<size_t>(std::max(layers, 0));
  if (layers < 1) errors.push_back("arch.L must be >= 1");
  if (heads.size() != L) errors.push_back("arch.heads must list L entries");
  if (embed.size() != L) errors.push_back("arch.embed must list L entries");
  if (per_head.size() != L) errors.push_back("arch.per_head must list L entries");
  if (seq_len < 1) errors.push_back("arch.T must be >= 1");
  if (token_dim < 1) errors.push_back("arch.d must be >= 1");
  if (heads.size() == L && embed.size() == L && per_head.size() == L) {
    for (size_t l = 0; l < L; ++l) {
      const std::string where = "layer " + std::to_string(l + 1);
      if (heads[l] < 1) errors.push_back(where + ": heads must be >= 1");
      if (per_head[l] < 1) errors.push_back(where + ": per_head must be >= 1");
      if (embed[l] != heads[l] * per_head[l]) {
        errors.push_back(where + ": embed " + std::to_string(embed[l]) + " != heads * per_head (" +
                         std::to_string(heads[l] * per_head[l]) + ")");
      }
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid architecture:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

int ArchitectureConfig::min_embed() const { return *std::min_element(embed.begin(), embed.end()); }

ArchitectureConfig ArchitectureConfig::uniform(int layers, int heads, int per_head, int token_dim,
                                               int seq_len, bool positional_encoding) {
  ArchitectureConfig arch;
  arch.layers = layers;
  arch.heads.assign(static_cast<size_t>(layers), heads);
  arch.per_head.assign(static_cast<size_t>(layers), per_head);
  arch.embed.assign(static_cast<size_t>(layers), heads * per_head);
  arch.token_dim = token_dim;
  arch.seq_len = seq_len;
  arch.positional_encoding = positional_encoding;
  arch.validate();
  return arch;
}

namespace {

uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(uint64_t seed) {
  uint64_t state = seed;
  for (auto& s : s_) s = splitmix64(state);
}

uint64_t Rng::next() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  // Box-Muller; u1 is kept away from 0.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Rng Rng::for_item(uint64_t seed, uint64_t index) {
  uint64_t state = seed ^ 0xD1B54A32D192ED03ULL;
  const uint64_t a = splitmix64(state);
  state = a + index * 0x9E3779B97F4A7C15ULL;
  return Rng(splitmix64(state));
}

Sequence sample_sequence(int seq_len, int token_dim, Domain domain, Rng& rng) {
  if (seq_len < 1) throw ConfigError("sample_sequence: T must be >= 1");
  if (token_dim < 1) throw ConfigError("sample_sequence: d must be >= 1");
  const double lo = domain_low(domain);
  const double hi = domain_high(domain);
  std::vector<Token> tokens;
  tokens.reserve(static_cast<size_t>(seq_len));
  for (int t = 0; t < seq_len; ++t) {
    std::vector<double> coords(static_cast<size_t>(token_dim));
    for (auto& c : coords) c = rng.uniform(lo, hi);
    tokens.emplace_back(std::move(coords));
  }
  return Sequence(std::move(tokens), domain);
}

Sequence sample_sequence(int seq_len, int token_dim, Domain domain, uint64_t seed) {
  Rng rng(seed);
  return sample_sequence(seq_len, token_dim, domain, rng);
}

Sequence sample_unit_ball(int seq_len, int token_dim, Rng& rng) {
  if (seq_len < 1 || token_dim < 1) throw ConfigError("sample_unit_ball: T and d must be >= 1");
  std::vector<Token> tokens;
  for (int t = 0; t < seq_len; ++t) {
    std::vector<double> coords(static_cast<size_t>(token_dim));
    double norm2 = 0.0;
    for (auto& c : coords) {
      c = rng.normal();
      norm2 += c * c;
    }
    const double radius = std::pow(rng.uniform(), 1.0 / token_dim);
    const double scale = norm2 > 0.0 ? radius / std::sqrt(norm2) : 0.0;
    for (auto& c : coords) c = std::clamp(c * scale, -1.0, 1.0);
    tokens.emplace_back(std::move(coords));
  }
  return Sequence(std::move(tokens), Domain::kSymmetric);
}

}  // namespace infoflow
