#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace infoflow {

/// Invalid or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An argument outside the domain of an operation, e.g. an index past T.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The requested target has no built-in construction for this operation.
class UnsupportedError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Internal invariant violated (maps to CLI exit code 1).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Coordinate box of the input tokens.
enum class Domain {
  kUnit,       // [0, 1]
  kSymmetric,  // [-1, 1]
};

double domain_low(Domain domain);
double domain_high(Domain domain);
std::string to_string(Domain domain);
Domain parse_domain(const std::string& name);

class Token {
 public:
  Token() = default;
  explicit Token(std::vector<double> coords);
  Token(std::initializer_list<double> coords);

  int dim() const { return static_cast<int>(coords_.size()); }
  double operator[](int i) const { return coords_[static_cast<size_t>(i)]; }
  std::span<const double> coords() const { return coords_; }

  bool operator==(const Token&) const = default;

 private:
  std::vector<double> coords_;
};

double dot(const Token& a, const Token& b);

/// A length-T token sequence. Positions are 1-based; the classification
/// token (position T+1) is never stored here.
class Sequence {
 public:
  Sequence(std::vector<Token> tokens, Domain domain);

  int length() const { return static_cast<int>(tokens_.size()); }
  int dim() const { return tokens_.front().dim(); }
  Domain domain() const { return domain_; }

  /// 1-based access; throws DomainError outside [1, T].
  const Token& at(int position) const;
  const std::vector<Token>& tokens() const { return tokens_; }

  /// Copy with one coordinate of one token replaced (no domain check, used by
  /// finite differences).
  Sequence with_coordinate(int position, int coord, double value) const;

  bool operator==(const Sequence&) const = default;

 private:
  std::vector<Token> tokens_;
  Domain domain_;
};

/// Sorted duplicate-free set of positions.
class IndexSet {
 public:
  IndexSet() = default;
  /// Sorts and deduplicates; positions must be >= 1.
  IndexSet(std::initializer_list<int> members);
  explicit IndexSet(std::vector<int> members);

  static IndexSet range(int first, int last);

  int size() const { return static_cast<int>(members_.size()); }
  bool empty() const { return members_.empty(); }
  bool contains(int position) const;
  bool is_subset_of(const IndexSet& other) const;
  IndexSet united(const IndexSet& other) const;
  IndexSet intersected(const IndexSet& other) const;
  int max() const { return members_.back(); }

  const std::vector<int>& members() const { return members_; }
  auto begin() const { return members_.begin(); }
  auto end() const { return members_.end(); }

  /// "{1,3}" / "{}".
  std::string to_string() const;

  bool operator==(const IndexSet&) const = default;
  auto operator<=>(const IndexSet&) const = default;

 private:
  std::vector<int> members_;
};

/// Ordered positions with repetition allowed (leaf tuples of comparison
/// trees).
class OrderedIndexTuple {
 public:
  OrderedIndexTuple(std::initializer_list<int> entries);
  explicit OrderedIndexTuple(std::vector<int> entries);

  int size() const { return static_cast<int>(entries_.size()); }
  int operator[](int i) const { return entries_[static_cast<size_t>(i)]; }
  const std::vector<int>& entries() const { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  IndexSet as_set() const { return IndexSet(entries_); }
  std::string to_string() const;

  bool operator==(const OrderedIndexTuple&) const = default;

 private:
  std::vector<int> entries_;
};

/// Tokens of X at the tuple's positions, in tuple order.
std::vector<Token> subsequence(const Sequence& x, const OrderedIndexTuple& index);
std::vector<Token> subsequence(const Sequence& x, const IndexSet& index);

struct ArchitectureConfig {
  int layers = 0;
  std::vector<int> heads;     // h_1..h_L
  std::vector<int> embed;     // E_1..E_L
  std::vector<int> per_head;  // n_1..n_L
  int token_dim = 0;
  int seq_len = 0;
  bool positional_encoding = false;

  /// Throws ConfigError listing every violated constraint.
  void validate() const;

  int heads_at(int layer) const { return heads.at(static_cast<size_t>(layer - 1)); }
  int embed_at(int layer) const { return embed.at(static_cast<size_t>(layer - 1)); }
  int min_embed() const;

  /// Convenience constructor with E_l = h_l * n_l.
  static ArchitectureConfig uniform(int layers, int heads, int per_head, int token_dim,
                                    int seq_len, bool positional_encoding = false);

  bool operator==(const ArchitectureConfig&) const = default;
};

/// splitmix64-seeded xoshiro256** stream. Portable and bit-reproducible.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next();
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();

  /// Independent stream for item `index` of a batch seeded with `seed`.
  static Rng for_item(uint64_t seed, uint64_t index);

 private:
  uint64_t s_[4];
};

Sequence sample_sequence(int seq_len, int token_dim, Domain domain, uint64_t seed);
Sequence sample_sequence(int seq_len, int token_dim, Domain domain, Rng& rng);

/// Tokens uniform in the closed unit ball of R^d (a sub-box of [-1,1]^d).
Sequence sample_unit_ball(int seq_len, int token_dim, Rng& rng);

}  // namespace infoflow
