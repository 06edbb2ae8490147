#include "infoflow/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace infoflow {

std::string to_string(OutputFormat format) { return format == OutputFormat::kJson ? "json" : "csv"; }

OutputFormat parse_output_format(const std::string& name) {
  if (name == "json") return OutputFormat::kJson;
  if (name == "csv") return OutputFormat::kCsv;
  throw ConfigError("unknown output format '" + name + "' (expected json or csv)");
}

std::string format_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::optional<Sequence> AnalysisConfig::input_sequence() const {
  if (!input) return std::nullopt;
  std::vector<Token> tokens;
  for (const auto& row : *input) tokens.emplace_back(row);
  return Sequence(std::move(tokens), target.domain);
}

bool AnalysisConfig::operator==(const AnalysisConfig& other) const {
  return target == other.target && arch == other.arch && rules == other.rules &&
         input == other.input && run == other.run && output == other.output;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  return out;
}

long long to_integer(const std::string& s) {
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::logic_error&) {
    throw ConfigError("'" + s + "' is not an integer");
  }
  if (used != s.size()) throw ConfigError("'" + s + "' is not an integer");
  return v;
}

int to_int(const std::string& s) {
  const long long v = to_integer(s);
  if (v < INT32_MIN || v > INT32_MAX) throw ConfigError("'" + s + "' is out of range");
  return static_cast<int>(v);
}

double to_double(const std::string& s) {
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::logic_error&) {
    throw ConfigError("'" + s + "' is not a number");
  }
  if (used != s.size()) throw ConfigError("'" + s + "' is not a number");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw ConfigError("'" + s + "' is not true/false");
}

std::vector<int> to_ints(const std::string& s) {
  std::vector<int> out;
  for (const auto& w : words(s)) out.push_back(to_int(w));
  if (out.empty()) throw ConfigError("expected at least one integer");
  return out;
}

std::vector<double> to_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& w : words(s)) out.push_back(to_double(w));
  if (out.empty()) throw ConfigError("expected at least one number");
  return out;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_number(v[i]);
  return s;
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + std::to_string(v[i]);
  return s;
}

/// Parsed key-value lines with usage tracking and error collection.
class Entries {
 public:
  explicit Entries(const std::string& text) {
    std::istringstream is(text);
    int line_no = 0;
    for (std::string line; std::getline(is, line);) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        error(line_no, "", "expected 'key = value'");
        continue;
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty() || value.empty()) {
        error(line_no, key, "empty key or value");
        continue;
      }
      if (!entries_.emplace(key, Entry{value, line_no}).second)
        error(line_no, key, "duplicate key");
    }
  }

  const std::string* get(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    used_.insert(key);
    return &it->second.value;
  }

  int line(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  /// Runs `fn(value)` for `key` if present, recording ConfigErrors.
  template <typename Fn>
  void with(const std::string& key, Fn fn) {
    if (const std::string* v = get(key)) guard(key, [&] { fn(*v); });
  }

  template <typename Fn>
  void require(const std::string& key, Fn fn) {
    if (const std::string* v = get(key))
      guard(key, [&] { fn(*v); });
    else
      error(0, key, "required key is missing");
  }

  template <typename Fn>
  void guard(const std::string& key, Fn fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      error(line(key), key, e.what());
    } catch (const DomainError& e) {
      error(line(key), key, e.what());
    }
  }

  std::vector<std::string> keys_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
      if (k.rfind(prefix, 0) == 0) out.push_back(k);
    return out;
  }

  void report_unused() {
    for (const auto& [k, v] : entries_)
      if (!used_.count(k)) error(v.line, k, "unknown key");
  }

  void mark_used(const std::string& key) { used_.insert(key); }

  void error(int line_no, const std::string& key, const std::string& msg) {
    std::string e = line_no ? "line " + std::to_string(line_no) + ": " : "";
    if (!key.empty()) e += key + ": ";
    errors_.push_back(e + msg);
  }

  bool ok() const { return errors_.empty(); }
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries_;
  std::set<std::string> used_;
  std::vector<std::string> errors_;
};

Domain default_domain(TargetKind kind) {
  return kind == TargetKind::kMinPairShifted || kind == TargetKind::kTriangleCenter
             ? Domain::kSymmetric
             : Domain::kUnit;
}

std::optional<TargetSpec> parse_target(Entries& in) {
  std::optional<TargetKind> kind;
  in.require("target.kind", [&](const std::string& v) { kind = parse_target_kind(v); });
  if (!kind) return std::nullopt;

  Domain domain = default_domain(*kind);
  in.with("target.domain", [&](const std::string& v) { domain = parse_domain(v); });
  int d = 0;
  if (*kind == TargetKind::kKthLargest) {
    d = 1;
    in.with("target.d", [&](const std::string& v) {
      if (to_int(v) != 1) throw ConfigError("kth_largest tokens are scalars (d = 1)");
    });
  } else {
    in.require("target.d", [&](const std::string& v) { d = to_int(v); });
  }

  std::optional<TargetSpec> spec;
  const size_t before = in.errors().size();
  switch (*kind) {
    case TargetKind::kDRetrieval: {
      std::vector<ScalarForm> forms;
      in.require("target.forms", [&](const std::string& v) {
        for (const auto& w : words(v)) forms.push_back(ScalarForm::parse(w));
      });
      if (in.errors().size() == before)
        in.guard("target.forms", [&] { spec = TargetSpec::d_retrieval(forms, d, domain); });
      break;
    }
    case TargetKind::kMinPairShifted:
      if (in.errors().size() == before)
        in.guard("target.d", [&] { spec = TargetSpec::min_pair_shifted(d, domain); });
      break;
    case TargetKind::kTriangleCenter:
      if (in.errors().size() == before)
        in.guard("target.d", [&] { spec = TargetSpec::triangle_center(d, domain); });
      break;
    case TargetKind::kIntrinsic: {
      int count = 0;
      in.require("target.D", [&](const std::string& v) { count = to_int(v); });
      const auto matrix_keys = in.keys_with_prefix("target.matrix.");
      const std::string* seed = in.get("target.matrix_seed");
      if (in.errors().size() != before) break;
      if (seed && !matrix_keys.empty()) {
        in.error(in.line("target.matrix_seed"), "target.matrix_seed",
                 "give either target.matrix_seed or target.matrix.<i>, not both");
        for (const auto& k : matrix_keys) in.mark_used(k);
        break;
      }
      if (seed) {
        in.guard("target.matrix_seed", [&] {
          const long long s = to_integer(*seed);
          if (s < 0) throw ConfigError("seed must be >= 0");
          spec = TargetSpec::random_intrinsic(count, d, domain, static_cast<uint64_t>(s));
        });
        break;
      }
      if (count < 1 || d < 1) {
        in.error(in.line("target.D"), "target.D", "D and d must be >= 1");
        break;
      }
      std::vector<Eigen::MatrixXd> mats;
      for (int i = 1; i <= count; ++i) {
        const std::string key = "target.matrix." + std::to_string(i);
        in.require(key, [&](const std::string& v) {
          const auto vals = to_doubles(v);
          if (static_cast<int>(vals.size()) != d * d)
            throw ConfigError("expected " + std::to_string(d * d) + " row-major entries");
          Eigen::MatrixXd a(d, d);
          for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) a(r, c) = vals[static_cast<size_t>(r * d + c)];
          mats.push_back(std::move(a));
        });
      }
      if (in.errors().size() == before)
        in.guard("target.D", [&] { spec = TargetSpec::intrinsic(mats, domain); });
      break;
    }
    case TargetKind::kPositionSum: {
      IndexSet positions;
      in.require("target.positions",
                 [&](const std::string& v) { positions = IndexSet(to_ints(v)); });
      if (in.errors().size() == before)
        in.guard("target.positions", [&] { spec = TargetSpec::position_sum(positions, d, domain); });
      break;
    }
    case TargetKind::kKthLargest: {
      int k = 0;
      in.require("target.k", [&](const std::string& v) { k = to_int(v); });
      if (in.errors().size() == before)
        in.guard("target.k", [&] { spec = TargetSpec::kth_largest(k, domain); });
      break;
    }
  }
  return spec;
}

std::optional<ArchitectureConfig> parse_arch(Entries& in, const std::optional<TargetSpec>& target) {
  ArchitectureConfig arch;
  const size_t before = in.errors().size();
  in.require("arch.L", [&](const std::string& v) { arch.layers = to_int(v); });
  in.require("arch.T", [&](const std::string& v) { arch.seq_len = to_int(v); });
  std::vector<int> heads, per_head, embed;
  in.require("arch.heads", [&](const std::string& v) { heads = to_ints(v); });
  in.require("arch.per_head", [&](const std::string& v) { per_head = to_ints(v); });
  in.with("arch.embed", [&](const std::string& v) { embed = to_ints(v); });
  in.with("arch.positional_encoding",
          [&](const std::string& v) { arch.positional_encoding = to_bool(v); });
  if (target) arch.token_dim = target->token_dim;
  in.with("arch.d", [&](const std::string& v) {
    const int d = to_int(v);
    if (target && d != target->token_dim)
      throw ConfigError("arch.d = " + v + " does not match target.d = " +
                        std::to_string(target->token_dim));
    arch.token_dim = d;
  });
  if (in.errors().size() != before) return std::nullopt;

  // A single value applies to every layer.
  auto broadcast = [&](std::vector<int>& v, const char* key) {
    if (v.size() == 1 && arch.layers > 1) v.assign(static_cast<size_t>(arch.layers), v[0]);
    if (arch.layers >= 1 && static_cast<int>(v.size()) != arch.layers)
      in.error(in.line(key), key, "expected 1 or L = " + std::to_string(arch.layers) + " values");
  };
  broadcast(heads, "arch.heads");
  broadcast(per_head, "arch.per_head");
  if (embed.empty()) {
    for (size_t i = 0; i < heads.size() && i < per_head.size(); ++i)
      embed.push_back(heads[i] * per_head[i]);
  } else {
    broadcast(embed, "arch.embed");
  }
  if (in.errors().size() != before) return std::nullopt;
  arch.heads = heads;
  arch.per_head = per_head;
  arch.embed = embed;
  in.guard("arch", [&] { arch.validate(); });
  if (in.errors().size() != before) return std::nullopt;
  return arch;
}

RuleAssignment parse_rules(Entries& in, const TargetSpec& target, const ArchitectureConfig& arch) {
  RuleAssignment rules;
  const int T = arch.seq_len;
  const size_t before = in.errors().size();
  for (const auto& key : in.keys_with_prefix("rule.")) {
    in.with(key, [&](const std::string& v) {
      const auto parts = split(key, '.');
      if (parts.size() != 3) throw ConfigError("expected rule.<layer>.<site>");
      const int layer = to_int(parts[1]);
      const UpdateRule rule = parse_rule(v, target);
      const std::string& site = parts[2];
      int a = 0, b = 0;
      if (site == "tokens") {
        a = 1, b = T;
      } else if (site == "cls") {
        a = b = T + 1;
      } else if (const auto dash = site.find('-'); dash != std::string::npos) {
        a = to_int(site.substr(0, dash));
        b = to_int(site.substr(dash + 1));
        if (a > b) throw ConfigError("empty position range");
      } else {
        a = b = to_int(site);
      }
      for (int t = a; t <= b; ++t)
        if (rules.find(t, layer))
          throw ConfigError("duplicate rule for site t=" + std::to_string(t) + ", l=" + std::to_string(layer));
      for (int t = a; t <= b; ++t) rules.set(t, layer, rule);
    });
  }
  for (const auto& key : in.keys_with_prefix("prune.")) {
    in.with(key, [&](const std::string& v) {
      const auto parts = split(key, '.');
      if (parts.size() != 3) throw ConfigError("expected prune.<layer>.<position>");
      const std::string& site = parts[2];
      const int pos = site == "cls" ? T + 1 : to_int(site);
      rules.prune(pos, to_int(parts[1]), IndexSet(to_ints(v)));
    });
  }
  if (in.errors().size() == before) in.guard("rule", [&] { rules.validate(arch); });
  return rules;
}

}  // namespace

ScoreFunction parse_score(const std::string& name, const TargetSpec& target) {
  if (name == "neg_min_cross_inner") return ScoreFunction::neg_min_cross_inner();
  if (name == "neg_min_within") return ScoreFunction::neg_min_within();
  if (name.rfind("f_value:", 0) == 0) return ScoreFunction::f_value(ScalarForm::parse(name.substr(8)));
  for (const std::string family : {"bilinear_max:A", "bilinear_max_within:A"}) {
    if (name.rfind(family, 0) != 0) continue;
    const int i = to_int(name.substr(family.size()));
    if (i < 1 || i > static_cast<int>(target.matrices.size()))
      throw ConfigError("score " + name + " refers to a matrix the target does not define");
    const Eigen::MatrixXd& a = target.matrices[static_cast<size_t>(i - 1)];
    return family == "bilinear_max:A" ? ScoreFunction::bilinear_max(a, name)
                                      : ScoreFunction::bilinear_max_within(a, name);
  }
  throw ConfigError("unknown score '" + name +
                    "' (expected neg_min_cross_inner, neg_min_within, bilinear_max:A<i>, "
                    "bilinear_max_within:A<i>, f_value:<form>)");
}

UpdateRule parse_rule(const std::string& text, const TargetSpec& target) {
  const auto w = words(text);
  if (w.empty()) throw ConfigError("empty rule");
  const std::vector<std::string> rest(w.begin() + 1, w.end());
  if (w[0] == "global") {
    if (!rest.empty()) throw ConfigError("'global' takes no arguments");
    return UpdateRule::global();
  }
  if (w[0] == "max") {
    if (rest.empty()) throw ConfigError("'max' needs one score per head");
    std::vector<ScoreFunction> scores;
    for (const auto& s : rest) scores.push_back(parse_score(s, target));
    return UpdateRule::max_position(std::move(scores));
  }
  if (w[0] == "specific") {
    std::vector<int> fixed;
    for (const auto& s : rest) fixed.push_back(to_int(s));
    if (fixed.empty()) throw ConfigError("'specific' needs at least one position");
    return UpdateRule::specific_positions(IndexSet(std::move(fixed)));
  }
  throw ConfigError("unknown rule '" + w[0] + "' (expected max, global, specific)");
}

std::string rule_text(const UpdateRule& rule) {
  switch (rule.kind) {
    case UpdateRule::Kind::kGlobal: return "global";
    case UpdateRule::Kind::kMaxPosition: {
      std::string s = "max";
      for (const auto& sc : rule.scores) s += " " + sc.label;
      return s;
    }
    case UpdateRule::Kind::kSpecificPositions: {
      std::string s = "specific";
      for (int p : rule.fixed.members()) s += " " + std::to_string(p);
      return s;
    }
  }
  return "";
}

AnalysisConfig parse_config(const std::string& text) {
  Entries in(text);
  AnalysisConfig cfg;

  const auto target = parse_target(in);
  const auto arch = parse_arch(in, target);
  if (target && arch) {
    cfg.target = *target;
    cfg.arch = *arch;
    if (target->kind == TargetKind::kPositionSum && !target->fixed_positions.empty() &&
        target->fixed_positions.max() > arch->seq_len)
      in.error(in.line("target.positions"), "target.positions", "positions exceed T");
    if (target->kind == TargetKind::kKthLargest && target->k > arch->seq_len)
      in.error(in.line("target.k"), "target.k", "k exceeds T");
    cfg.rules = parse_rules(in, *target, *arch);
  } else {
    // Rules cannot be resolved without a valid target and architecture.
    for (const auto& k : in.keys_with_prefix("rule.")) in.mark_used(k);
    for (const auto& k : in.keys_with_prefix("prune.")) in.mark_used(k);
  }

  in.with("input.tokens", [&](const std::string& v) {
    std::vector<std::vector<double>> rows;
    for (const auto& row : split(v, ';')) rows.push_back(to_doubles(row));
    if (target && arch) {
      if (static_cast<int>(rows.size()) != arch->seq_len)
        throw ConfigError("expected T = " + std::to_string(arch->seq_len) + " tokens");
      for (const auto& r : rows)
        if (static_cast<int>(r.size()) != target->token_dim)
          throw ConfigError("every token needs d = " + std::to_string(target->token_dim) +
                            " coordinates");
      cfg.input = rows;
      (void)cfg.input_sequence();  // domain check
    }
  });

  in.with("run.n_samples", [&](const std::string& v) {
    cfg.run.n_samples = to_int(v);
    if (cfg.run.n_samples < 1) throw ConfigError("must be >= 1");
  });
  in.require("run.seed", [&](const std::string& v) {
    const long long s = to_integer(v);
    if (s < 0) throw ConfigError("must be >= 0");
    cfg.run.seed = static_cast<uint64_t>(s);
  });
  in.with("run.beta1", [&](const std::string& v) {
    cfg.run.beta1 = to_int(v);
    if (*cfg.run.beta1 < 1) throw ConfigError("must be >= 1");
  });
  in.with("run.C", [&](const std::string& v) {
    cfg.run.hardness_constant = to_double(v);
    if (!(cfg.run.hardness_constant > 0.0)) throw ConfigError("must be > 0");
  });
  in.with("run.C0", [&](const std::string& v) {
    cfg.run.tree_size_constant = to_double(v);
    if (!(cfg.run.tree_size_constant > 0.0)) throw ConfigError("must be > 0");
  });
  in.with("run.threads", [&](const std::string& v) {
    cfg.run.threads = to_int(v);
    if (cfg.run.threads < 1) throw ConfigError("must be >= 1");
  });
  in.with("output.format", [&](const std::string& v) { cfg.output.format = parse_output_format(v); });
  in.with("output.path", [&](const std::string& v) { cfg.output.path = v; });

  in.report_unused();
  if (!in.ok()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : in.errors()) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

AnalysisConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const AnalysisConfig& c) {
  std::ostringstream os;
  const TargetSpec& t = c.target;
  os << "target.kind = " << to_string(t.kind) << "\n";
  os << "target.d = " << t.token_dim << "\n";
  os << "target.domain = " << to_string(t.domain) << "\n";
  switch (t.kind) {
    case TargetKind::kDRetrieval: {
      os << "target.forms =";
      for (const auto& f : t.forms) os << " " << f.name();
      os << "\n";
      break;
    }
    case TargetKind::kIntrinsic: {
      os << "target.D = " << t.matrices.size() << "\n";
      for (size_t i = 0; i < t.matrices.size(); ++i) {
        std::vector<double> vals;
        const auto& a = t.matrices[i];
        for (Eigen::Index r = 0; r < a.rows(); ++r)
          for (Eigen::Index col = 0; col < a.cols(); ++col) vals.push_back(a(r, col));
        os << "target.matrix." << i + 1 << " = " << join_numbers(vals) << "\n";
      }
      break;
    }
    case TargetKind::kPositionSum:
      os << "target.positions = " << join_ints(t.fixed_positions.members()) << "\n";
      break;
    case TargetKind::kKthLargest:
      os << "target.k = " << t.k << "\n";
      break;
    case TargetKind::kMinPairShifted:
    case TargetKind::kTriangleCenter:
      break;
  }
  const ArchitectureConfig& a = c.arch;
  os << "arch.L = " << a.layers << "\n";
  os << "arch.T = " << a.seq_len << "\n";
  os << "arch.d = " << a.token_dim << "\n";
  os << "arch.heads = " << join_ints(a.heads) << "\n";
  os << "arch.per_head = " << join_ints(a.per_head) << "\n";
  os << "arch.embed = " << join_ints(a.embed) << "\n";
  os << "arch.positional_encoding = " << (a.positional_encoding ? "true" : "false") << "\n";
  for (const auto& [key, rule] : c.rules.rules())
    os << "rule." << key.second << "." << key.first << " = " << rule_text(rule) << "\n";
  for (const auto& [key, keep] : c.rules.prunings())
    os << "prune." << key.second << "." << key.first << " = " << join_ints(keep.members()) << "\n";
  if (c.input) {
    os << "input.tokens =";
    for (size_t i = 0; i < c.input->size(); ++i)
      os << (i ? " ; " : " ") << join_numbers((*c.input)[i]);
    os << "\n";
  }
  os << "run.n_samples = " << c.run.n_samples << "\n";
  os << "run.seed = " << c.run.seed << "\n";
  if (c.run.beta1) os << "run.beta1 = " << *c.run.beta1 << "\n";
  os << "run.C = " << format_number(c.run.hardness_constant) << "\n";
  os << "run.C0 = " << format_number(c.run.tree_size_constant) << "\n";
  os << "run.threads = " << c.run.threads << "\n";
  os << "output.format = " << to_string(c.output.format) << "\n";
  if (!c.output.path.empty()) os << "output.path = " << c.output.path << "\n";
  return os.str();
}

}  // namespace infoflow
