#include "infoflow/flow.hpp"

#include <algorithm>
#include <limits>

#include "parallel.hpp"

namespace infoflow {

UpdateRule UpdateRule::max_position(std::vector<ScoreFunction> scores) {
  UpdateRule r;
  r.kind = Kind::kMaxPosition;
  r.scores = std::move(scores);
  return r;
}

UpdateRule UpdateRule::global() { return UpdateRule{}; }

UpdateRule UpdateRule::specific_positions(IndexSet fixed) {
  UpdateRule r;
  r.kind = Kind::kSpecificPositions;
  r.fixed = std::move(fixed);
  return r;
}

std::string to_string(UpdateRule::Kind kind) {
  switch (kind) {
    case UpdateRule::Kind::kMaxPosition: return "max_position";
    case UpdateRule::Kind::kGlobal: return "global";
    case UpdateRule::Kind::kSpecificPositions: return "specific";
  }
  return "unknown";
}

std::string UpdateRule::describe() const {
  switch (kind) {
    case Kind::kMaxPosition: {
      std::string s = "max(";
      for (size_t i = 0; i < scores.size(); ++i) s += (i ? "," : "") + scores[i].label;
      return s + ")";
    }
    case Kind::kGlobal: return "global";
    case Kind::kSpecificPositions: return "specific" + fixed.to_string();
  }
  return "unknown";
}

void RuleAssignment::set(int position, int layer, UpdateRule rule) {
  rules_[{position, layer}] = std::move(rule);
}

void RuleAssignment::set_tokens(int layer, int seq_len, const UpdateRule& rule) {
  for (int t = 1; t <= seq_len; ++t) set(t, layer, rule);
}

void RuleAssignment::set_cls(int layer, int seq_len, const UpdateRule& rule) {
  set(seq_len + 1, layer, rule);
}

void RuleAssignment::prune(int position, int layer, IndexSet keep) {
  prune_[{position, layer}] = std::move(keep);
}

const UpdateRule* RuleAssignment::find(int position, int layer) const {
  auto it = rules_.find({position, layer});
  return it == rules_.end() ? nullptr : &it->second;
}

const IndexSet* RuleAssignment::pruning(int position, int layer) const {
  auto it = prune_.find({position, layer});
  return it == prune_.end() ? nullptr : &it->second;
}

void RuleAssignment::validate(const ArchitectureConfig& arch) const {
  arch.validate();
  std::vector<std::string> errors;
  const int T = arch.seq_len;
  for (const auto& [key, rule] : rules_) {
    const auto [t, l] = key;
    const std::string where = "rule at (t=" + std::to_string(t) + ", l=" + std::to_string(l) + ")";
    if (l < 1 || l > arch.layers) {
      errors.push_back(where + ": layer outside [1," + std::to_string(arch.layers) + "]");
      continue;
    }
    if (t < 1 || t > T + 1) errors.push_back(where + ": position outside [1,T+1]");
    switch (rule.kind) {
      case UpdateRule::Kind::kMaxPosition:
        if (static_cast<int>(rule.scores.size()) != arch.heads_at(l))
          errors.push_back(where + ": " + std::to_string(rule.scores.size()) +
                           " scores for a layer with " + std::to_string(arch.heads_at(l)) +
                           " heads");
        for (const auto& s : rule.scores) {
          if ((s.kind == ScoreKind::kBilinearMax || s.kind == ScoreKind::kBilinearMaxWithin) &&
              (s.matrix.rows() != arch.token_dim || s.matrix.cols() != arch.token_dim))
            errors.push_back(where + ": score " + s.label + " matrix is not d x d");
          if (s.kind == ScoreKind::kFValue && s.form.support() > arch.token_dim)
            errors.push_back(where + ": score " + s.label + " reads past d");
        }
        break;
      case UpdateRule::Kind::kSpecificPositions:
        if (!arch.positional_encoding)
          errors.push_back(where + ": specific-position rule requires positional encoding");
        if (rule.fixed.empty() || rule.fixed.max() > T)
          errors.push_back(where + ": fixed positions must be a nonempty subset of [1,T]");
        break;
      case UpdateRule::Kind::kGlobal:
        break;
    }
  }
  for (const auto& [key, keep] : prune_) {
    if (key.second < 1 || key.second > arch.layers || key.first < 1 || key.first > T + 1)
      errors.push_back("pruning at (t=" + std::to_string(key.first) +
                       ", l=" + std::to_string(key.second) + ") is outside the grid");
  }
  if (!errors.empty()) {
    std::string msg = "invalid rule assignment:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

FlowTrace FlowTrace::init(int seq_len) {
  if (seq_len < 1) throw ConfigError("init_state: T must be >= 1");
  FlowTrace trace;
  trace.seq_len_ = seq_len;
  std::vector<IndexSet> layer0;
  for (int t = 1; t <= seq_len; ++t) layer0.push_back(IndexSet{t});
  layer0.emplace_back();
  trace.sets_.push_back(std::move(layer0));
  trace.sites_.emplace_back(static_cast<size_t>(seq_len + 1));
  return trace;
}

FlowTrace FlowTrace::from_sets(int seq_len, std::vector<std::vector<IndexSet>> sets) {
  FlowTrace trace;
  trace.seq_len_ = seq_len;
  for (const auto& layer : sets)
    if (static_cast<int>(layer.size()) != seq_len + 1)
      throw ConfigError("from_sets: every layer needs T+1 sets");
  trace.sites_.assign(sets.size(), std::vector<Site>(static_cast<size_t>(seq_len + 1)));
  trace.sets_ = std::move(sets);
  return trace;
}

const IndexSet& FlowTrace::at(int position, int layer) const {
  if (layer < 0 || layer > top_layer() || position < 1 || position > seq_len_ + 1)
    throw DomainError("trace site (" + std::to_string(position) + "," + std::to_string(layer) +
                      ") out of range");
  return sets_[static_cast<size_t>(layer)][static_cast<size_t>(position - 1)];
}

const FlowTrace::Site& FlowTrace::site(int position, int layer) const {
  at(position, layer);
  return sites_[static_cast<size_t>(layer)][static_cast<size_t>(position - 1)];
}

bool FlowTrace::any_tie() const {
  for (const auto& layer : sites_)
    for (const auto& s : layer)
      if (s.tie) return true;
  return false;
}

bool FlowTrace::operator==(const FlowTrace& other) const {
  if (seq_len_ != other.seq_len_ || sets_ != other.sets_) return false;
  for (size_t l = 0; l < sites_.size(); ++l)
    for (size_t t = 0; t < sites_[l].size(); ++t) {
      const Site& a = sites_[l][t];
      const Site& b = other.sites_[l][t];
      if (a.rule != b.rule || a.rule_label != b.rule_label || a.sources != b.sources ||
          a.tie != b.tie)
        return false;
    }
  return true;
}

FlowTrace step(const FlowTrace& trace, int layer, const RuleAssignment& rules, const Sequence& x) {
  if (layer != trace.top_layer())
    throw ConfigError("step: trace ends at layer " + std::to_string(trace.top_layer()) +
                      ", cannot step from layer " + std::to_string(layer));
  const int T = trace.seq_len();
  if (x.length() != T)
    throw ConfigError("step: sequence length " + std::to_string(x.length()) +
                      " does not match trace T = " + std::to_string(T));
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  const auto& prev = trace.sets_.back();
  auto prev_at = [&](int t) -> const IndexSet& { return prev[static_cast<size_t>(t - 1)]; };
  size_t max_prev = 0;
  for (const auto& s : prev) max_prev = std::max(max_prev, static_cast<size_t>(s.size()));

  std::vector<IndexSet> next(static_cast<size_t>(T + 1));
  std::vector<FlowTrace::Site> sites(static_cast<size_t>(T + 1));
  for (int t = 1; t <= T + 1; ++t) {
    auto& out = next[static_cast<size_t>(t - 1)];
    auto& site = sites[static_cast<size_t>(t - 1)];
    const UpdateRule* rule = rules.find(t, layer + 1);
    if (!rule) {
      out = prev_at(t);
      continue;
    }
    site.rule = rule->kind;
    site.rule_label = rule->describe();
    switch (rule->kind) {
      case UpdateRule::Kind::kMaxPosition: {
        out = prev_at(t);
        size_t bound = static_cast<size_t>(prev_at(t).size());
        for (const auto& fn : rule->scores) {
          int best_s = 0;
          double best = neg_inf;
          bool tie = false;
          const bool blind = fn.needs_query() && prev_at(t).empty();
          for (int s = 1; s <= T && !blind; ++s) {
            if (prev_at(s).empty()) continue;
            const double v = score(fn, x, prev_at(t), prev_at(s));
            if (v > best) {
              best = v;
              best_s = s;
              tie = false;
            } else if (v == best && prev_at(s) != prev_at(best_s)) {
              tie = true;
            }
          }
          site.sources.push_back(best_s);
          if (best_s == 0) {
            site.tie = true;
            continue;
          }
          site.tie = site.tie || tie;
          out = out.united(prev_at(best_s));
          bound += static_cast<size_t>(prev_at(best_s).size());
        }
        const size_t heads = rule->scores.size();
        if (static_cast<size_t>(out.size()) > bound || bound > (heads + 1) * max_prev)
          throw InvariantError("max-position set size bound violated at site (" +
                               std::to_string(t) + "," + std::to_string(layer + 1) + ")");
        break;
      }
      case UpdateRule::Kind::kGlobal:
        out = IndexSet::range(1, T);
        break;
      case UpdateRule::Kind::kSpecificPositions:
        for (int j : rule->fixed) out = out.united(prev_at(j));
        break;
    }
    if (const IndexSet* keep = rules.pruning(t, layer + 1)) out = out.intersected(*keep);
  }

  FlowTrace result = trace;
  result.sets_.push_back(std::move(next));
  result.sites_.push_back(std::move(sites));
  return result;
}

FlowTrace run(const ArchitectureConfig& arch, const RuleAssignment& rules, const Sequence& x) {
  rules.validate(arch);
  if (x.length() != arch.seq_len || x.dim() != arch.token_dim)
    throw ConfigError("run: sequence shape (T=" + std::to_string(x.length()) +
                      ", d=" + std::to_string(x.dim()) + ") does not match the architecture");
  FlowTrace trace = FlowTrace::init(arch.seq_len);
  for (int l = 0; l < arch.layers; ++l) trace = step(trace, l, rules, x);
  return trace;
}

double LearnResult::fraction() const {
  const int counted = samples - excluded_ties;
  return counted > 0 ? static_cast<double>(learned) / counted : 1.0;
}

LearnResult learns_fraction(const TargetSpec& target, const ArchitectureConfig& arch,
                            const RuleAssignment& rules, int n_samples, uint64_t seed,
                            int threads) {
  rules.validate(arch);
  if (target.token_dim != arch.token_dim)
    throw ConfigError("learns_fraction: target d " + std::to_string(target.token_dim) +
                      " != architecture d " + std::to_string(arch.token_dim));
  // 0 = missed, 1 = learned, 2 = tie-excluded; bit 4 marks a flow tie.
  std::vector<int> outcome(static_cast<size_t>(std::max(n_samples, 0)));
  detail::parallel_for(n_samples, threads, [&](int64_t i) {
    Rng rng = Rng::for_item(seed, static_cast<uint64_t>(i));
    const Sequence x = sample_for(target, arch.seq_len, rng);
    const ActiveSet active = active_index_set(target, x);
    const FlowTrace trace = run(arch, rules, x);
    int o = active.tie ? 2 : (active.indices.is_subset_of(trace.at(trace.cls(), arch.layers)) ? 1 : 0);
    if (trace.any_tie()) o |= 4;
    outcome[static_cast<size_t>(i)] = o;
  });
  LearnResult res;
  res.samples = n_samples;
  for (int o : outcome) {
    if ((o & 3) == 2) ++res.excluded_ties;
    if ((o & 3) == 1) ++res.learned;
    if (o & 4) ++res.flow_ties;
  }
  return res;
}

namespace {

long long ipow(long long base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

long long model_comparison_count(const FlowTrace& trace, const ArchitectureConfig& arch,
                                 int beta1) {
  if (beta1 < 1) throw ConfigError("model_comparison_count: beta1 must be >= 1");
  if (trace.top_layer() < arch.layers)
    throw ConfigError("model_comparison_count: trace stops at layer " +
                      std::to_string(trace.top_layer()) + " < L");
  const long long T = trace.seq_len();
  long long total = 0;
  for (int l = 1; l <= arch.layers - 1; ++l)
    for (int t = 1; t <= T; ++t)
      total += ipow(trace.at(t, l).size(), beta1) - 1 + arch.heads_at(l) * (T - 1);
  for (int l = 1; l <= arch.layers; ++l)
    total += ipow(trace.at(trace.cls(), l).size(), beta1) - 1 + arch.heads_at(l) * (T - 1);
  return total;
}

CostReport cost_exponents(const FlowTrace& trace, const ArchitectureConfig& arch,
                          const RuleAssignment& rules, int token_dim) {
  CostReport report;
  const int T = trace.seq_len();
  for (int l = 1; l <= std::min(arch.layers, trace.top_layer()); ++l) {
    const long long E = arch.embed_at(l);
    long long max_prev = 0;
    for (int s = 1; s <= T; ++s) max_prev = std::max<long long>(max_prev, trace.at(s, l - 1).size());
    for (int t = 1; t <= T + 1; ++t) {
      const UpdateRule* rule = rules.find(t, l);
      if (!rule) continue;
      SiteCost c;
      c.position = t;
      c.layer = l;
      c.rule = rule->kind;
      switch (rule->kind) {
        case UpdateRule::Kind::kMaxPosition: c.set_size = trace.at(t, l).size(); break;
        case UpdateRule::Kind::kGlobal: c.set_size = T; break;
        case UpdateRule::Kind::kSpecificPositions:
          c.set_size = static_cast<long long>(rule->fixed.size()) * max_prev;
          break;
      }
      const long long numer = c.set_size * token_dim;
      c.kappa = static_cast<double>(numer) / static_cast<double>(E);
      c.exponent = numer > E ? static_cast<double>(numer - E) / static_cast<double>(E) : 0.0;
      report.max_exponent = std::max(report.max_exponent, c.exponent);
      report.exponent_sum += c.exponent;
      report.sites.push_back(c);
    }
  }
  return report;
}

}  // namespace infoflow
