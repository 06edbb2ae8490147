#include "infoflow/report.hpp"

#include <cmath>
#include <sstream>

#include "infoflow/estimate.hpp"
#include "infoflow/trees.hpp"

namespace infoflow {

namespace {

bool is_scalar(const Json& v) { return !v.is_object() && !v.is_array(); }

void emit(std::ostringstream& os, const Json& v, int indent) {
  const std::string pad(static_cast<size_t>(indent + 2), ' ');
  const std::string close(static_cast<size_t>(indent), ' ');
  if (v.is_object()) {
    if (v.empty()) {
      os << "{}";
      return;
    }
    os << "{\n";
    bool first = true;
    for (const auto& [key, item] : v.items()) {
      if (!first) os << ",\n";
      first = false;
      os << pad << Json(key).dump() << ": ";
      emit(os, item, indent + 2);
    }
    os << "\n" << close << "}";
  } else if (v.is_array()) {
    if (std::all_of(v.begin(), v.end(), [](const Json& e) { return is_scalar(e); })) {
      os << "[";
      for (size_t i = 0; i < v.size(); ++i) {
        if (i) os << ", ";
        emit(os, v[i], indent);
      }
      os << "]";
      return;
    }
    os << "[\n";
    for (size_t i = 0; i < v.size(); ++i) {
      if (i) os << ",\n";
      os << pad;
      emit(os, v[i], indent + 2);
    }
    os << "\n" << close << "]";
  } else if (v.is_number_float()) {
    const double d = v.get<double>();
    os << (std::isfinite(d) ? format_number(d) : "null");
  } else {
    os << v.dump();
  }
}

Json set_json(const IndexSet& s) { return Json(s.members()); }

std::string set_csv(const IndexSet& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.members().size(); ++i)
    out += (i ? " " : "") + std::to_string(s.members()[i]);
  return out + "]";
}

Json sequence_json(const Sequence& x) {
  Json rows = Json::array();
  for (const Token& t : x.tokens()) rows.push_back(Json(std::vector<double>(t.coords().begin(), t.coords().end())));
  return rows;
}

Json header(const char* command, const AnalysisConfig& config) {
  Json j;
  j["tool"] = "infoflow";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["seed"] = config.run.seed;
  j["config"] = config_json(config);
  return j;
}

Json learn_json(const LearnResult& r) {
  Json j;
  j["samples"] = r.samples;
  j["learned"] = r.learned;
  j["excluded_ties"] = r.excluded_ties;
  j["flow_ties"] = r.flow_ties;
  j["fraction"] = r.fraction();
  return j;
}

Json bundle_json(const TreeBundle& bundle, const TargetSpec& target, int seq_len) {
  Json j;
  j["supported"] = true;
  j["trees"] = bundle.trees.size();
  Json leaves = Json::array();
  for (const auto& t : bundle.trees) leaves.push_back(t.leaf_count());
  j["leaves_per_tree"] = leaves;
  j["dimension"] = bundle.dimension();
  j["order"] = bundle.order;
  j["number_of_comparison"] = bundle.number_of_comparison();
  j["number_of_comparison_upper"] = number_of_comparison_upper(bundle);
  j["target_lower_bound"] = target_lower_bound(target, seq_len);
  return j;
}

Json active_json(const ActiveSet& a) {
  Json j;
  j["indices"] = set_json(a.indices);
  j["tie"] = a.tie;
  j["gap"] = a.gap;
  return j;
}

}  // namespace

std::string dump_json(const Json& value) {
  std::ostringstream os;
  emit(os, value, 0);
  os << "\n";
  return os.str();
}

std::string Report::render(OutputFormat format) const {
  return format == OutputFormat::kJson ? dump_json(json) : csv;
}

Json config_json(const AnalysisConfig& c) {
  Json j;
  Json target;
  target["kind"] = to_string(c.target.kind);
  target["id"] = c.target.id();
  target["d"] = c.target.token_dim;
  target["domain"] = to_string(c.target.domain);
  if (!c.target.forms.empty()) {
    Json forms = Json::array();
    for (const auto& f : c.target.forms) forms.push_back(f.name());
    target["forms"] = forms;
  }
  if (!c.target.matrices.empty()) {
    Json mats = Json::array();
    for (const auto& a : c.target.matrices) {
      Json rows = Json::array();
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        std::vector<double> row;
        for (Eigen::Index col = 0; col < a.cols(); ++col) row.push_back(a(r, col));
        rows.push_back(Json(row));
      }
      mats.push_back(rows);
    }
    target["matrices"] = mats;
  }
  if (c.target.kind == TargetKind::kPositionSum) target["positions"] = set_json(c.target.fixed_positions);
  if (c.target.kind == TargetKind::kKthLargest) target["k"] = c.target.k;
  j["target"] = target;

  Json arch;
  arch["L"] = c.arch.layers;
  arch["T"] = c.arch.seq_len;
  arch["d"] = c.arch.token_dim;
  arch["heads"] = c.arch.heads;
  arch["per_head"] = c.arch.per_head;
  arch["embed"] = c.arch.embed;
  arch["positional_encoding"] = c.arch.positional_encoding;
  j["arch"] = arch;

  Json rules = Json::array();
  for (const auto& [key, rule] : c.rules.rules()) {
    Json r;
    r["position"] = key.first;
    r["layer"] = key.second;
    r["rule"] = rule_text(rule);
    if (const IndexSet* keep = c.rules.pruning(key.first, key.second)) r["prune"] = set_json(*keep);
    rules.push_back(r);
  }
  j["rules"] = rules;
  if (c.input) j["input"] = *c.input;

  Json run;
  run["n_samples"] = c.run.n_samples;
  run["seed"] = c.run.seed;
  if (c.run.beta1) run["beta1"] = *c.run.beta1;
  run["C"] = c.run.hardness_constant;
  run["C0"] = c.run.tree_size_constant;
  j["run"] = run;
  return j;
}

Json trace_json(const FlowTrace& trace) {
  Json rows = Json::array();
  for (int t = 1; t <= trace.cls(); ++t) {
    Json row;
    row["position"] = t;
    row["cls"] = t == trace.cls();
    Json sets = Json::array();
    Json rules = Json::array();
    Json ties = Json::array();
    for (int l = 0; l <= trace.top_layer(); ++l) {
      sets.push_back(set_json(trace.at(t, l)));
      if (l == 0) continue;
      const auto& site = trace.site(t, l);
      rules.push_back(site.rule ? site.rule_label : "persist");
      ties.push_back(site.tie);
    }
    row["sets"] = sets;
    row["rules"] = rules;
    row["ties"] = ties;
    rows.push_back(row);
  }
  Json j;
  j["layers"] = trace.top_layer();
  j["rows"] = rows;
  j["any_tie"] = trace.any_tie();
  return j;
}

std::string trace_csv(const FlowTrace& trace) {
  std::ostringstream os;
  os << "position";
  for (int l = 0; l <= trace.top_layer(); ++l) os << ",layer_" << l;
  os << "\n";
  for (int t = 1; t <= trace.cls(); ++t) {
    os << t;
    for (int l = 0; l <= trace.top_layer(); ++l) os << "," << set_csv(trace.at(t, l));
    os << "\n";
  }
  return os.str();
}

Json cost_json(const CostReport& cost) {
  Json sites = Json::array();
  for (const auto& s : cost.sites) {
    Json j;
    j["position"] = s.position;
    j["layer"] = s.layer;
    j["rule"] = to_string(s.rule);
    j["set_size"] = s.set_size;
    j["kappa"] = s.kappa;
    j["exponent"] = s.exponent;
    sites.push_back(j);
  }
  Json j;
  j["sites"] = sites;
  j["max_exponent"] = cost.max_exponent;
  j["exponent_sum"] = cost.exponent_sum;
  return j;
}

std::string cost_csv(const CostReport& cost) {
  std::ostringstream os;
  os << "position,layer,rule,set_size,kappa,exponent\n";
  for (const auto& s : cost.sites)
    os << s.position << "," << s.layer << "," << to_string(s.rule) << "," << s.set_size << ","
       << format_number(s.kappa) << "," << format_number(s.exponent) << "\n";
  return os.str();
}

Sequence reference_input(const AnalysisConfig& config) {
  if (auto x = config.input_sequence()) return *x;
  Rng rng = Rng::for_item(config.run.seed, 0);
  return sample_for(config.target, config.arch.seq_len, rng);
}

Report run_analysis(const AnalysisConfig& config) {
  const TargetSpec& target = config.target;
  const ArchitectureConfig& arch = config.arch;
  const int T = arch.seq_len;
  Report report;
  Json& j = report.json = header("analyze", config);

  Json trees;
  try {
    trees = bundle_json(trees_for_target(target, T), target, T);
  } catch (const UnsupportedError& e) {
    trees["supported"] = false;
    trees["reason"] = e.what();
  }
  j["trees"] = trees;

  const RateEstimate est = rate_bounds(target, arch, config.rules, config.run.n_samples,
                                       config.run.seed, config.run.beta1, config.run.threads);

  const Sequence x = reference_input(config);
  const FlowTrace trace = run(arch, config.rules, x);
  const ActiveSet active = active_index_set(target, x);
  const CostReport cost = cost_exponents(trace, arch, config.rules, arch.token_dim);

  Json flow;
  flow["learn"] = learn_json(est.learn);
  Json ref;
  ref["input"] = sequence_json(x);
  ref["fixed_input"] = config.input.has_value();
  ref["active_index_set"] = active_json(active);
  ref["cls_set"] = set_json(trace.at(trace.cls(), arch.layers));
  ref["learned"] = active.indices.is_subset_of(trace.at(trace.cls(), arch.layers));
  ref["trace"] = trace_json(trace);
  ref["model_comparison_count"] = model_comparison_count(trace, arch, est.beta1);
  flow["reference"] = ref;
  flow["max_model_comparison_count"] = est.max_model_count;
  j["flow"] = flow;

  j["cost"] = cost_json(cost);

  Json e;
  e["target_id"] = est.target_id;
  e["beta1"] = est.beta1;
  e["beta_prime"] = est.order;
  if (est.target_count)
    e["target_count"] = *est.target_count;
  else
    e["target_count"] = nullptr;
  e["required_M"] = est.required_M;
  e["min_embed"] = est.min_embed;
  e["lower_exponent"] = est.lower_exponent;
  e["upper_exponent"] = est.upper_exponent;
  e["learned"] = est.learned();
  e["embed_choice"] = "min_l E_l";
  e["ffn_smoothness_term"] = "excluded";
  Json constants;
  constants["C"] = config.run.hardness_constant;
  constants["C0"] = config.run.tree_size_constant;
  e["constants"] = constants;
  j["estimate"] = e;

  Json pred;
  const HardnessPrediction hard = predict_higher_order(
      est.order, est.beta1, T, arch.layers, arch.min_embed(), config.run.hardness_constant);
  Json h;
  h["beta_prime"] = est.order;
  h["beta1"] = est.beta1;
  h["exponent"] = hard.exponent;
  h["triangle_exponent"] = hard.triangle_exponent;
  h["hard"] = hard.hard;
  pred["higher_order"] = h;
  if (target.kind == TargetKind::kIntrinsic && arch.layers >= 2) {
    const IntrinsicPrediction ip = predict_intrinsic(target.components(), T, arch.heads_at(1),
                                                     arch.heads_at(2), est.beta1);
    Json i;
    i["D"] = target.components();
    i["h1"] = arch.heads_at(1);
    i["h2"] = arch.heads_at(2);
    i["comparisons_suffice"] = ip.comparisons_suffice;
    i["readout_suffices"] = ip.readout_suffices;
    i["feasible"] = ip.feasible();
    i["model_ceiling"] = ip.model_ceiling;
    i["target_upper"] = ip.target_upper;
    i["asymptotic_regime"] = ip.asymptotic_regime;
    pred["intrinsic"] = i;
  }
  j["predictions"] = pred;

  Json ties;
  ties["excluded_active_set_ties"] = est.learn.excluded_ties;
  ties["flow_argmax_ties"] = est.learn.flow_ties;
  ties["reference_active_tie"] = active.tie;
  ties["reference_flow_tie"] = trace.any_tie();
  j["ties"] = ties;

  report.csv = cost_csv(cost);
  return report;
}

Report run_simulation(const AnalysisConfig& config) {
  const Sequence x = reference_input(config);
  const FlowTrace trace = run(config.arch, config.rules, x);
  const ActiveSet active = active_index_set(config.target, x);
  const int beta1 = config.run.beta1.value_or(target_beta1(config.target));
  Report report;
  Json& j = report.json = header("simulate", config);
  j["input"] = sequence_json(x);
  j["fixed_input"] = config.input.has_value();
  j["trace"] = trace_json(trace);
  j["active_index_set"] = active_json(active);
  j["learned"] = active.indices.is_subset_of(trace.at(trace.cls(), config.arch.layers));
  j["beta1"] = beta1;
  j["model_comparison_count"] = model_comparison_count(trace, config.arch, beta1);
  report.csv = trace_csv(trace);
  return report;
}

Report run_tree_check(const AnalysisConfig& config) {
  const int T = config.arch.seq_len;
  const TreeBundle bundle = trees_for_target(config.target, T);
  const CoverageResult cover = verify_cover(config.target, bundle, T, config.run.n_samples,
                                            config.run.seed, config.run.threads);
  Report report;
  Json& j = report.json = header("verify-trees", config);
  j["bundle"] = bundle_json(bundle, config.target, T);
  Json trees = Json::array();
  std::ostringstream csv;
  csv << "tree,comparison,leaves,internal,height,dimension\n";
  for (size_t i = 0; i < bundle.trees.size(); ++i) {
    const auto& t = bundle.trees[i];
    Json tj;
    tj["comparison"] = t.fn().name();
    tj["leaves"] = t.leaf_count();
    tj["internal"] = t.internal_count();
    tj["height"] = t.height();
    tj["dimension"] = t.dimension();
    tj["full_binary"] = t.is_full_binary();
    trees.push_back(tj);
    csv << i + 1 << "," << t.fn().name() << "," << t.leaf_count() << "," << t.internal_count()
        << "," << t.height() << "," << t.dimension() << "\n";
  }
  j["trees"] = trees;
  Json c;
  c["samples"] = cover.samples;
  c["covered"] = cover.covered;
  c["excluded_ties"] = cover.excluded_ties;
  c["fraction"] = cover.fraction();
  j["coverage"] = c;
  report.csv = csv.str();
  return report;
}

}  // namespace infoflow
