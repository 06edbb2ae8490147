// infoflow: command-line front end for the analyzer.
//
//   infoflow analyze --config F       full report (trees, flow, cost, estimates)
//   infoflow simulate --config F      information-flow grid on the reference input
//   infoflow verify-trees --config F  tree bundle statistics and coverage check
//   infoflow witness min-pair|codec|kth-pair ...
//
// Exit codes: 0 success, 1 invariant violation, 2 configuration error.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "infoflow/config.hpp"
#include "infoflow/report.hpp"
#include "infoflow/targets.hpp"
#include "infoflow/witness.hpp"

using namespace infoflow;

namespace {

struct CommonOptions {
  std::optional<long long> seed;
  std::string out;
  std::string format;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--seed", o.seed, "Seed (overrides run.seed)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", o.out, "Output path (default: output.path or stdout)");
  cmd->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write '" + path + "'");
  f << text;
}

Json witness_header(const char* name, uint64_t seed) {
  Json j;
  j["tool"] = "infoflow";
  j["version"] = kToolVersion;
  j["command"] = std::string("witness ") + name;
  j["seed"] = seed;
  return j;
}

Json vec_json(const std::vector<double>& v) { return Json(v); }

Report min_pair_report(const std::vector<double>& betas, int T, int samples, uint64_t seed, int threads) {
  const auto curve = min_pair_error_curve(betas, T, samples, seed, threads);
  Report r;
  r.json = witness_header("min-pair", seed);
  r.json["T"] = T;
  r.json["samples"] = samples;
  Json points = Json::array();
  r.csv = "beta,sup_error\n";
  for (const auto& p : curve) {
    Json pj;
    pj["beta"] = p.beta;
    pj["sup_error"] = p.sup_error;
    points.push_back(pj);
    r.csv += format_number(p.beta) + "," + format_number(p.sup_error) + "\n";
  }
  r.json["curve"] = points;
  bool monotone = true;
  for (size_t i = 1; i < curve.size(); ++i)
    monotone = monotone && curve[i].sup_error <= curve[i - 1].sup_error + 1e-6;
  r.json["nonincreasing"] = monotone;
  return r;
}

Report codec_report(int m, int n, int bits, const std::vector<double>& values, int samples,
                    uint64_t seed) {
  const BinaryCodec codec(m, n, bits);
  Report r;
  r.json = witness_header("codec", seed);
  r.json["m"] = m;
  r.json["n"] = n;
  r.json["L"] = bits;
  r.json["q"] = codec.bits_per_latent();
  const CodecOrders orders = codec_parameter_formula(codec);
  r.json["encoder_order"] = orders.encoder;
  r.json["decoder_order"] = orders.decoder;
  r.csv = "check,pass\n";
  bool all = true;

  if (!values.empty()) {
    const Latent latent = encode(codec, values);
    const auto decoded = decode(codec, latent);
    const auto truncated = truncate_bits(codec, values);
    Json c;
    c["input"] = vec_json(values);
    Json codes = Json::array();
    for (const auto& code : latent) {
      std::string bitstr;
      for (uint8_t b : code.bits) bitstr += static_cast<char>('0' + b);
      Json cj;
      cj["bits"] = bitstr;
      cj["value"] = code.value();
      codes.push_back(cj);
    }
    c["latent"] = codes;
    c["decoded"] = vec_json(decoded);
    const bool pass = decoded == truncated;
    c["equals_truncation"] = pass;
    r.json["case"] = c;
    r.csv += std::string("case,") + (pass ? "true" : "false") + "\n";
    all = all && pass;
  }

  Rng rng(seed);
  double worst = 0.0;
  bool exact = true;
  for (int i = 0; i < samples; ++i) {
    std::vector<double> v(static_cast<size_t>(m));
    for (double& c : v) c = rng.uniform();
    const auto back = decode(codec, encode(codec, v));
    exact = exact && back == truncate_bits(codec, v);
    for (size_t j = 0; j < v.size(); ++j) worst = std::max(worst, std::abs(v[j] - back[j]));
  }
  const double bound = std::ldexp(1.0, -bits);
  Json p;
  p["samples"] = samples;
  p["max_error"] = worst;
  p["bound"] = bound;
  p["within_bound"] = worst <= bound;
  p["equals_truncation"] = exact;
  r.json["round_trip"] = p;
  r.csv += std::string("round_trip_bound,") + (worst <= bound ? "true" : "false") + "\n";
  r.csv += std::string("round_trip_truncation,") + (exact ? "true" : "false") + "\n";
  all = all && worst <= bound && exact;
  r.json["pass"] = all;
  return r;
}

Report kth_pair_report(const AdversarialSearchSpec& spec, uint64_t seed) {
  Report r;
  r.json = witness_header("kth-pair", seed);
  Json s;
  s["T"] = spec.seq_len;
  s["k"] = spec.k;
  s["n_feat"] = spec.feature_dim;
  s["epsilon"] = spec.epsilon;
  s["rho"] = spec.rho.name();
  s["f1"] = spec.features.name();
  s["m"] = spec.free_count();
  s["N"] = spec.grid_size();
  s["eta"] = spec.cube_side();
  s["bucket_count"] = spec.bucket_count();
  r.json["spec"] = s;
  const auto pair = adversarial_pair_search(spec);
  r.json["found"] = pair.has_value();
  if (!pair) {
    r.csv = "position,x,y\n";
    return r;
  }
  auto column = [](const Sequence& x) {
    std::vector<double> v;
    for (const Token& t : x.tokens()) v.push_back(t[0]);
    return v;
  };
  const auto xs = column(pair->x);
  const auto ys = column(pair->y);
  Json p;
  p["x"] = vec_json(xs);
  p["y"] = vec_json(ys);
  p["z"] = vec_json(pair->z);
  p["z_prime"] = vec_json(pair->z_prime);
  p["differing"] = pair->differing;
  p["j_star"] = pair->j_star;
  p["target_gap"] = pair->target_gap;
  p["target_gap_bound"] = 4.0 * spec.epsilon;
  p["summed_gap_inf"] = pair->summed_gap_inf;
  p["summed_gap_l2"] = pair->summed_gap_l2;
  p["bucket_diagonal"] = pair->bucket_diagonal;
  p["representation_gap_inf"] = pair->representation_gap_inf;
  p["representation_bound"] = pair->representation_bound;
  p["enumerated"] = pair->enumerated;
  p["pigeonhole_guaranteed"] = pair->pigeonhole_guaranteed;
  r.json["pair"] = p;
  r.json["gaps_hold"] = pair->target_gap >= 4.0 * spec.epsilon &&
                        pair->summed_gap_l2 <= pair->bucket_diagonal &&
                        pair->representation_gap_inf <= pair->representation_bound;
  r.csv = "position,x,y\n";
  for (size_t i = 0; i < xs.size(); ++i)
    r.csv += std::to_string(i + 1) + "," + format_number(xs[i]) + "," + format_number(ys[i]) + "\n";
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"infoflow: information-flow analysis of transformer expressivity"};
  app.require_subcommand(1);

  std::string config_path;
  CommonOptions common;
  auto* analyze = app.add_subcommand("analyze", "Full analysis report for a config");
  auto* simulate = app.add_subcommand("simulate", "Information-flow grid on the reference input");
  auto* verify = app.add_subcommand("verify-trees", "Tree bundle statistics and coverage check");
  for (auto* cmd : {analyze, simulate, verify}) {
    cmd->add_option("--config", config_path, "Config file")->required();
    add_common(cmd, common);
  }

  auto* witness = app.add_subcommand("witness", "Constructive witnesses");
  witness->require_subcommand(1);

  auto* min_pair = witness->add_subcommand("min-pair", "Softmax error curve of the min-pair transformer");
  std::vector<double> betas{10.0, 100.0, 1000.0};
  int mp_T = 8;
  int mp_samples = 2000;
  min_pair->add_option("--betas", betas, "Ascending softmax scales")->delimiter(',');
  min_pair->add_option("--T", mp_T, "Sequence length")->check(CLI::PositiveNumber);
  min_pair->add_option("--samples", mp_samples, "Samples per beta")->check(CLI::PositiveNumber);
  add_common(min_pair, common);

  auto* codec = witness->add_subcommand("codec", "Bit-packing encoder/decoder checks");
  int c_m = 0, c_n = 0, c_bits = 0, c_samples = 10000;
  std::vector<double> c_values;
  codec->add_option("--m", c_m, "Input dimension")->required();
  codec->add_option("--n", c_n, "Latent dimension")->required();
  codec->add_option("--L", c_bits, "Truncation depth")->required();
  codec->add_option("--values", c_values, "Input vector to encode")->delimiter(',');
  codec->add_option("--samples", c_samples, "Random round trips")->check(CLI::NonNegativeNumber);
  add_common(codec, common);

  auto* kth = witness->add_subcommand("kth-pair", "Pigeonhole pair for the k-th largest target");
  AdversarialSearchSpec adv;
  std::string rho_name = "identity", f1_name = "identity";
  kth->add_option("--T", adv.seq_len, "Sequence length")->required();
  kth->add_option("--k", adv.k, "Rank")->required();
  kth->add_option("--n-feat", adv.feature_dim, "Feature dimension")->required();
  kth->add_option("--epsilon", adv.epsilon, "Accuracy")->required();
  kth->add_option("--rho", rho_name, "identity | constant | linear:c");
  kth->add_option("--f1", f1_name, "identity | powers");
  add_common(kth, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    std::string out = common.out;
    OutputFormat format = OutputFormat::kJson;
    Report report;
    if (analyze->parsed() || simulate->parsed() || verify->parsed()) {
      AnalysisConfig cfg = load_config(config_path);
      if (common.seed) cfg.run.seed = static_cast<uint64_t>(*common.seed);
      if (common.threads) cfg.run.threads = *common.threads;
      format = common.format.empty() ? cfg.output.format : parse_output_format(common.format);
      if (out.empty()) out = cfg.output.path;
      report = analyze->parsed()    ? run_analysis(cfg)
               : simulate->parsed() ? run_simulation(cfg)
                                    : run_tree_check(cfg);
    } else {
      if (!common.format.empty()) format = parse_output_format(common.format);
      const uint64_t seed = static_cast<uint64_t>(common.seed.value_or(0));
      const int threads = common.threads.value_or(1);
      if (min_pair->parsed()) {
        report = min_pair_report(betas, mp_T, mp_samples, seed, threads);
      } else if (codec->parsed()) {
        report = codec_report(c_m, c_n, c_bits, c_values, c_samples, seed);
      } else {
        adv.rho = ScoreMap::parse(rho_name);
        adv.features = FeatureMap::parse(f1_name, adv.feature_dim);
        report = kth_pair_report(adv, seed);
      }
    }
    write_output(report.render(format), out);
    return 0;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
