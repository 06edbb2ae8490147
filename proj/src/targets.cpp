#include "infoflow/targets.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace infoflow {

// ---------------------------------------------------------------- forms

ScalarForm ScalarForm::identity() { return ScalarForm("identity", {1.0}); }
ScalarForm ScalarForm::negate() { return ScalarForm("negate", {-1.0}); }

ScalarForm ScalarForm::coord(int k, bool negated) {
  if (k < 1) throw ConfigError("coord forms are 1-based, got " + std::to_string(k));
  std::vector<double> w(static_cast<size_t>(k), 0.0);
  w.back() = negated ? -1.0 : 1.0;
  return ScalarForm((negated ? "neg_coord:" : "coord:") + std::to_string(k), std::move(w));
}

ScalarForm ScalarForm::linear(std::vector<double> weights) {
  if (weights.empty()) throw ConfigError("linear form needs at least one weight");
  std::ostringstream os;
  os.precision(17);
  os << "linear:";
  for (size_t i = 0; i < weights.size(); ++i) os << (i ? "," : "") << weights[i];
  return ScalarForm(os.str(), std::move(weights));
}

ScalarForm ScalarForm::parse(const std::string& name) {
  if (name == "identity") return identity();
  if (name == "negate") return negate();
  auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string head = name.substr(0, colon);
    const std::string rest = name.substr(colon + 1);
    try {
      if (head == "coord" || head == "neg_coord") {
        size_t used = 0;
        int k = std::stoi(rest, &used);
        if (used != rest.size()) throw std::invalid_argument(rest);
        return coord(k, head == "neg_coord");
      }
      if (head == "linear") {
        std::vector<double> w;
        std::stringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, ',')) {
          size_t used = 0;
          w.push_back(std::stod(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        }
        return linear(std::move(w));
      }
    } catch (const std::logic_error&) {
      // fall through to the error below
    }
  }
  throw ConfigError("unknown scalar form '" + name +
                    "' (expected identity, negate, coord:k, neg_coord:k, linear:w1,w2,..)");
}

double ScalarForm::operator()(const Token& x) const {
  double acc = 0.0;
  for (size_t i = 0; i < weights_.size(); ++i) acc += weights_[i] * x[static_cast<int>(i)];
  return acc;
}

std::vector<double> ScalarForm::gradient(int dim) const {
  std::vector<double> g(static_cast<size_t>(dim), 0.0);
  for (size_t i = 0; i < weights_.size() && i < g.size(); ++i) g[i] = weights_[i];
  return g;
}

// ---------------------------------------------------------------- specs

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::kDRetrieval: return "d_retrieval";
    case TargetKind::kMinPairShifted: return "min_pair_shifted";
    case TargetKind::kIntrinsic: return "intrinsic";
    case TargetKind::kTriangleCenter: return "triangle_center";
    case TargetKind::kPositionSum: return "position_sum";
    case TargetKind::kKthLargest: return "kth_largest";
  }
  return "unknown";
}

TargetKind parse_target_kind(const std::string& name) {
  for (auto kind : {TargetKind::kDRetrieval, TargetKind::kMinPairShifted, TargetKind::kIntrinsic,
                    TargetKind::kTriangleCenter, TargetKind::kPositionSum,
                    TargetKind::kKthLargest}) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown target kind '" + name + "'");
}

TargetSpec TargetSpec::d_retrieval(std::vector<ScalarForm> forms, int token_dim, Domain domain) {
  TargetSpec t;
  t.kind = TargetKind::kDRetrieval;
  t.forms = std::move(forms);
  t.token_dim = token_dim;
  t.domain = domain;
  t.validate();
  return t;
}

TargetSpec TargetSpec::min_pair_shifted(int token_dim, Domain domain) {
  TargetSpec t;
  t.kind = TargetKind::kMinPairShifted;
  t.token_dim = token_dim;
  t.domain = domain;
  t.validate();
  return t;
}

TargetSpec TargetSpec::intrinsic(std::vector<Eigen::MatrixXd> matrices, Domain domain) {
  TargetSpec t;
  t.kind = TargetKind::kIntrinsic;
  t.token_dim = matrices.empty() ? 0 : static_cast<int>(matrices.front().rows());
  t.matrices = std::move(matrices);
  t.domain = domain;
  t.validate();
  return t;
}

TargetSpec TargetSpec::random_intrinsic(int count, int token_dim, Domain domain, uint64_t seed) {
  if (count < 1 || token_dim < 1) throw ConfigError("random_intrinsic: D and d must be >= 1");
  if (token_dim == 1 && count > 1) throw ConfigError("random_intrinsic: d = 1 admits a single matrix");
  std::vector<Eigen::MatrixXd> mats;
  for (int i = 0; i < count; ++i) {
    Rng rng = Rng::for_item(seed, static_cast<uint64_t>(i));
    Eigen::MatrixXd g(token_dim, token_dim);
    for (int r = 0; r < token_dim; ++r)
      for (int c = 0; c < token_dim; ++c) g(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Fix column signs so the draw is a deterministic function of g.
    Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < token_dim; ++c)
      if (rmat(c, c) < 0) q.col(c) *= -1.0;
    mats.push_back(std::move(q));
  }
  return intrinsic(std::move(mats), domain);
}

TargetSpec TargetSpec::triangle_center(int token_dim, Domain domain) {
  TargetSpec t;
  t.kind = TargetKind::kTriangleCenter;
  t.token_dim = token_dim;
  t.domain = domain;
  t.validate();
  return t;
}

TargetSpec TargetSpec::position_sum(IndexSet positions, int token_dim, Domain domain) {
  TargetSpec t;
  t.kind = TargetKind::kPositionSum;
  t.fixed_positions = std::move(positions);
  t.token_dim = token_dim;
  t.domain = domain;
  t.validate();
  return t;
}

TargetSpec TargetSpec::kth_largest(int k, Domain domain) {
  TargetSpec t;
  t.kind = TargetKind::kKthLargest;
  t.k = k;
  t.token_dim = 1;
  t.domain = domain;
  t.validate();
  return t;
}

void TargetSpec::validate() const {
  std::vector<std::string> errors;
  if (token_dim < 1) errors.push_back("target.d must be >= 1");
  switch (kind) {
    case TargetKind::kDRetrieval:
      if (forms.empty()) errors.push_back("d_retrieval needs D >= 1 forms");
      for (size_t i = 0; i < forms.size(); ++i) {
        if (forms[i].support() > token_dim)
          errors.push_back("form " + forms[i].name() + " reads past d");
        for (size_t j = 0; j < i; ++j)
          if (forms[i] == forms[j]) errors.push_back("forms must be pairwise distinct");
      }
      break;
    case TargetKind::kIntrinsic:
      if (matrices.empty()) errors.push_back("intrinsic needs D >= 1 matrices");
      for (size_t i = 0; i < matrices.size(); ++i) {
        if (matrices[i].rows() != token_dim || matrices[i].cols() != token_dim)
          errors.push_back("matrix A" + std::to_string(i + 1) + " must be d x d");
        else
          for (size_t j = 0; j < i; ++j)
            if (matrices[j].rows() == token_dim && matrices[i] == matrices[j])
              errors.push_back("matrices must be pairwise distinct");
      }
      break;
    case TargetKind::kPositionSum:
      if (fixed_positions.empty()) errors.push_back("position_sum needs at least one position");
      break;
    case TargetKind::kKthLargest:
      if (token_dim != 1) errors.push_back("kth_largest requires d = 1");
      if (k < 1) errors.push_back("kth_largest requires k >= 1");
      break;
    case TargetKind::kMinPairShifted:
    case TargetKind::kTriangleCenter:
      break;
  }
  if (!errors.empty()) {
    std::string msg = "invalid target " + to_string(kind) + ":";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
}

void TargetSpec::check_sequence(const Sequence& x) const {
  if (x.dim() != token_dim) {
    throw ConfigError("sequence dimension " + std::to_string(x.dim()) + " != target d " +
                      std::to_string(token_dim));
  }
  if (x.domain() != domain) {
    throw ConfigError("sequence domain " + to_string(x.domain()) + " != target domain " +
                      to_string(domain));
  }
  if (kind == TargetKind::kKthLargest && k > x.length()) {
    throw ConfigError("kth_largest: k = " + std::to_string(k) + " exceeds T = " +
                      std::to_string(x.length()));
  }
  if (kind == TargetKind::kPositionSum && fixed_positions.max() > x.length()) {
    throw ConfigError("position_sum: position " + std::to_string(fixed_positions.max()) +
                      " exceeds T");
  }
}

int TargetSpec::components() const {
  if (kind == TargetKind::kDRetrieval) return static_cast<int>(forms.size());
  if (kind == TargetKind::kIntrinsic) return static_cast<int>(matrices.size());
  return 1;
}

int TargetSpec::max_active() const {
  switch (kind) {
    case TargetKind::kDRetrieval: return components();
    case TargetKind::kMinPairShifted: return 2;
    case TargetKind::kIntrinsic: return 2 * components();
    case TargetKind::kTriangleCenter: return 3;
    case TargetKind::kPositionSum: return fixed_positions.size();
    case TargetKind::kKthLargest: return 1;
  }
  return 0;
}

std::string TargetSpec::id() const {
  std::string s = to_string(kind) + "(";
  switch (kind) {
    case TargetKind::kDRetrieval:
    case TargetKind::kIntrinsic: s += "D=" + std::to_string(components()) + ","; break;
    case TargetKind::kPositionSum: s += "P=" + fixed_positions.to_string() + ","; break;
    case TargetKind::kKthLargest: s += "k=" + std::to_string(k) + ","; break;
    default: break;
  }
  return s + "d=" + std::to_string(token_dim) + ")";
}

bool TargetSpec::operator==(const TargetSpec& other) const {
  if (kind != other.kind || token_dim != other.token_dim || domain != other.domain ||
      forms != other.forms || fixed_positions != other.fixed_positions || k != other.k ||
      matrices.size() != other.matrices.size())
    return false;
  for (size_t i = 0; i < matrices.size(); ++i) {
    if (matrices[i].rows() != other.matrices[i].rows() ||
        matrices[i].cols() != other.matrices[i].cols() || matrices[i] != other.matrices[i])
      return false;
  }
  return true;
}

// ---------------------------------------------------------------- analysis

namespace {

double bilinear(const Token& a, const Eigen::MatrixXd& m, const Token& b) {
  double acc = 0.0;
  for (int r = 0; r < a.dim(); ++r) {
    double row = 0.0;
    for (int c = 0; c < b.dim(); ++c) row += m(r, c) * b[c];
    acc += a[r] * row;
  }
  return acc;
}

/// Value, per-token gradient and the separation of the optimizer from the best
/// candidate on a different index set.
struct Analysis {
  double value = 0.0;
  std::vector<std::vector<double>> grad;
  double gap = std::numeric_limits<double>::infinity();
};

void add_scaled(std::vector<double>& dst, const std::vector<double>& v, double scale) {
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += scale * v[i];
}

std::vector<double> coords_of(const Token& t) { return {t.coords().begin(), t.coords().end()}; }

/// Tracks the best candidate (by `better`) and the best value among
/// candidates whose index set differs from the incumbent's.
template <typename Better>
struct Tracker {
  explicit Tracker(Better b) : better(b) {}

  Better better;
  bool has = false;
  double best = 0.0;
  std::vector<int> best_tuple;
  IndexSet best_set;
  // Candidates seen so far, kept as (value, set) so the runner-up can be
  // recomputed when the incumbent changes.
  std::vector<std::pair<double, IndexSet>> seen;

  void offer(double v, const std::vector<int>& tuple) {
    IndexSet set(tuple);
    if (!has || better(v, best)) {
      has = true;
      best = v;
      best_tuple = tuple;
      best_set = set;
    }
    seen.emplace_back(v, std::move(set));
  }

  double gap() const {
    double g = std::numeric_limits<double>::infinity();
    for (const auto& [v, set] : seen)
      if (set != best_set) g = std::min(g, std::abs(v - best));
    return g;
  }
};

auto greater = [](double a, double b) { return a > b; };
auto less = [](double a, double b) { return a < b; };

Analysis analyze(const TargetSpec& target, const Sequence& x) {
  target.check_sequence(x);
  const int T = x.length();
  const int d = x.dim();
  Analysis out;
  out.grad.assign(static_cast<size_t>(T), std::vector<double>(static_cast<size_t>(d), 0.0));
  auto grad_at = [&](int t) -> std::vector<double>& { return out.grad[static_cast<size_t>(t - 1)]; };

  switch (target.kind) {
    case TargetKind::kDRetrieval: {
      for (const auto& f : target.forms) {
        Tracker<decltype(greater)> tr{greater};
        for (int t = 1; t <= T; ++t) tr.offer(f(x.at(t)), {t});
        out.value += tr.best;
        add_scaled(grad_at(tr.best_tuple[0]), f.gradient(d), 1.0);
        out.gap = std::min(out.gap, tr.gap());
      }
      break;
    }
    case TargetKind::kMinPairShifted: {
      Tracker<decltype(less)> tr{less};
      for (int s = 1; s <= T; ++s)
        for (int t = s; t <= T; ++t) tr.offer(2.0 * (1.0 + dot(x.at(s), x.at(t))), {s, t});
      out.value = tr.best;
      const int s = tr.best_tuple[0], t = tr.best_tuple[1];
      add_scaled(grad_at(s), coords_of(x.at(t)), 2.0);
      add_scaled(grad_at(t), coords_of(x.at(s)), 2.0);
      out.gap = tr.gap();
      break;
    }
    case TargetKind::kIntrinsic: {
      for (const auto& a : target.matrices) {
        Tracker<decltype(greater)> tr{greater};
        for (int s = 1; s <= T; ++s)
          for (int t = 1; t <= T; ++t) tr.offer(bilinear(x.at(s), a, x.at(t)), {s, t});
        out.value += tr.best;
        const int s = tr.best_tuple[0], t = tr.best_tuple[1];
        Eigen::VectorXd xs = Eigen::Map<const Eigen::VectorXd>(x.at(s).coords().data(), d);
        Eigen::VectorXd xt = Eigen::Map<const Eigen::VectorXd>(x.at(t).coords().data(), d);
        Eigen::VectorXd gs = a * xt;
        Eigen::VectorXd gt = a.transpose() * xs;
        add_scaled(grad_at(s), std::vector<double>(gs.data(), gs.data() + d), 1.0);
        add_scaled(grad_at(t), std::vector<double>(gt.data(), gt.data() + d), 1.0);
        out.gap = std::min(out.gap, tr.gap());
      }
      break;
    }
    case TargetKind::kTriangleCenter: {
      Tracker<decltype(less)> tr{less};
      std::vector<double> sum(static_cast<size_t>(d));
      for (int a = 1; a <= T; ++a)
        for (int b = a; b <= T; ++b)
          for (int c = b; c <= T; ++c) {
            double n2 = 0.0;
            for (int k = 0; k < d; ++k) {
              const double v = x.at(a)[k] + x.at(b)[k] + x.at(c)[k];
              n2 += v * v;
            }
            tr.offer(n2, {a, b, c});
          }
      out.value = tr.best;
      for (int k = 0; k < d; ++k) {
        sum[static_cast<size_t>(k)] = 0.0;
        for (int t : tr.best_tuple) sum[static_cast<size_t>(k)] += x.at(t)[k];
      }
      for (int t : tr.best_tuple) add_scaled(grad_at(t), sum, 2.0);
      out.gap = tr.gap();
      break;
    }
    case TargetKind::kPositionSum: {
      for (int j : target.fixed_positions) {
        for (int k = 0; k < d; ++k) {
          out.value += x.at(j)[k];
          grad_at(j)[static_cast<size_t>(k)] += 1.0;
        }
      }
      break;
    }
    case TargetKind::kKthLargest: {
      std::vector<int> order(static_cast<size_t>(T));
      for (int t = 0; t < T; ++t) order[static_cast<size_t>(t)] = t + 1;
      std::stable_sort(order.begin(), order.end(),
                       [&](int a, int b) { return x.at(a)[0] > x.at(b)[0]; });
      const auto k = static_cast<size_t>(target.k);
      const int pos = order[k - 1];
      out.value = x.at(pos)[0];
      grad_at(pos)[0] = 1.0;
      if (k >= 2) out.gap = std::min(out.gap, x.at(order[k - 2])[0] - out.value);
      if (k < order.size()) out.gap = std::min(out.gap, out.value - x.at(order[k])[0]);
      break;
    }
  }
  return out;
}

double norm(const std::vector<double>& v) {
  double acc = 0.0;
  for (double c : v) acc += c * c;
  return std::sqrt(acc);
}

}  // namespace

double evaluate(const TargetSpec& target, const Sequence& x) { return analyze(target, x).value; }

std::vector<std::vector<double>> target_gradient(const TargetSpec& target, const Sequence& x) {
  return analyze(target, x).grad;
}

ActiveSet active_index_set(const TargetSpec& target, const Sequence& x, const TieTolerance& tol) {
  Analysis a = analyze(target, x);
  ActiveSet out;
  out.gap = a.gap;
  out.tie = a.gap <= tol.value_gap;
  std::vector<int> members;
  for (size_t t = 0; t < a.grad.size(); ++t) {
    const double g = norm(a.grad[t]);
    if (g > 0.0) {
      members.push_back(static_cast<int>(t + 1));
      if (g <= tol.gradient) out.tie = true;
    }
  }
  out.indices = IndexSet(std::move(members));
  return out;
}

IndexSet active_index_set_fd(const TargetSpec& target, const Sequence& x, double h, double tol) {
  if (!(h > 0.0) || !(tol > 0.0)) throw ConfigError("active_index_set_fd: h and tol must be > 0");
  target.check_sequence(x);
  std::vector<int> members;
  for (int t = 1; t <= x.length(); ++t) {
    double n2 = 0.0;
    for (int k = 0; k < x.dim(); ++k) {
      const double c = x.at(t)[k];
      const double fp = evaluate(target, x.with_coordinate(t, k, c + h));
      const double fm = evaluate(target, x.with_coordinate(t, k, c - h));
      const double g = (fp - fm) / (2.0 * h);
      n2 += g * g;
    }
    if (std::sqrt(n2) > tol) members.push_back(t);
  }
  return IndexSet(std::move(members));
}

Sequence sample_for(const TargetSpec& target, int seq_len, Rng& rng) {
  return sample_sequence(seq_len, target.token_dim, target.domain, rng);
}

int d0_estimate(const TargetSpec& target, int seq_len, int n_samples, uint64_t seed) {
  if (n_samples < 1) throw ConfigError("d0_estimate: n_samples must be >= 1");
  int best = 0;
  for (int i = 0; i < n_samples; ++i) {
    Rng rng = Rng::for_item(seed, static_cast<uint64_t>(i));
    best = std::max(best, active_index_set(target, sample_for(target, seq_len, rng)).indices.size());
  }
  return best;
}

// ---------------------------------------------------------------- scores

ScoreFunction ScoreFunction::neg_min_cross_inner() {
  ScoreFunction f;
  f.kind = ScoreKind::kNegMinCrossInner;
  f.label = "neg_min_cross_inner";
  return f;
}

ScoreFunction ScoreFunction::neg_min_within() {
  ScoreFunction f;
  f.kind = ScoreKind::kNegMinWithin;
  f.label = "neg_min_within";
  return f;
}

ScoreFunction ScoreFunction::bilinear_max(Eigen::MatrixXd a, std::string label) {
  ScoreFunction f;
  f.kind = ScoreKind::kBilinearMax;
  f.matrix = std::move(a);
  f.label = std::move(label);
  return f;
}

ScoreFunction ScoreFunction::bilinear_max_within(Eigen::MatrixXd a, std::string label) {
  ScoreFunction f;
  f.kind = ScoreKind::kBilinearMaxWithin;
  f.matrix = std::move(a);
  f.label = std::move(label);
  return f;
}

ScoreFunction ScoreFunction::f_value(ScalarForm form) {
  ScoreFunction f;
  f.kind = ScoreKind::kFValue;
  f.label = "f_value:" + form.name();
  f.form = std::move(form);
  return f;
}

bool ScoreFunction::needs_query() const {
  return kind == ScoreKind::kNegMinCrossInner || kind == ScoreKind::kBilinearMax;
}

bool ScoreFunction::operator==(const ScoreFunction& other) const {
  if (kind != other.kind || label != other.label || !(form == other.form)) return false;
  if (matrix.rows() != other.matrix.rows() || matrix.cols() != other.matrix.cols()) return false;
  return matrix.size() == 0 || matrix == other.matrix;
}

double score(const ScoreFunction& fn, const Sequence& x, const IndexSet& query,
             const IndexSet& source) {
  if (source.empty()) throw DomainError("score: source set is empty");
  if (fn.needs_query() && query.empty())
    throw DomainError("score: " + fn.label + " needs a nonempty query set");
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (fn.kind) {
    case ScoreKind::kNegMinCrossInner: {
      double m = inf;
      for (int i : query)
        for (int j : source) m = std::min(m, dot(x.at(i), x.at(j)));
      return -m;
    }
    case ScoreKind::kBilinearMax: {
      double m = -inf;
      for (int i : query)
        for (int j : source) m = std::max(m, bilinear(x.at(i), fn.matrix, x.at(j)));
      return m;
    }
    case ScoreKind::kBilinearMaxWithin: {
      const IndexSet all = query.united(source);
      double m = -inf;
      for (int a : all)
        for (int b : all) m = std::max(m, bilinear(x.at(a), fn.matrix, x.at(b)));
      return m;
    }
    case ScoreKind::kFValue: {
      double m = -inf;
      for (int j : source) m = std::max(m, fn.form(x.at(j)));
      return m;
    }
    case ScoreKind::kNegMinWithin: {
      const IndexSet all = query.united(source);
      double m = inf;
      for (int a : all)
        for (int b : all) m = std::min(m, dot(x.at(a), x.at(b)));
      return -m;
    }
  }
  return -inf;
}

}  // namespace infoflow
