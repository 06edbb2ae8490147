#pragma once

// Brute-force reference implementations used only by the tests. They share
// no code with the library beyond the value types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "infoflow/core.hpp"
#include "infoflow/targets.hpp"

namespace oracle {

using infoflow::Sequence;
using infoflow::TargetKind;
using infoflow::TargetSpec;

inline double dot(const Sequence& x, int a, int b) {
  double s = 0.0;
  for (int c = 0; c < x.dim(); ++c) s += x.at(a)[c] * x.at(b)[c];
  return s;
}

inline double bilinear(const Sequence& x, const Eigen::MatrixXd& m, int a, int b) {
  double s = 0.0;
  for (int i = 0; i < x.dim(); ++i)
    for (int j = 0; j < x.dim(); ++j) s += x.at(a)[i] * m(i, j) * x.at(b)[j];
  return s;
}

inline double form_value(const infoflow::ScalarForm& f, const Sequence& x, int t) {
  return f(x.at(t));
}

/// Direct evaluation over all ordered tuples (triangle: all T^3 triples).
inline double evaluate(const TargetSpec& target, const Sequence& x) {
  const int T = x.length();
  const double inf = std::numeric_limits<double>::infinity();
  switch (target.kind) {
    case TargetKind::kDRetrieval: {
      double total = 0.0;
      for (const auto& f : target.forms) {
        double best = -inf;
        for (int t = 1; t <= T; ++t) best = std::max(best, form_value(f, x, t));
        total += best;
      }
      return total;
    }
    case TargetKind::kMinPairShifted: {
      double best = inf;
      for (int s = 1; s <= T; ++s)
        for (int t = 1; t <= T; ++t) best = std::min(best, 2.0 * (1.0 + dot(x, s, t)));
      return best;
    }
    case TargetKind::kIntrinsic: {
      double total = 0.0;
      for (const auto& m : target.matrices) {
        double best = -inf;
        for (int s = 1; s <= T; ++s)
          for (int t = 1; t <= T; ++t) best = std::max(best, bilinear(x, m, s, t));
        total += best;
      }
      return total;
    }
    case TargetKind::kTriangleCenter: {
      double best = inf;
      for (int a = 1; a <= T; ++a)
        for (int b = 1; b <= T; ++b)
          for (int c = 1; c <= T; ++c) {
            double n2 = 0.0;
            for (int k = 0; k < x.dim(); ++k) {
              const double v = x.at(a)[k] + x.at(b)[k] + x.at(c)[k];
              n2 += v * v;
            }
            best = std::min(best, n2);
          }
      return best;
    }
    case TargetKind::kPositionSum: {
      double total = 0.0;
      for (int p : target.fixed_positions)
        for (int c = 0; c < x.dim(); ++c) total += x.at(p)[c];
      return total;
    }
    case TargetKind::kKthLargest: {
      std::vector<double> v;
      for (int t = 1; t <= T; ++t) v.push_back(x.at(t)[0]);
      std::sort(v.begin(), v.end(), std::greater<>());
      return v[static_cast<size_t>(target.k - 1)];
    }
  }
  return 0.0;
}

inline long long choose(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (long long i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline long long ipow(long long b, int e) {
  long long r = 1;
  while (e-- > 0) r *= b;
  return r;
}

/// Model comparison count written directly from its definition over a grid
/// sizes[l][t-1] of information-set sizes, l = 1..L (index 0 unused).
inline long long comparison_count(const std::vector<std::vector<long long>>& sizes,
                                  const std::vector<int>& heads, int T, int beta1) {
  const int L = static_cast<int>(heads.size());
  long long total = 0;
  for (int t = 1; t <= T; ++t)
    for (int l = 1; l <= L - 1; ++l)
      total += ipow(sizes[static_cast<size_t>(l)][static_cast<size_t>(t - 1)], beta1) - 1 +
               static_cast<long long>(heads[static_cast<size_t>(l - 1)]) * (T - 1);
  for (int l = 1; l <= L; ++l)
    total += ipow(sizes[static_cast<size_t>(l)][static_cast<size_t>(T)], beta1) - 1 +
             static_cast<long long>(heads[static_cast<size_t>(l - 1)]) * (T - 1);
  return total;
}

/// Central-difference partial derivative of the oracle value.
inline double partial(const TargetSpec& target, const Sequence& x, int t, int c, double h) {
  const double v = x.at(t)[c];
  return (oracle::evaluate(target, x.with_coordinate(t, c, v + h)) -
          oracle::evaluate(target, x.with_coordinate(t, c, v - h))) /
         (2.0 * h);
}

}  // namespace oracle
