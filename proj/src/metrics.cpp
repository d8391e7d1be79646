#include "timeagg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "timeagg/errors.hpp"

namespace timeagg {

namespace {

void check_scored_set(const ScoredSet& s, long min_per_class) {
  if (s.scores.size() != s.labels.size()) {
    throw DataError("scored set: scores and labels differ in length");
  }
  long pos = 0, neg = 0;
  for (int y : s.labels) {
    if (y != 0 && y != 1) throw DataError("scored set: labels must be 0 or 1");
    (y ? pos : neg)++;
  }
  if (pos < min_per_class || neg < min_per_class) {
    throw DataError("scored set: need at least " + std::to_string(min_per_class) +
                    " samples of each class");
  }
}

}  // namespace

std::vector<double> midranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    // ranks i+1 .. j+1 (1-based) share the midrank
    const double mid = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mid;
    i = j + 1;
  }
  return ranks;
}

double auroc(const ScoredSet& s) {
  check_scored_set(s, 1);
  const std::vector<double> ranks = midranks(s.scores);
  double m = 0.0, n = 0.0, pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    if (s.labels[i] == 1) {
      m += 1.0;
      pos_rank_sum += ranks[i];
    } else {
      n += 1.0;
    }
  }
  return (pos_rank_sum - m * (m + 1.0) / 2.0) / (m * n);
}

DelongCi delong_ci(const ScoredSet& s, double alpha) {
  check_scored_set(s, 2);
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < s.labels.size(); ++i) {
    (s.labels[i] == 1 ? pos : neg).push_back(s.scores[i]);
  }
  const auto m = static_cast<double>(pos.size());
  const auto n = static_cast<double>(neg.size());

  // Fast structural components via midranks (Sun & Xu style):
  //   V10_i = (rank of pos_i among all - rank of pos_i among positives) / n
  //   V01_j = 1 - (rank of neg_j among all - rank of neg_j among negatives) / m
  std::vector<double> combined = pos;
  combined.insert(combined.end(), neg.begin(), neg.end());
  const std::vector<double> t_all = midranks(combined);
  const std::vector<double> t_pos = midranks(pos);
  const std::vector<double> t_neg = midranks(neg);

  std::vector<double> v10(pos.size()), v01(neg.size());
  double auc = 0.0;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    v10[i] = (t_all[i] - t_pos[i]) / n;
    auc += v10[i];
  }
  auc /= m;
  for (std::size_t j = 0; j < neg.size(); ++j) {
    v01[j] = 1.0 - (t_all[pos.size() + j] - t_neg[j]) / m;
  }

  auto sample_var = [](const std::vector<double>& v, double mean) {
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(v.size() - 1);
  };
  const double s10 = sample_var(v10, auc);
  const double s01 = sample_var(v01, auc);
  const double variance = std::max(0.0, s10 / m + s01 / n);

  DelongCi ci;
  ci.auc = auc;
  ci.variance = variance;
  const double z = normal_quantile(1.0 - alpha / 2.0);
  const double half = z * std::sqrt(variance);
  ci.lo = std::clamp(auc - half, 0.0, 1.0);
  ci.hi = std::clamp(auc + half, 0.0, 1.0);
  return ci;
}

double relative_difference(double permuted_mean, double original) {
  if (original == 0.0) throw DataError("relative_difference: original score is zero");
  return (permuted_mean - original) / original;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw DataError("normal_quantile: p must be in (0,1)");
  // Acklam's rational approximation
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // one Halley refinement against the exact CDF
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
  x = x - u / (1.0 + x * u / 2.0);
  return x;
}

}  // namespace timeagg
