#pragma once

#include <vector>

namespace timeagg {

struct ScoredSet {
  std::vector<double> scores;
  std::vector<int> labels;  // 0 or 1
};

/// Mann-Whitney auROC with half credit for ties; O(n log n) via midranks.
double auroc(const ScoredSet& s);

struct DelongCi {
  double auc = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  double variance = 0.0;
};

/// DeLong structural-component variance and the normal-approximation CI,
/// clipped to [0, 1]. Requires at least two samples per class.
DelongCi delong_ci(const ScoredSet& s, double alpha = 0.05);

/// (permuted_mean - original) / original.
double relative_difference(double permuted_mean, double original);

/// Inverse standard normal CDF (Acklam's approximation + one Halley step).
double normal_quantile(double p);

/// Midranks (1-based, ties averaged) of v; shared by auroc and delong_ci.
std::vector<double> midranks(const std::vector<double>& v);

}  // namespace timeagg
