#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace timeagg {

struct TsneConfig {
  double perplexity = 30.0;
  int iters = 1000;
  std::uint64_t seed = 0;
  double learning_rate = 200.0;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  double early_exaggeration = 12.0;
  int exaggeration_end_iter = 250;
};

struct TsneResult {
  Eigen::MatrixXd embedding;       // n x 2
  Eigen::MatrixXd joint_p;         // symmetric, off-diagonal >= 1e-12, sums to 1
  std::vector<double> kl_history;  // KL(P||Q) at the start of each iteration
};

/// Exact O(n^2) t-SNE. Per-point bandwidths from a 50-step binary search on
/// perplexity in bits (tolerance 1e-5); Student-t low-dimensional kernel;
/// plain momentum gradient descent with early exaggeration.
TsneResult tsne(const Eigen::MatrixXd& x, const TsneConfig& cfg = {});

}  // namespace timeagg
