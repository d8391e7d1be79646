#include "timeagg/tsne.hpp"

#include <cmath>
#include <limits>

#include "timeagg/errors.hpp"
#include "timeagg/rng.hpp"

namespace timeagg {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPFloor = 1e-12;

MatrixXd squared_distances(const MatrixXd& x) {
  const VectorXd norms = x.rowwise().squaredNorm();
  MatrixXd d = (-2.0 * x * x.transpose()).colwise() + norms;
  d.rowwise() += norms.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

/// Row of conditional probabilities for precision beta; returns entropy in bits.
double conditional_row(const MatrixXd& d2, long i, double beta,
                       Eigen::RowVectorXd& p_out) {
  const long n = d2.rows();
  double sum = 0.0;
  double min_d = std::numeric_limits<double>::infinity();
  for (long j = 0; j < n; ++j) {
    if (j != i) min_d = std::min(min_d, d2(i, j));
  }
  for (long j = 0; j < n; ++j) {
    // shift by the row minimum before exponentiating
    p_out(j) = j == i ? 0.0 : std::exp(-beta * (d2(i, j) - min_d));
    sum += p_out(j);
  }
  double entropy_bits = 0.0;
  if (sum > 0.0) {
    for (long j = 0; j < n; ++j) {
      p_out(j) /= sum;
      if (p_out(j) > 0.0) entropy_bits -= p_out(j) * std::log2(p_out(j));
    }
  } else {
    // all neighbours at (numerically) infinite distance: fall back to uniform
    for (long j = 0; j < n; ++j) p_out(j) = j == i ? 0.0 : 1.0 / static_cast<double>(n - 1);
    entropy_bits = std::log2(static_cast<double>(n - 1));
  }
  return entropy_bits;
}

MatrixXd joint_probabilities(const MatrixXd& d2, double perplexity) {
  const long n = d2.rows();
  const double target_bits = std::log2(perplexity);
  MatrixXd conditional(n, n);
  Eigen::RowVectorXd row(n);
  for (long i = 0; i < n; ++i) {
    double beta = 1.0, beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();
    double entropy = conditional_row(d2, i, beta, row);
    for (int it = 0; it < 50 && std::abs(entropy - target_bits) > 1e-5; ++it) {
      if (entropy > target_bits) {
        beta_lo = beta;
        beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
      } else {
        beta_hi = beta;
        beta = 0.5 * (beta + beta_lo);
      }
      entropy = conditional_row(d2, i, beta, row);
    }
    conditional.row(i) = row;
  }

  MatrixXd p = (conditional + conditional.transpose()) / (2.0 * static_cast<double>(n));
  // floor, renormalize, floor: keeps off-diagonal entries >= 1e-12 while the
  // total stays within 1e-9 of 1
  for (int pass = 0; pass < 2; ++pass) {
    for (long i = 0; i < n; ++i) {
      for (long j = 0; j < n; ++j) {
        if (i != j && p(i, j) < kPFloor) p(i, j) = kPFloor;
      }
    }
    if (pass == 0) p /= p.sum();
  }
  p.diagonal().setZero();
  return p;
}

double kl_divergence(const MatrixXd& p, const MatrixXd& q) {
  double kl = 0.0;
  for (long i = 0; i < p.rows(); ++i) {
    for (long j = 0; j < p.cols(); ++j) {
      if (i == j || p(i, j) <= 0.0) continue;
      kl += p(i, j) * std::log(p(i, j) / std::max(q(i, j), kPFloor));
    }
  }
  return kl;
}

}  // namespace

TsneResult tsne(const Eigen::MatrixXd& x, const TsneConfig& cfg) {
  const long n = x.rows();
  if (n < 5) throw DataError("tsne: need at least 5 points");
  if (!(cfg.perplexity > 0.0) ||
      cfg.perplexity >= (static_cast<double>(n) - 1.0) / 3.0) {
    throw DataError("tsne: perplexity infeasible for n=" + std::to_string(n));
  }

  TsneResult result;
  result.joint_p = joint_probabilities(squared_distances(x), cfg.perplexity);
  const MatrixXd& p = result.joint_p;

  Rng rng(cfg.seed);
  MatrixXd y(n, 2);
  for (long i = 0; i < n; ++i) {
    y(i, 0) = rng.normal(0.0, 1e-4);
    y(i, 1) = rng.normal(0.0, 1e-4);
  }
  MatrixXd velocity = MatrixXd::Zero(n, 2);

  MatrixXd w(n, n), q(n, n), mult(n, n);
  for (int it = 0; it < cfg.iters; ++it) {
    w = (1.0 + squared_distances(y).array()).inverse();
    w.diagonal().setZero();
    const double w_sum = w.sum();
    q = w / w_sum;

    result.kl_history.push_back(kl_divergence(p, q));

    const double exaggeration = it < cfg.exaggeration_end_iter ? cfg.early_exaggeration : 1.0;
    mult = (exaggeration * p - q).cwiseProduct(w);
    const VectorXd row_sums = mult.rowwise().sum();
    const MatrixXd grad = 4.0 * (row_sums.asDiagonal() * y - mult * y);

    const double momentum =
        it < cfg.momentum_switch_iter ? cfg.momentum_initial : cfg.momentum_final;
    velocity = momentum * velocity - cfg.learning_rate * grad;
    y += velocity;
    y.rowwise() -= y.colwise().mean();

    if (!y.allFinite()) throw NumericError("tsne: diverged at iteration " + std::to_string(it));
  }

  result.embedding = y;
  return result;
}

}  // namespace timeagg
