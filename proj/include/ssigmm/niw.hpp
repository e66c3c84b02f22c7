#pragma once

#include <span>
#include <vector>

#include "ssigmm/core_math.hpp"

namespace ssigmm {

// Normal-inverse-Wishart prior over a Gaussian's (mean, covariance).
struct NiwHyper {
  Vec m0;          // prior mean
  Matrix lambda0;  // prior scale matrix
  double kappa0 = 1.0;
  double nu0 = 0.0;

  Eigen::Index dim() const { return m0.size(); }

  // Throws InvalidConfig unless kappa0 > 0 and nu0 > D - 1, NotPositiveDefinite
  // unless lambda0 is SPD.
  void validate() const;

  // kappa0 = 1, nu0 = D + 1, m0 = column means of x, lambda0 = diagonal of the
  // empirical covariance of x (rows are observations).
  static NiwHyper defaults_for(const RowMatrix& x);
};

// Per-cluster sufficient statistics stored as (count, sum x, sum x x^T).
class SuffStats {
 public:
  SuffStats() = default;
  explicit SuffStats(Eigen::Index dim);

  void add(std::span<const double> x);
  void add(const Vec& x) { add(as_span(x)); }
  // Throws EmptyCluster when count is 0. Returning to count 0 resets the sums
  // to exact zeros.
  void remove(std::span<const double> x);
  void remove(const Vec& x) { remove(as_span(x)); }

  long count() const { return count_; }
  Eigen::Index dim() const { return sum_x_.size(); }
  const Vec& sum_x() const { return sum_x_; }
  const Matrix& sum_xxt() const { return sum_xxt_; }

  Vec mean() const;
  // Scatter about the mean: sum_xxT - count * mean * mean^T.
  Matrix scatter() const;

  static std::span<const double> as_span(const Vec& x) {
    return {x.data(), static_cast<std::size_t>(x.size())};
  }

 private:
  long count_ = 0;
  Vec sum_x_;
  Matrix sum_xxt_;
};

struct NiwPosterior {
  Vec m;
  Matrix lambda;
  double kappa = 0.0;
  double nu = 0.0;
};

NiwPosterior posterior(const NiwHyper& h, const SuffStats& s);
// Writes into `out`, reusing its storage.
void posterior(const NiwHyper& h, const SuffStats& s, NiwPosterior& out);

// Student-t predictive of a posterior: dof nu - D + 1, location m,
// scale (kappa + 1) / (kappa * (nu - D + 1)) * lambda.
StudentT predictive_distribution(const NiwPosterior& p);

// Recomputes `out` as the predictive of a cluster with statistics s.
// `scratch` only provides reusable storage.
void update_predictive(const NiwHyper& h, const SuffStats& s, NiwPosterior& scratch, Matrix& scale_scratch,
                       StudentT& out);

// Log predictive density of x under a brand-new cluster.
double predictive_new(const NiwHyper& h, const Vec& x);

// Log predictive density of x under a cluster with statistics s.
// Throws EmptyCluster when s is empty; such cases must use predictive_new.
double predictive_existing(const NiwHyper& h, const SuffStats& s, const Vec& x);

// log p(x_1..x_n | h), accumulated as a chain of one-step predictives.
double cluster_log_marginal(const NiwHyper& h, std::span<const Vec> points);

// Same quantity in closed form from sufficient statistics, as a ratio of NIW
// normalizing constants. Used by the sampler to score states cheaply.
double log_marginal_from_stats(const NiwHyper& h, const SuffStats& s);

}  // namespace ssigmm
