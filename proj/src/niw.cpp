#include "ssigmm/niw.hpp"

#include <cmath>
#include <numbers>

#include "ssigmm/errors.hpp"

namespace ssigmm {

namespace {

// log of the multivariate gamma function Gamma_D(a).
double log_mv_gamma(double a, Eigen::Index d) {
  double r = 0.25 * static_cast<double>(d * (d - 1)) * std::log(std::numbers::pi);
  for (Eigen::Index j = 0; j < d; ++j) r += std::lgamma(a - 0.5 * static_cast<double>(j));
  return r;
}

}  // namespace

void NiwHyper::validate() const {
  const auto d = m0.size();
  if (d < 1) throw InvalidConfig("NIW prior: m0 must be non-empty");
  if (lambda0.rows() != d || lambda0.cols() != d)
    throw InvalidConfig("NIW prior: lambda0 must be D x D");
  if (!(kappa0 > 0.0)) throw InvalidConfig("NIW prior: kappa0 must be positive");
  if (!(nu0 > static_cast<double>(d) - 1.0))
    throw InvalidConfig("NIW prior: nu0 must exceed D - 1");
  if (!m0.allFinite()) throw InvalidConfig("NIW prior: m0 must be finite");
  try {
    Cholesky check(lambda0);
  } catch (const NotPositiveDefinite& e) {
    throw NotPositiveDefinite(std::string("NIW prior: lambda0: ") + e.what());
  }
}

NiwHyper NiwHyper::defaults_for(const RowMatrix& x) {
  const auto n = x.rows();
  const auto d = x.cols();
  NiwHyper h;
  h.m0 = x.colwise().mean().transpose();
  h.lambda0 = Matrix::Zero(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = n > 1 ? (x.col(j).array() - h.m0[j]).square().sum() / static_cast<double>(n - 1) : 0.0;
    h.lambda0(j, j) = var > 0.0 ? var : 1.0;
  }
  h.kappa0 = 1.0;
  h.nu0 = static_cast<double>(d) + 1.0;
  return h;
}

SuffStats::SuffStats(Eigen::Index dim) : sum_x_(Vec::Zero(dim)), sum_xxt_(Matrix::Zero(dim, dim)) {}

void SuffStats::add(std::span<const double> x) {
  const auto d = dim();
  for (Eigen::Index i = 0; i < d; ++i) {
    sum_x_[i] += x[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
      sum_xxt_(i, j) += v;
      if (j != i) sum_xxt_(j, i) += v;
    }
  }
  ++count_;
}

void SuffStats::remove(std::span<const double> x) {
  if (count_ == 0) throw EmptyCluster("SuffStats::remove on an empty cluster");
  --count_;
  if (count_ == 0) {
    sum_x_.setZero();
    sum_xxt_.setZero();
    return;
  }
  const auto d = dim();
  for (Eigen::Index i = 0; i < d; ++i) {
    sum_x_[i] -= x[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(j)];
      sum_xxt_(i, j) -= v;
      if (j != i) sum_xxt_(j, i) -= v;
    }
  }
}

Vec SuffStats::mean() const {
  if (count_ == 0) return Vec::Zero(dim());
  return sum_x_ / static_cast<double>(count_);
}

Matrix SuffStats::scatter() const {
  if (count_ == 0) return Matrix::Zero(dim(), dim());
  const Vec mu = mean();
  return sum_xxt_ - static_cast<double>(count_) * mu * mu.transpose();
}

NiwPosterior posterior(const NiwHyper& h, const SuffStats& s) {
  NiwPosterior p;
  posterior(h, s, p);
  return p;
}

void posterior(const NiwHyper& h, const SuffStats& s, NiwPosterior& p) {
  if (s.count() == 0) {
    p.m = h.m0;
    p.lambda = h.lambda0;
    p.kappa = h.kappa0;
    p.nu = h.nu0;
    return;
  }
  const auto d = h.dim();
  const double n = static_cast<double>(s.count());
  p.kappa = h.kappa0 + n;
  p.nu = h.nu0 + n;
  p.m.resize(d);
  p.lambda.resize(d, d);
  // Lambda_k = Lambda_0 + S_k + kappa0 n / (kappa0 + n) (xbar - m0)(xbar - m0)^T
  // with S_k = sum xx^T - n xbar xbar^T.
  const double shrink = h.kappa0 * n / (h.kappa0 + n);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double xbar_i = s.sum_x()[i] / n;
    p.m[i] = (h.kappa0 * h.m0[i] + s.sum_x()[i]) / p.kappa;
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double xbar_j = s.sum_x()[j] / n;
      const double v = h.lambda0(i, j) + s.sum_xxt()(i, j) - n * xbar_i * xbar_j +
                       shrink * (xbar_i - h.m0[i]) * (xbar_j - h.m0[j]);
      p.lambda(i, j) = v;
      p.lambda(j, i) = v;
    }
  }
}

StudentT predictive_distribution(const NiwPosterior& p) {
  const double dof = p.nu - static_cast<double>(p.m.size()) + 1.0;
  const double c = (p.kappa + 1.0) / (p.kappa * dof);
  return StudentT(p.m, c * p.lambda, dof);
}

void update_predictive(const NiwHyper& h, const SuffStats& s, NiwPosterior& scratch, Matrix& scale_scratch,
                       StudentT& out) {
  posterior(h, s, scratch);
  const double dof = scratch.nu - static_cast<double>(scratch.m.size()) + 1.0;
  scale_scratch.noalias() = ((scratch.kappa + 1.0) / (scratch.kappa * dof)) * scratch.lambda;
  out.assign(scratch.m, scale_scratch, dof);
}

double predictive_new(const NiwHyper& h, const Vec& x) {
  return predictive_distribution({h.m0, h.lambda0, h.kappa0, h.nu0}).log_pdf(x);
}

double predictive_existing(const NiwHyper& h, const SuffStats& s, const Vec& x) {
  if (s.count() == 0)
    throw EmptyCluster("predictive_existing called with an empty cluster");
  return predictive_distribution(posterior(h, s)).log_pdf(x);
}

double cluster_log_marginal(const NiwHyper& h, std::span<const Vec> points) {
  if (points.empty()) throw InvalidConfig("cluster_log_marginal: empty point list");
  SuffStats s(h.dim());
  double total = 0.0;
  for (const Vec& x : points) {
    total += s.count() == 0 ? predictive_new(h, x) : predictive_existing(h, s, x);
    s.add(x);
  }
  return total;
}

double log_marginal_from_stats(const NiwHyper& h, const SuffStats& s) {
  if (s.count() == 0) return 0.0;
  const auto d = h.dim();
  const double dd = static_cast<double>(d);
  const double n = static_cast<double>(s.count());
  const NiwPosterior p = posterior(h, s);
  const double logdet0 = Cholesky(h.lambda0).log_det();
  const double logdetn = Cholesky(p.lambda).log_det();
  return -0.5 * n * dd * std::log(std::numbers::pi) + log_mv_gamma(0.5 * p.nu, d) -
         log_mv_gamma(0.5 * h.nu0, d) + 0.5 * h.nu0 * logdet0 - 0.5 * p.nu * logdetn +
         0.5 * dd * (std::log(h.kappa0) - std::log(p.kappa));
}

}  // namespace ssigmm
