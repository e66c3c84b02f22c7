#include "ssigmm/baseline.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include "ssigmm/errors.hpp"

namespace ssigmm {

namespace {

constexpr double kCovFloor = 1e-6;

struct EStep {
  Matrix resp;
  double log_likelihood;
};

EStep expectation(const RowMatrix& x, std::span<const int> component_of_label, const GmmParams& p) {
  const auto n = x.rows();
  const auto k = static_cast<Eigen::Index>(p.k());
  const double d = static_cast<double>(x.cols());

  std::vector<Cholesky> chol;
  std::vector<double> log_const;
  for (Eigen::Index c = 0; c < k; ++c) {
    try {
      chol.emplace_back(p.covariances[static_cast<std::size_t>(c)]);
    } catch (const NotPositiveDefinite&) {
      throw DegenerateComponent("ssgmm: component " + std::to_string(c) + " has a singular covariance");
    }
    log_const.push_back(std::log(p.weights[c]) - 0.5 * (d * std::log(2.0 * std::numbers::pi) + chol.back().log_det()));
  }

  EStep e{Matrix::Zero(n, k), 0.0};
  std::vector<double> lp(static_cast<std::size_t>(k));
  std::vector<double> diff(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) {
      const Vec& mu = p.means[static_cast<std::size_t>(c)];
      for (Eigen::Index j = 0; j < x.cols(); ++j) diff[static_cast<std::size_t>(j)] = x(i, j) - mu[j];
      lp[static_cast<std::size_t>(c)] = log_const[static_cast<std::size_t>(c)] - 0.5 * chol[static_cast<std::size_t>(c)].quad_form(diff);
    }
    const int fixed = component_of_label[static_cast<std::size_t>(i)];
    if (fixed >= 0) {
      e.resp(i, fixed) = 1.0;
      e.log_likelihood += lp[static_cast<std::size_t>(fixed)];
      continue;
    }
    const double lse = log_sum_exp(lp);
    e.log_likelihood += lse;
    for (Eigen::Index c = 0; c < k; ++c) e.resp(i, c) = std::exp(lp[static_cast<std::size_t>(c)] - lse);
  }
  return e;
}

GmmParams maximization(const RowMatrix& x, const Matrix& resp) {
  const auto n = x.rows();
  const auto k = resp.cols();
  const auto d = x.cols();
  GmmParams p;
  p.weights = Vec(k);
  const Vec mass = resp.colwise().sum().transpose();
  for (Eigen::Index c = 0; c < k; ++c) {
    if (!(mass[c] >= 10.0 * std::numeric_limits<double>::epsilon()))
      throw DegenerateComponent("ssgmm: component " + std::to_string(c) + " lost its responsibility mass");
    p.weights[c] = mass[c] / static_cast<double>(n);
    const Vec mu = (x.transpose() * resp.col(c)) / mass[c];
    Matrix cov = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = resp(i, c);
      if (r == 0.0) continue;
      const Vec dx = x.row(i).transpose() - mu;
      cov.noalias() += r * dx * dx.transpose();
    }
    cov /= mass[c];
    cov.diagonal().array() += kCovFloor * cov.trace() / static_cast<double>(d);
    p.means.push_back(mu);
    p.covariances.push_back(cov);
  }
  p.weights /= p.weights.sum();
  return p;
}

}  // namespace

SsgmmResult ssgmm_fit(const RowMatrix& x, std::span<const int> labels, const SsgmmConfig& config) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 1 || d < 1) throw InvalidConfig("ssgmm: empty dataset");
  if (!labels.empty() && labels.size() != static_cast<std::size_t>(n))
    throw LengthMismatch("ssgmm: labels length differs from N");
  if (config.max_iter < 1) throw InvalidConfig("ssgmm: max_iter must be positive");
  if (!(config.tol > 0.0)) throw InvalidConfig("ssgmm: tol must be positive");

  std::set<int> distinct;
  for (int y : labels)
    if (y > 0) distinct.insert(y);
  const int k = config.k > 0 ? config.k : static_cast<int>(distinct.size());
  if (k < 1) throw InvalidConfig("ssgmm: no labels observed and no component count given");
  if (k < static_cast<int>(distinct.size()))
    throw InvalidConfig("ssgmm: k must be at least the number of distinct labels");

  SsgmmResult out;
  std::map<int, int> comp_of;
  for (int y : distinct) {
    comp_of[y] = static_cast<int>(out.component_labels.size());
    out.component_labels.push_back(y);
  }
  out.component_labels.resize(static_cast<std::size_t>(k), 0);

  std::vector<int> fixed(static_cast<std::size_t>(n), -1);
  std::vector<Eigen::Index> unlabeled;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels.empty() ? 0 : labels[static_cast<std::size_t>(i)];
    if (y > 0)
      fixed[static_cast<std::size_t>(i)] = comp_of.at(y);
    else
      unlabeled.push_back(i);
  }

  // Starting point: labeled class means, random unlabeled points for the
  // extra components, pooled covariance everywhere, uniform weights.
  GmmParams init;
  const Vec grand = x.colwise().mean().transpose();
  Matrix pooled = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec dx = x.row(i).transpose() - grand;
    pooled.noalias() += dx * dx.transpose();
  }
  pooled /= static_cast<double>(n);
  pooled.diagonal().array() += kCovFloor * std::max(pooled.trace(), 1.0) / static_cast<double>(d);
  init.weights = Vec::Constant(k, 1.0 / k);
  for (std::size_t c = 0; c < distinct.size(); ++c) {
    Vec sum = Vec::Zero(d);
    long cnt = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (fixed[static_cast<std::size_t>(i)] == static_cast<int>(c)) {
        sum += x.row(i).transpose();
        ++cnt;
      }
    init.means.push_back(sum / static_cast<double>(cnt));
  }
  Rng rng(config.seed);
  for (int c = static_cast<int>(distinct.size()); c < k; ++c) {
    if (unlabeled.empty()) throw InvalidConfig("ssgmm: extra components need unlabeled points");
    const std::size_t pick = rng.below(unlabeled.size());
    init.means.push_back(x.row(unlabeled[pick]).transpose());
    unlabeled.erase(unlabeled.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  init.covariances.assign(static_cast<std::size_t>(k), pooled);

  GmmParams params = init;
  EStep e = expectation(x, fixed, params);
  out.log_likelihood.push_back(e.log_likelihood);
  for (int it = 1; it <= config.max_iter; ++it) {
    params = maximization(x, e.resp);
    e = expectation(x, fixed, params);
    out.log_likelihood.push_back(e.log_likelihood);
    out.iterations = it;
    const double gain = out.log_likelihood.back() - out.log_likelihood[out.log_likelihood.size() - 2];
    if (gain < config.tol) {
      out.converged = true;
      break;
    }
  }

  out.params = std::move(params);
  out.responsibilities = std::move(e.resp);
  out.hard_assignment.resize(static_cast<std::size_t>(n));
  out.mapped_labels.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    out.responsibilities.row(i).maxCoeff(&best);
    out.hard_assignment[static_cast<std::size_t>(i)] = static_cast<int>(best);
    out.mapped_labels[static_cast<std::size_t>(i)] = out.component_labels[static_cast<std::size_t>(best)];
  }
  return out;
}

}  // namespace ssigmm
