#include "ssigmm/core_math.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "ssigmm/errors.hpp"

namespace ssigmm {

namespace {

constexpr std::size_t kStackDim = 16;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

Cholesky::Cholesky(const Matrix& a) { factor(a); }

void Cholesky::factor(const Matrix& a) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw NotPositiveDefinite("Cholesky: matrix must be square and non-empty");
  const Eigen::Index d = a.rows();
  lower_.setZero(d, d);
  log_det_ = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    double pivot = a(j, j);
    for (Eigen::Index k = 0; k < j; ++k) pivot -= lower_(j, k) * lower_(j, k);
    if (!(pivot > 0.0) || !std::isfinite(pivot))
      throw NotPositiveDefinite("Cholesky: non-positive pivot at column " + std::to_string(j));
    const double ljj = std::sqrt(pivot);
    lower_(j, j) = ljj;
    log_det_ += 2.0 * std::log(ljj);
    for (Eigen::Index i = j + 1; i < d; ++i) {
      double v = 0.5 * (a(i, j) + a(j, i));
      for (Eigen::Index k = 0; k < j; ++k) v -= lower_(i, k) * lower_(j, k);
      lower_(i, j) = v / ljj;
    }
  }
}

double Cholesky::quad_form(std::span<const double> v) const {
  const auto d = static_cast<std::size_t>(lower_.rows());
  std::array<double, kStackDim> stack{};
  std::vector<double> heap;
  double* y = stack.data();
  if (d > kStackDim) {
    heap.resize(d);
    y = heap.data();
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double s = v[i];
    for (std::size_t j = 0; j < i; ++j)
      s -= lower_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * y[j];
    y[i] = s / lower_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    acc += y[i] * y[i];
  }
  return acc;
}

StudentT::StudentT(Vec loc, const Matrix& scale, double dof)
    : loc_(std::move(loc)), chol_(scale), dof_(dof) {
  if (!(dof_ > 0.0)) throw NotPositiveDefinite("StudentT: dof must be positive");
  const double d = static_cast<double>(loc_.size());
  log_norm_ = std::lgamma(0.5 * (dof_ + d)) - std::lgamma(0.5 * dof_) -
              0.5 * d * std::log(dof_ * std::numbers::pi) - 0.5 * chol_.log_det();
}

void StudentT::assign(const Vec& loc, const Matrix& scale, double dof) {
  if (!(dof > 0.0)) throw NotPositiveDefinite("StudentT: dof must be positive");
  chol_.factor(scale);
  loc_ = loc;
  dof_ = dof;
  const double d = static_cast<double>(loc_.size());
  log_norm_ = std::lgamma(0.5 * (dof_ + d)) - std::lgamma(0.5 * dof_) -
              0.5 * d * std::log(dof_ * std::numbers::pi) - 0.5 * chol_.log_det();
}

double StudentT::log_pdf(std::span<const double> x) const {
  const auto d = static_cast<std::size_t>(loc_.size());
  std::array<double, kStackDim> stack{};
  std::vector<double> heap;
  double* diff = stack.data();
  if (d > kStackDim) {
    heap.resize(d);
    diff = heap.data();
  }
  for (std::size_t i = 0; i < d; ++i) diff[i] = x[i] - loc_[static_cast<Eigen::Index>(i)];
  const double q = chol_.quad_form(std::span<const double>(diff, d));
  return log_norm_ - 0.5 * (dof_ + static_cast<double>(d)) * std::log1p(q / dof_);
}

double mvt_logpdf(const Vec& x, const Vec& loc, const Matrix& scale, double dof) {
  return StudentT(loc, scale, dof).log_pdf(x);
}

double mvn_logpdf(const Vec& x, const Vec& mean, const Matrix& cov) {
  const Cholesky chol(cov);
  const Vec diff = x - mean;
  const double d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + chol.log_det() +
                 chol.quad_form(std::span<const double>(diff.data(), static_cast<std::size_t>(diff.size()))));
}

double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (hi == -std::numeric_limits<double>::infinity() || v.empty())
    throw AllNegInfinite("log_sum_exp: no finite entry");
  if (std::isinf(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::normal() { return normal_(engine_); }

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling keeps the result exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % n;
}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

std::size_t sample_categorical(std::span<const double> log_weights, Rng& rng) {
  const double total = log_sum_exp(log_weights);
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_finite = 0;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == -std::numeric_limits<double>::infinity()) continue;
    last_finite = i;
    cum += std::exp(log_weights[i] - total);
    if (u < cum) return i;
  }
  return last_finite;
}

}  // namespace ssigmm
