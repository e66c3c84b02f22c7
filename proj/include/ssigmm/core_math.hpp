#pragma once

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace ssigmm {

using Vec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
// Observation matrices keep one point per contiguous row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::span<const double> row_span(const RowMatrix& m, Eigen::Index i) {
  return {m.row(i).data(), static_cast<std::size_t>(m.cols())};
}

// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
// The input is symmetrized as (a + a^T) / 2 before factorization.
class Cholesky {
 public:
  explicit Cholesky(const Matrix& a);

  // Refactors in place, reusing storage when the dimension is unchanged.
  void factor(const Matrix& a);

  const Matrix& lower() const { return lower_; }
  Eigen::Index dim() const { return lower_.rows(); }

  // 2 * sum(log(diag(L))).
  double log_det() const { return log_det_; }

  // v^T a^{-1} v, via one forward substitution.
  double quad_form(std::span<const double> v) const;

 private:
  Matrix lower_;
  double log_det_ = 0.0;
};

// Multivariate Student-t with location `loc`, scale matrix `scale` (the matrix
// inside the quadratic form) and `dof` degrees of freedom. Everything that
// does not depend on x is precomputed, so log_pdf is allocation free for the
// dimensions this library deals with.
class StudentT {
 public:
  StudentT(Vec loc, const Matrix& scale, double dof);

  // Same as constructing anew, without reallocating for an unchanged dimension.
  void assign(const Vec& loc, const Matrix& scale, double dof);

  double log_pdf(std::span<const double> x) const;
  double log_pdf(const Vec& x) const {
    return log_pdf(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
  }

  const Vec& loc() const { return loc_; }
  double dof() const { return dof_; }
  const Cholesky& scale_factor() const { return chol_; }

 private:
  Vec loc_;
  Cholesky chol_;
  double dof_;
  double log_norm_;
};

double mvt_logpdf(const Vec& x, const Vec& loc, const Matrix& scale, double dof);

// Gaussian log-density, used as the large-dof reference for mvt_logpdf.
double mvn_logpdf(const Vec& x, const Vec& mean, const Matrix& cov);

// log(sum(exp(v))). Entries of -inf contribute nothing; throws AllNegInfinite
// when nothing is left.
double log_sum_exp(std::span<const double> v);

// Seedable generator passed explicitly into every stochastic operation.
// Satisfies UniformRandomBitGenerator so it composes with <random>.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  std::uint64_t below(std::uint64_t n);

  // Independent child stream; depends only on this generator's seed and
  // `stream`, never on how many numbers were drawn so far.
  Rng split(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

// Draws an index with probability exp(w_i - log_sum_exp(w)).
std::size_t sample_categorical(std::span<const double> log_weights, Rng& rng);

}  // namespace ssigmm
