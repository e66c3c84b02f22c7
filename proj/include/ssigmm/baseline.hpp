#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssigmm/core_math.hpp"

namespace ssigmm {

// Finite semi-supervised Gaussian mixture fit by EM. Components 0..L-1 belong
// to the L distinct observed labels (ascending); labeled points keep a hard
// responsibility on their label's component for the whole run. Components
// beyond L start at random unlabeled points and carry label 0.

struct GmmParams {
  Vec weights;
  std::vector<Vec> means;
  std::vector<Matrix> covariances;

  std::size_t k() const { return means.size(); }
};

struct SsgmmConfig {
  int k = 0;  // 0: number of distinct observed labels
  int max_iter = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct SsgmmResult {
  GmmParams params;
  Matrix responsibilities;            // N x K
  std::vector<int> component_labels;  // observed label per component, 0 for extras
  std::vector<int> hard_assignment;   // argmax responsibility
  std::vector<int> mapped_labels;     // component_labels[hard_assignment[i]]
  std::vector<double> log_likelihood; // one entry per E step
  int iterations = 0;
  bool converged = false;
};

// Throws InvalidConfig when k is smaller than the number of distinct labels,
// and DegenerateComponent when a component loses (almost) all of its mass.
SsgmmResult ssgmm_fit(const RowMatrix& x, std::span<const int> labels, const SsgmmConfig& config);

}  // namespace ssigmm
