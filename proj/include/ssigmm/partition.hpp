#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

#include "ssigmm/niw.hpp"

namespace ssigmm {

using ClusterId = std::uint64_t;

// Marks the "open a new cluster" option in weight lists and unassigned points
// in assignment vectors.
inline constexpr ClusterId kNewCluster = std::numeric_limits<ClusterId>::max();
inline constexpr ClusterId kUnassigned = std::numeric_limits<ClusterId>::max();

// Observed labels: 0 = unlabeled, > 0 = observed class.
using Labels = std::vector<int>;

struct Cluster {
  SuffStats stats;
  int q = 0;               // label shared by every labeled member, 0 if none
  long labeled_count = 0;  // number of labeled members
};

struct WeightEntry {
  ClusterId id;  // kNewCluster for the new-cluster option
  double log_weight;
};

// Assignment vector plus the registry of live clusters. Cluster ids are never
// reused within a state, and the registry iterates in creation order.
class PartitionState {
 public:
  // Throws InvalidConfig for n == 0, dim < 1 or alpha <= 0.
  PartitionState(std::size_t n, Eigen::Index dim, double alpha);

  std::size_t size() const { return z_.size(); }
  Eigen::Index dim() const { return dim_; }
  double alpha() const { return alpha_; }
  std::size_t num_assigned() const { return assigned_; }
  std::size_t num_clusters() const { return clusters_.size(); }

  ClusterId cluster_of(std::size_t i) const { return z_.at(i); }
  const std::vector<ClusterId>& assignments() const { return z_; }
  const std::map<ClusterId, Cluster>& clusters() const { return clusters_; }
  const Cluster& cluster(ClusterId id) const;

  // CRP prior weights for point i given every other assigned point: one entry
  // per live cluster, N_k / (N - 1 + alpha), then the new-cluster entry
  // alpha / (N - 1 + alpha). If i is still assigned it is left out of the counts.
  std::vector<WeightEntry> crp_log_weights(std::size_t i) const;

  // crp_log_weights with clusters whose tag conflicts with y_i set to -inf.
  std::vector<WeightEntry> constrained_log_weights(std::size_t i, int y_i) const;

  // Places unassigned point i into `target` (or a fresh cluster for
  // kNewCluster) and returns the cluster id. Throws ConstraintViolation when a
  // labeled point would join a cluster tagged with a different label.
  ClusterId assign(std::size_t i, ClusterId target, std::span<const double> x, int y_i);
  ClusterId assign(std::size_t i, ClusterId target, const Vec& x, int y_i) {
    return assign(i, target, SuffStats::as_span(x), y_i);
  }

  // Removes point i from its cluster; deregisters the cluster when it empties
  // and resets q to 0 when its last labeled member leaves.
  void unassign(std::size_t i, std::span<const double> x, int y_i);
  void unassign(std::size_t i, const Vec& x, int y_i) { unassign(i, SuffStats::as_span(x), y_i); }

  // q of each point's cluster. Every point must be assigned.
  std::vector<int> finalize_labels() const;

  // Rebuilds counts and tags from scratch and compares them with the
  // incrementally maintained ones. Throws ConstraintViolation on mismatch.
  void check_invariants(std::span<const int> labels) const;

 private:
  std::vector<ClusterId> z_;
  std::map<ClusterId, Cluster> clusters_;
  ClusterId next_id_ = 0;
  std::size_t assigned_ = 0;
  Eigen::Index dim_;
  double alpha_;
};

}  // namespace ssigmm
