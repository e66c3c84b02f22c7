#include "ssigmm/partition.hpp"

#include <cmath>
#include <string>

#include "ssigmm/errors.hpp"

namespace ssigmm {

PartitionState::PartitionState(std::size_t n, Eigen::Index dim, double alpha)
    : z_(n, kUnassigned), dim_(dim), alpha_(alpha) {
  if (n == 0) throw InvalidConfig("partition: dataset must contain at least one point");
  if (dim < 1) throw InvalidConfig("partition: dimension must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw InvalidConfig("partition: alpha must be positive");
}

const Cluster& PartitionState::cluster(ClusterId id) const {
  auto it = clusters_.find(id);
  if (it == clusters_.end()) throw InvalidConfig("partition: unknown cluster id " + std::to_string(id));
  return it->second;
}

std::vector<WeightEntry> PartitionState::crp_log_weights(std::size_t i) const {
  const ClusterId own = z_.at(i);
  const std::size_t others = assigned_ - (own == kUnassigned ? 0 : 1);
  const double log_denom = std::log(static_cast<double>(others) + alpha_);

  std::vector<WeightEntry> out;
  out.reserve(clusters_.size() + 1);
  for (const auto& [id, c] : clusters_) {
    const long n_k = c.stats.count() - (id == own ? 1 : 0);
    if (n_k == 0) continue;
    out.push_back({id, std::log(static_cast<double>(n_k)) - log_denom});
  }
  out.push_back({kNewCluster, std::log(alpha_) - log_denom});
  return out;
}

std::vector<WeightEntry> PartitionState::constrained_log_weights(std::size_t i, int y_i) const {
  std::vector<WeightEntry> out = crp_log_weights(i);
  if (y_i <= 0) return out;
  const ClusterId own = z_[i];
  for (WeightEntry& w : out) {
    if (w.id == kNewCluster) continue;
    const Cluster& c = clusters_.at(w.id);
    // A cluster whose only labeled member is i itself is effectively untagged.
    const bool tagged = c.q > 0 && !(w.id == own && c.labeled_count == 1);
    if (tagged && c.q != y_i) w.log_weight = -std::numeric_limits<double>::infinity();
  }
  return out;
}

ClusterId PartitionState::assign(std::size_t i, ClusterId target, std::span<const double> x,
                                 int y_i) {
  if (z_.at(i) != kUnassigned)
    throw ConstraintViolation("partition: point " + std::to_string(i) + " is already assigned");
  ClusterId id = target;
  if (target == kNewCluster) {
    id = next_id_++;
    clusters_.emplace(id, Cluster{SuffStats(dim_), 0, 0});
  }
  auto it = clusters_.find(id);
  if (it == clusters_.end())
    throw ConstraintViolation("partition: target cluster " + std::to_string(id) + " is not live");
  Cluster& c = it->second;
  if (y_i > 0 && c.q > 0 && c.q != y_i)
    throw ConstraintViolation("partition: label " + std::to_string(y_i) +
                              " cannot join cluster tagged " + std::to_string(c.q));
  c.stats.add(x);
  if (y_i > 0) {
    c.q = y_i;
    ++c.labeled_count;
  }
  z_[i] = id;
  ++assigned_;
  return id;
}

void PartitionState::unassign(std::size_t i, std::span<const double> x, int y_i) {
  const ClusterId id = z_.at(i);
  if (id == kUnassigned)
    throw ConstraintViolation("partition: point " + std::to_string(i) + " is not assigned");
  auto it = clusters_.find(id);
  Cluster& c = it->second;
  c.stats.remove(x);
  if (y_i > 0 && --c.labeled_count == 0) c.q = 0;
  if (c.stats.count() == 0) clusters_.erase(it);
  z_[i] = kUnassigned;
  --assigned_;
}

std::vector<int> PartitionState::finalize_labels() const {
  std::vector<int> out(z_.size());
  for (std::size_t i = 0; i < z_.size(); ++i) {
    if (z_[i] == kUnassigned)
      throw ConstraintViolation("partition: finalize_labels with unassigned point " + std::to_string(i));
    out[i] = clusters_.at(z_[i]).q;
  }
  return out;
}

void PartitionState::check_invariants(std::span<const int> labels) const {
  if (labels.size() != z_.size()) throw LengthMismatch("partition: labels length differs from N");
  std::map<ClusterId, long> counts;
  std::map<ClusterId, long> labeled;
  std::map<ClusterId, int> tag;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < z_.size(); ++i) {
    if (z_[i] == kUnassigned) continue;
    ++assigned;
    ++counts[z_[i]];
    const int y = labels[i];
    if (y <= 0) continue;
    ++labeled[z_[i]];
    auto [it, fresh] = tag.emplace(z_[i], y);
    if (!fresh && it->second != y)
      throw ConstraintViolation("partition: cluster " + std::to_string(z_[i]) +
                                " holds labels " + std::to_string(it->second) + " and " +
                                std::to_string(y));
  }
  if (assigned != assigned_) throw ConstraintViolation("partition: assigned count drifted");
  if (counts.size() != clusters_.size()) throw ConstraintViolation("partition: empty or orphan cluster");
  for (const auto& [id, c] : clusters_) {
    auto cit = counts.find(id);
    if (cit == counts.end() || cit->second != c.stats.count())
      throw ConstraintViolation("partition: cluster size drifted for " + std::to_string(id));
    const long nl = labeled.contains(id) ? labeled.at(id) : 0;
    const int q = tag.contains(id) ? tag.at(id) : 0;
    if (nl != c.labeled_count || q != c.q)
      throw ConstraintViolation("partition: tag bookkeeping drifted for " + std::to_string(id));
  }
}

}  // namespace ssigmm
