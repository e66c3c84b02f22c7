#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include <gtest/gtest.h>

#include "ssigmm/errors.hpp"
#include "ssigmm/partition.hpp"

using namespace ssigmm;

namespace {

const double kNegInf = -std::numeric_limits<double>::infinity();

Vec pt(double a) { return Vec::Constant(1, a); }

double exp_sum(const std::vector<WeightEntry>& w) {
  double s = 0.0;
  for (const auto& e : w) s += std::exp(e.log_weight);
  return s;
}

}  // namespace

TEST(Partition, RejectsDegenerateConstruction) {
  EXPECT_THROW(PartitionState(0, 1, 1.0), InvalidConfig);
  EXPECT_THROW(PartitionState(3, 0, 1.0), InvalidConfig);
  EXPECT_THROW(PartitionState(3, 1, 0.0), InvalidConfig);
}

TEST(Partition, FirstCustomerGetsOnlyNew) {
  PartitionState s(1, 1, 1.0);
  const auto w = s.crp_log_weights(0);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].id, kNewCluster);
  EXPECT_EQ(w[0].log_weight, 0.0);

  s.assign(0, kNewCluster, pt(1), 0);
  const auto again = s.crp_log_weights(0);
  ASSERT_EQ(again.size(), 1u);
  EXPECT_EQ(again[0].id, kNewCluster);
}

TEST(Partition, CrpWeightsForSizesTwoAndOne) {
  // Four points, alpha = 1; removing point 3 leaves clusters of size 2 and 1.
  PartitionState s(4, 1, 1.0);
  const ClusterId a = s.assign(0, kNewCluster, pt(0), 0);
  s.assign(1, a, pt(0), 0);
  const ClusterId b = s.assign(2, kNewCluster, pt(5), 0);
  s.assign(3, b, pt(5), 0);
  const auto w = s.crp_log_weights(3);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0].id, a);
  EXPECT_EQ(w[1].id, b);
  EXPECT_EQ(w[2].id, kNewCluster);
  EXPECT_NEAR(std::exp(w[0].log_weight), 2.0 / 4.0, 1e-15);
  EXPECT_NEAR(std::exp(w[1].log_weight), 1.0 / 4.0, 1e-15);
  EXPECT_NEAR(std::exp(w[2].log_weight), 1.0 / 4.0, 1e-15);

  s.unassign(3, pt(5), 0);
  const auto after = s.crp_log_weights(3);
  ASSERT_EQ(after.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(after[k].log_weight, w[k].log_weight);
}

TEST(Partition, SingletonOwnClusterIsNotOffered) {
  PartitionState s(3, 1, 2.0);
  const ClusterId a = s.assign(0, kNewCluster, pt(0), 0);
  s.assign(1, a, pt(0), 0);
  s.assign(2, kNewCluster, pt(3), 0);
  const auto w = s.crp_log_weights(2);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].id, a);
  EXPECT_NEAR(std::exp(w[1].log_weight), 2.0 / 4.0, 1e-15);
}

TEST(Partition, ConstrainedWeightsMaskConflictingTags) {
  PartitionState s(4, 1, 1.0);
  const ClusterId c1 = s.assign(0, kNewCluster, pt(0), 1);
  const ClusterId c2 = s.assign(1, kNewCluster, pt(1), 2);
  const ClusterId c0 = s.assign(2, kNewCluster, pt(2), 0);
  const auto crp = s.crp_log_weights(3);
  const auto w = s.constrained_log_weights(3, 2);
  ASSERT_EQ(w.size(), 4u);
  EXPECT_EQ(w[0].id, c1);
  EXPECT_EQ(w[0].log_weight, kNegInf);
  EXPECT_EQ(w[1].id, c2);
  EXPECT_EQ(w[2].id, c0);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_EQ(w[k].log_weight, crp[k].log_weight);

  const auto free = s.constrained_log_weights(3, 0);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(free[k].log_weight, crp[k].log_weight);
}

TEST(Partition, UnseenLabelForcedToNewCluster) {
  PartitionState s(3, 1, 1.0);
  const ClusterId c = s.assign(0, kNewCluster, pt(0), 1);
  s.assign(1, c, pt(0), 1);
  const auto w = s.constrained_log_weights(2, 3);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].log_weight, kNegInf);
  EXPECT_EQ(w[1].id, kNewCluster);
  EXPECT_TRUE(std::isfinite(w[1].log_weight));
}

TEST(Partition, OwnSoleLabelDoesNotBlockRelabel) {
  // Point 1 is the only labeled member of its cluster; while it is being
  // resampled that cluster counts as untagged.
  PartitionState s(2, 1, 1.0);
  const ClusterId c = s.assign(0, kNewCluster, pt(0), 0);
  s.assign(1, c, pt(0), 1);
  const auto w = s.constrained_log_weights(1, 1);
  EXPECT_TRUE(std::isfinite(w[0].log_weight));
}

TEST(Partition, TagLifecycle) {
  PartitionState s(4, 1, 1.0);
  const ClusterId c = s.assign(0, kNewCluster, pt(0), 0);
  EXPECT_EQ(s.cluster(c).q, 0);
  s.assign(1, c, pt(1), 2);
  EXPECT_EQ(s.cluster(c).q, 2);
  s.assign(2, c, pt(2), 2);
  s.assign(3, c, pt(3), 0);
  EXPECT_EQ(s.cluster(c).q, 2);
  EXPECT_EQ(s.cluster(c).labeled_count, 2);

  s.unassign(1, pt(1), 2);
  EXPECT_EQ(s.cluster(c).q, 2);
  s.unassign(2, pt(2), 2);
  EXPECT_EQ(s.cluster(c).q, 0);
  EXPECT_EQ(s.cluster(c).labeled_count, 0);
}

TEST(Partition, ConflictingAssignThrows) {
  PartitionState s(2, 1, 1.0);
  const ClusterId c = s.assign(0, kNewCluster, pt(0), 1);
  EXPECT_THROW(s.assign(1, c, pt(0), 2), ConstraintViolation);
  EXPECT_EQ(s.cluster_of(1), kUnassigned);
  EXPECT_THROW(s.assign(0, c, pt(0), 1), ConstraintViolation);
}

TEST(Partition, EmptyClusterIsDeregistered) {
  PartitionState s(2, 1, 1.0);
  const ClusterId a = s.assign(0, kNewCluster, pt(0), 0);
  const ClusterId b = s.assign(1, kNewCluster, pt(1), 0);
  EXPECT_EQ(s.num_clusters(), 2u);
  s.unassign(1, pt(1), 0);
  EXPECT_EQ(s.num_clusters(), 1u);
  EXPECT_FALSE(s.clusters().contains(b));
  EXPECT_THROW(s.assign(1, b, pt(1), 0), ConstraintViolation);
  const ClusterId c = s.assign(1, kNewCluster, pt(1), 0);
  EXPECT_NE(c, b);  // ids are never reused
  EXPECT_NE(c, a);
}

TEST(Partition, FinalizeLabels) {
  PartitionState s(4, 1, 1.0);
  const ClusterId a = s.assign(0, kNewCluster, pt(0), 1);
  s.assign(1, a, pt(0), 0);
  const ClusterId b = s.assign(2, kNewCluster, pt(9), 0);
  s.assign(3, b, pt(9), 0);
  const auto out = s.finalize_labels();
  EXPECT_EQ(out, (std::vector<int>{1, 1, 0, 0}));
  EXPECT_EQ(s.finalize_labels(), out);

  PartitionState partial(2, 1, 1.0);
  partial.assign(0, kNewCluster, pt(0), 0);
  EXPECT_THROW(partial.finalize_labels(), ConstraintViolation);
}

TEST(Partition, RandomOperationsKeepInvariants) {
  Rng rng(77);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.below(12);
    std::vector<int> labels(n);
    for (int& y : labels) y = static_cast<int>(rng.below(4));  // 0..3
    std::vector<Vec> x;
    for (std::size_t i = 0; i < n; ++i) x.push_back(pt(rng.normal()));
    PartitionState s(n, 1, 0.5 + rng.uniform());

    for (int step = 0; step < 60; ++step) {
      const std::size_t i = rng.below(n);
      if (s.cluster_of(i) != kUnassigned) {
        s.unassign(i, x[i], labels[i]);
      } else {
        const auto w = s.constrained_log_weights(i, labels[i]);
        const auto crp = s.crp_log_weights(i);
        ASSERT_NEAR(exp_sum(crp), 1.0, 1e-12);
        std::vector<ClusterId> feasible;
        for (std::size_t k = 0; k < w.size(); ++k) {
          ASSERT_EQ(w[k].id, crp[k].id);
          if (std::isfinite(w[k].log_weight)) {
            ASSERT_EQ(w[k].log_weight, crp[k].log_weight);
            feasible.push_back(w[k].id);
          }
        }
        ASSERT_FALSE(feasible.empty());
        ASSERT_EQ(feasible.back(), kNewCluster);
        s.assign(i, feasible[rng.below(feasible.size())], x[i], labels[i]);
      }
      ASSERT_NO_THROW(s.check_invariants(labels));

      long total = 0;
      for (const auto& [id, c] : s.clusters()) {
        ASSERT_GT(c.stats.count(), 0);
        ASSERT_EQ(c.q > 0, c.labeled_count > 0);
        total += c.stats.count();
      }
      ASSERT_EQ(static_cast<std::size_t>(total), s.num_assigned());
      for (std::size_t j = 0; j < n; ++j)
        if (labels[j] > 0 && s.cluster_of(j) != kUnassigned) {
          ASSERT_EQ(s.cluster(s.cluster_of(j)).q, labels[j]);
        }
    }
  }
}
