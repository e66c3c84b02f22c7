#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "ssigmm/core_math.hpp"
#include "ssigmm/niw.hpp"
#include "ssigmm/partition.hpp"

namespace ssigmm {

enum class InitStrategy {
  single_cluster,      // coarsest feasible partition
  per_label_plus_one,  // one cluster per observed label, one for the unlabeled
  random_k,            // uniform over init_k clusters, labels kept feasible
};

enum class ScanOrder { sequential, random };

struct SamplerConfig {
  double alpha = 1.0;
  std::optional<NiwHyper> hyper;  // empty: NiwHyper::defaults_for(data)
  long n_iterations = 2000;
  long n_burn_in = 1500;
  std::uint64_t seed = 0;
  InitStrategy init = InitStrategy::per_label_plus_one;
  int init_k = 2;
  ScanOrder scan = ScanOrder::sequential;
  // Rebuild and verify partition bookkeeping after every sweep. Always on in
  // builds without NDEBUG.
  bool check_invariants = false;

  // Throws InvalidConfig.
  void validate() const;
};

struct TraceRecord {
  long iteration;  // 1-based
  std::size_t k;
  double log_joint;
};

struct SamplerTrace {
  std::vector<TraceRecord> records;
  long best_iteration = 0;
  double best_log_joint = -std::numeric_limits<double>::infinity();
};

struct ClusterSummary {
  ClusterId id;
  int q;
  long count;
  Vec mean;        // posterior mean m_k
  Matrix covariance;  // lambda_k / (nu_k - D - 1)
};

struct FitResult {
  std::vector<ClusterId> assignments;
  std::vector<int> mapped_labels;
  std::vector<ClusterSummary> clusters;
  SamplerTrace trace;
};

// One collapsed Gibbs pass over every point: remove, weigh the live clusters
// and a new one under the cannot-link constraint, resample, re-add.
void gibbs_sweep(PartitionState& state, const RowMatrix& x, std::span<const int> labels,
                 const NiwHyper& hyper, Rng& rng, ScanOrder order = ScanOrder::sequential);

// Collapsed log p(Z, X | alpha, H): CRP partition probability plus the NIW
// marginal likelihood of each cluster.
double log_joint(const PartitionState& state, const NiwHyper& hyper);

PartitionState initial_state(const RowMatrix& x, std::span<const int> labels, double alpha,
                             InitStrategy strategy, int init_k, Rng& rng);

// Runs config.n_iterations sweeps and reports the highest-scoring state
// among iterations after n_burn_in. Labels may be empty (pure IGMM).
FitResult fit(const RowMatrix& x, std::span<const int> labels, const SamplerConfig& config);

struct MultiChainResult {
  FitResult best;
  std::size_t winning_chain = 0;
  std::vector<double> chain_log_joints;
  std::vector<std::uint64_t> chain_seeds;
};

// Independent chains on separate threads. Chain 0 uses config.seed; chain c
// uses Rng(config.seed).split(c). Ties go to the lowest chain index.
MultiChainResult fit_chains(const RowMatrix& x, std::span<const int> labels,
                            const SamplerConfig& config, std::size_t n_chains);

}  // namespace ssigmm
