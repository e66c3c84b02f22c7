#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ssigmm/baseline.hpp"
#include "ssigmm/data.hpp"
#include "ssigmm/metrics.hpp"
#include "ssigmm/sampler.hpp"

namespace ssigmm {

enum class Method { ssigmm, igmm, ssgmm };

std::string to_string(Method m);
Method parse_method(const std::string& name);  // throws InvalidConfig

struct MethodSettings {
  Method method = Method::ssigmm;
  SamplerConfig sampler;  // seed is overridden per run
  SsgmmConfig em;         // seed is overridden per run
  std::size_t n_chains = 1;
};

// Output of one method on one labeling of a dataset.
struct RunOutcome {
  std::vector<ClusterId> cluster_ids;
  std::vector<int> mapped_labels;
  // Labels used for scoring. SsIGMM: q of the point's cluster, or a distinct
  // negative id per untagged cluster. IGMM: raw cluster id. SsGMM: component.
  std::vector<long long> predicted;
  std::size_t k_final = 0;
  std::optional<double> best_log_joint;
  std::size_t winning_chain = 0;
  std::optional<FitResult> sampler_fit;
  std::optional<SsgmmResult> em_fit;
};

// For IGMM the labels are ignored (every point is treated as unlabeled).
RunOutcome run_method(const Dataset& data, std::span<const int> labels, const MethodSettings& settings,
                      std::uint64_t seed);

// Clusters with q > 0 whose members (all points, not only a test fold) are
// mostly undefined-class points. Needs true labels.
std::size_t count_tagged_undefined_majority(const Dataset& data, const RunOutcome& run,
                                            const std::set<int>& undefined_class_ids);

struct CvSettings {
  int n_folds = 5;
  double label_fraction = 0.10;
  std::set<int> predefined_class_ids;
  std::set<int> undefined_class_ids;
  bool parallel_folds = false;
};

struct FoldReport {
  int fold = 0;
  std::uint64_t seed = 0;
  std::size_t n_test = 0;
  std::size_t n_labeled = 0;
  double ari = 0.0;
  double undefined_detection_rate = 0.0;
  std::size_t k_final = 0;
  std::size_t winning_chain = 0;
  std::optional<double> best_log_joint;  // sampler methods only
  // Clusters with q > 0 whose members are mostly undefined-class points.
  std::size_t tagged_undefined_majority = 0;
  ContingencyTable confusion;  // test points: true class vs predicted label
};

struct CrossvalReport {
  std::vector<FoldReport> folds;
  double mean_ari = 0.0;
  double mean_undefined_detection_rate = 0.0;
  double mean_k_final = 0.0;
  std::size_t tagged_undefined_majority = 0;
};

// Transductive k-fold protocol: each fold's model sees every point, with
// labels only on a sampled subset of the training folds; metrics use the
// test fold only.
CrossvalReport run_crossval(const Dataset& data, const CvSettings& cv, const MethodSettings& settings,
                            std::uint64_t seed);

std::uint64_t fold_seed(std::uint64_t seed, int fold);

}  // namespace ssigmm
