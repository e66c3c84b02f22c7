#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "ssigmm/core_math.hpp"
#include "ssigmm/partition.hpp"

namespace ssigmm {

// N x D observations with optional observed labels (`label` column, 0 =
// unlabeled) and optional ground truth (`true_class` column). Empty vectors
// mean the column was absent.
struct Dataset {
  RowMatrix x;
  Labels labels;
  std::vector<int> true_labels;
  std::vector<std::string> feature_names;

  std::size_t size() const { return static_cast<std::size_t>(x.rows()); }
  Eigen::Index dim() const { return x.cols(); }
  bool has_labels() const { return !labels.empty(); }
  bool has_true_labels() const { return !true_labels.empty(); }

  // Throws ValidationError for N < 1, D < 1, non-finite entries, or label
  // vectors of the wrong length / sign.
  void validate() const;
};

struct SynthComponent {
  Vec mean;
  Matrix cov;
  int class_id = 1;
  long count = 1;
};

struct SynthSpec {
  std::vector<SynthComponent> components;
  std::set<int> undefined_class_ids;
  std::uint64_t seed = 0;

  void validate() const;
  std::set<int> class_ids() const;
  std::set<int> predefined_class_ids() const;
};

// Rows are emitted component by component, in spec order.
Dataset generate_synthetic(const SynthSpec& spec);

struct CvFold {
  Labels train_labels;                 // y_i > 0 only for sampled training points
  std::vector<std::size_t> test_indices;  // ascending
};

// Stratified k-fold split. For fold f the test set is fold f; label_fraction
// of each predefined class's training points (rounded to nearest) keep their
// true class as observed label.
std::vector<CvFold> make_cv_splits(const Dataset& data, int n_folds, double label_fraction,
                                   const std::set<int>& predefined_class_ids, std::uint64_t seed);

// Labels for a single non-cross-validated fit: label_fraction of each
// predefined class (rounded to nearest) keeps its true class.
Labels sample_labels(const Dataset& data, double label_fraction, const std::set<int>& predefined_class_ids,
                     std::uint64_t seed);

// Fold id in [0, n_folds) per point, stratified by true class.
std::vector<int> stratified_folds(std::span<const int> true_labels, int n_folds, Rng& rng);

Dataset read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Dataset& data);

struct AssignmentTable {
  std::vector<ClusterId> cluster_ids;
  std::vector<int> mapped_labels;
};

// Columns: index, cluster_id, mapped_label.
void write_assignments(const std::filesystem::path& path, const AssignmentTable& table);
AssignmentTable read_assignments(const std::filesystem::path& path);

// Reads one integer column by header name from any CSV file.
std::vector<long long> read_int_column(const std::filesystem::path& path, const std::string& column);

SynthSpec load_synth_spec(const std::filesystem::path& path);
void save_synth_spec(const std::filesystem::path& path, const SynthSpec& spec);

}  // namespace ssigmm
