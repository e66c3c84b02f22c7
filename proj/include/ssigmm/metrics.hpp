#pragma once

#include <set>
#include <span>
#include <vector>

namespace ssigmm {

// m(i, j) = number of points with the i-th true class and the j-th predicted
// class. Rows and columns are sorted by id, so a predicted id 0 (undefined)
// always comes first.
struct ContingencyTable {
  std::vector<long long> row_ids;
  std::vector<long long> col_ids;
  std::vector<std::vector<long long>> counts;
  std::vector<long long> row_totals;
  std::vector<long long> col_totals;
  long long n = 0;
};

ContingencyTable confusion(std::span<const long long> true_labels, std::span<const long long> pred_labels);
ContingencyTable confusion(std::span<const int> true_labels, std::span<const int> pred_labels);

// Adjusted Rand Index. Pair counts are exact 128-bit integers; only the final
// ratio is floating point. When the denominator vanishes (both partitions
// trivial in the same way) the result is 1.0.
double ari(std::span<const long long> true_labels, std::span<const long long> pred_labels);
double ari(std::span<const int> true_labels, std::span<const int> pred_labels);

// Among points whose true class is in undefined_class_ids, the fraction with
// mapped label 0. Returns 1.0 when no such point exists.
double undefined_detection_rate(std::span<const int> true_labels, std::span<const int> mapped_labels,
                                const std::set<int>& undefined_class_ids);

}  // namespace ssigmm
