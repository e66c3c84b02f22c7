#include "ssigmm/metrics.hpp"

#include <algorithm>
#include <map>

#include "ssigmm/errors.hpp"

namespace ssigmm {

namespace {

using i128 = __int128;

i128 choose2(long long n) { return static_cast<i128>(n) * (n - 1) / 2; }

std::vector<long long> widen(std::span<const int> v) { return {v.begin(), v.end()}; }

}  // namespace

ContingencyTable confusion(std::span<const long long> true_labels, std::span<const long long> pred_labels) {
  if (true_labels.size() != pred_labels.size())
    throw LengthMismatch("confusion: label vectors differ in length");
  std::map<long long, std::size_t> rows;
  std::map<long long, std::size_t> cols;
  for (long long t : true_labels) rows.emplace(t, 0);
  for (long long p : pred_labels) cols.emplace(p, 0);

  ContingencyTable table;
  for (auto& [id, idx] : rows) {
    idx = table.row_ids.size();
    table.row_ids.push_back(id);
  }
  for (auto& [id, idx] : cols) {
    idx = table.col_ids.size();
    table.col_ids.push_back(id);
  }
  table.counts.assign(rows.size(), std::vector<long long>(cols.size(), 0));
  table.row_totals.assign(rows.size(), 0);
  table.col_totals.assign(cols.size(), 0);
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const std::size_t r = rows.at(true_labels[i]);
    const std::size_t c = cols.at(pred_labels[i]);
    ++table.counts[r][c];
    ++table.row_totals[r];
    ++table.col_totals[c];
  }
  table.n = static_cast<long long>(true_labels.size());
  return table;
}

ContingencyTable confusion(std::span<const int> true_labels, std::span<const int> pred_labels) {
  const auto t = widen(true_labels);
  const auto p = widen(pred_labels);
  return confusion(std::span<const long long>(t), std::span<const long long>(p));
}

double ari(std::span<const long long> true_labels, std::span<const long long> pred_labels) {
  if (true_labels.size() != pred_labels.size()) throw LengthMismatch("ari: label vectors differ in length");
  if (true_labels.size() < 2) throw LengthMismatch("ari: need at least two points");
  const ContingencyTable m = confusion(true_labels, pred_labels);

  i128 index = 0;
  for (const auto& row : m.counts)
    for (long long c : row) index += choose2(c);
  i128 t1 = 0;
  for (long long a : m.row_totals) t1 += choose2(a);
  i128 t2 = 0;
  for (long long b : m.col_totals) t2 += choose2(b);
  const i128 pairs = choose2(m.n);

  // t3 = t1 * t2 / pairs; scaling through by `pairs` keeps everything integral
  // until the final division.
  const i128 num = index * pairs - t1 * t2;
  const i128 den = (t1 + t2) * pairs - 2 * t1 * t2;
  if (den == 0) return 1.0;
  return static_cast<double>(static_cast<long double>(num) / static_cast<long double>(den) * 2.0L);
}

double ari(std::span<const int> true_labels, std::span<const int> pred_labels) {
  const auto t = widen(true_labels);
  const auto p = widen(pred_labels);
  return ari(std::span<const long long>(t), std::span<const long long>(p));
}

double undefined_detection_rate(std::span<const int> true_labels, std::span<const int> mapped_labels,
                                const std::set<int>& undefined_class_ids) {
  if (true_labels.size() != mapped_labels.size())
    throw LengthMismatch("undefined_detection_rate: label vectors differ in length");
  long total = 0;
  long detected = 0;
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    if (!undefined_class_ids.contains(true_labels[i])) continue;
    ++total;
    if (mapped_labels[i] == 0) ++detected;
  }
  return total == 0 ? 1.0 : static_cast<double>(detected) / static_cast<double>(total);
}

}  // namespace ssigmm
