#include "ssigmm/data.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ssigmm/errors.hpp"

namespace ssigmm {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string cell_name(long row, long col, const std::string& header) {
  return "row " + std::to_string(row) + ", column " + std::to_string(col) + " (" + header + ")";
}

double parse_real(const std::string& token, long row, long col, const std::string& header) {
  double v = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (token.empty() || ec != std::errc() || ptr != last)
    throw ParseError("cannot parse '" + token + "' as a real at " + cell_name(row, col, header), row, col);
  if (!std::isfinite(v))
    throw ParseError("non-finite value '" + token + "' at " + cell_name(row, col, header), row, col);
  return v;
}

long long parse_int(const std::string& token, long row, long col, const std::string& header) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError("cannot parse '" + token + "' as an integer at " + cell_name(row, col, header), row, col);
  return v;
}

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

struct CsvRows {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;  // row r is file line r + 2
};

CsvRows read_rows(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  CsvRows csv;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("'" + path.string() + "' is empty", 1, 0);
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  csv.header = split_row(line);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_row(line);
    if (cells.size() != csv.header.size())
      throw ParseError("row " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(csv.header.size()),
                       lineno, static_cast<long>(cells.size()));
    csv.rows.push_back(std::move(cells));
  }
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return csv;
}

Matrix json_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw InvalidConfig(field + ": expected a non-empty array of rows");
  const auto rows = j.size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != rows) throw InvalidConfig(field + ": expected a square matrix");
    for (std::size_t c = 0; c < rows; ++c) {
      if (!j[r][c].is_number()) throw InvalidConfig(field + ": entries must be numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

Vec json_vector(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw InvalidConfig(field + ": expected a non-empty array");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw InvalidConfig(field + ": entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

void Dataset::validate() const {
  if (x.rows() < 1) throw ValidationError("dataset: need at least one row");
  if (x.cols() < 1) throw ValidationError("dataset: need at least one feature column");
  if (!x.allFinite()) throw ValidationError("dataset: non-finite feature value");
  if (!labels.empty()) {
    if (labels.size() != size()) throw LengthMismatch("dataset: label column length differs from N");
    for (int y : labels)
      if (y < 0) throw ValidationError("dataset: labels must be non-negative");
  }
  if (!true_labels.empty()) {
    if (true_labels.size() != size()) throw LengthMismatch("dataset: true_class column length differs from N");
    for (int y : true_labels)
      if (y < 1) throw ValidationError("dataset: true_class values must be positive");
  }
}

void SynthSpec::validate() const {
  if (components.empty()) throw InvalidConfig("components: at least one component required");
  const auto d = components.front().mean.size();
  for (std::size_t k = 0; k < components.size(); ++k) {
    const auto& c = components[k];
    const std::string field = "components[" + std::to_string(k) + "]";
    if (c.mean.size() != d || d < 1) throw InvalidConfig(field + ".mean: dimension mismatch");
    if (c.cov.rows() != d || c.cov.cols() != d) throw InvalidConfig(field + ".cov: must be D x D");
    if (c.class_id < 1) throw InvalidConfig(field + ".class_id: must be positive");
    if (c.count < 1) throw InvalidConfig(field + ".count: must be at least 1");
    try {
      Cholesky check(c.cov);
    } catch (const NotPositiveDefinite&) {
      throw InvalidConfig(field + ".cov: not positive definite");
    }
  }
  const auto ids = class_ids();
  for (int u : undefined_class_ids)
    if (!ids.contains(u)) throw InvalidConfig("undefined_class_ids: " + std::to_string(u) + " names no component");
}

std::set<int> SynthSpec::class_ids() const {
  std::set<int> ids;
  for (const auto& c : components) ids.insert(c.class_id);
  return ids;
}

std::set<int> SynthSpec::predefined_class_ids() const {
  std::set<int> ids;
  for (int id : class_ids())
    if (!undefined_class_ids.contains(id)) ids.insert(id);
  return ids;
}

Dataset generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  const auto d = spec.components.front().mean.size();
  long total = 0;
  for (const auto& c : spec.components) total += c.count;

  Dataset out;
  out.x.resize(total, d);
  out.true_labels.reserve(static_cast<std::size_t>(total));
  Rng rng(spec.seed);
  Eigen::Index row = 0;
  Vec z(d);
  for (const auto& c : spec.components) {
    const Cholesky chol(c.cov);
    for (long j = 0; j < c.count; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) z[k] = rng.normal();
      out.x.row(row++) = (c.mean + chol.lower() * z).transpose();
      out.true_labels.push_back(c.class_id);
    }
  }
  for (Eigen::Index k = 0; k < d; ++k) out.feature_names.push_back("f" + std::to_string(k + 1));
  return out;
}

std::vector<int> stratified_folds(std::span<const int> true_labels, int n_folds, Rng& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < true_labels.size(); ++i) by_class[true_labels[i]].push_back(i);
  std::vector<int> fold(true_labels.size(), 0);
  std::size_t offset = 0;
  for (auto& [cls, members] : by_class) {
    for (std::size_t j = members.size(); j > 1; --j) std::swap(members[j - 1], members[rng.below(j)]);
    for (std::size_t j = 0; j < members.size(); ++j)
      fold[members[j]] = static_cast<int>((offset + j) % static_cast<std::size_t>(n_folds));
    offset += members.size();
  }
  return fold;
}

std::vector<CvFold> make_cv_splits(const Dataset& data, int n_folds, double label_fraction,
                                   const std::set<int>& predefined_class_ids, std::uint64_t seed) {
  if (!data.has_true_labels()) throw ValidationError("cross-validation needs a true_class column");
  if (n_folds < 2) throw InvalidConfig("cv: n_folds must be at least 2");
  if (!(label_fraction >= 0.0 && label_fraction <= 1.0))
    throw InvalidConfig("cv: label_fraction must lie in [0, 1]");
  std::map<int, long> sizes;
  for (int c : data.true_labels) ++sizes[c];
  for (const auto& [cls, n] : sizes)
    if (n < n_folds)
      throw ClassTooSmall("cv: class " + std::to_string(cls) + " has " + std::to_string(n) +
                          " points, fewer than " + std::to_string(n_folds) + " folds");

  Rng rng(seed);
  const std::vector<int> fold = stratified_folds(data.true_labels, n_folds, rng);
  std::vector<CvFold> out(static_cast<std::size_t>(n_folds));
  for (int f = 0; f < n_folds; ++f) {
    CvFold& cv = out[static_cast<std::size_t>(f)];
    cv.train_labels.assign(data.size(), 0);
    std::map<int, std::vector<std::size_t>> train_by_class;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (fold[i] == f) {
        cv.test_indices.push_back(i);
      } else if (predefined_class_ids.contains(data.true_labels[i])) {
        train_by_class[data.true_labels[i]].push_back(i);
      }
    }
    for (auto& [cls, members] : train_by_class) {
      const auto take = static_cast<std::size_t>(std::llround(label_fraction * static_cast<double>(members.size())));
      for (std::size_t j = 0; j < take; ++j) {
        std::swap(members[j], members[j + rng.below(members.size() - j)]);
        cv.train_labels[members[j]] = cls;
      }
    }
  }
  return out;
}

Labels sample_labels(const Dataset& data, double label_fraction, const std::set<int>& predefined_class_ids,
                     std::uint64_t seed) {
  if (!data.has_true_labels()) throw ValidationError("labeling needs a true_class column");
  if (!(label_fraction >= 0.0 && label_fraction <= 1.0))
    throw InvalidConfig("label_fraction must lie in [0, 1]");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (predefined_class_ids.contains(data.true_labels[i])) by_class[data.true_labels[i]].push_back(i);
  Rng rng(seed);
  Labels out(data.size(), 0);
  for (auto& [cls, members] : by_class) {
    const auto take = static_cast<std::size_t>(std::llround(label_fraction * static_cast<double>(members.size())));
    for (std::size_t j = 0; j < take; ++j) {
      std::swap(members[j], members[j + rng.below(members.size() - j)]);
      out[members[j]] = cls;
    }
  }
  return out;
}

Dataset read_csv(const std::filesystem::path& path) {
  const CsvRows csv = read_rows(path);
  long label_col = -1;
  long truth_col = -1;
  std::vector<long> feature_cols;
  Dataset out;
  for (std::size_t c = 0; c < csv.header.size(); ++c) {
    const std::string& h = csv.header[c];
    if (h == "label") {
      label_col = static_cast<long>(c);
    } else if (h == "true_class") {
      truth_col = static_cast<long>(c);
    } else {
      feature_cols.push_back(static_cast<long>(c));
      out.feature_names.push_back(h);
    }
  }
  if (feature_cols.empty()) throw ParseError("'" + path.string() + "' has no feature columns", 1, 0);
  if (csv.rows.empty()) throw ParseError("'" + path.string() + "' has no data rows", 2, 0);

  out.x.resize(static_cast<Eigen::Index>(csv.rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const long row = static_cast<long>(r) + 2;
    const auto& cells = csv.rows[r];
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const long c = feature_cols[j];
      out.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          parse_real(cells[static_cast<std::size_t>(c)], row, c + 1, csv.header[static_cast<std::size_t>(c)]);
    }
    if (label_col >= 0) {
      const auto v = parse_int(cells[static_cast<std::size_t>(label_col)], row, label_col + 1, "label");
      if (v < 0) throw ParseError("negative label at " + cell_name(row, label_col + 1, "label"), row, label_col + 1);
      out.labels.push_back(static_cast<int>(v));
    }
    if (truth_col >= 0) {
      const auto v = parse_int(cells[static_cast<std::size_t>(truth_col)], row, truth_col + 1, "true_class");
      if (v < 1)
        throw ParseError("true_class must be positive at " + cell_name(row, truth_col + 1, "true_class"), row,
                         truth_col + 1);
      out.true_labels.push_back(static_cast<int>(v));
    }
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ostringstream os;
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    if (j) os << ',';
    os << (static_cast<std::size_t>(j) < data.feature_names.size() ? data.feature_names[static_cast<std::size_t>(j)]
                                                                   : "f" + std::to_string(j + 1));
  }
  if (data.has_labels()) os << ",label";
  if (data.has_true_labels()) os << ",true_class";
  os << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
      if (j) os << ',';
      os << fmt_real(data.x(static_cast<Eigen::Index>(i), j));
    }
    if (data.has_labels()) os << ',' << data.labels[i];
    if (data.has_true_labels()) os << ',' << data.true_labels[i];
    os << '\n';
  }
  std::ofstream out = open_out(path);
  out << os.str();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

void write_assignments(const std::filesystem::path& path, const AssignmentTable& table) {
  if (table.cluster_ids.size() != table.mapped_labels.size())
    throw LengthMismatch("assignments: cluster and label vectors differ in length");
  std::ostringstream os;
  os << "index,cluster_id,mapped_label\n";
  for (std::size_t i = 0; i < table.cluster_ids.size(); ++i)
    os << i << ',' << table.cluster_ids[i] << ',' << table.mapped_labels[i] << '\n';
  std::ofstream out = open_out(path);
  out << os.str();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

AssignmentTable read_assignments(const std::filesystem::path& path) {
  const CsvRows csv = read_rows(path);
  if (csv.header != std::vector<std::string>{"index", "cluster_id", "mapped_label"})
    throw ParseError("'" + path.string() + "': expected header index,cluster_id,mapped_label", 1, 1);
  AssignmentTable t;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const long row = static_cast<long>(r) + 2;
    const auto index = parse_int(csv.rows[r][0], row, 1, "index");
    if (index != static_cast<long long>(r)) throw ParseError("index out of sequence at row " + std::to_string(row), row, 1);
    const auto id = parse_int(csv.rows[r][1], row, 2, "cluster_id");
    if (id < 0) throw ParseError("negative cluster_id at row " + std::to_string(row), row, 2);
    t.cluster_ids.push_back(static_cast<ClusterId>(id));
    t.mapped_labels.push_back(static_cast<int>(parse_int(csv.rows[r][2], row, 3, "mapped_label")));
  }
  return t;
}

std::vector<long long> read_int_column(const std::filesystem::path& path, const std::string& column) {
  const CsvRows csv = read_rows(path);
  std::size_t col = csv.header.size();
  for (std::size_t c = 0; c < csv.header.size(); ++c)
    if (csv.header[c] == column) col = c;
  if (col == csv.header.size())
    throw ParseError("'" + path.string() + "' has no column named '" + column + "'", 1, 0);
  std::vector<long long> out;
  for (std::size_t r = 0; r < csv.rows.size(); ++r)
    out.push_back(parse_int(csv.rows[r][col], static_cast<long>(r) + 2, static_cast<long>(col) + 1, column));
  return out;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidConfig("'" + path.string() + "': malformed JSON: " + e.what());
  }
  if (!j.is_object()) throw InvalidConfig("synthetic spec: top level must be an object");
  SynthSpec spec;
  if (!j.contains("components") || !j["components"].is_array())
    throw InvalidConfig("components: missing or not an array");
  for (std::size_t k = 0; k < j["components"].size(); ++k) {
    const json& c = j["components"][k];
    const std::string field = "components[" + std::to_string(k) + "]";
    if (!c.is_object()) throw InvalidConfig(field + ": must be an object");
    for (const char* key : {"mean", "cov", "class_id", "count"})
      if (!c.contains(key)) throw InvalidConfig(field + "." + key + ": missing");
    if (!c["class_id"].is_number_integer()) throw InvalidConfig(field + ".class_id: must be an integer");
    if (!c["count"].is_number_integer()) throw InvalidConfig(field + ".count: must be an integer");
    spec.components.push_back({json_vector(c["mean"], field + ".mean"), json_matrix(c["cov"], field + ".cov"),
                               c["class_id"].get<int>(), c["count"].get<long>()});
  }
  if (j.contains("undefined_class_ids")) {
    if (!j["undefined_class_ids"].is_array()) throw InvalidConfig("undefined_class_ids: must be an array");
    for (const auto& u : j["undefined_class_ids"]) {
      if (!u.is_number_integer()) throw InvalidConfig("undefined_class_ids: entries must be integers");
      spec.undefined_class_ids.insert(u.get<int>());
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw InvalidConfig("seed: must be a non-negative integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  spec.validate();
  return spec;
}

void save_synth_spec(const std::filesystem::path& path, const SynthSpec& spec) {
  json j;
  j["components"] = json::array();
  for (const auto& c : spec.components) {
    json cov = json::array();
    for (Eigen::Index r = 0; r < c.cov.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index k = 0; k < c.cov.cols(); ++k) row.push_back(c.cov(r, k));
      cov.push_back(row);
    }
    json mean = json::array();
    for (Eigen::Index k = 0; k < c.mean.size(); ++k) mean.push_back(c.mean[k]);
    j["components"].push_back({{"mean", mean}, {"cov", cov}, {"class_id", c.class_id}, {"count", c.count}});
  }
  j["undefined_class_ids"] = spec.undefined_class_ids;
  j["seed"] = spec.seed;
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

}  // namespace ssigmm
