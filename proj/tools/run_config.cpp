#include "run_config.hpp"

#include <fstream>
#include <initializer_list>

#include "ssigmm/errors.hpp"

namespace ssigmm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
  if (!j.is_object()) throw InvalidConfig(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidConfig(where + (where.empty() ? "" : ".") + key + ": unknown key");
  }
}

std::string path_of(const std::string& where, const char* key) {
  return where.empty() ? std::string(key) : where + "." + key;
}

template <class T>
void read_number(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw InvalidConfig(path_of(where, key) + ": expected a number");
    out = v.get<T>();
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!v.is_number_unsigned()) throw InvalidConfig(path_of(where, key) + ": expected a non-negative integer");
    out = v.get<T>();
  } else {
    if (!v.is_number_integer()) throw InvalidConfig(path_of(where, key) + ": expected an integer");
    out = v.get<T>();
  }
}

std::string read_string(const json& j, const std::string& where, const char* key) {
  const json& v = j.at(key);
  if (!v.is_string()) throw InvalidConfig(path_of(where, key) + ": expected a string");
  return v.get<std::string>();
}

std::set<int> read_id_set(const json& v, const std::string& field) {
  if (!v.is_array()) throw InvalidConfig(field + ": expected an array of class ids");
  std::set<int> out;
  for (const json& e : v) {
    if (!e.is_number_integer() || e.get<long long>() < 1) throw InvalidConfig(field + ": class ids must be positive integers");
    out.insert(e.get<int>());
  }
  return out;
}

Vec read_vec(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw InvalidConfig(field + ": expected a non-empty array");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw InvalidConfig(field + ": entries must be numbers");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

Matrix read_square(const json& v, const std::string& field) {
  if (!v.is_array() || v.empty()) throw InvalidConfig(field + ": expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(v.size());
  Matrix out(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Vec row = read_vec(v[static_cast<std::size_t>(r)], field);
    if (row.size() != n) throw InvalidConfig(field + ": expected a square matrix");
    out.row(r) = row.transpose();
  }
  return out;
}

InitStrategy parse_init(const std::string& s) {
  if (s == "single_cluster") return InitStrategy::single_cluster;
  if (s == "per_label_plus_one") return InitStrategy::per_label_plus_one;
  if (s == "random_k") return InitStrategy::random_k;
  throw InvalidConfig("sampler.init: expected single_cluster, per_label_plus_one or random_k");
}

const char* init_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::single_cluster: return "single_cluster";
    case InitStrategy::per_label_plus_one: return "per_label_plus_one";
    case InitStrategy::random_k: return "random_k";
  }
  return "";
}

ScanOrder parse_scan(const std::string& s) {
  if (s == "sequential") return ScanOrder::sequential;
  if (s == "random") return ScanOrder::random;
  throw InvalidConfig("sampler.scan: expected sequential or random");
}

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

json mat_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(vec_json(m.row(r).transpose()));
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (csv_path.empty() == synth_path.empty()) throw InvalidConfig("data: exactly one of csv or synthetic is required");
  if (n_chains < 1) throw InvalidConfig("chains: must be at least 1");
  if (n_folds < 2) throw InvalidConfig("crossval.folds: must be at least 2");
  if (!(label_fraction >= 0.0 && label_fraction <= 1.0)) throw InvalidConfig("label_fraction: must lie in [0, 1]");
  if (em.k < 0) throw InvalidConfig("em.k: must be non-negative");
  if (em.max_iter < 1) throw InvalidConfig("em.max_iter: must be positive");
  if (!(em.tol > 0.0)) throw InvalidConfig("em.tol: must be positive");
  if (prior.kappa0 && !(*prior.kappa0 > 0.0)) throw InvalidConfig("sampler.prior.kappa0: must be positive");
  if (prior.m0 && prior.lambda0 && prior.m0->size() != prior.lambda0->rows())
    throw InvalidConfig("sampler.prior: m0 and lambda0 dimensions differ");
  sampler.validate();
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  reject_unknown(j, "", {"method", "seed", "chains", "data", "out", "sampler", "em", "crossval", "label_fraction",
                         "predefined_class_ids", "undefined_class_ids"});
  RunConfig c;
  if (j.contains("method")) c.method = parse_method(read_string(j, "", "method"));
  if (j.contains("seed")) {
    std::uint64_t s = 0;
    read_number(j, "", "seed", s);
    c.seed = s;
  }
  read_number(j, "", "chains", c.n_chains);
  if (!j.contains("data")) throw InvalidConfig("data: missing");
  const json& d = j.at("data");
  reject_unknown(d, "data", {"csv", "synthetic"});
  if (d.contains("csv")) c.csv_path = base_dir / read_string(d, "data", "csv");
  if (d.contains("synthetic")) c.synth_path = base_dir / read_string(d, "data", "synthetic");
  if (j.contains("out")) c.out_dir = base_dir / read_string(j, "", "out");
  read_number(j, "", "label_fraction", c.label_fraction);
  if (j.contains("predefined_class_ids"))
    c.predefined_class_ids = read_id_set(j.at("predefined_class_ids"), "predefined_class_ids");
  if (j.contains("undefined_class_ids"))
    c.undefined_class_ids = read_id_set(j.at("undefined_class_ids"), "undefined_class_ids");

  if (j.contains("sampler")) {
    const json& s = j.at("sampler");
    reject_unknown(s, "sampler",
                   {"alpha", "iterations", "burn_in", "init", "init_k", "scan", "check_invariants", "prior"});
    read_number(s, "sampler", "alpha", c.sampler.alpha);
    read_number(s, "sampler", "iterations", c.sampler.n_iterations);
    read_number(s, "sampler", "burn_in", c.sampler.n_burn_in);
    read_number(s, "sampler", "init_k", c.sampler.init_k);
    if (s.contains("init")) c.sampler.init = parse_init(read_string(s, "sampler", "init"));
    if (s.contains("scan")) c.sampler.scan = parse_scan(read_string(s, "sampler", "scan"));
    if (s.contains("check_invariants")) {
      if (!s.at("check_invariants").is_boolean()) throw InvalidConfig("sampler.check_invariants: expected a boolean");
      c.sampler.check_invariants = s.at("check_invariants").get<bool>();
    }
    if (s.contains("prior")) {
      const json& p = s.at("prior");
      reject_unknown(p, "sampler.prior", {"m0", "lambda0", "kappa0", "nu0"});
      if (p.contains("m0")) c.prior.m0 = read_vec(p.at("m0"), "sampler.prior.m0");
      if (p.contains("lambda0")) c.prior.lambda0 = read_square(p.at("lambda0"), "sampler.prior.lambda0");
      double v = 0.0;
      if (p.contains("kappa0")) {
        read_number(p, "sampler.prior", "kappa0", v);
        c.prior.kappa0 = v;
      }
      if (p.contains("nu0")) {
        read_number(p, "sampler.prior", "nu0", v);
        c.prior.nu0 = v;
      }
    }
  }
  if (j.contains("em")) {
    const json& e = j.at("em");
    reject_unknown(e, "em", {"k", "max_iter", "tol"});
    read_number(e, "em", "k", c.em.k);
    read_number(e, "em", "max_iter", c.em.max_iter);
    read_number(e, "em", "tol", c.em.tol);
  }
  if (j.contains("crossval")) {
    const json& cv = j.at("crossval");
    reject_unknown(cv, "crossval", {"folds", "parallel"});
    read_number(cv, "crossval", "folds", c.n_folds);
    if (cv.contains("parallel")) {
      if (!cv.at("parallel").is_boolean()) throw InvalidConfig("crossval.parallel: expected a boolean");
      c.parallel_folds = cv.at("parallel").get<bool>();
    }
  }
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidConfig("config '" + path.string() + "': " + e.what());
  }
  return parse_run_config(j, path.parent_path());
}

NiwHyper resolve_prior(const PriorOverride& p, const RowMatrix& x) {
  NiwHyper h = NiwHyper::defaults_for(x);
  if (p.m0) h.m0 = *p.m0;
  if (p.lambda0) h.lambda0 = *p.lambda0;
  if (p.kappa0) h.kappa0 = *p.kappa0;
  if (p.nu0) h.nu0 = *p.nu0;
  if (h.m0.size() != x.cols() || h.lambda0.rows() != x.cols())
    throw InvalidConfig("sampler.prior: dimension does not match the data");
  h.validate();
  return h;
}

json echo(const RunConfig& c, const NiwHyper& hyper, const std::set<int>& predefined, const std::set<int>& undefined,
          std::uint64_t seed) {
  json data = json::object();
  if (!c.csv_path.empty()) data["csv"] = c.csv_path.generic_string();
  if (!c.synth_path.empty()) data["synthetic"] = c.synth_path.generic_string();
  return json{
      {"method", to_string(c.method)},
      {"seed", seed},
      {"chains", c.n_chains},
      {"data", data},
      {"out", c.out_dir.generic_string()},
      {"label_fraction", c.label_fraction},
      {"predefined_class_ids", predefined},
      {"undefined_class_ids", undefined},
      {"sampler",
       {{"alpha", c.sampler.alpha},
        {"iterations", c.sampler.n_iterations},
        {"burn_in", c.sampler.n_burn_in},
        {"init", init_name(c.sampler.init)},
        {"init_k", c.sampler.init_k},
        {"scan", c.sampler.scan == ScanOrder::sequential ? "sequential" : "random"},
        {"check_invariants", c.sampler.check_invariants},
        {"prior",
         {{"m0", vec_json(hyper.m0)},
          {"lambda0", mat_json(hyper.lambda0)},
          {"kappa0", hyper.kappa0},
          {"nu0", hyper.nu0}}}}},
      {"em", {{"k", c.em.k}, {"max_iter", c.em.max_iter}, {"tol", c.em.tol}}},
      {"crossval", {{"folds", c.n_folds}, {"parallel", c.parallel_folds}}},
  };
}

}  // namespace ssigmm::cli
