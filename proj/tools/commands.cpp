#include "commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "run_config.hpp"
#include "ssigmm/errors.hpp"

namespace ssigmm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

RunConfig effective_config(const fs::path& config_path, const Overrides& o) {
  RunConfig c = load_run_config(config_path);
  if (o.seed) c.seed = o.seed;
  if (o.method) c.method = parse_method(*o.method);
  if (o.out) c.out_dir = *o.out;
  if (o.chains) c.n_chains = *o.chains;
  if (o.iterations) c.sampler.n_iterations = *o.iterations;
  if (o.burn_in) c.sampler.n_burn_in = *o.burn_in;
  if (o.alpha) c.sampler.alpha = *o.alpha;
  if (o.label_fraction) c.label_fraction = *o.label_fraction;
  if (o.strict_repro && !c.seed) throw InvalidConfig("seed: --strict-repro requires --seed or a seed in the config");
  c.validate();
  return c;
}

std::uint64_t pick_seed(const RunConfig& c) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

struct Loaded {
  Dataset data;
  std::set<int> predefined;
  std::set<int> undefined;
};

Loaded load_data(const RunConfig& c) {
  Loaded l;
  if (!c.synth_path.empty()) {
    const SynthSpec spec = load_synth_spec(c.synth_path);
    l.data = generate_synthetic(spec);
    l.predefined = spec.predefined_class_ids();
    l.undefined = spec.undefined_class_ids;
  } else {
    l.data = read_csv(c.csv_path);
    for (int y : l.data.has_true_labels() ? l.data.true_labels : l.data.labels)
      if (y > 0) l.predefined.insert(y);
  }
  l.data.validate();
  if (c.undefined_class_ids) l.undefined = *c.undefined_class_ids;
  if (c.predefined_class_ids) {
    l.predefined = *c.predefined_class_ids;
  } else {
    for (int u : l.undefined) l.predefined.erase(u);
  }
  for (int u : l.undefined)
    if (l.predefined.contains(u))
      throw InvalidConfig("undefined_class_ids: class " + std::to_string(u) + " is also predefined");
  return l;
}

MethodSettings method_settings(const RunConfig& c, const NiwHyper& hyper) {
  MethodSettings s;
  s.method = c.method;
  s.sampler = c.sampler;
  s.sampler.hyper = hyper;
  s.em = c.em;
  s.n_chains = c.n_chains;
  return s;
}

json confusion_json(const ContingencyTable& t) {
  return json{{"true_classes", t.row_ids}, {"predicted", t.col_ids}, {"counts", t.counts}};
}

json optional_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string trace_csv(const RunOutcome& run) {
  std::ostringstream os;
  if (run.sampler_fit) {
    os << "iteration,k,log_joint\n";
    for (const TraceRecord& r : run.sampler_fit->trace.records)
      os << r.iteration << ',' << r.k << ',' << num(r.log_joint) << '\n';
  } else {
    os << "iteration,log_likelihood\n";
    const auto& ll = run.em_fit->log_likelihood;
    for (std::size_t i = 0; i < ll.size(); ++i) os << i + 1 << ',' << num(ll[i]) << '\n';
  }
  return os.str();
}

std::string clusters_csv(const RunOutcome& run, Eigen::Index d) {
  std::ostringstream os;
  os << "cluster_id,q,count";
  for (Eigen::Index a = 0; a < d; ++a) os << ",mean_" << a + 1;
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) os << ",cov_" << a + 1 << '_' << b + 1;
  os << '\n';
  auto row = [&](long long id, int q, long count, const Vec& mean, const Matrix& cov) {
    os << id << ',' << q << ',' << count;
    for (Eigen::Index a = 0; a < d; ++a) os << ',' << num(mean[a]);
    for (Eigen::Index a = 0; a < d; ++a)
      for (Eigen::Index b = 0; b < d; ++b) os << ',' << num(cov(a, b));
    os << '\n';
  };
  if (run.sampler_fit) {
    for (const ClusterSummary& c : run.sampler_fit->clusters) row(c.id, c.q, c.count, c.mean, c.covariance);
  } else {
    const SsgmmResult& r = *run.em_fit;
    std::vector<long> counts(r.params.k(), 0);
    for (int a : r.hard_assignment) ++counts[static_cast<std::size_t>(a)];
    for (std::size_t k = 0; k < r.params.k(); ++k)
      row(static_cast<long long>(k), r.component_labels[k], counts[k], r.params.means[k], r.params.covariances[k]);
  }
  return os.str();
}

}  // namespace

void cmd_generate(const fs::path& spec_path, const fs::path& out_path, std::optional<std::uint64_t> seed,
                  std::optional<long> count_per_component) {
  SynthSpec spec = load_synth_spec(spec_path);
  if (seed) spec.seed = *seed;
  if (count_per_component) {
    for (SynthComponent& c : spec.components) c.count = *count_per_component;
    spec.validate();
  }
  if (out_path.has_parent_path()) make_dir(out_path.parent_path());
  write_csv(out_path, generate_synthetic(spec));
}

void cmd_fit(const fs::path& config_path, const Overrides& o) {
  const RunConfig c = effective_config(config_path, o);
  const std::uint64_t seed = pick_seed(c);
  const Loaded l = load_data(c);
  const Dataset& data = l.data;
  const NiwHyper hyper = resolve_prior(c.prior, data.x);

  Labels labels(data.size(), 0);
  if (data.has_labels())
    labels = data.labels;
  else if (data.has_true_labels())
    labels = sample_labels(data, c.label_fraction, l.predefined, Rng(seed).split(0).seed());
  std::size_t n_labeled = 0;
  for (int y : labels)
    if (y > 0 && c.method != Method::igmm) ++n_labeled;

  const RunOutcome run = run_method(data, labels, method_settings(c, hyper), seed);

  json report;
  report["command"] = "fit";
  report["method"] = to_string(c.method);
  report["seed"] = seed;
  report["n_points"] = data.size();
  report["n_labeled"] = n_labeled;
  report["k_final"] = run.k_final;
  report["winning_chain"] = run.winning_chain;
  report["best_log_joint"] = optional_num(run.best_log_joint);
  if (run.sampler_fit) {
    report["best_iteration"] = run.sampler_fit->trace.best_iteration;
  } else {
    report["best_iteration"] = nullptr;
  }
  if (data.has_true_labels()) {
    std::vector<long long> truth(data.true_labels.begin(), data.true_labels.end());
    report["ari"] = ari(truth, run.predicted);
    report["undefined_detection_rate"] = undefined_detection_rate(data.true_labels, run.mapped_labels, l.undefined);
    report["tagged_undefined_majority"] = count_tagged_undefined_majority(data, run, l.undefined);
  } else {
    report["ari"] = nullptr;
    report["undefined_detection_rate"] = nullptr;
    report["tagged_undefined_majority"] = nullptr;
  }
  report["per_fold"] = json::array();
  report["config_echo"] = echo(c, hyper, l.predefined, l.undefined, seed);

  make_dir(c.out_dir);
  write_assignments(c.out_dir / "assignments.csv", AssignmentTable{run.cluster_ids, run.mapped_labels});
  write_file(c.out_dir / "trace.csv", trace_csv(run));
  write_file(c.out_dir / "clusters.csv", clusters_csv(run, data.dim()));
  write_file(c.out_dir / "report.json", report.dump(2) + "\n");
}

void cmd_crossval(const fs::path& config_path, const Overrides& o) {
  const RunConfig c = effective_config(config_path, o);
  const std::uint64_t seed = pick_seed(c);
  const Loaded l = load_data(c);
  if (!l.data.has_true_labels()) throw ValidationError("crossval needs a true_class column");
  const NiwHyper hyper = resolve_prior(c.prior, l.data.x);

  CvSettings cv;
  cv.n_folds = c.n_folds;
  cv.label_fraction = c.label_fraction;
  cv.predefined_class_ids = l.predefined;
  cv.undefined_class_ids = l.undefined;
  cv.parallel_folds = c.parallel_folds;
  const CrossvalReport r = run_crossval(l.data, cv, method_settings(c, hyper), seed);

  json folds = json::array();
  std::ostringstream csv;
  csv << "fold,seed,n_test,n_labeled,ari,undefined_detection_rate,k_final,tagged_undefined_majority\n";
  for (const FoldReport& f : r.folds) {
    folds.push_back({{"fold", f.fold},
                     {"seed", f.seed},
                     {"n_test", f.n_test},
                     {"n_labeled", f.n_labeled},
                     {"ari", f.ari},
                     {"undefined_detection_rate", f.undefined_detection_rate},
                     {"k_final", f.k_final},
                     {"tagged_undefined_majority", f.tagged_undefined_majority},
                     {"winning_chain", f.winning_chain},
                     {"best_log_joint", optional_num(f.best_log_joint)},
                     {"confusion", confusion_json(f.confusion)}});
    csv << f.fold << ',' << f.seed << ',' << f.n_test << ',' << f.n_labeled << ',' << num(f.ari) << ','
        << num(f.undefined_detection_rate) << ',' << f.k_final << ',' << f.tagged_undefined_majority << '\n';
  }

  json report;
  report["command"] = "crossval";
  report["method"] = to_string(c.method);
  report["seed"] = seed;
  report["n_points"] = l.data.size();
  report["ari"] = r.mean_ari;
  report["undefined_detection_rate"] = r.mean_undefined_detection_rate;
  report["k_final"] = r.mean_k_final;
  report["tagged_undefined_majority"] = r.tagged_undefined_majority;
  report["per_fold"] = folds;
  report["config_echo"] = echo(c, hyper, l.predefined, l.undefined, seed);

  make_dir(c.out_dir);
  write_file(c.out_dir / "folds.csv", csv.str());
  write_file(c.out_dir / "report.json", report.dump(2) + "\n");
}

void cmd_ari(const fs::path& truth_path, const fs::path& pred_path, const std::string& truth_column,
             const std::string& pred_column) {
  const auto truth = read_int_column(truth_path, truth_column);
  const auto pred = read_int_column(pred_path, pred_column);
  if (truth.size() != pred.size())
    throw LengthMismatch("ari: " + std::to_string(truth.size()) + " truth rows but " + std::to_string(pred.size()) +
                         " predicted rows");
  std::cout << json{{"ari", ari(truth, pred)}, {"n", truth.size()}}.dump() << '\n';
}

}  // namespace ssigmm::cli
