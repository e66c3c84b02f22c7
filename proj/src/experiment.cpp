#include "ssigmm/experiment.hpp"

#include <future>
#include <map>

#include "ssigmm/errors.hpp"

namespace ssigmm {

std::string to_string(Method m) {
  switch (m) {
    case Method::ssigmm:
      return "ssigmm";
    case Method::igmm:
      return "igmm";
    case Method::ssgmm:
      return "ssgmm";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  if (name == "ssigmm") return Method::ssigmm;
  if (name == "igmm") return Method::igmm;
  if (name == "ssgmm") return Method::ssgmm;
  throw InvalidConfig("method: expected ssigmm, igmm or ssgmm, got '" + name + "'");
}

std::uint64_t fold_seed(std::uint64_t seed, int fold) {
  return Rng(seed).split(static_cast<std::uint64_t>(fold) + 1).seed();
}

RunOutcome run_method(const Dataset& data, std::span<const int> labels, const MethodSettings& settings,
                      std::uint64_t seed) {
  data.validate();
  RunOutcome out;
  const std::size_t n = data.size();

  if (settings.method == Method::ssgmm) {
    SsgmmConfig em = settings.em;
    em.seed = seed;
    SsgmmResult r = ssgmm_fit(data.x, labels, em);
    out.cluster_ids.assign(r.hard_assignment.begin(), r.hard_assignment.end());
    out.mapped_labels = r.mapped_labels;
    out.predicted.assign(r.hard_assignment.begin(), r.hard_assignment.end());
    out.k_final = r.params.k();
    out.em_fit = std::move(r);
    return out;
  }

  const std::vector<int> none(n, 0);
  const std::span<const int> used = settings.method == Method::igmm ? std::span<const int>(none) : labels;
  SamplerConfig cfg = settings.sampler;
  cfg.seed = seed;
  MultiChainResult mc = fit_chains(data.x, used, cfg, settings.n_chains);
  FitResult& fit = mc.best;

  out.cluster_ids = fit.assignments;
  out.mapped_labels = fit.mapped_labels;
  out.predicted.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (settings.method == Method::ssigmm && fit.mapped_labels[i] > 0)
      out.predicted[i] = fit.mapped_labels[i];
    else if (settings.method == Method::ssigmm)
      out.predicted[i] = -static_cast<long long>(fit.assignments[i]) - 1;
    else
      out.predicted[i] = static_cast<long long>(fit.assignments[i]);
  }
  out.k_final = fit.clusters.size();
  out.best_log_joint = fit.trace.best_log_joint;
  out.winning_chain = mc.winning_chain;
  out.sampler_fit = std::move(fit);
  return out;
}

std::size_t count_tagged_undefined_majority(const Dataset& data, const RunOutcome& run,
                                            const std::set<int>& undefined_class_ids) {
  std::map<ClusterId, std::pair<long, long>> tally;  // (undefined members, members)
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (run.mapped_labels[i] <= 0) continue;
    auto& [undef, total] = tally[run.cluster_ids[i]];
    ++total;
    if (undefined_class_ids.contains(data.true_labels[i])) ++undef;
  }
  std::size_t n = 0;
  for (const auto& [id, t] : tally)
    if (2 * t.first > t.second) ++n;
  return n;
}

namespace {

FoldReport evaluate_fold(const Dataset& data, const CvFold& split, const CvSettings& cv,
                         const MethodSettings& settings, int f, std::uint64_t seed) {
  FoldReport rep;
  rep.fold = f;
  rep.seed = seed;
  const RunOutcome run = run_method(data, split.train_labels, settings, seed);

  std::vector<long long> truth;
  std::vector<long long> pred;
  std::vector<int> truth_int;
  std::vector<int> mapped;
  for (std::size_t i : split.test_indices) {
    truth.push_back(data.true_labels[i]);
    pred.push_back(run.predicted[i]);
    truth_int.push_back(data.true_labels[i]);
    mapped.push_back(run.mapped_labels[i]);
  }
  for (int y : split.train_labels)
    if (y > 0) ++rep.n_labeled;
  rep.n_test = split.test_indices.size();
  rep.ari = ari(truth, pred);
  rep.undefined_detection_rate = undefined_detection_rate(truth_int, mapped, cv.undefined_class_ids);
  rep.k_final = run.k_final;
  rep.winning_chain = run.winning_chain;
  rep.best_log_joint = run.best_log_joint;
  rep.confusion = confusion(std::span<const long long>(truth), std::span<const long long>(pred));

  rep.tagged_undefined_majority = count_tagged_undefined_majority(data, run, cv.undefined_class_ids);
  return rep;
}

}  // namespace

CrossvalReport run_crossval(const Dataset& data, const CvSettings& cv, const MethodSettings& settings,
                            std::uint64_t seed) {
  data.validate();
  const std::vector<CvFold> splits = make_cv_splits(data, cv.n_folds, cv.label_fraction, cv.predefined_class_ids, seed);

  CrossvalReport report;
  if (cv.parallel_folds) {
    std::vector<std::future<FoldReport>> jobs;
    for (int f = 0; f < cv.n_folds; ++f)
      jobs.push_back(std::async(std::launch::async, [&, f] {
        return evaluate_fold(data, splits[static_cast<std::size_t>(f)], cv, settings, f, fold_seed(seed, f));
      }));
    for (auto& j : jobs) report.folds.push_back(j.get());
  } else {
    for (int f = 0; f < cv.n_folds; ++f)
      report.folds.push_back(evaluate_fold(data, splits[static_cast<std::size_t>(f)], cv, settings, f, fold_seed(seed, f)));
  }

  for (const FoldReport& r : report.folds) {
    report.mean_ari += r.ari;
    report.mean_undefined_detection_rate += r.undefined_detection_rate;
    report.mean_k_final += static_cast<double>(r.k_final);
    report.tagged_undefined_majority += r.tagged_undefined_majority;
  }
  const double nf = static_cast<double>(report.folds.size());
  report.mean_ari /= nf;
  report.mean_undefined_detection_rate /= nf;
  report.mean_k_final /= nf;
  return report;
}

}  // namespace ssigmm
