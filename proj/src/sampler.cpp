#include "ssigmm/sampler.hpp"

#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <set>

#include "ssigmm/errors.hpp"

namespace ssigmm {

namespace {

#ifdef NDEBUG
constexpr bool kAlwaysCheck = false;
#else
constexpr bool kAlwaysCheck = true;
#endif

StudentT cluster_predictive(const NiwHyper& h, const SuffStats& s) {
  return predictive_distribution(posterior(h, s));
}

std::vector<int> expand_labels(std::span<const int> labels, std::size_t n) {
  if (labels.empty()) return std::vector<int>(n, 0);
  if (labels.size() != n) throw LengthMismatch("sampler: labels length differs from N");
  for (int y : labels)
    if (y < 0) throw InvalidConfig("sampler: labels must be non-negative");
  return {labels.begin(), labels.end()};
}

}  // namespace

void SamplerConfig::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidConfig("sampler: alpha must be positive");
  if (n_iterations < 1) throw InvalidConfig("sampler: iterations must be positive");
  if (n_burn_in < 0 || n_burn_in >= n_iterations)
    throw InvalidConfig("sampler: burn_in must satisfy 0 <= burn_in < iterations");
  if (init == InitStrategy::random_k && init_k < 1)
    throw InvalidConfig("sampler: init_k must be positive for random-k initialization");
  if (hyper) hyper->validate();
}

void gibbs_sweep(PartitionState& state, const RowMatrix& x, std::span<const int> labels,
                 const NiwHyper& hyper, Rng& rng, ScanOrder order) {
  const std::size_t n = state.size();
  // Factorizations are rebuilt from the current statistics whenever a
  // cluster changes; nothing is up/down-dated in place.
  std::map<ClusterId, StudentT> cache;
  for (const auto& [id, c] : state.clusters()) cache.emplace(id, cluster_predictive(hyper, c.stats));
  const StudentT prior_pred = cluster_predictive(hyper, SuffStats(hyper.dim()));
  NiwPosterior post_scratch;
  Matrix scale_scratch;
  auto refresh = [&](ClusterId id) {
    auto [it, fresh] = cache.try_emplace(id, prior_pred);
    update_predictive(hyper, state.cluster(id).stats, post_scratch, scale_scratch, it->second);
  };

  std::vector<std::size_t> visit(n);
  std::iota(visit.begin(), visit.end(), std::size_t{0});
  if (order == ScanOrder::random) {
    for (std::size_t j = n; j > 1; --j) std::swap(visit[j - 1], visit[rng.below(j)]);
  }

  std::vector<double> logw;
  for (std::size_t i : visit) {
    const auto xi = row_span(x, static_cast<Eigen::Index>(i));
    const int yi = labels[i];

    const ClusterId old = state.cluster_of(i);
    state.unassign(i, xi, yi);
    if (state.clusters().contains(old))
      refresh(old);
    else
      cache.erase(old);

    std::vector<WeightEntry> weights = state.constrained_log_weights(i, yi);
    logw.resize(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j) {
      const WeightEntry& w = weights[j];
      if (std::isinf(w.log_weight)) {
        logw[j] = w.log_weight;
        continue;
      }
      const StudentT& pred = w.id == kNewCluster ? prior_pred : cache.at(w.id);
      logw[j] = w.log_weight + pred.log_pdf(xi);
    }
    const std::size_t pick = sample_categorical(logw, rng);
    const ClusterId id = state.assign(i, weights[pick].id, xi, yi);
    refresh(id);
  }
}

double log_joint(const PartitionState& state, const NiwHyper& hyper) {
  const double alpha = state.alpha();
  double total = 0.0;
  for (const auto& [id, c] : state.clusters()) {
    total += std::log(alpha) + std::lgamma(static_cast<double>(c.stats.count()));
    total += log_marginal_from_stats(hyper, c.stats);
  }
  for (std::size_t n = 0; n < state.num_assigned(); ++n) total -= std::log(alpha + static_cast<double>(n));
  return total;
}

PartitionState initial_state(const RowMatrix& x, std::span<const int> labels, double alpha,
                             InitStrategy strategy, int init_k, Rng& rng) {
  const auto n = static_cast<std::size_t>(x.rows());
  const std::vector<int> y = expand_labels(labels, n);
  PartitionState state(n, x.cols(), alpha);
  const std::set<int> distinct(y.begin(), y.end());

  switch (strategy) {
    case InitStrategy::per_label_plus_one: {
      for (int label : distinct) {
        if (label == 0) continue;
        ClusterId id = kNewCluster;
        for (std::size_t i = 0; i < n; ++i)
          if (y[i] == label) id = state.assign(i, id, row_span(x, static_cast<Eigen::Index>(i)), label);
      }
      ClusterId rest = kNewCluster;
      for (std::size_t i = 0; i < n; ++i)
        if (y[i] == 0) rest = state.assign(i, rest, row_span(x, static_cast<Eigen::Index>(i)), 0);
      break;
    }
    case InitStrategy::single_cluster: {
      // Unlabeled points share the cluster of the smallest label; every other
      // label needs a cluster of its own to stay feasible.
      int first = 0;
      for (int label : distinct)
        if (label > 0) {
          first = label;
          break;
        }
      std::map<int, ClusterId> by_label;
      for (std::size_t i = 0; i < n; ++i) {
        const int key = y[i] == 0 ? first : y[i];
        auto it = by_label.find(key);
        const ClusterId target = it == by_label.end() ? kNewCluster : it->second;
        by_label[key] = state.assign(i, target, row_span(x, static_cast<Eigen::Index>(i)), y[i]);
      }
      break;
    }
    case InitStrategy::random_k: {
      std::vector<ClusterId> slots(static_cast<std::size_t>(init_k), kNewCluster);
      std::map<int, ClusterId> overflow;
      for (std::size_t i = 0; i < n; ++i) {
        const auto xi = row_span(x, static_cast<Eigen::Index>(i));
        ClusterId& slot = slots[rng.below(slots.size())];
        const bool conflict = y[i] > 0 && slot != kNewCluster && state.clusters().contains(slot) &&
                              state.cluster(slot).q > 0 && state.cluster(slot).q != y[i];
        if (!conflict) {
          slot = state.assign(i, slot, xi, y[i]);
          continue;
        }
        auto it = overflow.find(y[i]);
        overflow[y[i]] = state.assign(i, it == overflow.end() ? kNewCluster : it->second, xi, y[i]);
      }
      break;
    }
  }
  return state;
}

FitResult fit(const RowMatrix& x, std::span<const int> labels, const SamplerConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(x.rows());
  if (n == 0 || x.cols() == 0) throw InvalidConfig("sampler: empty dataset");
  const std::vector<int> y = expand_labels(labels, n);
  const NiwHyper hyper = config.hyper ? *config.hyper : NiwHyper::defaults_for(x);
  hyper.validate();
  if (hyper.dim() != x.cols()) throw InvalidConfig("sampler: prior dimension differs from data");

  Rng rng(config.seed);
  PartitionState state = initial_state(x, y, config.alpha, config.init, config.init_k, rng);
  const bool check = kAlwaysCheck || config.check_invariants;

  SamplerTrace trace;
  trace.records.reserve(static_cast<std::size_t>(config.n_iterations));
  std::optional<PartitionState> best;
  for (long t = 1; t <= config.n_iterations; ++t) {
    gibbs_sweep(state, x, y, hyper, rng, config.scan);
    if (check) state.check_invariants(y);
    const double lj = log_joint(state, hyper);
    trace.records.push_back({t, state.num_clusters(), lj});
    if (t > config.n_burn_in && (!best || lj > trace.best_log_joint)) {
      best = state;
      trace.best_log_joint = lj;
      trace.best_iteration = t;
    }
  }

  FitResult result;
  result.assignments = best->assignments();
  result.mapped_labels = best->finalize_labels();
  const double d = static_cast<double>(x.cols());
  for (const auto& [id, c] : best->clusters()) {
    const NiwPosterior p = posterior(hyper, c.stats);
    const double shrink = p.nu - d - 1.0 > 0.0 ? p.nu - d - 1.0 : p.nu;
    result.clusters.push_back({id, c.q, c.stats.count(), p.m, p.lambda / shrink});
  }
  result.trace = std::move(trace);
  return result;
}

MultiChainResult fit_chains(const RowMatrix& x, std::span<const int> labels,
                            const SamplerConfig& config, std::size_t n_chains) {
  if (n_chains < 1) throw InvalidConfig("sampler: chain count must be positive");
  config.validate();
  MultiChainResult out;
  const Rng base(config.seed);
  for (std::size_t c = 0; c < n_chains; ++c) out.chain_seeds.push_back(c == 0 ? config.seed : base.split(c).seed());

  std::vector<std::future<FitResult>> runs;
  for (std::size_t c = 0; c < n_chains; ++c) {
    SamplerConfig chain = config;
    chain.seed = out.chain_seeds[c];
    runs.push_back(std::async(std::launch::async, [&x, labels, chain] { return fit(x, labels, chain); }));
  }
  std::vector<FitResult> results;
  for (auto& r : runs) results.push_back(r.get());

  for (std::size_t c = 0; c < n_chains; ++c) {
    out.chain_log_joints.push_back(results[c].trace.best_log_joint);
    if (results[c].trace.best_log_joint > results[out.winning_chain].trace.best_log_joint) out.winning_chain = c;
  }
  out.best = std::move(results[out.winning_chain]);
  return out;
}

}  // namespace ssigmm
