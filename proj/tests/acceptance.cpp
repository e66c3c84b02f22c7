// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles.hpp"
#include "posterior_check.hpp"
#include "ssigmm/experiment.hpp"
#include "ssigmm/metrics.hpp"
#include "ssigmm/niw.hpp"

using namespace ssigmm;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kTvMax = 0.05;
constexpr long kSweeps = 100000;
constexpr long kBurnIn = 1000;
constexpr double kOracleSeconds = 60.0;
constexpr double kSynthAriMin = 0.85;
constexpr double kUdrMin = 0.90;
constexpr int kInstances = 1000;
constexpr double kRoundTripTol = 1e-10;
constexpr double kPermutationSpread = 1e-8;
constexpr double kMassTol = 1e-3;
constexpr double kTLimitTol = 1e-3;
constexpr double kAriTol = 1e-12;

struct Verdict {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Posterior over partitions normalized from the library's own log_joint, for
// comparison with the independent oracle.
check::PartitionLaw law_from_log_joint(const RowMatrix& x, const std::vector<int>& labels, const NiwHyper& h) {
  const int n = static_cast<int>(x.rows());
  std::map<std::vector<int>, double> lj;
  for (const auto& blocks : oracle::set_partitions(n)) {
    PartitionState s(static_cast<std::size_t>(n), x.cols(), 1.0);
    std::map<int, ClusterId> ids;
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      const int b = blocks[static_cast<std::size_t>(i)];
      const Vec xi = x.row(i).transpose();
      const ClusterId target = ids.contains(b) ? ids[b] : kNewCluster;
      if (target != kNewCluster && labels[static_cast<std::size_t>(i)] > 0) {
        const int q = s.cluster(target).q;
        if (q > 0 && q != labels[static_cast<std::size_t>(i)]) ok = false;
      }
      if (ok) ids[b] = s.assign(static_cast<std::size_t>(i), target, xi, labels[static_cast<std::size_t>(i)]);
    }
    if (ok) lj[blocks] = log_joint(s, h);
  }
  double hi = -INFINITY;
  for (const auto& [k, v] : lj) hi = std::max(hi, v);
  double z = 0.0;
  for (const auto& [k, v] : lj) z += std::exp(v - hi);
  check::PartitionLaw law;
  for (const auto& [k, v] : lj) law.prob[k] = std::exp(v - hi) / z;
  return law;
}

struct OracleRun {
  double tv = 0.0;
  double tv_vs_log_joint = 0.0;
  std::size_t support = 0;
  long co_clustered = 0;
};

OracleRun oracle_run(int n, const std::vector<int>& labels, std::uint64_t seed) {
  const RowMatrix x = check::small_points(n);
  const NiwHyper h = NiwHyper::defaults_for(x);
  const auto exact = check::exact_posterior(x, labels, 1.0, h);
  const auto emp = check::sample_partitions(x, labels, 1.0, h, kBurnIn, kSweeps, seed);
  return {check::total_variation(exact, emp.law), check::total_variation(exact, law_from_log_joint(x, labels, h)),
          exact.prob.size(), emp.co_clustered};
}

Verdict criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const OracleRun a = oracle_run(4, std::vector<int>(4, 0), 101);
  const OracleRun b = oracle_run(5, std::vector<int>(5, 0), 102);
  const double secs = seconds_since(t0);
  const bool pass = a.support == 15 && b.support == 52 && a.tv <= kTvMax && b.tv <= kTvMax &&
                    a.tv_vs_log_joint < 1e-9 && b.tv_vs_log_joint < 1e-9 && secs < kOracleSeconds;
  return {pass, fmt("unconstrained posterior: N=4 TV=%.4f over %zu partitions, N=5 TV=%.4f over %zu partitions "
                    "(<= %.2f, %ld sweeps); log_joint enumeration vs oracle TV %.1e; %.1f s (< %.0f s)",
                    a.tv, a.support, b.tv, b.support, kTvMax, kSweeps,
                    std::max(a.tv_vs_log_joint, b.tv_vs_log_joint), secs, kOracleSeconds)};
}

Verdict criterion2() {
  const OracleRun a = oracle_run(4, {1, 2, 0, 0}, 201);
  const OracleRun b = oracle_run(5, {1, 2, 0, 0, 0}, 202);
  const bool pass = a.support == 15 - 5 && b.support == 52 - 15 && a.tv <= kTvMax && b.tv <= kTvMax &&
                    a.co_clustered == 0 && b.co_clustered == 0 && a.tv_vs_log_joint < 1e-9 &&
                    b.tv_vs_log_joint < 1e-9;
  return {pass, fmt("constrained posterior: N=4 TV=%.4f over %zu partitions, N=5 TV=%.4f over %zu partitions "
                    "(<= %.2f); labeled pair co-clustered in %ld + %ld of %ld sweeps (must be 0)",
                    a.tv, a.support, b.tv, b.support, kTvMax, a.co_clustered, b.co_clustered, 2 * kSweeps)};
}

struct MethodSummary {
  double mean_ari = 0.0;
  long undefined_points = 0;
  long undefined_detected = 0;
  std::size_t tagged_undefined_majority = 0;
  std::vector<double> seed_ari;

  double pooled_udr() const {
    return undefined_points == 0 ? 1.0 : static_cast<double>(undefined_detected) / static_cast<double>(undefined_points);
  }
};

// Undefined test points with mapped label 0 are exactly those whose SsIGMM
// prediction is an untagged-cluster id (negative).
MethodSummary run_protocol(const SynthSpec& spec, Method m, int n_seeds) {
  const Dataset data = generate_synthetic(spec);
  CvSettings cv;
  cv.predefined_class_ids = spec.predefined_class_ids();
  cv.undefined_class_ids = spec.undefined_class_ids;
  MethodSettings settings;
  settings.method = m;
  MethodSummary out;
  for (int seed = 1; seed <= n_seeds; ++seed) {
    const CrossvalReport r = run_crossval(data, cv, settings, static_cast<std::uint64_t>(seed));
    out.seed_ari.push_back(r.mean_ari);
    out.mean_ari += r.mean_ari / n_seeds;
    out.tagged_undefined_majority += r.tagged_undefined_majority;
    for (const FoldReport& f : r.folds) {
      const auto& t = f.confusion;
      for (std::size_t i = 0; i < t.row_ids.size(); ++i) {
        if (!cv.undefined_class_ids.contains(static_cast<int>(t.row_ids[i]))) continue;
        out.undefined_points += t.row_totals[i];
        for (std::size_t j = 0; j < t.col_ids.size(); ++j)
          if (t.col_ids[j] < 0) out.undefined_detected += t.counts[i][j];
      }
    }
  }
  return out;
}

std::string seeds_str(const std::vector<double>& v) {
  std::string s;
  for (double a : v) s += (s.empty() ? "" : " ") + fmt("%.3f", a);
  return s;
}

struct Synthetic {
  bool ran = false;
  MethodSummary ss;
  MethodSummary igmm;
  MethodSummary ssgmm;
  double secs = 0.0;
};

Synthetic& synthetic_runs(const fs::path& configs) {
  static Synthetic s;
  if (!s.ran) {
    const auto t0 = std::chrono::steady_clock::now();
    const SynthSpec spec = load_synth_spec(configs / "synthetic_default.json");
    s.ss = run_protocol(spec, Method::ssigmm, 5);
    s.igmm = run_protocol(spec, Method::igmm, 5);
    s.ssgmm = run_protocol(spec, Method::ssgmm, 5);
    s.secs = seconds_since(t0);
    s.ran = true;
  }
  return s;
}

Verdict criterion3(const fs::path& configs) {
  const Synthetic& s = synthetic_runs(configs);
  const bool pass = s.ss.mean_ari >= kSynthAriMin && s.ss.mean_ari > s.igmm.mean_ari &&
                    s.ss.mean_ari > s.ssgmm.mean_ari;
  return {pass, fmt("synthetic layout, 5 master seeds, 2000/1500 sweeps: SsIGMM ARI %.4f (>= %.2f; seeds %s), "
                    "IGMM %.4f, SsGMM %.4f; %.0f s",
                    s.ss.mean_ari, kSynthAriMin, seeds_str(s.ss.seed_ari).c_str(), s.igmm.mean_ari,
                    s.ssgmm.mean_ari, s.secs)};
}

Verdict criterion4(const fs::path& configs) {
  const Synthetic& s = synthetic_runs(configs);
  const bool pass = s.ss.pooled_udr() >= kUdrMin && s.ss.tagged_undefined_majority == 0;
  return {pass, fmt("undefined detection on the same runs: %ld of %ld undefined test points unlabeled (%.4f >= %.2f); "
                    "%zu tagged clusters with an undefined majority (must be 0)",
                    s.ss.undefined_detected, s.ss.undefined_points, s.ss.pooled_udr(), kUdrMin,
                    s.ss.tagged_undefined_majority)};
}

Matrix random_spd(Rng& rng, int d, double ridge) {
  Matrix a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = rng.normal();
  return a * a.transpose() / d + ridge * Matrix::Identity(d, d);
}

NiwHyper random_hyper(Rng& rng, int d) {
  NiwHyper h;
  h.m0 = Vec(d);
  for (int j = 0; j < d; ++j) h.m0[j] = 2.0 * rng.normal();
  h.lambda0 = random_spd(rng, d, 0.3);
  h.kappa0 = 0.05 + 3.0 * rng.uniform();
  h.nu0 = d - 1 + 0.5 + 5.0 * rng.uniform();
  return h;
}

std::vector<Vec> random_points(Rng& rng, int n, const Vec& center, double spread) {
  std::vector<Vec> out;
  for (int i = 0; i < n; ++i) {
    Vec x(center.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) x[j] = center[j] + spread * rng.normal();
    out.push_back(x);
  }
  return out;
}

Verdict criterion5() {
  Rng rng(500);
  const auto t0 = std::chrono::steady_clock::now();

  int round_trip_ok = 0;
  double round_trip_worst = 0.0;
  for (int rep = 0; rep < kInstances; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(4));
    const NiwHyper h = random_hyper(rng, d);
    const auto pts = random_points(rng, 1 + static_cast<int>(rng.below(40)), h.m0, 0.5 + 3.0 * rng.uniform());
    SuffStats s(d);
    for (const Vec& p : pts) s.add(p);
    const NiwPosterior before = posterior(h, s);
    const Vec x = random_points(rng, 1, h.m0, 4.0)[0];
    s.add(x);
    s.remove(x);
    const NiwPosterior after = posterior(h, s);
    const double err = std::max({(after.m - before.m).cwiseAbs().maxCoeff() / std::max(1.0, before.m.norm()),
                                 (after.lambda - before.lambda).norm() / std::max(1.0, before.lambda.norm()),
                                 std::abs(after.kappa - before.kappa), std::abs(after.nu - before.nu)});
    round_trip_worst = std::max(round_trip_worst, err);
    if (err <= kRoundTripTol) ++round_trip_ok;
  }

  int perm_ok = 0;
  double perm_worst = 0.0;
  for (int rep = 0; rep < kInstances; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(3));
    const NiwHyper h = random_hyper(rng, d);
    const auto pts = random_points(rng, 5, h.m0, 0.5 + 2.0 * rng.uniform());
    std::vector<int> order(5);
    std::iota(order.begin(), order.end(), 0);
    double lo = INFINITY;
    double hi = -INFINITY;
    do {
      std::vector<Vec> ordered;
      for (int i : order) ordered.push_back(pts[static_cast<std::size_t>(i)]);
      const double v = cluster_log_marginal(h, ordered);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    } while (std::next_permutation(order.begin(), order.end()));
    perm_worst = std::max(perm_worst, hi - lo);
    if (hi - lo < kPermutationSpread) ++perm_ok;
  }

  const double dofs[] = {1.0, 2.0, 5.0, 30.0};
  int mass_ok = 0;
  double mass_worst = 0.0;
  for (int rep = 0; rep < kInstances; ++rep) {
    const double dof = dofs[rng.below(4)];
    double mass = 0.0;
    if (rep % 2 == 0) {
      const Vec loc = Vec::Constant(1, 3.0 * rng.normal());
      const Matrix scale = Matrix::Constant(1, 1, 0.1 + 4.0 * rng.uniform());
      const StudentT t(loc, scale, dof);
      Vec x(1);
      mass = oracle::integrate_1d(
          [&](double v) {
            x[0] = v;
            return std::exp(t.log_pdf(x));
          },
          loc[0], std::sqrt(scale(0, 0)), 4000);
    } else {
      Vec loc(2);
      loc << 3.0 * rng.normal(), 3.0 * rng.normal();
      const Matrix scale = random_spd(rng, 2, 0.1);
      const StudentT t(loc, scale, dof);
      mass = oracle::integrate_whitened_2d([&](const Vec& x) { return std::exp(t.log_pdf(x)); }, loc, scale, 600);
    }
    mass_worst = std::max(mass_worst, std::abs(mass - 1.0));
    if (std::abs(mass - 1.0) <= kMassTol) ++mass_ok;
  }

  int limit_ok = 0;
  double limit_worst = 0.0;
  for (int rep = 0; rep < kInstances; ++rep) {
    const int d = 1 + static_cast<int>(rng.below(4));
    const Matrix s = random_spd(rng, d, 0.2);
    const Vec loc = random_points(rng, 1, Vec::Zero(d), 2.0)[0];
    const Vec x = random_points(rng, 1, loc, 1.0)[0];
    const double err = std::abs(mvt_logpdf(x, loc, s, 1e6) - mvn_logpdf(x, loc, s));
    limit_worst = std::max(limit_worst, err);
    if (err <= kTLimitTol) ++limit_ok;
  }

  const bool pass = round_trip_ok == kInstances && perm_ok == kInstances && mass_ok == kInstances &&
                    limit_ok == kInstances;
  return {pass, fmt("property suites over %d instances each: round trip %d (worst %.1e <= %.0e), permutation %d "
                    "(worst spread %.1e < %.0e), normalization %d (worst |mass-1| %.1e <= %.0e), t limit %d "
                    "(worst %.1e <= %.0e); %.1f s",
                    kInstances, round_trip_ok, round_trip_worst, kRoundTripTol, perm_ok, perm_worst,
                    kPermutationSpread, mass_ok, mass_worst, kMassTol, limit_ok, limit_worst, kTLimitTol,
                    seconds_since(t0))};
}

Verdict criterion6() {
  Rng rng(600);
  int ok = 0;
  int degenerate = 0;
  double worst = 0.0;
  for (int rep = 0; rep < kInstances; ++rep) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<long long> c(n);
    std::vector<long long> cp(n);
    const auto kc = 1 + rng.below(8);
    const auto kp = 1 + rng.below(8);
    for (std::size_t i = 0; i < n; ++i) {
      c[i] = static_cast<long long>(rng.below(kc));
      cp[i] = static_cast<long long>(rng.below(kp)) - 3;
    }
    const double lit = oracle::ari_literal(c, cp);
    const double got = ari(c, cp);
    if (std::isnan(lit)) {
      ++degenerate;
      if (got == 1.0) ++ok;
      continue;
    }
    worst = std::max(worst, std::abs(got - lit));
    if (std::abs(got - lit) <= kAriTol) ++ok;
  }
  int identical_ok = 0;
  for (int rep = 0; rep < kInstances; ++rep) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<long long> c(n);
    const auto k = 1 + rng.below(8);
    for (auto& v : c) v = static_cast<long long>(rng.below(k));
    std::vector<long long> relabeled = c;
    for (auto& v : relabeled) v = 1000 - 17 * v;
    if (ari(c, c) == 1.0 && ari(c, relabeled) == 1.0) ++identical_ok;
  }
  const bool pass = ok == kInstances && identical_ok == kInstances;
  return {pass, fmt("ARI vs literal oracle: %d of %d within %.0e (worst %.1e; %d zero-denominator cases scored 1.0); "
                    "identical partitions exactly 1.0 in %d of %d",
                    ok, kInstances, kAriTol, worst, degenerate, identical_ok, kInstances)};
}

Verdict criterion7(const fs::path& configs) {
  const auto t0 = std::chrono::steady_clock::now();
  const SynthSpec spec = load_synth_spec(configs / "mouse_surrogate.json");
  const MethodSummary ss = run_protocol(spec, Method::ssigmm, 3);
  const MethodSummary em = run_protocol(spec, Method::ssgmm, 3);
  const bool pass = ss.mean_ari > em.mean_ari && ss.pooled_udr() >= kUdrMin && ss.tagged_undefined_majority == 0;
  return {pass, fmt("mouse surrogate, 3 master seeds: SsIGMM ARI %.4f (seeds %s) > SsGMM %.4f; %ld of %ld undefined "
                    "test points unlabeled (%.4f >= %.2f); %zu tagged undefined-majority clusters; %.0f s",
                    ss.mean_ari, seeds_str(ss.seed_ari).c_str(), em.mean_ari, ss.undefined_detected,
                    ss.undefined_points, ss.pooled_udr(), kUdrMin, ss.tagged_undefined_majority, seconds_since(t0))};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict criterion8(const fs::path& configs, const std::string& cli) {
  const fs::path dir = fs::temp_directory_path() / "ssigmm_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.json") << "{\"seed\": 2024, \"data\": {\"synthetic\": \""
                                  << (configs / "synthetic_default.json").generic_string()
                                  << "\"}, \"out\": \"out\", \"sampler\": {\"iterations\": 200, \"burn_in\": 100}}";
  std::vector<std::string> reports;
  int rc = 0;
  for (int run = 0; run < 2; ++run) {
    const std::string cmd = "\"" + cli + "\" crossval --config \"" + (dir / "run.json").string() + "\"";
    rc |= std::system(cmd.c_str());
    reports.push_back(slurp(dir / "out" / "report.json"));
    fs::remove_all(dir / "out");
  }
  const bool pass = rc == 0 && !reports[0].empty() && reports[0] == reports[1];
  fs::remove_all(dir);
  return {pass, fmt("crossval run twice with seed 2024 (200/100 sweeps): exit status %d, reports of %zu and %zu bytes "
                    "%s",
                    rc, reports[0].size(), reports[1].size(), reports[0] == reports[1] ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string configs;
  std::string cli;
  std::vector<int> only;
  app.add_option("--configs", configs, "Directory holding the shipped layout specs")->required();
  app.add_option("--cli", cli, "Path to the ssigmm executable")->required();
  app.add_option("criteria", only, "Subset of criteria to run (default: all)");
  CLI11_PARSE(app, argc, argv);
  configs = fs::absolute(configs).string();

  const std::vector<std::function<Verdict()>> criteria = {
      criterion1,
      criterion2,
      [&] { return criterion3(configs); },
      [&] { return criterion4(configs); },
      criterion5,
      criterion6,
      [&] { return criterion7(configs); },
      [&] { return criterion8(configs, cli); },
  };
  bool all = true;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Verdict v;
    try {
      v = criteria[k]();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    all = all && v.pass;
    std::printf("[%s] %d %s\n", v.pass ? "PASS" : "FAIL", id, v.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
