#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "ssigmm/errors.hpp"

namespace {

void add_run_flags(CLI::App* cmd, std::string& config, ssigmm::cli::Overrides& o) {
  cmd->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Master seed (u64)");
  cmd->add_option("--method", o.method, "ssigmm, igmm or ssgmm")
      ->check(CLI::IsMember({"ssigmm", "igmm", "ssgmm"}));
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--chains", o.chains, "Independent sampler chains; the best log joint wins");
  cmd->add_option("--iterations", o.iterations, "Gibbs sweeps");
  cmd->add_option("--burn-in", o.burn_in, "Sweeps excluded from MAP selection");
  cmd->add_option("--alpha", o.alpha, "DP concentration");
  cmd->add_option("--label-fraction", o.label_fraction, "Share of each predefined class given its label");
  cmd->add_flag("--strict-repro", o.strict_repro, "Refuse to run without an explicit seed");
}

constexpr const char* kScoring =
    "ARI is computed between true classes and the predicted labels. SsIGMM predicts the tag of a point's cluster, "
    "or a distinct id per untagged cluster. IGMM and SsGMM are scored on raw cluster/component ids, since ARI does "
    "not depend on how clusters are named.";

}  // namespace

int main(int argc, char** argv) {
  namespace cli = ssigmm::cli;
  CLI::App app{"Semi-supervised infinite Gaussian mixture clustering"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 ok, 2 config or validation error, 3 I/O error, 4 numerical failure, 1 internal error.");

  std::string spec_path;
  std::string out_csv;
  std::optional<std::uint64_t> gen_seed;
  std::optional<long> gen_count;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset (CSV with true_class) from a layout spec");
  gen->add_option("--config", spec_path, "Synthetic layout spec (JSON)")->required()->check(CLI::ExistingFile);
  gen->add_option("--out", out_csv, "Output CSV file")->required();
  gen->add_option("--seed", gen_seed, "Overrides the layout seed");
  gen->add_option("--count-per-component", gen_count, "Overrides every component's count");

  std::string fit_config;
  cli::Overrides fit_o;
  auto* fit = app.add_subcommand("fit", "Run one method once on the whole dataset");
  fit->footer(std::string("Writes assignments.csv, trace.csv, clusters.csv and report.json. Labels come from the "
                          "CSV label column when present, otherwise label_fraction of each predefined class is "
                          "sampled from true_class. ") +
              kScoring);
  add_run_flags(fit, fit_config, fit_o);

  std::string cv_config;
  cli::Overrides cv_o;
  auto* cv = app.add_subcommand("crossval", "Transductive k-fold protocol, metrics on test folds");
  cv->footer(std::string("Writes folds.csv and report.json. ") + kScoring);
  add_run_flags(cv, cv_config, cv_o);

  std::string truth_csv;
  std::string pred_csv;
  std::string truth_col = "true_class";
  std::string pred_col = "cluster_id";
  auto* ari = app.add_subcommand("ari", "Adjusted Rand index between two label columns");
  ari->add_option("truth", truth_csv, "CSV holding the reference labels")->required()->check(CLI::ExistingFile);
  ari->add_option("pred", pred_csv, "CSV holding the predicted labels")->required()->check(CLI::ExistingFile);
  ari->add_option("--truth-column", truth_col, "Column in the reference file")->capture_default_str();
  ari->add_option("--pred-column", pred_col, "Column in the predicted file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) cli::cmd_generate(spec_path, out_csv, gen_seed, gen_count);
    if (*fit) cli::cmd_fit(fit_config, fit_o);
    if (*cv) cli::cmd_crossval(cv_config, cv_o);
    if (*ari) cli::cmd_ari(truth_csv, pred_csv, truth_col, pred_col);
  } catch (const ssigmm::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ssigmm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ssigmm::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
