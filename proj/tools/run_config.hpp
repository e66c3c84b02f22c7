#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "ssigmm/experiment.hpp"

namespace ssigmm::cli {

struct PriorOverride {
  std::optional<Vec> m0;
  std::optional<Matrix> lambda0;
  std::optional<double> kappa0;
  std::optional<double> nu0;
};

struct RunConfig {
  Method method = Method::ssigmm;
  std::optional<std::uint64_t> seed;
  std::size_t n_chains = 1;
  // Exactly one of these is set; both are absolute or relative to the cwd.
  std::filesystem::path csv_path;
  std::filesystem::path synth_path;
  std::filesystem::path out_dir = "ssigmm_out";
  SamplerConfig sampler;
  PriorOverride prior;
  SsgmmConfig em;
  int n_folds = 5;
  double label_fraction = 0.10;
  std::optional<std::set<int>> predefined_class_ids;
  std::optional<std::set<int>> undefined_class_ids;
  bool parallel_folds = false;

  // Throws InvalidConfig naming the offending field.
  void validate() const;
};

// Unknown keys are rejected. Relative paths resolve against base_dir.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Missing prior fields filled from the data.
NiwHyper resolve_prior(const PriorOverride& p, const RowMatrix& x);

// Effective configuration with every default spelled out. `hyper` is the
// resolved prior, `seed` the seed actually used.
nlohmann::json echo(const RunConfig& c, const NiwHyper& hyper, const std::set<int>& predefined,
                    const std::set<int>& undefined, std::uint64_t seed);

}  // namespace ssigmm::cli
