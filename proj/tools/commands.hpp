#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace ssigmm::cli {

// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<std::string> out;
  std::optional<std::size_t> chains;
  std::optional<long> iterations;
  std::optional<long> burn_in;
  std::optional<double> alpha;
  std::optional<double> label_fraction;
  bool strict_repro = false;
};

void cmd_generate(const std::filesystem::path& spec_path, const std::filesystem::path& out_path,
                  std::optional<std::uint64_t> seed, std::optional<long> count_per_component);
void cmd_fit(const std::filesystem::path& config_path, const Overrides& o);
void cmd_crossval(const std::filesystem::path& config_path, const Overrides& o);
// Prints {"ari": ..., "n": ...} on stdout.
void cmd_ari(const std::filesystem::path& truth_path, const std::filesystem::path& pred_path,
             const std::string& truth_column, const std::string& pred_column);

}  // namespace ssigmm::cli
