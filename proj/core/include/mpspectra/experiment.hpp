#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpspectra/mp_law.hpp"
#include "mpspectra/resolvent_identities.hpp"
#include "mpspectra/sampling.hpp"

namespace mpspectra {

enum class Subcommand { Esd, Stieltjes, CheckLemma, CheckConditions };

/// Parses "esd", "stieltjes", "check-lemma", "check-conditions".
std::optional<Subcommand> parse_subcommand(const std::string& name);
std::string to_string(Subcommand command);

inline constexpr int kConfigVersion = 1;

/// Validated experiment description. Built from JSON by parse_config, which
/// checks only what the chosen subcommand needs.
struct ExperimentConfig {
  Subcommand command = Subcommand::Esd;
  nlohmann::json model_json;
  std::size_t p = 0;
  std::size_t n = 0;
  /// Set when the config gave c instead of n (then n = round(p / c)).
  std::optional<double> c;
  std::vector<ComplexPoint> z_grid;
  std::vector<Seed> seeds;
  std::size_t trials = 100;
  std::filesystem::path output_dir = "mpspectra_out";
  std::size_t max_entries = kDefaultMaxEntries;

  /// "sample" draws X from the model; "mp_quantiles" uses the law's
  /// quantile spectrum (seed-independent).
  std::string input = "sample";
  std::size_t density_points = 2001;

  /// stieltjes: optional p-sweep; each p uses n = round(p / ratio).
  std::vector<std::size_t> p_sweep;

  LemmaFuzzConfig lemma;

  std::vector<nlohmann::json> condition_models;
  std::vector<std::string> families{"identity", "diagonal_signs", "random_projection"};
  std::vector<std::size_t> p_grid{50, 200, 800};
  double threshold = 0.05;
  double epsilon = 0.5;

  double ratio() const { return static_cast<double>(p) / static_cast<double>(n); }
  ColumnModel model() const;
};

/// Throws ConfigError describing the first problem found.
ExperimentConfig parse_config(const nlohmann::json& j, Subcommand command);
ExperimentConfig load_config(const std::filesystem::path& path, Subcommand command);

/// Each command writes its files into config.output_dir (created if needed)
/// and returns the JSON summary it wrote.
nlohmann::json cmd_esd(const ExperimentConfig& config);
nlohmann::json cmd_stieltjes(const ExperimentConfig& config);
nlohmann::json cmd_check_lemma(const ExperimentConfig& config);
nlohmann::json cmd_check_conditions(const ExperimentConfig& config);
nlohmann::json run_command(const ExperimentConfig& config);

/// Exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct Histogram {
  std::vector<double> edges;   // bins + 1 entries
  std::vector<std::size_t> counts;
  double total = 0.0;          // all pooled eigenvalues, atom included
  std::size_t atom_count = 0;  // eigenvalues below kAtomThreshold
  double bin_width = 0.0;
};

inline constexpr double kAtomThreshold = 1e-8;

/// Freedman-Diaconis histogram of the pooled eigenvalues on
/// [0, upper]; eigenvalues below kAtomThreshold are counted separately.
Histogram freedman_diaconis_histogram(const std::vector<double>& pooled, double upper);

/// Loads `path`, runs the subcommand and maps failures to exit codes,
/// printing the message to stderr.
int run_subcommand(Subcommand command, const std::filesystem::path& config_path,
                   const std::optional<std::filesystem::path>& out_dir,
                   const std::optional<std::uint64_t>& seed);

}  // namespace mpspectra
