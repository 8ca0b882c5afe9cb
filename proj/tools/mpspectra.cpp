// mpspectra: Marchenko-Pastur spectral experiments from a JSON config.
//
//   mpspectra <esd|stieltjes|check-lemma|check-conditions> --config <path>
//             [--out <dir>] [--seed <u64>]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mpspectra/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Marchenko-Pastur spectral laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;

  for (const char* name : {"esd", "stieltjes", "check-lemma", "check-conditions"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Single seed (overrides seeds)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : mpspectra::kExitConfig;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const auto command = mpspectra::parse_subcommand(chosen->get_name());
  std::optional<std::filesystem::path> out;
  if (chosen->count("--out") > 0) out = out_dir;
  std::optional<std::uint64_t> seed_override;
  if (chosen->count("--seed") > 0) seed_override = seed;

  return mpspectra::run_subcommand(*command, config_path, out, seed_override);
}
