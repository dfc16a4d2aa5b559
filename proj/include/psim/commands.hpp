#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psim/orchestrator.hpp"
#include "psim/report.hpp"

namespace psim {

/// Command-line style overrides layered over a config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<bool> strategy;
  std::optional<std::string> pipeline;
  std::optional<int> parallel;
  std::optional<std::string> output_dir;
  std::optional<std::string> personas_path;
  // Replaces the endpoint of every HTTP backend, including wrapped ones.
  std::optional<std::string> endpoint;
  // Turns every replay backend strict.
  bool strict_replay = false;
};

Json apply_overrides(Json config, const ConfigOverrides& overrides);

/// Reads a JSON run config and applies the overrides. Throws Error(kIo) or
/// Error(kConfig).
RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

struct PersonasOutcome {
  std::filesystem::path path;
  std::vector<Persona> personas;
  std::map<std::string, std::size_t> per_condition;
};

/// Generates personas condition by condition, appending each finished
/// condition to the personas file so earlier ones survive a later failure.
PersonasOutcome run_personas(const RunConfig& config);

struct SimulateOutcome {
  std::filesystem::path dir;
  std::size_t requested = 0;
  std::size_t transcripts = 0;
  std::size_t aborted = 0;

  double abort_fraction() const {
    return requested == 0 ? 0.0 : static_cast<double>(aborted) / static_cast<double>(requested);
  }
};

/// Reads personas, runs every conversation and writes transcripts.jsonl,
/// aborted.jsonl and run.json into the output directory.
SimulateOutcome run_simulate(const RunConfig& config);

struct AnalyzeOutcome {
  std::vector<AnalysisResult> results;  // one per run dir
  std::optional<std::string> comparison_markdown;
  std::vector<std::filesystem::path> written;
};

/// One run: writes the analysis into `out` (default: the run dir). Two runs
/// (without strategy, then with): each run dir gets its own analysis and
/// comparison.md / comparison.csv go to `out` (default: the second dir).
AnalyzeOutcome run_analyze(const std::vector<std::filesystem::path>& run_dirs,
                           const AnalysisOptions& options, const std::filesystem::path& out = {});

}  // namespace psim
