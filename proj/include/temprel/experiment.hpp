#pragma once

// Run configuration and the end-to-end experiment pipeline behind the CLI.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temprel/bootstrap.hpp"
#include "temprel/evaluation.hpp"
#include "temprel/generator.hpp"

namespace temprel {

struct RunConfig {
  struct Paths {
    // Empty corpus paths mean "generate in-run from gen params".
    std::string full;
    std::string partial;
    std::string test;
    std::string model;
    std::string report;
  };

  Paths paths;
  GenParams gen;
  ConvergenceCriteria convergence;
  std::vector<int> epochs_grid{1, 3, 5, 10};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> systems{1, 2, 3, 4, 5, 6, 7, 8, 9};
  BootstrapMode test_inference = BootstrapMode::Global;
  std::uint64_t node_cap = 10'000'000;
  int jobs = 1;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// Missing keys keep defaults; unknown keys are rejected.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

/// Thread-safe sink for line-delimited run-log records; null sink drops.
class RunLog {
 public:
  RunLog() = default;
  explicit RunLog(std::ostream* out) : out_(out) {}
  void write(const nlohmann::ordered_json& record);
  bool enabled() const { return out_ != nullptr; }

 private:
  std::ostream* out_ = nullptr;
  std::mutex mu_;
};

/// Labels every candidate edge of the label-stripped documents.
std::vector<DocumentPrediction> predict_corpus(const Corpus& docs, const WeightMatrix& model,
                                               BootstrapMode inference, bool clamp_annotated,
                                               const SolverOptions& solver, RunLog* log = nullptr);

struct EvaluationResult {
  PRF same, nearby, overall, awareness;
  /// Documents whose predicted graph contradicted itself under closure;
  /// they are left out of the awareness counts.
  std::size_t awareness_skipped = 0;
};

EvaluationResult evaluate(const std::vector<DocumentPrediction>& pred, const Corpus& gold,
                          const CompositionTable& table = default_table());

struct SystemRun {
  int system_id = 0;
  std::uint64_t seed = 0;
  int chosen_epochs = 0;
  std::vector<std::pair<int, double>> dev_scores;  // (epochs, dev overall F)
  int bootstrap_iterations = 0;
  EvaluationResult metrics;
  /// Per test edge (documents then canonical edge order): label == gold.
  std::vector<bool> correctness;
  std::optional<std::string> error;
};

struct McNemarRecord {
  int system_a = 0;
  int system_b = 0;
  McNemarResult result;
};

struct ExperimentResult {
  std::vector<SystemRun> runs;      // systems x seeds, system-major
  std::vector<MetricsRow> mean_rows;
  std::vector<McNemarRecord> significance;
  bool any_failed = false;
  /// Machine-readable line-delimited report.
  std::string records;
  std::string text_report;
};

/// Runs one system for one seed: tunes epochs on the dev split of F,
/// retrains on train+dev, infers on the label-stripped test corpus.
SystemRun run_one(const RunConfig& cfg, int system_id, std::uint64_t seed, const Corpus& full,
                  const Corpus& partial, const Corpus& test, RunLog* log = nullptr);

ExperimentResult run_experiment(const RunConfig& cfg, RunLog* log = nullptr);

/// CLI entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kInternal = 1;
inline constexpr int kConfig = 2;
inline constexpr int kData = 3;
inline constexpr int kSolver = 4;
inline constexpr int kIo = 5;
}  // namespace exit_code

}  // namespace temprel
