#pragma once

// Joint learning from fully and partially annotated corpora: the union
// baselines, standard (local) and constrained (global) bootstrapping, and
// the nine-system experiment matrix built from them.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "temprel/corpus.hpp"
#include "temprel/inference.hpp"
#include "temprel/learner.hpp"

namespace temprel {

enum class TrainingData { F, PFull, P, FPlusPFull, FPlusP };
enum class BootstrapMode { None, Local, Global };
enum class PVariant { AsIs, FilledVague, Emptied };

std::string_view to_string(BootstrapMode m);

struct SystemConfig {
  int id = 1;
  TrainingData data = TrainingData::F;
  BootstrapMode mode = BootstrapMode::None;
  PVariant p_variant = PVariant::AsIs;

  /// Rows 1..9; throws ConfigError otherwise.
  static SystemConfig from_id(int id);
  /// Short description, e.g. "F+P^Empty / Global".
  std::string describe() const;
};

struct ConvergenceCriteria {
  int max_iterations = 10;
  double change_threshold = 0.01;
};

struct IterationRecord {
  int iteration = 0;
  double changed_fraction = 0.0;
  std::size_t train_examples = 0;
  std::size_t local_fallbacks = 0;
  double wall_time = 0.0;
};

struct TrainedSystem {
  WeightMatrix model;
  std::vector<double> change_fractions;
  int iterations = 0;
  std::vector<IterationRecord> log;
};

struct LearnOptions {
  int epochs = 5;
  std::uint64_t seed = 0;
  SolverOptions solver;
  const CompositionTable* table = &default_table();
  /// Called after every loop iteration.
  std::function<void(const IterationRecord&)> on_iteration;
  /// Diagnostics (inconsistent partial documents, ...).
  std::function<void(const std::string&)> warn;
};

/// Every unannotated edge becomes a bootstrapped vague label; coverage
/// becomes full. Throws std::invalid_argument for full-coverage input.
Document fill_vague(const Document& p);

/// Removes every label; nodes and features are kept, coverage is partial.
Document strip_annotations(const Document& p);

Corpus fill_vague(const Corpus& p);
Corpus strip_annotations(const Corpus& p);

/// Training pairs for every labeled edge of the given documents.
std::vector<TrainingExample> labeled_examples(const Corpus& c);

/// Fills the missing edges of p with the current model, keeping annotated
/// edges. Global mode falls back to local for inconsistent documents and
/// reports that through the returned flag.
struct FilledDocument {
  std::vector<EdgeKey> edges;
  std::vector<RelLabel> labels;
  bool local_fallback = false;
};
FilledDocument fill_document(const Document& p, const WeightMatrix& model, BootstrapMode mode,
                             const LearnOptions& opts);

/// Learn on F, then alternate inference on P and re-learning on F plus the
/// filled P until the changed fraction drops below the threshold or the
/// iteration cap is reached. Throws std::invalid_argument when F has no
/// labeled edges.
TrainedSystem bootstrap(const Corpus& f, const Corpus& p, BootstrapMode mode,
                        const ConvergenceCriteria& criteria, const LearnOptions& opts);

/// Applies the configured P transform, then trains on the union (rows 1-5)
/// or bootstraps (rows 6-9).
TrainedSystem run_system(const SystemConfig& cfg, const Corpus& f, const Corpus& p,
                         const ConvergenceCriteria& criteria, const LearnOptions& opts);

}  // namespace temprel
