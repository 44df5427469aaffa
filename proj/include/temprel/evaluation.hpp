#pragma once

// Pairwise precision/recall by sentence-distance bucket, closure/reduction
// based temporal awareness, McNemar's test, and report rendering.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "temprel/algebra.hpp"
#include "temprel/corpus.hpp"

namespace temprel {

enum class Bucket { Same = 0, Nearby = 1, Overall = 2 };
std::string_view to_string(Bucket b);

/// Precision/recall/F1 in [0, 1]. An empty denominator yields 0 and sets
/// the matching *_undefined flag.
struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

PRF make_prf(std::size_t correct, std::size_t predicted, std::size_t gold);

struct BucketCounts {
  std::size_t edges = 0;
  std::size_t predicted = 0;  // non-vague predictions
  std::size_t gold = 0;       // non-vague gold labels
  std::size_t correct = 0;    // equal non-vague labels
};

struct ConfusionCounts {
  std::array<BucketCounts, 3> buckets{};
  /// matrix[gold][predicted]
  std::array<std::array<std::size_t, kNumLabels>, kNumLabels> matrix{};

  const BucketCounts& at(Bucket b) const { return buckets[static_cast<std::size_t>(b)]; }
  void merge(const ConfusionCounts& o);
};

struct DocumentPrediction {
  std::string doc_id;
  LabelGraph labels;
};

/// Throws DataError when predictions do not cover exactly the gold edges.
ConfusionCounts count_pairwise(const std::vector<DocumentPrediction>& pred, const Corpus& gold);
PRF pairwise_prf(const std::vector<DocumentPrediction>& pred, const Corpus& gold, Bucket b);

/// Definite edges plus every pair whose label is forced to a single
/// definite label by composing two definite edges, to a fixpoint. Vague
/// edges are dropped. Throws InconsistentGraphError on a contradiction.
LabelGraph closure(const LabelGraph& g, int n_nodes, const CompositionTable& table);

/// Greedy reduction of closure(g): visiting edges in canonical order, drop
/// an edge when the closure of the remaining edges still forces its label.
LabelGraph reduce(const LabelGraph& g, int n_nodes, const CompositionTable& table);

struct AwarenessCounts {
  std::size_t pred_reduced = 0;
  std::size_t pred_matched = 0;
  std::size_t gold_reduced = 0;
  std::size_t gold_matched = 0;

  void merge(const AwarenessCounts& o);
  PRF prf() const;
};

AwarenessCounts awareness_counts(const LabelGraph& pred, const LabelGraph& gold, int n_nodes,
                                 const CompositionTable& table);
PRF temporal_awareness(const LabelGraph& pred, const LabelGraph& gold, int n_nodes,
                       const CompositionTable& table);
/// Micro-averaged over documents.
PRF temporal_awareness(const std::vector<DocumentPrediction>& pred, const Corpus& gold,
                       const CompositionTable& table);

/// Per-edge correctness of systems A and B on the same edges.
struct PairedCorrectness {
  std::vector<bool> a;
  std::vector<bool> b;
};

struct McNemarResult {
  std::size_t a_only = 0;  // A correct, B wrong
  std::size_t b_only = 0;  // A wrong, B correct
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Upper tail of the chi-square distribution with one degree of freedom.
double chi_square1_sf(double x);

/// Continuity-corrected McNemar test. Throws std::invalid_argument on
/// length mismatch.
McNemarResult mcnemar(const PairedCorrectness& pc);

struct MetricsRow {
  int system_id = 0;
  std::string description;
  PRF same, nearby, overall, awareness;
};

/// Fixed-width table, P/R/F in percent to one decimal.
std::string render_report(const std::vector<MetricsRow>& rows);
/// One JSON line per (row, bucket): {system_id, bucket, P, R, F}.
std::string report_records(const std::vector<MetricsRow>& rows);

/// "49.0" for 0.4904.
std::string format_percent(double fraction);

}  // namespace temprel
