#pragma once

// Synthetic corpora from latent interval timelines: consistent gold graphs,
// label-correlated sparse features, and biased partial masking.

#include <cstdint>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "temprel/algebra.hpp"
#include "temprel/corpus.hpp"

namespace temprel {

struct IntRange {
  int min = 0;
  int max = 0;
};

struct GenParams {
  int n_docs = 220;
  IntRange events_per_doc{6, 12};
  IntRange sentences_per_doc{3, 6};
  int window = 1;
  /// Number of distinct discriminative feature ids (split evenly by label)
  /// and size of the noise-feature id space.
  int feature_dim = 60;
  /// Discriminative features per edge, each drawn independently.
  int discriminative_features = 1;
  /// Probability that a discriminative feature encodes the gold label.
  double informativeness = 0.75;
  int noise_features = 8;
  double mask_ratio = 0.12;
  double nonvague_bias = 4.0;
  std::uint64_t seed = 1;

  // Timeline calibration: interval centres drift by `drift` grid units per
  // event around the middle of a `grid_width` grid with Gaussian jitter;
  // durations are uniform in [min_duration, max_duration]; with
  // `simultaneous_prob` an event copies its predecessor's interval. These
  // values put the in-window label mixture near 43% vague, 29% before,
  // 21% after, 7% other.
  int grid_width = 40;
  double drift = 0.5;
  double jitter = 5.0;
  int min_duration = 2;
  int max_duration = 7;
  double simultaneous_prob = 0.02;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static GenParams from_json(const nlohmann::json& j);
};

using LatentTimeline = std::vector<Interval>;

/// Fully labeled document (split Train) together with its ground truth.
std::pair<Document, LatentTimeline> gen_document(const GenParams& params, int doc_index);

/// Keeps round(rho*|E|) annotated edges sampled without replacement with
/// weight beta for non-vague and 1 for vague gold labels; keeps none when
/// rho*|E| < 1 and sets *warned. Throws std::invalid_argument unless
/// doc is full coverage.
Document mask_to_partial(const Document& doc, double rho, double beta, std::uint64_t seed,
                         bool* warned = nullptr);

struct GeneratedCorpora {
  Corpus full;     // train + dev splits, full coverage
  Corpus partial;  // masked, split train
  Corpus test;     // full coverage, split test
};

struct SplitSizes {
  int full = 0;
  int dev = 0;  // part of full
  int partial = 0;
  int test = 0;
};

/// 30/6/170/20 at n_docs = 220, scaled proportionally otherwise.
SplitSizes split_sizes(int n_docs);

GeneratedCorpora gen_corpus(const GenParams& params);

}  // namespace temprel
