#pragma once

// Event-graph documents, corpora, candidate-edge windows, and
// triangle-wise propagation of label domains over annotated edges.

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "temprel/algebra.hpp"
#include "temprel/edge.hpp"
#include "temprel/features.hpp"

namespace temprel {

enum class Provenance { Gold, Bootstrapped, Predicted };
enum class Coverage { Full, Partial };
enum class Split { Train, Dev, Test };

std::string_view to_string(Provenance p);
std::string_view to_string(Coverage c);
std::string_view to_string(Split s);

struct EventNode {
  int id = 0;
  int sentence = 0;
  friend bool operator==(const EventNode&, const EventNode&) = default;
};

struct EdgeRecord {
  EdgeKey key;
  std::optional<RelLabel> label;
  bool annotated = false;
  Provenance provenance = Provenance::Gold;
  FeatureVector features;
  friend bool operator==(const EdgeRecord&, const EdgeRecord&) = default;
};

struct Document {
  std::string doc_id;
  Split split = Split::Train;
  Coverage coverage = Coverage::Full;
  int window = 1;
  std::vector<EventNode> nodes;
  std::map<EdgeKey, EdgeRecord> edges;

  /// Label of (i, j) in either orientation; empty when unlabeled or absent.
  std::optional<RelLabel> label(int i, int j) const;

  std::size_t annotated_count() const;
  int sentence_distance(EdgeKey k) const;

  /// Labels of every labeled edge, annotated or not.
  LabelGraph labels() const;
  /// Labels of annotated edges only.
  LabelGraph annotations() const;

  /// Throws ValidationError on any broken document invariant.
  void validate() const;

  friend bool operator==(const Document&, const Document&) = default;
};

struct Corpus {
  std::vector<Document> documents;

  std::vector<const Document*> with_split(Split s) const;
  std::size_t annotated_edges() const;
  std::size_t total_edges() const;

  /// Throws ValidationError on duplicate doc ids or invalid documents.
  void validate() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// All pairs i < j within the sentence window, lexicographic.
std::vector<EdgeKey> candidate_edges(const Document& doc);
std::vector<EdgeKey> candidate_edges(std::span<const EventNode> nodes, int window);

/// Edges of a document plus every triangle whose three edges are present.
class ConstraintGraph {
 public:
  /// Edges i<j<k as indices into edges(): ij, jk, ik.
  struct Triangle {
    std::size_t ij, jk, ik;
  };

  explicit ConstraintGraph(std::vector<EdgeKey> edges);

  const std::vector<EdgeKey>& edges() const { return edges_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  std::span<const std::size_t> triangles_of(std::size_t edge) const {
    return incident_[edge];
  }
  std::optional<std::size_t> index_of(EdgeKey k) const;

 private:
  std::vector<EdgeKey> edges_;
  std::map<EdgeKey, std::size_t> index_;
  std::vector<Triangle> triangles_;
  std::vector<std::vector<std::size_t>> incident_;
};

/// Counters from a propagation run.
struct PropagationStats {
  std::size_t revisions = 0;
  std::size_t rounds = 0;
};

/// Narrows domains until every label of every triangle edge has support in
/// a consistent labeling of that triangle. The queue starts with
/// the given triangles (all of them when empty) in the given order. Returns
/// false when some domain became empty.
bool propagate(const ConstraintGraph& g, const CompositionTable& table,
               std::vector<LabelSet>& domains,
               std::span<const std::size_t> seed_triangles = {},
               PropagationStats* stats = nullptr);

/// Satisfaction check for a complete labeling (one label per edge).
bool satisfies_transitivity(const ConstraintGraph& g, const CompositionTable& table,
                            std::span<const RelLabel> labels);

using DomainMap = std::map<EdgeKey, LabelSet>;

/// Annotated edges start as singletons, others as the full set; returns the
/// propagation fixpoint over the document's candidate edges.
DomainMap propagate_domains(const Document& doc, const CompositionTable& table);

struct ConsistencyReport {
  bool ok = true;
  std::vector<EdgeKey> conflicts;
};

ConsistencyReport check_consistency(const Document& doc, const CompositionTable& table);

/// Line-delimited JSON: a header record, then one document per line.
Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus parse_corpus(std::string_view text);
std::string serialize_corpus(const Corpus& corpus);

}  // namespace temprel
