#pragma once

// Small builders shared by the unit tests.

#include <map>
#include <random>
#include <string>
#include <vector>

#include "temprel/corpus.hpp"

namespace testing_support {

using namespace temprel;

// Document over the candidate edges of `sentences`; edges listed in
// `labels` are annotated gold, the rest are unlabeled (partial coverage)
// unless every edge is labeled.
inline Document make_doc(const std::string& id, const std::vector<int>& sentences,
                         const std::map<EdgeKey, RelLabel>& labels = {}, int window = 1) {
  Document d;
  d.doc_id = id;
  d.window = window;
  for (std::size_t i = 0; i < sentences.size(); ++i)
    d.nodes.push_back({static_cast<int>(i), sentences[i]});
  std::size_t labeled = 0;
  for (EdgeKey k : candidate_edges(d)) {
    EdgeRecord e;
    e.key = k;
    e.features.add("pair:" + std::to_string(k.src) + "-" + std::to_string(k.dst));
    if (const auto it = labels.find(k); it != labels.end()) {
      e.label = it->second;
      e.annotated = true;
      ++labeled;
    }
    d.edges.emplace(k, e);
  }
  d.coverage = labeled == d.edges.size() ? Coverage::Full : Coverage::Partial;
  return d;
}

// Random intervals on a small grid; labels every pair via the oracle.
inline std::vector<Interval> random_timeline(std::mt19937_64& rng, int n, int grid = 10) {
  std::uniform_int_distribution<int> start(0, grid - 1);
  std::vector<Interval> out;
  for (int i = 0; i < n; ++i) {
    const int s = start(rng);
    std::uniform_int_distribution<int> end(s + 1, grid);
    out.push_back({s, end(rng)});
  }
  return out;
}

inline LabelGraph complete_graph(const std::vector<Interval>& tl) {
  LabelGraph g;
  const int n = static_cast<int>(tl.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      g.emplace(EdgeKey{i, j}, oracle_relation(tl[static_cast<std::size_t>(i)],
                                               tl[static_cast<std::size_t>(j)]));
  return g;
}

}  // namespace testing_support
