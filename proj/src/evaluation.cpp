#include "temprel/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "temprel/error.hpp"

namespace temprel {

std::string_view to_string(Bucket b) {
  switch (b) {
    case Bucket::Same: return "same";
    case Bucket::Nearby: return "nearby";
    case Bucket::Overall: return "overall";
  }
  return "?";
}

PRF make_prf(std::size_t correct, std::size_t predicted, std::size_t gold) {
  PRF m;
  if (predicted == 0) m.precision_undefined = true;
  else m.precision = static_cast<double>(correct) / static_cast<double>(predicted);
  if (gold == 0) m.recall_undefined = true;
  else m.recall = static_cast<double>(correct) / static_cast<double>(gold);
  const double s = m.precision + m.recall;
  m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
  return m;
}

void ConfusionCounts::merge(const ConfusionCounts& o) {
  for (std::size_t b = 0; b < buckets.size(); ++b) {
    buckets[b].edges += o.buckets[b].edges;
    buckets[b].predicted += o.buckets[b].predicted;
    buckets[b].gold += o.buckets[b].gold;
    buckets[b].correct += o.buckets[b].correct;
  }
  for (std::size_t g = 0; g < kNumLabels; ++g)
    for (std::size_t p = 0; p < kNumLabels; ++p) matrix[g][p] += o.matrix[g][p];
}

namespace {

std::map<std::string, const DocumentPrediction*> index_predictions(
    const std::vector<DocumentPrediction>& pred) {
  std::map<std::string, const DocumentPrediction*> out;
  for (const auto& p : pred)
    if (!out.emplace(p.doc_id, &p).second)
      throw DataError("duplicate prediction for document '" + p.doc_id + "'");
  return out;
}

}  // namespace

ConfusionCounts count_pairwise(const std::vector<DocumentPrediction>& pred, const Corpus& gold) {
  const auto by_id = index_predictions(pred);
  if (by_id.size() != gold.documents.size())
    throw DataError("prediction/gold coverage mismatch: document counts differ");
  ConfusionCounts cc;
  for (const auto& doc : gold.documents) {
    const auto it = by_id.find(doc.doc_id);
    if (it == by_id.end())
      throw DataError("prediction/gold coverage mismatch: no prediction for '" + doc.doc_id + "'");
    const LabelGraph& p = it->second->labels;
    if (p.size() != doc.edges.size())
      throw DataError("prediction/gold coverage mismatch in '" + doc.doc_id + "'");
    for (const auto& [k, e] : doc.edges) {
      const auto pit = p.find(k);
      if (pit == p.end())
        throw DataError("prediction/gold coverage mismatch: '" + doc.doc_id + "' lacks " +
                        to_string(k));
      if (!e.label) throw DataError("gold edge " + to_string(k) + " in '" + doc.doc_id +
                                    "' is unlabeled");
      const RelLabel g = *e.label, pr = pit->second;
      const std::size_t bucket =
          doc.sentence_distance(k) == 0 ? static_cast<std::size_t>(Bucket::Same)
                                        : static_cast<std::size_t>(Bucket::Nearby);
      for (std::size_t b : {bucket, static_cast<std::size_t>(Bucket::Overall)}) {
        auto& bc = cc.buckets[b];
        ++bc.edges;
        if (is_definite(pr)) ++bc.predicted;
        if (is_definite(g)) ++bc.gold;
        if (is_definite(g) && g == pr) ++bc.correct;
      }
      ++cc.matrix[label_index(g)][label_index(pr)];
    }
  }
  return cc;
}

PRF pairwise_prf(const std::vector<DocumentPrediction>& pred, const Corpus& gold, Bucket b) {
  const BucketCounts& c = count_pairwise(pred, gold).at(b);
  return make_prf(c.correct, c.predicted, c.gold);
}

// ------------------------------------------------------------- awareness

namespace {

// Dense n x n relation matrix over definite labels, both orientations.
class RelationMatrix {
 public:
  RelationMatrix(const LabelGraph& g, int n) : n_(n), cells_(static_cast<std::size_t>(n * n)) {
    for (const auto& [k, r] : g) {
      if (k.src < 0 || k.dst >= n || k.src >= k.dst)
        throw std::invalid_argument("closure: edge " + to_string(k) + " outside the node range");
      if (is_definite(r)) set(k.src, k.dst, r);
    }
  }

  std::optional<RelLabel> get(int i, int j) const {
    return cells_[static_cast<std::size_t>(i * n_ + j)];
  }
  void set(int i, int j, RelLabel r) {
    cells_[static_cast<std::size_t>(i * n_ + j)] = r;
    cells_[static_cast<std::size_t>(j * n_ + i)] = inverse(r);
  }

  void close(const CompositionTable& table) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < n_; ++i) {
        for (int k = i + 1; k < n_; ++k) {
          for (int j = 0; j < n_; ++j) {
            if (j == i || j == k) continue;
            const auto ij = get(i, j), jk = get(j, k);
            if (!ij || !jk) continue;
            const LabelSet allowed = table.compose(*ij, *jk);
            const auto cur = get(i, k);
            if (cur) {
              if (!allowed.contains(*cur))
                throw InconsistentGraphError("closure: contradiction on " +
                                             to_string(EdgeKey{i, k}));
              continue;
            }
            const auto forced = allowed.single();
            if (forced && is_definite(*forced)) {
              set(i, k, *forced);
              changed = true;
            }
          }
        }
      }
    }
  }

  LabelGraph to_graph() const {
    LabelGraph g;
    for (int i = 0; i < n_; ++i)
      for (int k = i + 1; k < n_; ++k)
        if (const auto r = get(i, k)) g.emplace(EdgeKey{i, k}, *r);
    return g;
  }

 private:
  int n_;
  std::vector<std::optional<RelLabel>> cells_;
};

std::size_t matched(const LabelGraph& edges, const LabelGraph& reference) {
  std::size_t m = 0;
  for (const auto& [k, r] : edges) {
    const auto it = reference.find(k);
    if (it != reference.end() && it->second == r) ++m;
  }
  return m;
}

}  // namespace

LabelGraph closure(const LabelGraph& g, int n_nodes, const CompositionTable& table) {
  RelationMatrix m(g, n_nodes);
  m.close(table);
  return m.to_graph();
}

LabelGraph reduce(const LabelGraph& g, int n_nodes, const CompositionTable& table) {
  LabelGraph current = closure(g, n_nodes, table);
  const std::vector<std::pair<EdgeKey, RelLabel>> order(current.begin(), current.end());
  for (const auto& [k, r] : order) {
    LabelGraph without = current;
    without.erase(k);
    const LabelGraph c = closure(without, n_nodes, table);
    const auto it = c.find(k);
    if (it != c.end() && it->second == r) current = std::move(without);
  }
  return current;
}

void AwarenessCounts::merge(const AwarenessCounts& o) {
  pred_reduced += o.pred_reduced;
  pred_matched += o.pred_matched;
  gold_reduced += o.gold_reduced;
  gold_matched += o.gold_matched;
}

PRF AwarenessCounts::prf() const {
  PRF m;
  if (pred_reduced == 0) m.precision_undefined = true;
  else m.precision = static_cast<double>(pred_matched) / static_cast<double>(pred_reduced);
  if (gold_reduced == 0) m.recall_undefined = true;
  else m.recall = static_cast<double>(gold_matched) / static_cast<double>(gold_reduced);
  const double s = m.precision + m.recall;
  m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
  return m;
}

AwarenessCounts awareness_counts(const LabelGraph& pred, const LabelGraph& gold, int n_nodes,
                                 const CompositionTable& table) {
  const LabelGraph pred_closed = closure(pred, n_nodes, table);
  const LabelGraph gold_closed = closure(gold, n_nodes, table);
  const LabelGraph pred_reduced = reduce(pred, n_nodes, table);
  const LabelGraph gold_reduced = reduce(gold, n_nodes, table);
  AwarenessCounts c;
  c.pred_reduced = pred_reduced.size();
  c.pred_matched = matched(pred_reduced, gold_closed);
  c.gold_reduced = gold_reduced.size();
  c.gold_matched = matched(gold_reduced, pred_closed);
  return c;
}

PRF temporal_awareness(const LabelGraph& pred, const LabelGraph& gold, int n_nodes,
                       const CompositionTable& table) {
  return awareness_counts(pred, gold, n_nodes, table).prf();
}

PRF temporal_awareness(const std::vector<DocumentPrediction>& pred, const Corpus& gold,
                       const CompositionTable& table) {
  const auto by_id = index_predictions(pred);
  AwarenessCounts total;
  for (const auto& doc : gold.documents) {
    const auto it = by_id.find(doc.doc_id);
    if (it == by_id.end())
      throw DataError("prediction/gold coverage mismatch: no prediction for '" + doc.doc_id + "'");
    total.merge(awareness_counts(it->second->labels, doc.labels(),
                                 static_cast<int>(doc.nodes.size()), table));
  }
  return total.prf();
}

// --------------------------------------------------------------- McNemar

double chi_square1_sf(double x) {
  if (x <= 0.0) return 1.0;
  return std::erfc(std::sqrt(x / 2.0));
}

McNemarResult mcnemar(const PairedCorrectness& pc) {
  if (pc.a.size() != pc.b.size())
    throw std::invalid_argument("mcnemar: correctness vectors differ in length");
  McNemarResult r;
  for (std::size_t i = 0; i < pc.a.size(); ++i) {
    if (pc.a[i] && !pc.b[i]) ++r.a_only;
    if (!pc.a[i] && pc.b[i]) ++r.b_only;
  }
  const std::size_t n = r.a_only + r.b_only;
  if (n == 0) return r;
  const double diff =
      std::abs(static_cast<double>(r.a_only) - static_cast<double>(r.b_only)) - 1.0;
  r.statistic = diff * diff / static_cast<double>(n);
  r.p_value = chi_square1_sf(r.statistic);
  return r;
}

// ---------------------------------------------------------------- report

std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", fraction * 100.0);
  return buf;
}

std::string render_report(const std::vector<MetricsRow>& rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-4s %-20s | %-17s | %-17s | %-17s | %-17s\n", "No.",
                "Training", "Same Sentence", "Nearby Sentence", "Overall", "Awareness");
  out += buf;
  std::snprintf(buf, sizeof buf, "%-4s %-20s |", "", "");
  out += buf;
  for (int g = 0; g < 4; ++g) out += "   P     R     F   |";
  out.pop_back();
  out += '\n';
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-4d %-20s |", r.system_id, r.description.c_str());
    out += buf;
    for (const PRF* m : {&r.same, &r.nearby, &r.overall, &r.awareness}) {
      std::snprintf(buf, sizeof buf, " %5s %5s %5s |", format_percent(m->precision).c_str(),
                    format_percent(m->recall).c_str(), format_percent(m->f1).c_str());
      out += buf;
    }
    out.pop_back();
    out += '\n';
  }
  return out;
}

std::string report_records(const std::vector<MetricsRow>& rows) {
  std::string out;
  for (const auto& r : rows) {
    const std::pair<const char*, const PRF*> groups[] = {
        {"same", &r.same}, {"nearby", &r.nearby}, {"overall", &r.overall},
        {"awareness", &r.awareness}};
    for (const auto& [name, m] : groups) {
      nlohmann::ordered_json j{{"system_id", r.system_id},
                               {"bucket", name},
                               {"P", m->precision},
                               {"R", m->recall},
                               {"F", m->f1}};
      out += j.dump();
      out += '\n';
    }
  }
  return out;
}

}  // namespace temprel
