#include "temprel/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "temprel/error.hpp"

namespace temprel {

using json = nlohmann::ordered_json;

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(std::string_view name,
                               const std::array<std::string_view, N>& names) {
  for (std::size_t i = 0; i < N; ++i)
    if (names[i] == name) return static_cast<Enum>(i);
  return std::nullopt;
}

constexpr std::array<std::string_view, 3> kProvenanceNames = {"gold", "bootstrapped",
                                                              "predicted"};
constexpr std::array<std::string_view, 2> kCoverageNames = {"full", "partial"};
constexpr std::array<std::string_view, 3> kSplitNames = {"train", "dev", "test"};

constexpr std::string_view kFormatName = "temprel-corpus";
constexpr int kFormatVersion = 1;

}  // namespace

std::string_view to_string(Provenance p) { return kProvenanceNames[static_cast<int>(p)]; }
std::string_view to_string(Coverage c) { return kCoverageNames[static_cast<int>(c)]; }
std::string_view to_string(Split s) { return kSplitNames[static_cast<int>(s)]; }

// ---------------------------------------------------------------- Document

std::optional<RelLabel> Document::label(int i, int j) const {
  const bool flip = i > j;
  const auto it = edges.find(flip ? EdgeKey{j, i} : EdgeKey{i, j});
  if (it == edges.end() || !it->second.label) return std::nullopt;
  return flip ? inverse(*it->second.label) : *it->second.label;
}

std::size_t Document::annotated_count() const {
  return static_cast<std::size_t>(std::count_if(
      edges.begin(), edges.end(), [](const auto& kv) { return kv.second.annotated; }));
}

int Document::sentence_distance(EdgeKey k) const {
  return std::abs(nodes.at(static_cast<std::size_t>(k.dst)).sentence -
                  nodes.at(static_cast<std::size_t>(k.src)).sentence);
}

LabelGraph Document::labels() const {
  LabelGraph g;
  for (const auto& [k, e] : edges)
    if (e.label) g.emplace(k, *e.label);
  return g;
}

LabelGraph Document::annotations() const {
  LabelGraph g;
  for (const auto& [k, e] : edges)
    if (e.annotated) g.emplace(k, *e.label);
  return g;
}

void Document::validate() const {
  const auto fail = [&](const std::string& msg) {
    throw ValidationError("document '" + doc_id + "': " + msg);
  };
  if (doc_id.empty()) fail("empty doc_id");
  if (window < 0) fail("negative window");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != static_cast<int>(i)) fail("event ids must be dense 0..n-1");
    if (nodes[i].sentence < 0) fail("negative sentence index");
    if (i > 0 && nodes[i].sentence < nodes[i - 1].sentence)
      fail("sentence indices must be non-decreasing in id order");
  }
  const std::vector<EdgeKey> expected = candidate_edges(*this);
  if (expected.size() != edges.size()) fail("edge set differs from the candidate window");
  std::size_t i = 0;
  for (const auto& [k, e] : edges) {
    if (!(k == e.key)) fail("edge key mismatch at " + to_string(k));
    if (k.src >= k.dst) fail("non-canonical edge " + to_string(k));
    if (!(k == expected[i++])) fail("edge " + to_string(k) + " outside the candidate window");
    if (e.annotated && (!e.label || e.provenance != Provenance::Gold))
      fail("annotated edge " + to_string(k) + " must carry a gold label");
    if (coverage == Coverage::Full && !e.label)
      fail("full-coverage document has unlabeled edge " + to_string(k));
    if (coverage == Coverage::Partial && !e.annotated && e.label)
      fail("partial document has a non-annotated label on " + to_string(k));
  }
}

std::vector<const Document*> Corpus::with_split(Split s) const {
  std::vector<const Document*> out;
  for (const auto& d : documents)
    if (d.split == s) out.push_back(&d);
  return out;
}

std::size_t Corpus::annotated_edges() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.annotated_count();
  return n;
}

std::size_t Corpus::total_edges() const {
  std::size_t n = 0;
  for (const auto& d : documents) n += d.edges.size();
  return n;
}

void Corpus::validate() const {
  std::set<std::string> seen;
  for (const auto& d : documents) {
    if (!seen.insert(d.doc_id).second)
      throw ValidationError("duplicate doc_id '" + d.doc_id + "'");
    d.validate();
  }
}

// ---------------------------------------------------------- candidate edges

std::vector<EdgeKey> candidate_edges(std::span<const EventNode> nodes, int window) {
  std::vector<EdgeKey> out;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (std::abs(nodes[j].sentence - nodes[i].sentence) <= window)
        out.push_back({static_cast<int>(i), static_cast<int>(j)});
  return out;
}

std::vector<EdgeKey> candidate_edges(const Document& doc) {
  return candidate_edges(doc.nodes, doc.window);
}

// --------------------------------------------------------- ConstraintGraph

ConstraintGraph::ConstraintGraph(std::vector<EdgeKey> edges) : edges_(std::move(edges)) {
  for (std::size_t i = 0; i < edges_.size(); ++i) index_.emplace(edges_[i], i);
  incident_.resize(edges_.size());

  // Adjacency of each event to its higher-numbered neighbours.
  std::map<int, std::vector<std::pair<int, std::size_t>>> forward;
  for (std::size_t e = 0; e < edges_.size(); ++e)
    forward[edges_[e].src].push_back({edges_[e].dst, e});
  for (auto& [_, v] : forward) std::sort(v.begin(), v.end());

  for (auto& [i, outs] : forward) {
    for (auto [j, ij] : outs) {
      const auto fj = forward.find(j);
      if (fj == forward.end()) continue;
      for (auto [k, jk] : fj->second) {
        const auto ik = index_.find({i, k});
        if (ik == index_.end()) continue;
        const std::size_t t = triangles_.size();
        triangles_.push_back({ij, jk, ik->second});
        incident_[ij].push_back(t);
        incident_[jk].push_back(t);
        incident_[ik->second].push_back(t);
      }
    }
  }
}

std::optional<std::size_t> ConstraintGraph::index_of(EdgeKey k) const {
  const auto it = index_.find(k);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool propagate(const ConstraintGraph& g, const CompositionTable& table,
               std::vector<LabelSet>& domains, std::span<const std::size_t> seed_triangles,
               PropagationStats* stats) {
  const auto& tris = g.triangles();
  std::vector<std::size_t> queue;
  std::vector<char> queued(tris.size(), 0);
  if (seed_triangles.empty()) {
    queue.resize(tris.size());
    std::iota(queue.begin(), queue.end(), std::size_t{0});
    std::fill(queued.begin(), queued.end(), 1);
  } else {
    for (std::size_t t : seed_triangles)
      if (!queued[t]) {
        queued[t] = 1;
        queue.push_back(t);
      }
  }

  bool consistent = true;
  std::size_t head = 0;
  std::size_t revisions = 0;
  const auto narrow = [&](std::size_t edge, LabelSet allowed) {
    const LabelSet next = domains[edge] & allowed;
    if (next == domains[edge]) return;
    domains[edge] = next;
    if (next.empty()) consistent = false;
    for (std::size_t t : g.triangles_of(edge))
      if (!queued[t]) {
        queued[t] = 1;
        queue.push_back(t);
      }
  };

  while (head < queue.size()) {
    const std::size_t t = queue[head++];
    queued[t] = 0;
    ++revisions;
    const auto& tri = tris[t];
    // Keep only labels that appear in some fully consistent triangle.
    const LabelSet dik = domains[tri.ik];
    LabelSet sij, sjk, sik;
    for (RelLabel a : kAllLabels) {
      if (!domains[tri.ij].contains(a)) continue;
      for (RelLabel b : kAllLabels) {
        if (!domains[tri.jk].contains(b)) continue;
        const LabelSet c = table.closing(a, b) & dik;
        if (c.empty()) continue;
        sij.insert(a);
        sjk.insert(b);
        sik |= c;
      }
    }
    narrow(tri.ij, sij);
    narrow(tri.jk, sjk);
    narrow(tri.ik, sik);
    // Compact the queue once the consumed prefix dominates.
    if (head > 4096 && head * 2 > queue.size()) {
      queue.erase(queue.begin(), queue.begin() + static_cast<std::ptrdiff_t>(head));
      head = 0;
    }
  }
  if (stats) {
    stats->revisions += revisions;
    stats->rounds += 1;
  }
  return consistent;
}

bool satisfies_transitivity(const ConstraintGraph& g, const CompositionTable& table,
                            std::span<const RelLabel> labels) {
  for (const auto& t : g.triangles()) {
    const RelLabel ij = labels[t.ij], jk = labels[t.jk], ik = labels[t.ik];
    if (!table.closing(ij, jk).contains(ik)) return false;
  }
  return true;
}

DomainMap propagate_domains(const Document& doc, const CompositionTable& table) {
  const ConstraintGraph g(candidate_edges(doc));
  std::vector<LabelSet> domains(g.edges().size(), LabelSet::full());
  for (std::size_t e = 0; e < g.edges().size(); ++e) {
    const auto it = doc.edges.find(g.edges()[e]);
    if (it != doc.edges.end() && it->second.annotated)
      domains[e] = LabelSet::of(*it->second.label);
  }
  propagate(g, table, domains);
  DomainMap out;
  for (std::size_t e = 0; e < g.edges().size(); ++e) out.emplace(g.edges()[e], domains[e]);
  return out;
}

ConsistencyReport check_consistency(const Document& doc, const CompositionTable& table) {
  ConsistencyReport report;
  for (const auto& [k, d] : propagate_domains(doc, table))
    if (d.empty()) report.conflicts.push_back(k);
  report.ok = report.conflicts.empty();
  return report;
}

// --------------------------------------------------------------------- I/O

namespace {

json document_to_json(const Document& d) {
  json events = json::array();
  for (const auto& n : d.nodes) events.push_back({{"id", n.id}, {"sentence", n.sentence}});
  json edges = json::array();
  for (const auto& [k, e] : d.edges) {
    json je;
    je["src"] = k.src;
    je["dst"] = k.dst;
    if (e.label) je["label"] = std::string(to_string(*e.label));
    je["annotated"] = e.annotated;
    if (e.label && !e.annotated) je["provenance"] = std::string(to_string(e.provenance));
    je["features"] = e.features.names();
    edges.push_back(std::move(je));
  }
  json j;
  j["doc_id"] = d.doc_id;
  j["split"] = std::string(to_string(d.split));
  j["coverage"] = std::string(to_string(d.coverage));
  j["window"] = d.window;
  j["events"] = std::move(events);
  j["edges"] = std::move(edges);
  return j;
}

template <typename T>
T field(const json& j, const char* name, std::size_t line) {
  const auto it = j.find(name);
  if (it == j.end()) throw DataError(std::string("missing field '") + name + "'", line);
  try {
    return it->template get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("field '") + name + "' has the wrong type", line);
  }
}

Document document_from_json(const json& j, std::size_t line) {
  if (!j.is_object()) throw DataError("document record must be an object", line);
  Document d;
  d.doc_id = field<std::string>(j, "doc_id", line);

  const auto split = parse_enum<Split>(field<std::string>(j, "split", line), kSplitNames);
  if (!split) throw ValidationError("unknown split", line);
  d.split = *split;
  const auto cov =
      parse_enum<Coverage>(field<std::string>(j, "coverage", line), kCoverageNames);
  if (!cov) throw ValidationError("unknown coverage", line);
  d.coverage = *cov;
  d.window = field<int>(j, "window", line);

  const auto events = field<json>(j, "events", line);
  if (!events.is_array()) throw DataError("'events' must be an array", line);
  for (const auto& ev : events)
    d.nodes.push_back({field<int>(ev, "id", line), field<int>(ev, "sentence", line)});

  const auto edges = field<json>(j, "edges", line);
  if (!edges.is_array()) throw DataError("'edges' must be an array", line);
  for (const auto& je : edges) {
    EdgeRecord e;
    e.key = {field<int>(je, "src", line), field<int>(je, "dst", line)};
    if (e.key.src >= e.key.dst)
      throw ValidationError("non-canonical edge orientation " + to_string(e.key), line);
    if (const auto it = je.find("label"); it != je.end()) {
      if (!it->is_string()) throw DataError("'label' must be a string", line);
      const auto lab = parse_label(it->get<std::string>());
      if (!lab) throw ValidationError("unknown label '" + it->get<std::string>() + "'", line);
      e.label = *lab;
    }
    e.annotated = field<bool>(je, "annotated", line);
    if (e.annotated) {
      e.provenance = Provenance::Gold;
    } else if (const auto it = je.find("provenance"); it != je.end()) {
      const auto p = it->is_string()
                         ? parse_enum<Provenance>(it->get<std::string>(), kProvenanceNames)
                         : std::nullopt;
      if (!p) throw ValidationError("unknown provenance", line);
      e.provenance = *p;
    } else if (e.label) {
      e.provenance = Provenance::Bootstrapped;
    }
    const auto names = field<std::vector<std::string>>(je, "features", line);
    e.features = FeatureVector::from_names(names);
    if (!d.edges.emplace(e.key, std::move(e)).second)
      throw ValidationError("duplicate edge", line);
  }
  try {
    d.validate();
  } catch (const ValidationError& err) {
    throw ValidationError(err.what(), line);
  }
  return d;
}

}  // namespace

Corpus parse_corpus(std::string_view text) {
  Corpus corpus;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  bool have_header = false;
  std::set<std::string> ids;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw DataError(std::string("malformed JSON: ") + e.what(), line);
    }
    if (!have_header) {
      if (!j.is_object() || j.value("format", "") != kFormatName)
        throw DataError("missing corpus header record", line);
      if (j.value("version", 0) != kFormatVersion)
        throw DataError("unsupported corpus version", line);
      have_header = true;
      continue;
    }
    Document d = document_from_json(j, line);
    if (!ids.insert(d.doc_id).second)
      throw ValidationError("duplicate doc_id '" + d.doc_id + "'", line);
    corpus.documents.push_back(std::move(d));
  }
  if (!have_header) throw DataError("empty corpus file (no header record)", 1);
  return corpus;
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out = json{{"format", kFormatName}, {"version", kFormatVersion}}.dump();
  out += '\n';
  for (const auto& d : corpus.documents) {
    out += document_to_json(d).dump();
    out += '\n';
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write corpus file " + path.string());
  out << serialize_corpus(corpus);
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace temprel
