#include "temprel/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>

#include "temprel/error.hpp"

namespace temprel {

namespace {

// Independent stream per (seed, document, purpose).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    purpose};
  return std::mt19937_64(seq);
}

constexpr std::uint32_t kTimelineStream = 1;
constexpr std::uint32_t kMaskStream = 2;

std::string doc_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "doc-%04d", index);
  return buf;
}

}  // namespace

void GenParams::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigError("gen params: " + m); };
  if (n_docs < 0) fail("n_docs must be >= 0");
  if (events_per_doc.min < 1 || events_per_doc.max < events_per_doc.min)
    fail("events_per_doc range is empty");
  if (sentences_per_doc.min < 1 || sentences_per_doc.max < sentences_per_doc.min)
    fail("sentences_per_doc range is empty");
  if (window < 0) fail("window must be >= 0");
  if (feature_dim < static_cast<int>(kNumLabels)) fail("feature_dim must be >= 6");
  if (discriminative_features < 1) fail("discriminative_features must be >= 1");
  if (!(informativeness >= 0.0 && informativeness <= 1.0)) fail("informativeness outside [0,1]");
  if (noise_features < 0) fail("noise_features must be >= 0");
  if (!(mask_ratio >= 0.0 && mask_ratio <= 1.0)) fail("mask_ratio outside [0,1]");
  if (!(nonvague_bias >= 1.0)) fail("nonvague_bias must be >= 1");
  if (grid_width < 2) fail("grid_width must be >= 2");
  if (min_duration < 1 || max_duration < min_duration) fail("duration range is empty");
  if (!(jitter >= 0.0)) fail("jitter must be >= 0");
  if (!(simultaneous_prob >= 0.0 && simultaneous_prob <= 1.0))
    fail("simultaneous_prob outside [0,1]");
}

nlohmann::ordered_json GenParams::to_json() const {
  return {{"n_docs", n_docs},
          {"events_per_doc", {events_per_doc.min, events_per_doc.max}},
          {"sentences_per_doc", {sentences_per_doc.min, sentences_per_doc.max}},
          {"window", window},
          {"feature_dim", feature_dim},
          {"discriminative_features", discriminative_features},
          {"informativeness", informativeness},
          {"noise_features", noise_features},
          {"mask_ratio", mask_ratio},
          {"nonvague_bias", nonvague_bias},
          {"seed", seed},
          {"grid_width", grid_width},
          {"drift", drift},
          {"jitter", jitter},
          {"min_duration", min_duration},
          {"max_duration", max_duration},
          {"simultaneous_prob", simultaneous_prob}};
}

GenParams GenParams::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("gen params must be an object");
  GenParams p;
  const auto range = [](const nlohmann::json& v, const char* key) {
    if (!v.is_array() || v.size() != 2) throw ConfigError(std::string(key) + " must be [min, max]");
    return IntRange{v[0].get<int>(), v[1].get<int>()};
  };
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "n_docs") p.n_docs = v.get<int>();
      else if (key == "events_per_doc") p.events_per_doc = range(v, "events_per_doc");
      else if (key == "sentences_per_doc") p.sentences_per_doc = range(v, "sentences_per_doc");
      else if (key == "window") p.window = v.get<int>();
      else if (key == "feature_dim") p.feature_dim = v.get<int>();
      else if (key == "discriminative_features") p.discriminative_features = v.get<int>();
      else if (key == "informativeness") p.informativeness = v.get<double>();
      else if (key == "noise_features") p.noise_features = v.get<int>();
      else if (key == "mask_ratio") p.mask_ratio = v.get<double>();
      else if (key == "nonvague_bias") p.nonvague_bias = v.get<double>();
      else if (key == "seed") p.seed = v.get<std::uint64_t>();
      else if (key == "grid_width") p.grid_width = v.get<int>();
      else if (key == "drift") p.drift = v.get<double>();
      else if (key == "jitter") p.jitter = v.get<double>();
      else if (key == "min_duration") p.min_duration = v.get<int>();
      else if (key == "max_duration") p.max_duration = v.get<int>();
      else if (key == "simultaneous_prob") p.simultaneous_prob = v.get<double>();
      else throw ConfigError("gen params: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("gen params: ") + e.what());
  }
  p.validate();
  return p;
}

std::pair<Document, LatentTimeline> gen_document(const GenParams& params, int doc_index) {
  auto rng = stream(params.seed, static_cast<std::uint64_t>(doc_index), kTimelineStream);
  std::uniform_int_distribution<int> n_events(params.events_per_doc.min, params.events_per_doc.max);
  std::uniform_int_distribution<int> n_sents(params.sentences_per_doc.min,
                                             params.sentences_per_doc.max);
  const int n = n_events(rng);
  const int m = n_sents(rng);

  std::uniform_int_distribution<int> sentence_of(0, m - 1);
  std::vector<int> sentences(static_cast<std::size_t>(n));
  for (int& s : sentences) s = sentence_of(rng);
  std::sort(sentences.begin(), sentences.end());

  Document doc;
  doc.doc_id = doc_name(doc_index);
  doc.split = Split::Train;
  doc.coverage = Coverage::Full;
  doc.window = params.window;
  for (int i = 0; i < n; ++i) doc.nodes.push_back({i, sentences[static_cast<std::size_t>(i)]});

  LatentTimeline timeline;
  std::normal_distribution<double> jitter(0.0, params.jitter);
  std::uniform_int_distribution<int> duration(params.min_duration, params.max_duration);
  std::bernoulli_distribution copy_previous(params.simultaneous_prob);
  const double mid = params.grid_width / 2.0;
  for (int i = 0; i < n; ++i) {
    if (i > 0 && copy_previous(rng)) {
      timeline.push_back(timeline.back());
      continue;
    }
    const double centre = mid + params.drift * (i - (n - 1) / 2.0) + jitter(rng);
    const int start =
        std::clamp(static_cast<int>(std::lround(centre)), 0, params.grid_width - 1);
    const int end = std::min(start + duration(rng), params.grid_width);
    timeline.push_back({start, end});
  }

  const int per_label = params.feature_dim / static_cast<int>(kNumLabels);
  std::bernoulli_distribution informative(params.informativeness);
  std::uniform_int_distribution<int> any_label(0, static_cast<int>(kNumLabels) - 1);
  std::uniform_int_distribution<int> bucket(0, per_label - 1);
  std::uniform_int_distribution<int> noise_id(0, params.feature_dim - 1);

  for (const EdgeKey& k : candidate_edges(doc)) {
    EdgeRecord e;
    e.key = k;
    e.label = oracle_relation(timeline[static_cast<std::size_t>(k.src)],
                              timeline[static_cast<std::size_t>(k.dst)]);
    e.annotated = true;
    e.provenance = Provenance::Gold;

    std::vector<std::string> names;
    for (int f = 0; f < params.discriminative_features; ++f) {
      const int encoded =
          informative(rng) ? static_cast<int>(label_index(*e.label)) : any_label(rng);
      names.push_back("w" + std::to_string(encoded * per_label + bucket(rng)));
    }
    for (int f = 0; f < params.noise_features; ++f) names.push_back("n" + std::to_string(noise_id(rng)));
    names.push_back("dist=" + std::to_string(doc.sentence_distance(k)));
    e.features = FeatureVector::from_names(names);
    doc.edges.emplace(k, std::move(e));
  }
  return {std::move(doc), std::move(timeline)};
}

Document mask_to_partial(const Document& doc, double rho, double beta, std::uint64_t seed,
                         bool* warned) {
  if (doc.coverage != Coverage::Full)
    throw std::invalid_argument("mask_to_partial: document '" + doc.doc_id + "' is not full");
  if (warned) *warned = false;

  std::vector<EdgeKey> keys;
  std::vector<double> weights;
  for (const auto& [k, e] : doc.edges) {
    keys.push_back(k);
    weights.push_back(e.label && is_definite(*e.label) ? beta : 1.0);
  }
  const double expected = rho * static_cast<double>(keys.size());
  std::size_t keep = 0;
  if (expected < 1.0) {
    if (warned && !keys.empty()) *warned = true;
  } else {
    keep = std::min(keys.size(), static_cast<std::size_t>(std::llround(expected)));
  }

  auto rng = stream(seed, 0, kMaskStream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::set<EdgeKey> kept;
  for (std::size_t pick = 0; pick < keep; ++pick) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = unit(rng) * total;
    std::size_t chosen = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      chosen = i;
      if (u < weights[i]) break;
      u -= weights[i];
    }
    kept.insert(keys[chosen]);
    weights[chosen] = 0.0;
  }

  Document out = doc;
  out.coverage = Coverage::Partial;
  for (auto& [k, e] : out.edges) {
    e.provenance = Provenance::Gold;
    if (kept.count(k)) {
      e.annotated = true;
    } else {
      e.annotated = false;
      e.label.reset();
    }
  }
  return out;
}

SplitSizes split_sizes(int n_docs) {
  SplitSizes s;
  s.full = static_cast<int>(std::lround(n_docs * 30.0 / 220.0));
  s.test = static_cast<int>(std::lround(n_docs * 20.0 / 220.0));
  s.dev = static_cast<int>(std::lround(s.full * 6.0 / 30.0));
  s.partial = n_docs - s.full - s.test;
  return s;
}

GeneratedCorpora gen_corpus(const GenParams& params) {
  params.validate();
  const SplitSizes sizes = split_sizes(params.n_docs);
  GeneratedCorpora out;
  int index = 0;
  for (int i = 0; i < sizes.full; ++i, ++index) {
    Document d = gen_document(params, index).first;
    d.split = i >= sizes.full - sizes.dev ? Split::Dev : Split::Train;
    out.full.documents.push_back(std::move(d));
  }
  for (int i = 0; i < sizes.partial; ++i, ++index) {
    const Document d = gen_document(params, index).first;
    const std::uint64_t mask_seed = params.seed * 1000003ULL + static_cast<std::uint64_t>(index);
    out.partial.documents.push_back(
        mask_to_partial(d, params.mask_ratio, params.nonvague_bias, mask_seed));
  }
  for (int i = 0; i < sizes.test; ++i, ++index) {
    Document d = gen_document(params, index).first;
    d.split = Split::Test;
    out.test.documents.push_back(std::move(d));
  }
  return out;
}

}  // namespace temprel
