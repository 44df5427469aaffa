#include "temprel/learner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "temprel/error.hpp"

namespace temprel {

RelLabel argmax_label(const ScoreVector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < kNumLabels; ++i)
    if (v[i] > v[best]) best = i;
  return static_cast<RelLabel>(best);
}

void WeightMatrix::ensure(FeatureId id) {
  if (id >= raw_.size()) {
    raw_.resize(id + 1, Row{});
    corr_.resize(id + 1, Row{});
  }
}

ScoreVector WeightMatrix::dot(const FeatureVector& x) const {
  ScoreVector s{};
  for (const auto& e : x.entries()) {
    if (e.id >= raw_.size()) continue;
    const Row& w = raw_[e.id];
    for (std::size_t r = 0; r < kNumLabels; ++r) s[r] += w[r] * e.value;
  }
  return s;
}

ScoreVector WeightMatrix::score(const FeatureVector& x) const {
  ScoreVector s = dot(x);
  const double mx = *std::max_element(s.begin(), s.end());
  double z = 0.0;
  for (double& v : s) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : s) v /= z;
  return s;
}

RelLabel WeightMatrix::update(const FeatureVector& x, RelLabel gold) {
  if (finalized_) throw std::logic_error("WeightMatrix::update on a finalized model");
  const RelLabel pred = predict(x);
  const double step_weight = static_cast<double>(clock_);  // (t - 1) for step t
  ++clock_;
  if (pred == gold) return pred;
  const std::size_t g = label_index(gold), p = label_index(pred);
  for (const auto& e : x.entries()) {
    ensure(e.id);
    raw_[e.id][g] += e.value;
    raw_[e.id][p] -= e.value;
    corr_[e.id][g] += step_weight * e.value;
    corr_[e.id][p] -= step_weight * e.value;
  }
  return pred;
}

WeightMatrix::Row WeightMatrix::averaged_row(FeatureId id) const {
  Row out{};
  if (id >= raw_.size()) return out;
  if (finalized_ || clock_ == 0) return raw_[id];
  const double t = static_cast<double>(clock_);
  for (std::size_t r = 0; r < kNumLabels; ++r) out[r] = raw_[id][r] - corr_[id][r] / t;
  return out;
}

void WeightMatrix::finalize() {
  if (finalized_) return;
  for (FeatureId id = 0; id < raw_.size(); ++id) raw_[id] = averaged_row(id);
  corr_.clear();
  corr_.shrink_to_fit();
  finalized_ = true;
}

double WeightMatrix::weight(RelLabel r, std::string_view feature) const {
  const FeatureId id = intern_feature(feature);
  return id < raw_.size() ? raw_[id][label_index(r)] : 0.0;
}

double WeightMatrix::averaged_weight(RelLabel r, std::string_view feature) const {
  return averaged_row(intern_feature(feature))[label_index(r)];
}

nlohmann::ordered_json WeightMatrix::to_json() const {
  // Sorted by feature name so output never depends on interning order.
  std::map<std::string_view, Row> rows;
  for (FeatureId id = 0; id < raw_.size(); ++id) {
    const Row row = averaged_row(id);
    if (std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; }))
      rows.emplace(feature_name(id), row);
  }
  nlohmann::ordered_json j;
  j["labels"] = nlohmann::ordered_json::array();
  for (RelLabel r : kAllLabels) j["labels"].push_back(std::string(to_string(r)));
  nlohmann::ordered_json weights = nlohmann::ordered_json::object();
  for (RelLabel r : kAllLabels) {
    nlohmann::ordered_json per = nlohmann::ordered_json::object();
    for (const auto& [name, row] : rows)
      if (row[label_index(r)] != 0.0) per[std::string(name)] = row[label_index(r)];
    weights[std::string(to_string(r))] = std::move(per);
  }
  j["weights"] = std::move(weights);
  j["meta"] = {{"epochs", epochs}, {"seed", seed}, {"updates", clock_}};
  return j;
}

std::string WeightMatrix::serialize() const { return to_json().dump(); }

WeightMatrix WeightMatrix::from_json(const nlohmann::json& j) {
  WeightMatrix m;
  try {
    const auto labels = j.at("labels").get<std::vector<std::string>>();
    if (labels.size() != kNumLabels) throw ValidationError("model: expected six labels");
    for (std::size_t i = 0; i < kNumLabels; ++i)
      if (labels[i] != to_string(kAllLabels[i]))
        throw ValidationError("model: label order mismatch at '" + labels[i] + "'");
    for (const auto& [lname, per] : j.at("weights").items()) {
      const auto r = parse_label(lname);
      if (!r) throw ValidationError("model: unknown label '" + lname + "'");
      for (const auto& [fname, v] : per.items()) {
        const FeatureId id = intern_feature(fname);
        m.ensure(id);
        m.raw_[id][label_index(*r)] = v.get<double>();
      }
    }
    const auto& meta = j.at("meta");
    m.epochs = meta.at("epochs").get<int>();
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.clock_ = meta.at("updates").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model: ") + e.what());
  }
  m.corr_.clear();
  m.finalized_ = true;
  return m;
}

WeightMatrix train(std::span<const TrainingExample> examples, int epochs, std::uint64_t seed) {
  if (examples.empty()) throw std::invalid_argument("train: empty example list");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  WeightMatrix model;
  model.epochs = epochs;
  model.seed = seed;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch)};
    std::mt19937_64 rng(seq);
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) model.update(*examples[i].features, examples[i].label);
  }
  model.finalize();
  return model;
}

}  // namespace temprel
