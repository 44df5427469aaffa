#pragma once

// Sparse multiclass averaged perceptron with softmax scoring.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "temprel/algebra.hpp"
#include "temprel/features.hpp"

namespace temprel {

/// Softmax score per label, indexed by label_index().
using ScoreVector = std::array<double, kNumLabels>;

/// Index of the first maximum, i.e. ties go to the earlier label.
RelLabel argmax_label(const ScoreVector& v);

struct TrainingExample {
  const FeatureVector* features = nullptr;
  RelLabel label = RelLabel::Vague;
};

class WeightMatrix {
 public:
  WeightMatrix() = default;

  /// w_r . x for each label; averaged weights once finalized.
  ScoreVector dot(const FeatureVector& x) const;
  /// Softmax of dot(x) with max subtraction.
  ScoreVector score(const FeatureVector& x) const;
  RelLabel predict(const FeatureVector& x) const { return argmax_label(dot(x)); }

  /// Mistake-driven update; the averaging clock advances either way.
  /// Returns the label predicted before the update.
  RelLabel update(const FeatureVector& x, RelLabel gold);

  /// Freezes the model: subsequent scoring uses averaged weights and
  /// further updates throw std::logic_error.
  void finalize();
  bool finalized() const { return finalized_; }

  std::uint64_t updates() const { return clock_; }

  /// Current raw weight (training weights, or averaged once finalized).
  double weight(RelLabel r, std::string_view feature) const;
  /// (1/T) sum over steps of the weight after each step.
  double averaged_weight(RelLabel r, std::string_view feature) const;

  int epochs = 0;
  std::uint64_t seed = 0;

  /// {"labels": [...], "weights": {label: {feature: value}}, "meta": {...}};
  /// weights are the averaged ones, zeros omitted, features sorted by name.
  nlohmann::ordered_json to_json() const;
  std::string serialize() const;
  static WeightMatrix from_json(const nlohmann::json& j);

 private:
  using Row = std::array<double, kNumLabels>;

  Row averaged_row(FeatureId id) const;
  void ensure(FeatureId id);

  // Indexed by FeatureId. raw_ holds w; corr_ holds sum of (step-1)*delta so
  // that the running average is w - corr/T.
  std::vector<Row> raw_;
  std::vector<Row> corr_;
  std::uint64_t clock_ = 0;
  bool finalized_ = false;
};

/// Averaged-perceptron training: shuffles with a generator seeded by
/// (seed, epoch) each epoch and finalizes at the end.
/// Throws std::invalid_argument on empty input or epochs < 1.
WeightMatrix train(std::span<const TrainingExample> examples, int epochs, std::uint64_t seed);

}  // namespace temprel
