#include "doctest.h"

#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "temprel/learner.hpp"

using namespace temprel;

namespace {

FeatureVector fv(std::initializer_list<std::pair<const char*, double>> entries) {
  FeatureVector x;
  for (const auto& [name, v] : entries) x.add(name, v);
  return x;
}

// Plain perceptron that stores every intermediate weight vector's running
// sum, used as the averaging reference.
struct NaivePerceptron {
  std::map<std::string, std::array<double, kNumLabels>> w, sum;
  int steps = 0;

  std::size_t predict(const std::vector<std::pair<std::string, double>>& x) const {
    std::array<double, kNumLabels> s{};
    for (const auto& [f, v] : x)
      if (const auto it = w.find(f); it != w.end())
        for (std::size_t r = 0; r < kNumLabels; ++r) s[r] += it->second[r] * v;
    std::size_t best = 0;
    for (std::size_t r = 1; r < kNumLabels; ++r)
      if (s[r] > s[best]) best = r;
    return best;
  }

  void update(const std::vector<std::pair<std::string, double>>& x, std::size_t gold) {
    const std::size_t p = predict(x);
    if (p != gold)
      for (const auto& [f, v] : x) {
        w[f][gold] += v;
        w[f][p] -= v;
      }
    ++steps;
    for (const auto& [f, row] : w)
      for (std::size_t r = 0; r < kNumLabels; ++r) sum[f][r] += row[r];
  }

  double average(const std::string& f, std::size_t r) const {
    const auto it = sum.find(f);
    return it == sum.end() ? 0.0 : it->second[r] / steps;
  }
};

}  // namespace

TEST_CASE("zero model scores uniformly") {
  WeightMatrix zero;
  zero.finalize();
  for (double s : zero.score(fv({{"a", 1.0}}))) CHECK(s == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("scores ignore a shared offset on every label") {
  WeightMatrix m;
  m.update(fv({{"g", 1.0}}), RelLabel::After);
  const ScoreVector base = m.score(fv({{"g", 1.0}}));
  // "h" carries the same weight on every label after these updates.
  m.update(fv({{"h", 1.0}}), RelLabel::Before);
  const ScoreVector shifted = m.score(fv({{"g", 1.0}, {"h", 3.0}}));
  for (std::size_t r = 0; r < kNumLabels; ++r) CHECK(shifted[r] == doctest::Approx(base[r]));
}

TEST_CASE("softmax of w.x = ln 5 on one label is one half") {
  nlohmann::json j = {{"labels", {"before", "after", "includes", "is_included", "simultaneous",
                                  "vague"}},
                      {"weights", {{"before", {{"f1", std::log(5.0)}}}}},
                      {"meta", {{"epochs", 1}, {"seed", 0}, {"updates", 1}}}};
  const WeightMatrix m = WeightMatrix::from_json(j);
  const ScoreVector s = m.score(fv({{"f1", 1.0}}));
  CHECK(s[label_index(RelLabel::Before)] == doctest::Approx(0.5).epsilon(1e-12));
  double total = 0;
  for (double v : s) total += v;
  CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("softmax normalizes for arbitrary inputs") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> val(-50.0, 50.0);
  WeightMatrix m;
  for (int i = 0; i < 300; ++i) {
    FeatureVector x;
    x.add("f" + std::to_string(rng() % 20), val(rng));
    x.add("g" + std::to_string(rng() % 7), val(rng));
    m.update(x, kAllLabels[rng() % kNumLabels]);
  }
  for (int i = 0; i < 200; ++i) {
    FeatureVector x;
    for (int k = 0; k < 3; ++k) x.add("f" + std::to_string(rng() % 25), val(rng) * 10);
    const ScoreVector s = m.score(x);
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    CHECK(std::abs(total - 1.0) < 1e-9);
    CHECK(argmax_label(s) == argmax_label(m.dot(x)));
  }
  const ScoreVector empty = m.score(FeatureVector{});
  CHECK(std::abs(std::accumulate(empty.begin(), empty.end(), 0.0) - 1.0) < 1e-9);
}

TEST_CASE("update rule and tie-break") {
  WeightMatrix m;
  const FeatureVector x = fv({{"f1", 1.0}});
  CHECK(m.update(x, RelLabel::Before) == RelLabel::Before);
  CHECK(m.updates() == 1);
  CHECK(m.weight(RelLabel::Before, "f1") == 0.0);

  WeightMatrix n;
  CHECK(n.update(x, RelLabel::After) == RelLabel::Before);
  CHECK(n.weight(RelLabel::After, "f1") == 1.0);
  CHECK(n.weight(RelLabel::Before, "f1") == -1.0);
  CHECK(argmax_label(ScoreVector{0.2, 0.3, 0.3, 0.1, 0.0, 0.1}) == RelLabel::After);
}

TEST_CASE("lazy averaging equals naive averaging over 1000 updates") {
  std::mt19937_64 rng(11);
  WeightMatrix m;
  NaivePerceptron naive;
  std::uniform_real_distribution<double> val(0.1, 2.0);
  for (int step = 0; step < 1000; ++step) {
    std::vector<std::pair<std::string, double>> raw;
    FeatureVector x;
    const std::size_t gold = rng() % kNumLabels;
    for (int k = 0; k < 3; ++k) {
      const std::string name = "f" + std::to_string(rng() % 15);
      const double v = val(rng);
      bool dup = false;
      for (auto& [f, existing] : raw)
        if (f == name) {
          existing += v;
          dup = true;
        }
      if (!dup) raw.emplace_back(name, v);
      x.add(name, v);
    }
    m.update(x, kAllLabels[gold]);
    naive.update(raw, gold);
  }
  double worst = 0.0;
  for (int f = 0; f < 15; ++f)
    for (std::size_t r = 0; r < kNumLabels; ++r) {
      const std::string name = "f" + std::to_string(f);
      worst = std::max(worst, std::abs(m.averaged_weight(kAllLabels[r], name) -
                                       naive.average(name, r)));
    }
  CHECK(worst < 1e-9);

  m.finalize();
  CHECK(m.weight(RelLabel::Vague, "f3") ==
        doctest::Approx(naive.average("f3", 5)).epsilon(1e-12));
  CHECK_THROWS_AS(m.update(fv({{"f1", 1.0}}), RelLabel::Before), std::logic_error);
}

TEST_CASE("three-update average") {
  WeightMatrix m;
  m.update(fv({{"a", 1.0}}), RelLabel::After);   // w_after[a]=1, w_before[a]=-1
  m.update(fv({{"a", 1.0}}), RelLabel::After);   // correct
  m.update(fv({{"a", 1.0}}), RelLabel::Vague);   // after -> vague
  // Intermediate w_after[a]: 1, 1, 0 -> mean 2/3.
  CHECK(m.averaged_weight(RelLabel::After, "a") == doctest::Approx(2.0 / 3.0));
  CHECK(m.averaged_weight(RelLabel::Before, "a") == doctest::Approx(-1.0));
  CHECK(m.averaged_weight(RelLabel::Vague, "a") == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("separable indicators are learned within two epochs") {
  std::vector<FeatureVector> feats;
  std::vector<TrainingExample> ex;
  feats.reserve(60);
  for (int i = 0; i < 60; ++i) {
    const RelLabel r = kAllLabels[static_cast<std::size_t>(i) % kNumLabels];
    FeatureVector x;
    x.add("label_" + std::string(to_string(r)));
    x.add("bias");
    feats.push_back(x);
  }
  for (int i = 0; i < 60; ++i)
    ex.push_back({&feats[static_cast<std::size_t>(i)], kAllLabels[static_cast<std::size_t>(i) % kNumLabels]});
  const WeightMatrix m = train(ex, 2, 5);
  for (const auto& e : ex) CHECK(m.predict(*e.features) == e.label);
}

TEST_CASE("training is deterministic and validated") {
  std::mt19937_64 rng(1);
  std::vector<FeatureVector> feats(200);
  std::vector<TrainingExample> ex;
  for (auto& f : feats) {
    f.add("f" + std::to_string(rng() % 30));
    f.add("g" + std::to_string(rng() % 30));
  }
  for (auto& f : feats) ex.push_back({&f, kAllLabels[rng() % kNumLabels]});
  const WeightMatrix a = train(ex, 3, 42), b = train(ex, 3, 42), c = train(ex, 3, 43);
  CHECK(a.serialize() == b.serialize());
  CHECK(a.serialize() != c.serialize());
  CHECK(WeightMatrix::from_json(nlohmann::json::parse(a.serialize())).serialize() ==
        a.serialize());
  CHECK_THROWS_AS(train({}, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(train(ex, 0, 0), std::invalid_argument);
}
