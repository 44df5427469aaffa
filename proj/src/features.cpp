#include "temprel/features.hpp"

#include <algorithm>
#include <deque>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>

namespace temprel {

namespace {

class Interner {
 public:
  FeatureId intern(std::string_view name) {
    {
      std::shared_lock lock(mu_);
      if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    }
    std::unique_lock lock(mu_);
    if (auto it = ids_.find(name); it != ids_.end()) return it->second;
    const auto id = static_cast<FeatureId>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
  }

  std::string_view name(FeatureId id) const {
    std::shared_lock lock(mu_);
    if (id >= names_.size()) throw std::out_of_range("feature_name: unknown id");
    return names_[id];
  }

 private:
  mutable std::shared_mutex mu_;
  // deque keeps element addresses stable, so the map can key on views.
  std::deque<std::string> names_;
  std::unordered_map<std::string_view, FeatureId> ids_;
};

Interner& interner() {
  static Interner instance;
  return instance;
}

}  // namespace

FeatureId intern_feature(std::string_view name) { return interner().intern(name); }

std::string_view feature_name(FeatureId id) { return interner().name(id); }

FeatureVector FeatureVector::from_names(std::span<const std::string> names) {
  std::vector<std::string> sorted(names.begin(), names.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  FeatureVector fv;
  fv.entries_.reserve(sorted.size());
  for (const auto& n : sorted) fv.entries_.push_back({intern_feature(n), 1.0});
  return fv;
}

void FeatureVector::add(std::string_view name, double value) {
  if (value == 0.0) return;
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), name,
      [](const Entry& e, std::string_view n) { return feature_name(e.id) < n; });
  if (it != entries_.end() && feature_name(it->id) == name) {
    it->value += value;
    if (it->value == 0.0) entries_.erase(it);
    return;
  }
  entries_.insert(it, Entry{intern_feature(name), value});
}

std::vector<std::string> FeatureVector::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(feature_name(e.id));
  return out;
}

bool operator==(const FeatureVector& a, const FeatureVector& b) {
  return std::equal(a.entries_.begin(), a.entries_.end(), b.entries_.begin(),
                    b.entries_.end(), [](const auto& x, const auto& y) {
                      return x.id == y.id && x.value == y.value;
                    });
}

}  // namespace temprel
