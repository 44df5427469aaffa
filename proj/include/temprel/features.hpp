#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace temprel {

/// Interned feature name. Ids are process-local and depend on interning
/// order, so nothing observable may be ordered by them.
using FeatureId = std::uint32_t;

FeatureId intern_feature(std::string_view name);
std::string_view feature_name(FeatureId id);

/// Sparse feature vector. Entries are kept sorted by feature name with no
/// zero values, which fixes the summation order of every dot product.
class FeatureVector {
 public:
  struct Entry {
    FeatureId id;
    double value;
  };

  FeatureVector() = default;

  /// Indicator vector; repeated names collapse to a single 1.0 entry.
  static FeatureVector from_names(std::span<const std::string> names);

  /// Adds value to the named feature, dropping it if the sum reaches zero.
  void add(std::string_view name, double value = 1.0);

  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  /// Names in sorted order.
  std::vector<std::string> names() const;

  friend bool operator==(const FeatureVector& a, const FeatureVector& b);

 private:
  std::vector<Entry> entries_;
};

}  // namespace temprel
