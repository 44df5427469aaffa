#pragma once

// Six-label temporal relation algebra: labels, label sets, and the
// composition ("general transitivity") table derived from an interval oracle.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>

namespace temprel {

/// Temporal relation between two events. Declaration order is the fixed
/// label order used for tie-breaking and rendering everywhere.
enum class RelLabel : std::uint8_t {
  Before = 0,
  After = 1,
  Includes = 2,
  IsIncluded = 3,
  Simultaneous = 4,
  Vague = 5,
};

inline constexpr std::size_t kNumLabels = 6;

inline constexpr std::array<RelLabel, kNumLabels> kAllLabels = {
    RelLabel::Before,     RelLabel::After,        RelLabel::Includes,
    RelLabel::IsIncluded, RelLabel::Simultaneous, RelLabel::Vague};

constexpr std::size_t label_index(RelLabel r) {
  return static_cast<std::size_t>(r);
}

constexpr bool is_definite(RelLabel r) { return r != RelLabel::Vague; }

constexpr RelLabel inverse(RelLabel r) {
  switch (r) {
    case RelLabel::Before: return RelLabel::After;
    case RelLabel::After: return RelLabel::Before;
    case RelLabel::Includes: return RelLabel::IsIncluded;
    case RelLabel::IsIncluded: return RelLabel::Includes;
    default: return r;
  }
}

std::string_view to_string(RelLabel r);
std::optional<RelLabel> parse_label(std::string_view name);

/// Subset of the six labels packed into the low six bits of a byte.
class LabelSet {
 public:
  constexpr LabelSet() = default;

  static constexpr LabelSet from_bits(std::uint8_t bits) {
    LabelSet s;
    s.bits_ = static_cast<std::uint8_t>(bits & kFullBits);
    return s;
  }
  static constexpr LabelSet full() { return from_bits(kFullBits); }
  static constexpr LabelSet none() { return {}; }
  static constexpr LabelSet of(RelLabel r) {
    return from_bits(static_cast<std::uint8_t>(1u << label_index(r)));
  }
  static constexpr LabelSet of(std::initializer_list<RelLabel> rs) {
    LabelSet s;
    for (RelLabel r : rs) s.insert(r);
    return s;
  }

  constexpr std::uint8_t bits() const { return bits_; }
  constexpr bool contains(RelLabel r) const {
    return (bits_ >> label_index(r)) & 1u;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int size() const { return std::popcount(bits_); }
  constexpr bool is_full() const { return bits_ == kFullBits; }

  constexpr void insert(RelLabel r) {
    bits_ = static_cast<std::uint8_t>(bits_ | (1u << label_index(r)));
  }
  constexpr void erase(RelLabel r) {
    bits_ = static_cast<std::uint8_t>(bits_ & ~(1u << label_index(r)));
  }

  /// The sole member if this is a singleton.
  constexpr std::optional<RelLabel> single() const {
    if (size() != 1) return std::nullopt;
    return static_cast<RelLabel>(std::countr_zero(bits_));
  }

  /// Element-wise inverse.
  constexpr LabelSet inverted() const {
    LabelSet out;
    for (RelLabel r : kAllLabels)
      if (contains(r)) out.insert(inverse(r));
    return out;
  }

  friend constexpr LabelSet operator|(LabelSet a, LabelSet b) {
    return from_bits(static_cast<std::uint8_t>(a.bits_ | b.bits_));
  }
  friend constexpr LabelSet operator&(LabelSet a, LabelSet b) {
    return from_bits(static_cast<std::uint8_t>(a.bits_ & b.bits_));
  }
  constexpr LabelSet& operator|=(LabelSet o) { return *this = *this | o; }
  constexpr LabelSet& operator&=(LabelSet o) { return *this = *this & o; }
  friend constexpr bool operator==(LabelSet, LabelSet) = default;

  /// "{before, vague}" in fixed label order; "{}" when empty.
  std::string to_string() const;

 private:
  static constexpr std::uint8_t kFullBits = 0x3F;
  std::uint8_t bits_ = 0;
};

/// Integer interval [start, end] used as ground truth for an event.
struct Interval {
  int start = 0;
  int end = 0;
  friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

/// Label of the pair (a, b) under strict endpoint order. Overlapping,
/// touching and partially-equal configurations are vague.
/// Throws std::invalid_argument for intervals with start >= end.
RelLabel oracle_relation(Interval a, Interval b);

class CompositionTable {
 public:
  static constexpr int kDefaultGrid = 8;

  /// Enumerates all interval triples with endpoints in [0, grid_max].
  /// Throws std::invalid_argument when grid_max < 8.
  static CompositionTable build(int grid_max = kDefaultGrid);

  LabelSet compose(RelLabel r1, RelLabel r2) const {
    return entries_[label_index(r1) * kNumLabels + label_index(r2)];
  }

  /// Union of compose(r1, r2) over r1 in a, r2 in b.
  LabelSet compose(LabelSet a, LabelSet b) const {
    return set_compose_[static_cast<std::size_t>(a.bits()) * 64 + b.bits()];
  }

  /// Labels c for (i,k) such that the triangle (i,j)=r1, (j,k)=r2, (i,k)=c
  /// passes the composition check in all three orientations.
  LabelSet closing(RelLabel r1, RelLabel r2) const {
    return closing_[label_index(r1) * kNumLabels + label_index(r2)];
  }

  /// Text matrix, one row per first label, columns in label order.
  std::string render() const;

  friend bool operator==(const CompositionTable& a, const CompositionTable& b) {
    return a.entries_ == b.entries_;
  }

 private:
  CompositionTable() = default;
  void fill_derived();

  std::array<LabelSet, kNumLabels * kNumLabels> entries_{};
  std::array<LabelSet, kNumLabels * kNumLabels> closing_{};
  std::array<LabelSet, 64 * 64> set_compose_{};
};

/// Process-wide table built once at the default grid.
const CompositionTable& default_table();

}  // namespace temprel
