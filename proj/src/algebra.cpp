#include "temprel/algebra.hpp"

#include <sstream>
#include <stdexcept>
#include <vector>

namespace temprel {

namespace {

constexpr std::array<std::string_view, kNumLabels> kNames = {
    "before", "after", "includes", "is_included", "simultaneous", "vague"};

std::vector<Interval> all_intervals(int grid_max) {
  std::vector<Interval> out;
  for (int s = 0; s <= grid_max; ++s)
    for (int e = s + 1; e <= grid_max; ++e) out.push_back({s, e});
  return out;
}

}  // namespace

std::string_view to_string(RelLabel r) { return kNames[label_index(r)]; }

std::optional<RelLabel> parse_label(std::string_view name) {
  for (RelLabel r : kAllLabels)
    if (kNames[label_index(r)] == name) return r;
  return std::nullopt;
}

std::string LabelSet::to_string() const {
  std::string out = "{";
  bool first = true;
  for (RelLabel r : kAllLabels) {
    if (!contains(r)) continue;
    if (!first) out += ", ";
    out += temprel::to_string(r);
    first = false;
  }
  out += "}";
  return out;
}

RelLabel oracle_relation(Interval a, Interval b) {
  if (a.start >= a.end || b.start >= b.end)
    throw std::invalid_argument("oracle_relation: interval needs start < end");
  if (a.end < b.start) return RelLabel::Before;
  if (b.end < a.start) return RelLabel::After;
  if (a.start == b.start && a.end == b.end) return RelLabel::Simultaneous;
  if (a.start < b.start && b.end < a.end) return RelLabel::Includes;
  if (b.start < a.start && a.end < b.end) return RelLabel::IsIncluded;
  return RelLabel::Vague;
}

CompositionTable CompositionTable::build(int grid_max) {
  if (grid_max < kDefaultGrid)
    throw std::invalid_argument("build_composition_table: grid_max must be >= 8");

  CompositionTable t;
  for (RelLabel r1 : kAllLabels)
    for (RelLabel r2 : kAllLabels)
      if (!is_definite(r1) || !is_definite(r2))
        t.entries_[label_index(r1) * kNumLabels + label_index(r2)] =
            LabelSet::full();

  const std::vector<Interval> ivs = all_intervals(grid_max);
  // rel[i][j] = oracle_relation(ivs[i], ivs[j]), computed once.
  const std::size_t n = ivs.size();
  std::vector<RelLabel> rel(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) rel[i * n + j] = oracle_relation(ivs[i], ivs[j]);

  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const RelLabel r1 = rel[a * n + b];
      if (!is_definite(r1)) continue;
      for (std::size_t c = 0; c < n; ++c) {
        const RelLabel r2 = rel[b * n + c];
        if (!is_definite(r2)) continue;
        t.entries_[label_index(r1) * kNumLabels + label_index(r2)].insert(
            rel[a * n + c]);
      }
    }
  }
  t.fill_derived();
  return t;
}

void CompositionTable::fill_derived() {
  for (RelLabel a : kAllLabels)
    for (RelLabel b : kAllLabels) {
      LabelSet c;
      for (RelLabel r : kAllLabels)
        if (compose(a, b).contains(r) && compose(inverse(a), r).contains(b) &&
            compose(r, inverse(b)).contains(a))
          c.insert(r);
      closing_[label_index(a) * kNumLabels + label_index(b)] = c;
    }
  for (unsigned a = 0; a < 64; ++a) {
    for (unsigned b = 0; b < 64; ++b) {
      const LabelSet sa = LabelSet::from_bits(static_cast<std::uint8_t>(a));
      const LabelSet sb = LabelSet::from_bits(static_cast<std::uint8_t>(b));
      LabelSet acc;
      for (RelLabel r1 : kAllLabels) {
        if (!sa.contains(r1)) continue;
        for (RelLabel r2 : kAllLabels)
          if (sb.contains(r2)) acc |= compose(r1, r2);
      }
      set_compose_[a * 64 + b] = acc;
    }
  }
}

std::string CompositionTable::render() const {
  std::ostringstream os;
  os << "r1\\r2";
  for (RelLabel r2 : kAllLabels) os << '\t' << to_string(r2);
  os << '\n';
  for (RelLabel r1 : kAllLabels) {
    os << to_string(r1);
    for (RelLabel r2 : kAllLabels) os << '\t' << compose(r1, r2).to_string();
    os << '\n';
  }
  return os.str();
}

const CompositionTable& default_table() {
  static const CompositionTable table = CompositionTable::build();
  return table;
}

}  // namespace temprel
