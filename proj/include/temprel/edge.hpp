#pragma once

#include <compare>
#include <map>
#include <string>

#include "temprel/algebra.hpp"

namespace temprel {

/// Canonically oriented event pair, src < dst.
struct EdgeKey {
  int src = 0;
  int dst = 0;
  friend constexpr auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
};

inline std::string to_string(EdgeKey k) {
  return "(" + std::to_string(k.src) + "," + std::to_string(k.dst) + ")";
}

/// Labels keyed by canonical edge.
using LabelGraph = std::map<EdgeKey, RelLabel>;

/// Label of (i, j) read through canonical storage, inverting when i > j.
inline std::optional<RelLabel> oriented_label(const LabelGraph& g, int i, int j) {
  const bool flip = i > j;
  const auto it = g.find(flip ? EdgeKey{j, i} : EdgeKey{i, j});
  if (it == g.end()) return std::nullopt;
  return flip ? inverse(it->second) : it->second;
}

}  // namespace temprel
