#pragma once

// Per-document label assignment: independent argmax, exact constrained
// maximization of the summed softmax scores, and a brute-force oracle.

#include <cstdint>
#include <map>
#include <vector>

#include "temprel/algebra.hpp"
#include "temprel/corpus.hpp"
#include "temprel/learner.hpp"

namespace temprel {

struct InferenceProblem {
  std::vector<EdgeKey> edges;        // canonical, unique
  std::vector<ScoreVector> scores;   // parallel to edges
  std::map<EdgeKey, RelLabel> clamps;
  const CompositionTable* table = &default_table();
};

/// Scores every candidate edge of doc with model. Annotated edges become
/// clamps when clamp_annotated is set.
InferenceProblem make_problem(const Document& doc, const WeightMatrix& model,
                              bool clamp_annotated,
                              const CompositionTable& table = default_table());

struct Assignment {
  std::vector<EdgeKey> edges;
  std::vector<RelLabel> labels;  // parallel to edges
  double objective = 0.0;

  RelLabel at(EdgeKey k) const;
  LabelGraph to_graph() const;
};

struct SolverStats {
  std::uint64_t nodes = 0;
  std::uint64_t propagation_rounds = 0;
  bool proven_optimal = false;
  double wall_seconds = 0.0;
};

struct SolverOptions {
  std::uint64_t node_cap = 10'000'000;
};

/// Sum of the chosen labels' scores, accumulated in edge order.
double objective_of(const InferenceProblem& p, const std::vector<RelLabel>& labels);

/// True iff labels satisfy every clamp and every triangle constraint.
bool is_feasible(const InferenceProblem& p, const std::vector<RelLabel>& labels);

/// Clamped edges keep their clamp; every other edge takes its argmax.
Assignment infer_local(const InferenceProblem& p);

/// Optimal assignment under uniqueness, transitivity and clamps by
/// depth-first branch-and-bound with domain propagation. Among equal
/// objectives the lexicographically smallest label vector wins.
/// Throws InfeasibleError for inconsistent clamps and SolverError when the
/// node cap is exceeded.
Assignment infer_global(const InferenceProblem& p, const SolverOptions& opts = {},
                        SolverStats* stats = nullptr);

inline constexpr std::size_t kBruteForceMaxFree = 7;

/// Enumerates all labelings of the unclamped edges (at most seven).
/// Throws std::invalid_argument above that, InfeasibleError when nothing
/// is feasible.
Assignment brute_force(const InferenceProblem& p);

}  // namespace temprel
