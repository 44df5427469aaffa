#include "temprel/inference.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "temprel/error.hpp"

namespace temprel {

RelLabel Assignment::at(EdgeKey k) const {
  const auto it = std::lower_bound(edges.begin(), edges.end(), k);
  if (it == edges.end() || !(*it == k)) {
    // Edges are usually sorted; fall back to a scan otherwise.
    const auto lin = std::find(edges.begin(), edges.end(), k);
    if (lin == edges.end()) throw std::out_of_range("Assignment::at: unknown edge " + to_string(k));
    return labels[static_cast<std::size_t>(lin - edges.begin())];
  }
  return labels[static_cast<std::size_t>(it - edges.begin())];
}

LabelGraph Assignment::to_graph() const {
  LabelGraph g;
  for (std::size_t i = 0; i < edges.size(); ++i) g.emplace(edges[i], labels[i]);
  return g;
}

InferenceProblem make_problem(const Document& doc, const WeightMatrix& model,
                              bool clamp_annotated, const CompositionTable& table) {
  InferenceProblem p;
  p.table = &table;
  p.edges = candidate_edges(doc);
  p.scores.reserve(p.edges.size());
  for (const EdgeKey& k : p.edges) {
    const auto it = doc.edges.find(k);
    if (it == doc.edges.end()) {
      p.scores.push_back(model.score(FeatureVector{}));
      continue;
    }
    p.scores.push_back(model.score(it->second.features));
    if (clamp_annotated && it->second.annotated) p.clamps.emplace(k, *it->second.label);
  }
  return p;
}

double objective_of(const InferenceProblem& p, const std::vector<RelLabel>& labels) {
  double s = 0.0;
  for (std::size_t e = 0; e < labels.size(); ++e) s += p.scores[e][label_index(labels[e])];
  return s;
}

namespace {

void check_shape(const InferenceProblem& p) {
  if (p.scores.size() != p.edges.size())
    throw std::invalid_argument("InferenceProblem: scores and edges differ in length");
  for (const auto& [k, _] : p.clamps)
    if (std::find(p.edges.begin(), p.edges.end(), k) == p.edges.end())
      throw std::invalid_argument("InferenceProblem: clamp on unknown edge " + to_string(k));
}

std::vector<std::optional<RelLabel>> clamp_vector(const InferenceProblem& p) {
  std::vector<std::optional<RelLabel>> out(p.edges.size());
  for (std::size_t e = 0; e < p.edges.size(); ++e)
    if (const auto it = p.clamps.find(p.edges[e]); it != p.clamps.end()) out[e] = it->second;
  return out;
}

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Depth-first branch-and-bound. The bound comes from a triangle
// decomposition of the objective: each edge lends part of its score to
// the triangles containing it (lambda), and the bound is the sum of every
// triangle's best consistent triple plus every edge's best remainder, all
// restricted to the current domains. Lambda is tightened by max-marginal
// averaging over each edge's triangles, a few sweeps per node.
class BranchAndBound {
 public:
  BranchAndBound(const InferenceProblem& p, const SolverOptions& opts, SolverStats& stats)
      : p_(p), g_(p.edges), opts_(opts), stats_(stats) {
    for (RelLabel a : kAllLabels)
      for (RelLabel b : kAllLabels)
        for (RelLabel c : kAllLabels)
          if (p_.table->closing(a, b).contains(c))
            triples_.push_back({label_index(a), label_index(b), label_index(c)});
  }

  Assignment solve() {
    std::vector<LabelSet> domains(p_.edges.size(), LabelSet::full());
    const auto clamps = clamp_vector(p_);
    for (std::size_t e = 0; e < domains.size(); ++e)
      if (clamps[e]) domains[e] = LabelSet::of(*clamps[e]);

    PropagationStats ps;
    const bool ok = propagate(g_, *p_.table, domains, {}, &ps);
    stats_.propagation_rounds += ps.rounds;
    if (!ok) {
      std::vector<EdgeKey> conflicts;
      for (std::size_t e = 0; e < domains.size(); ++e)
        if (domains[e].empty()) conflicts.push_back(p_.edges[e]);
      throw InfeasibleError("infer_global: clamps are inconsistent", std::move(conflicts));
    }

    Lambda lambda(g_.triangles().size() * 3);
    for (auto& v : lambda) v.fill(0.0);
    tighten(domains, lambda, kRootSweeps, kNegInf);
    dfs(domains, std::move(lambda));
    if (!have_best_)
      // Unreachable for consistent clamps: all-vague completion is feasible.
      throw InfeasibleError("infer_global: no feasible assignment", {});

    Assignment a;
    a.edges = p_.edges;
    a.labels = best_;
    a.objective = best_obj_;
    return a;
  }

 private:
  // lambda[3 * t + pos][label]: share of edge pos (0 ij, 1 jk, 2 ik) of
  // triangle t lent to that triangle.
  using Lambda = std::vector<std::array<double, kNumLabels>>;

  std::array<std::size_t, 3> corners(const ConstraintGraph::Triangle& t) const {
    return {t.ij, t.jk, t.ik};
  }

  // Best value over the triangle's consistent in-domain triples of the two
  // positions other than pos, for each label at pos.
  std::array<double, kNumLabels> max_marginal(std::size_t t, std::size_t pos,
                                              const std::vector<LabelSet>& domains,
                                              const Lambda& lambda) const {
    std::array<double, kNumLabels> m;
    m.fill(kNegInf);
    const auto e = corners(g_.triangles()[t]);
    for (const auto& tr : triples_) {
      bool inside = true;
      for (std::size_t q = 0; q < 3 && inside; ++q)
        inside = domains[e[q]].contains(static_cast<RelLabel>(tr[q]));
      if (!inside) continue;
      double v = 0.0;
      for (std::size_t q = 0; q < 3; ++q)
        if (q != pos) v += lambda[3 * t + q][tr[q]];
      m[tr[pos]] = std::max(m[tr[pos]], v);
    }
    return m;
  }

  // Runs up to max_sweeps sweeps; stops early once the bound drops below
  // target or stalls. Returns the last bound.
  double tighten(const std::vector<LabelSet>& domains, Lambda& lambda, int max_sweeps,
                 double target) const {
    double last = bound(domains, lambda);
    for (int s = 0; s < max_sweeps && last >= target; ++s) {
      for (std::size_t e = 0; e < p_.edges.size(); ++e) {
        const LabelSet d = domains[e];
        const auto tris = g_.triangles_of(e);
        if (tris.empty() || d.size() < 2) continue;
        std::array<double, kNumLabels> total{};
        for (std::size_t l = 0; l < kNumLabels; ++l) total[l] = p_.scores[e][l];
        std::vector<std::pair<std::size_t, std::array<double, kNumLabels>>> mm;
        mm.reserve(tris.size());
        for (std::size_t t : tris) {
          const auto c = corners(g_.triangles()[t]);
          const std::size_t pos = c[0] == e ? 0 : c[1] == e ? 1 : 2;
          mm.emplace_back(3 * t + pos, max_marginal(t, pos, domains, lambda));
          for (std::size_t l = 0; l < kNumLabels; ++l) total[l] += mm.back().second[l];
        }
        const double share = 1.0 / static_cast<double>(tris.size() + 1);
        for (const auto& [slot, m] : mm)
          for (RelLabel r : kAllLabels) {
            const std::size_t l = label_index(r);
            if (d.contains(r) && total[l] > kNegInf) lambda[slot][l] = total[l] * share - m[l];
          }
      }
      const double next = bound(domains, lambda);
      const bool stalled = last - next < kStallTolerance * (1.0 + std::abs(last));
      last = next;
      if (stalled) break;
    }
    return last;
  }

  // Score of edge e left after lending to its triangles.
  std::array<double, kNumLabels> residual(std::size_t e, const Lambda& lambda) const {
    std::array<double, kNumLabels> v = p_.scores[e];
    for (std::size_t t : g_.triangles_of(e)) {
      const auto c = corners(g_.triangles()[t]);
      const std::size_t pos = c[0] == e ? 0 : c[1] == e ? 1 : 2;
      for (std::size_t l = 0; l < kNumLabels; ++l) v[l] -= lambda[3 * t + pos][l];
    }
    return v;
  }

  double bound(const std::vector<LabelSet>& domains, const Lambda& lambda) const {
    double b = 0.0;
    for (std::size_t e = 0; e < p_.edges.size(); ++e) {
      const auto res = residual(e, lambda);
      double m = kNegInf;
      for (RelLabel r : kAllLabels)
        if (domains[e].contains(r)) m = std::max(m, res[label_index(r)]);
      b += m;
    }
    for (std::size_t t = 0; t < g_.triangles().size(); ++t) {
      const auto e = corners(g_.triangles()[t]);
      double m = kNegInf;
      for (const auto& tr : triples_) {
        bool inside = true;
        for (std::size_t q = 0; q < 3 && inside; ++q)
          inside = domains[e[q]].contains(static_cast<RelLabel>(tr[q]));
        if (!inside) continue;
        m = std::max(m, lambda[3 * t][tr[0]] + lambda[3 * t + 1][tr[1]] + lambda[3 * t + 2][tr[2]]);
      }
      b += m;
    }
    return b;
  }

  void dfs(const std::vector<LabelSet>& domains, Lambda lambda) {
    if (++stats_.nodes > opts_.node_cap)
      throw SolverError("infer_global: node cap of " + std::to_string(opts_.node_cap) +
                        " exceeded");

    bool leaf = true;
    for (const LabelSet d : domains) leaf = leaf && d.size() == 1;
    if (leaf) {
      std::vector<RelLabel> labels(domains.size());
      for (std::size_t e = 0; e < domains.size(); ++e) labels[e] = *domains[e].single();
      const double obj = objective_of(p_, labels);
      if (!have_best_ || obj > best_obj_ || (obj == best_obj_ && labels < best_)) {
        best_ = std::move(labels);
        best_obj_ = obj;
        have_best_ = true;
      }
      return;
    }

    // The bound sums in a different order than a leaf does, so only prune
    // when it trails by more than any rounding difference.
    const double target =
        have_best_ ? best_obj_ - kPruneSlack * (1.0 + std::abs(best_obj_)) : kNegInf;
    if (tighten(domains, lambda, kNodeSweeps, target) < target) return;

    // Branch on the edge whose residual scores separate its best label most
    // clearly; try labels by residual score.
    std::size_t branch = domains.size();
    double branch_gap = -1.0;
    std::array<double, kNumLabels> branch_res{};
    for (std::size_t e = 0; e < domains.size(); ++e) {
      const LabelSet d = domains[e];
      if (d.size() < 2) continue;
      const auto res = residual(e, lambda);
      double top = kNegInf, second = top;
      for (RelLabel r : kAllLabels) {
        if (!d.contains(r)) continue;
        const double v = res[label_index(r)];
        if (v > top) {
          second = top;
          top = v;
        } else if (v > second) {
          second = v;
        }
      }
      if (top - second > branch_gap) {
        branch_gap = top - second;
        branch = e;
        branch_res = res;
      }
    }

    std::vector<RelLabel> values;
    for (RelLabel r : kAllLabels)
      if (domains[branch].contains(r)) values.push_back(r);
    std::stable_sort(values.begin(), values.end(), [&](RelLabel a, RelLabel b) {
      return branch_res[label_index(a)] > branch_res[label_index(b)];
    });

    const auto seeds = g_.triangles_of(branch);
    for (RelLabel r : values) {
      std::vector<LabelSet> child = domains;
      child[branch] = LabelSet::of(r);
      PropagationStats ps;
      const bool ok = propagate(g_, *p_.table, child, seeds, &ps);
      stats_.propagation_rounds += ps.rounds;
      if (ok) dfs(child, lambda);
    }
  }

  static constexpr double kPruneSlack = 1e-9;
  static constexpr int kRootSweeps = 500;
  static constexpr int kNodeSweeps = 20;
  static constexpr double kStallTolerance = 1e-7;

  const InferenceProblem& p_;
  ConstraintGraph g_;
  SolverOptions opts_;
  SolverStats& stats_;
  std::vector<std::array<std::size_t, 3>> triples_;
  std::vector<RelLabel> best_;
  double best_obj_ = 0.0;
  bool have_best_ = false;
};

}  // namespace

bool is_feasible(const InferenceProblem& p, const std::vector<RelLabel>& labels) {
  if (labels.size() != p.edges.size()) return false;
  for (std::size_t e = 0; e < p.edges.size(); ++e)
    if (const auto it = p.clamps.find(p.edges[e]); it != p.clamps.end() && it->second != labels[e])
      return false;
  return satisfies_transitivity(ConstraintGraph(p.edges), *p.table, labels);
}

Assignment infer_local(const InferenceProblem& p) {
  check_shape(p);
  const auto clamps = clamp_vector(p);
  Assignment a;
  a.edges = p.edges;
  a.labels.resize(p.edges.size());
  for (std::size_t e = 0; e < p.edges.size(); ++e)
    a.labels[e] = clamps[e] ? *clamps[e] : argmax_label(p.scores[e]);
  a.objective = objective_of(p, a.labels);
  return a;
}

Assignment infer_global(const InferenceProblem& p, const SolverOptions& opts,
                        SolverStats* stats) {
  check_shape(p);
  SolverStats local;
  SolverStats& st = stats ? *stats : local;
  const auto t0 = std::chrono::steady_clock::now();
  BranchAndBound bnb(p, opts, st);
  Assignment a = bnb.solve();
  st.proven_optimal = true;
  st.wall_seconds +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return a;
}

Assignment brute_force(const InferenceProblem& p) {
  check_shape(p);
  const auto clamps = clamp_vector(p);
  std::vector<std::size_t> free;
  for (std::size_t e = 0; e < p.edges.size(); ++e)
    if (!clamps[e]) free.push_back(e);
  if (free.size() > kBruteForceMaxFree)
    throw std::invalid_argument("brute_force: more than 7 free edges");

  const ConstraintGraph g(p.edges);
  std::vector<RelLabel> labels(p.edges.size(), RelLabel::Before);
  for (std::size_t e = 0; e < p.edges.size(); ++e)
    if (clamps[e]) labels[e] = *clamps[e];

  std::size_t total = 1;
  for (std::size_t i = 0; i < free.size(); ++i) total *= kNumLabels;

  bool found = false;
  Assignment best;
  best.edges = p.edges;
  // Counter with the first free edge as most significant digit, so the
  // enumeration runs in lexicographic label order.
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t i = free.size(); i-- > 0;) {
      labels[free[i]] = static_cast<RelLabel>(c % kNumLabels);
      c /= kNumLabels;
    }
    if (!satisfies_transitivity(g, *p.table, labels)) continue;
    const double obj = objective_of(p, labels);
    if (!found || obj > best.objective) {
      best.labels = labels;
      best.objective = obj;
      found = true;
    }
  }
  if (!found) throw InfeasibleError("brute_force: no feasible assignment", {});
  return best;
}

}  // namespace temprel
