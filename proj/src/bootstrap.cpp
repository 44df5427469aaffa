#include "temprel/bootstrap.hpp"

#include <chrono>
#include <stdexcept>

#include "temprel/error.hpp"

namespace temprel {

std::string_view to_string(BootstrapMode m) {
  switch (m) {
    case BootstrapMode::None: return "none";
    case BootstrapMode::Local: return "local";
    case BootstrapMode::Global: return "global";
  }
  return "?";
}

SystemConfig SystemConfig::from_id(int id) {
  using D = TrainingData;
  using M = BootstrapMode;
  using V = PVariant;
  switch (id) {
    case 1: return {1, D::F, M::None, V::AsIs};
    case 2: return {2, D::PFull, M::None, V::FilledVague};
    case 3: return {3, D::P, M::None, V::AsIs};
    case 4: return {4, D::FPlusPFull, M::None, V::FilledVague};
    case 5: return {5, D::FPlusP, M::None, V::AsIs};
    case 6: return {6, D::FPlusP, M::Local, V::Emptied};
    case 7: return {7, D::FPlusP, M::Global, V::Emptied};
    case 8: return {8, D::FPlusP, M::Local, V::AsIs};
    case 9: return {9, D::FPlusP, M::Global, V::AsIs};
    default: throw ConfigError("unknown system id " + std::to_string(id));
  }
}

std::string SystemConfig::describe() const {
  std::string data_name;
  switch (data) {
    case TrainingData::F: data_name = "F"; break;
    case TrainingData::PFull: data_name = "P^Full"; break;
    case TrainingData::P: data_name = "P"; break;
    case TrainingData::FPlusPFull: data_name = "F+P^Full"; break;
    case TrainingData::FPlusP:
      data_name = p_variant == PVariant::Emptied ? "F+P^Empty" : "F+P";
      break;
  }
  switch (mode) {
    case BootstrapMode::None: return data_name + " / -";
    case BootstrapMode::Local: return data_name + " / Local";
    case BootstrapMode::Global: return data_name + " / Global";
  }
  return data_name;
}

Document fill_vague(const Document& p) {
  if (p.coverage != Coverage::Partial)
    throw std::invalid_argument("fill_vague: document '" + p.doc_id + "' is not partial");
  Document out = p;
  for (auto& [_, e] : out.edges) {
    if (e.annotated) continue;
    e.label = RelLabel::Vague;
    e.provenance = Provenance::Bootstrapped;
  }
  out.coverage = Coverage::Full;
  return out;
}

Document strip_annotations(const Document& p) {
  Document out = p;
  for (auto& [_, e] : out.edges) {
    e.label.reset();
    e.annotated = false;
    e.provenance = Provenance::Gold;
  }
  out.coverage = Coverage::Partial;
  return out;
}

Corpus fill_vague(const Corpus& p) {
  Corpus out;
  out.documents.reserve(p.documents.size());
  for (const auto& d : p.documents) out.documents.push_back(fill_vague(d));
  return out;
}

Corpus strip_annotations(const Corpus& p) {
  Corpus out;
  out.documents.reserve(p.documents.size());
  for (const auto& d : p.documents) out.documents.push_back(strip_annotations(d));
  return out;
}

std::vector<TrainingExample> labeled_examples(const Corpus& c) {
  std::vector<TrainingExample> out;
  for (const auto& d : c.documents)
    for (const auto& [_, e] : d.edges)
      if (e.label) out.push_back({&e.features, *e.label});
  return out;
}

FilledDocument fill_document(const Document& p, const WeightMatrix& model, BootstrapMode mode,
                             const LearnOptions& opts) {
  const InferenceProblem problem = make_problem(p, model, /*clamp_annotated=*/true, *opts.table);
  FilledDocument out;
  if (mode == BootstrapMode::Global) {
    if (check_consistency(p, *opts.table).ok) {
      Assignment a = infer_global(problem, opts.solver);
      out.edges = std::move(a.edges);
      out.labels = std::move(a.labels);
      return out;
    }
    if (opts.warn)
      opts.warn("document '" + p.doc_id +
                "' has inconsistent annotations; using local inference");
    out.local_fallback = true;
  }
  Assignment a = infer_local(problem);
  out.edges = std::move(a.edges);
  out.labels = std::move(a.labels);
  return out;
}

TrainedSystem bootstrap(const Corpus& f, const Corpus& p, BootstrapMode mode,
                        const ConvergenceCriteria& criteria, const LearnOptions& opts) {
  if (mode == BootstrapMode::None)
    throw std::invalid_argument("bootstrap: mode must be local or global");
  if (criteria.max_iterations < 1)
    throw std::invalid_argument("bootstrap: max_iterations must be >= 1");

  const std::vector<TrainingExample> f_examples = labeled_examples(f);
  if (f_examples.empty()) throw std::invalid_argument("bootstrap: F has no labeled edges");

  TrainedSystem result;
  result.model = train(f_examples, opts.epochs, opts.seed);
  if (p.documents.empty()) return result;

  std::vector<std::vector<RelLabel>> previous;
  std::size_t total_edges = 0;
  for (const auto& d : p.documents) total_edges += d.edges.size();

  for (int it = 1; it <= criteria.max_iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    IterationRecord rec;
    rec.iteration = it;

    std::vector<FilledDocument> filled;
    filled.reserve(p.documents.size());
    for (const auto& d : p.documents) {
      filled.push_back(fill_document(d, result.model, mode, opts));
      if (filled.back().local_fallback) ++rec.local_fallbacks;
    }

    std::size_t changed = 0;
    if (previous.empty()) {
      changed = total_edges;
    } else {
      for (std::size_t i = 0; i < filled.size(); ++i)
        for (std::size_t e = 0; e < filled[i].labels.size(); ++e)
          if (filled[i].labels[e] != previous[i][e]) ++changed;
    }
    rec.changed_fraction =
        total_edges ? static_cast<double>(changed) / static_cast<double>(total_edges) : 0.0;

    std::vector<TrainingExample> examples = f_examples;
    for (std::size_t i = 0; i < filled.size(); ++i) {
      const Document& d = p.documents[i];
      for (std::size_t e = 0; e < filled[i].edges.size(); ++e)
        examples.push_back({&d.edges.at(filled[i].edges[e]).features, filled[i].labels[e]});
    }
    rec.train_examples = examples.size();
    result.model = train(examples, opts.epochs, opts.seed);

    previous.clear();
    for (auto& fd : filled) previous.push_back(std::move(fd.labels));

    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.change_fractions.push_back(rec.changed_fraction);
    result.iterations = it;
    result.log.push_back(rec);
    if (opts.on_iteration) opts.on_iteration(rec);
    if (rec.changed_fraction < criteria.change_threshold) break;
  }
  return result;
}

TrainedSystem run_system(const SystemConfig& cfg, const Corpus& f, const Corpus& p,
                         const ConvergenceCriteria& criteria, const LearnOptions& opts) {
  Corpus p_variant;
  switch (cfg.p_variant) {
    case PVariant::AsIs: p_variant = p; break;
    case PVariant::FilledVague: p_variant = fill_vague(p); break;
    case PVariant::Emptied: p_variant = strip_annotations(p); break;
  }

  if (cfg.mode != BootstrapMode::None) return bootstrap(f, p_variant, cfg.mode, criteria, opts);

  std::vector<TrainingExample> examples;
  const bool use_f = cfg.data == TrainingData::F || cfg.data == TrainingData::FPlusP ||
                     cfg.data == TrainingData::FPlusPFull;
  const bool use_p = cfg.data != TrainingData::F;
  if (use_f) examples = labeled_examples(f);
  if (use_p) {
    // For P as-is only annotated edges carry labels, so this is exactly
    // "annotated edges of P treated as F edges".
    const auto pe = labeled_examples(p_variant);
    examples.insert(examples.end(), pe.begin(), pe.end());
  }
  if (examples.empty()) throw std::invalid_argument("run_system: no labeled training edges");
  TrainedSystem out;
  out.model = train(examples, opts.epochs, opts.seed);
  return out;
}

}  // namespace temprel
