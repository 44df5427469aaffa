#include "temprel/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "temprel/error.hpp"

namespace temprel {

using ojson = nlohmann::ordered_json;

// -------------------------------------------------------------- RunConfig

void RunConfig::validate() const {
  gen.validate();
  if (seeds.empty()) throw ConfigError("config: seeds list is empty");
  if (systems.empty()) throw ConfigError("config: systems list is empty");
  for (int id : systems) SystemConfig::from_id(id);
  if (epochs_grid.empty()) throw ConfigError("config: epochs_grid is empty");
  for (int e : epochs_grid)
    if (e < 1) throw ConfigError("config: epochs must be >= 1");
  if (convergence.max_iterations < 1) throw ConfigError("config: max_iterations must be >= 1");
  if (!(convergence.change_threshold >= 0.0 && convergence.change_threshold <= 1.0))
    throw ConfigError("config: change_threshold outside [0,1]");
  if (test_inference == BootstrapMode::None)
    throw ConfigError("config: test_inference must be local or global");
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (node_cap < 1) throw ConfigError("config: node_cap must be >= 1");
  const bool any = !paths.full.empty() || !paths.partial.empty() || !paths.test.empty();
  const bool all = !paths.full.empty() && !paths.partial.empty() && !paths.test.empty();
  if (any && !all) throw ConfigError("config: corpus paths must be given together (full, partial, test)");
}

ojson RunConfig::to_json() const {
  return {{"paths",
           {{"full", paths.full},
            {"partial", paths.partial},
            {"test", paths.test},
            {"model", paths.model},
            {"report", paths.report}}},
          {"gen", gen.to_json()},
          {"convergence",
           {{"max_iterations", convergence.max_iterations},
            {"change_threshold", convergence.change_threshold}}},
          {"epochs_grid", epochs_grid},
          {"seeds", seeds},
          {"systems", systems},
          {"test_inference", std::string(to_string(test_inference))},
          {"node_cap", node_cap},
          {"jobs", jobs}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "paths") {
        for (const auto& [pk, pv] : v.items()) {
          const auto s = pv.get<std::string>();
          if (pk == "full") c.paths.full = s;
          else if (pk == "partial") c.paths.partial = s;
          else if (pk == "test") c.paths.test = s;
          else if (pk == "model") c.paths.model = s;
          else if (pk == "report") c.paths.report = s;
          else throw ConfigError("config: unknown path '" + pk + "'");
        }
      } else if (key == "gen") {
        c.gen = GenParams::from_json(v);
      } else if (key == "convergence") {
        for (const auto& [ck, cv] : v.items()) {
          if (ck == "max_iterations") c.convergence.max_iterations = cv.get<int>();
          else if (ck == "change_threshold") c.convergence.change_threshold = cv.get<double>();
          else throw ConfigError("config: unknown convergence key '" + ck + "'");
        }
      } else if (key == "epochs_grid") {
        c.epochs_grid = v.get<std::vector<int>>();
      } else if (key == "seeds") {
        c.seeds = v.get<std::vector<std::uint64_t>>();
      } else if (key == "systems") {
        c.systems = v.get<std::vector<int>>();
      } else if (key == "test_inference") {
        const auto s = v.get<std::string>();
        if (s == "global") c.test_inference = BootstrapMode::Global;
        else if (s == "local") c.test_inference = BootstrapMode::Local;
        else throw ConfigError("config: test_inference must be 'global' or 'local'");
      } else if (key == "node_cap") {
        c.node_cap = v.get<std::uint64_t>();
      } else if (key == "jobs") {
        c.jobs = v.get<int>();
      } else {
        throw ConfigError("config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

void RunLog::write(const ojson& record) {
  if (!out_) return;
  std::lock_guard lock(mu_);
  *out_ << record.dump() << '\n';
}

// ------------------------------------------------------------- prediction

std::vector<DocumentPrediction> predict_corpus(const Corpus& docs, const WeightMatrix& model,
                                               BootstrapMode inference, bool clamp_annotated,
                                               const SolverOptions& solver, RunLog* log) {
  std::vector<DocumentPrediction> out;
  out.reserve(docs.documents.size());
  for (const auto& doc : docs.documents) {
    const InferenceProblem p = make_problem(doc, model, clamp_annotated);
    Assignment a;
    if (inference == BootstrapMode::Global) {
      SolverStats st;
      try {
        a = infer_global(p, solver, &st);
      } catch (const SolverError& e) {
        throw SolverError("document '" + doc.doc_id + "': " + e.what());
      }
      if (log && log->enabled())
        log->write({{"record", "solver"},
                    {"doc_id", doc.doc_id},
                    {"nodes", st.nodes},
                    {"propagation_rounds", st.propagation_rounds},
                    {"proven_optimal", st.proven_optimal},
                    {"wall_time", st.wall_seconds}});
    } else {
      a = infer_local(p);
    }
    out.push_back({doc.doc_id, a.to_graph()});
  }
  return out;
}

EvaluationResult evaluate(const std::vector<DocumentPrediction>& pred, const Corpus& gold,
                          const CompositionTable& table) {
  EvaluationResult r;
  const ConfusionCounts cc = count_pairwise(pred, gold);
  const auto prf = [&](Bucket b) {
    const auto& c = cc.at(b);
    return make_prf(c.correct, c.predicted, c.gold);
  };
  r.same = prf(Bucket::Same);
  r.nearby = prf(Bucket::Nearby);
  r.overall = prf(Bucket::Overall);

  std::map<std::string, const LabelGraph*> by_id;
  for (const auto& p : pred) by_id.emplace(p.doc_id, &p.labels);
  AwarenessCounts total;
  for (const auto& doc : gold.documents) {
    try {
      total.merge(awareness_counts(*by_id.at(doc.doc_id), doc.labels(),
                                   static_cast<int>(doc.nodes.size()), table));
    } catch (const InconsistentGraphError&) {
      ++r.awareness_skipped;
    }
  }
  r.awareness = total.prf();
  return r;
}

// -------------------------------------------------------------- pipeline

namespace {

Corpus select(const Corpus& c, std::initializer_list<Split> splits) {
  Corpus out;
  for (const auto& d : c.documents)
    if (std::find(splits.begin(), splits.end(), d.split) != splits.end())
      out.documents.push_back(d);
  return out;
}

struct SeedCorpora {
  Corpus full, partial, test;
};

SeedCorpora corpora_for(const RunConfig& cfg, std::uint64_t seed) {
  if (!cfg.paths.full.empty())
    return {load_corpus(cfg.paths.full), load_corpus(cfg.paths.partial),
            load_corpus(cfg.paths.test)};
  GenParams gp = cfg.gen;
  gp.seed = cfg.gen.seed + seed;
  auto g = gen_corpus(gp);
  return {std::move(g.full), std::move(g.partial), std::move(g.test)};
}

void check_roles(const SeedCorpora& c) {
  for (const auto& d : c.full.documents)
    if (d.coverage != Coverage::Full)
      throw DataError("full corpus document '" + d.doc_id + "' is not full coverage");
  for (const auto& d : c.partial.documents)
    if (d.coverage != Coverage::Partial)
      throw DataError("partial corpus document '" + d.doc_id + "' is not partial coverage");
  for (const auto& d : c.test.documents)
    if (d.coverage != Coverage::Full)
      throw DataError("test corpus document '" + d.doc_id + "' is not full coverage");
}

PRF mean_prf(const std::vector<const PRF*>& v) {
  PRF m;
  if (v.empty()) return m;
  for (const PRF* p : v) {
    m.precision += p->precision;
    m.recall += p->recall;
    m.f1 += p->f1;
  }
  const double n = static_cast<double>(v.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

}  // namespace

SystemRun run_one(const RunConfig& cfg, int system_id, std::uint64_t seed, const Corpus& full,
                  const Corpus& partial, const Corpus& test, RunLog* log) {
  const SystemConfig sys = SystemConfig::from_id(system_id);
  SolverOptions solver;
  solver.node_cap = cfg.node_cap;

  LearnOptions lo;
  lo.seed = seed;
  lo.solver = solver;
  if (log && log->enabled()) {
    lo.on_iteration = [log, system_id, seed](const IterationRecord& r) {
      log->write({{"record", "iteration"},
                  {"system_id", system_id},
                  {"seed", seed},
                  {"iteration", r.iteration},
                  {"changed_fraction", r.changed_fraction},
                  {"train_examples", r.train_examples},
                  {"local_fallbacks", r.local_fallbacks},
                  {"wall_time", r.wall_time}});
    };
    lo.warn = [log, system_id, seed](const std::string& msg) {
      log->write({{"record", "warning"}, {"system_id", system_id}, {"seed", seed}, {"message", msg}});
    };
  }

  SystemRun run;
  run.system_id = system_id;
  run.seed = seed;

  const Corpus f_train = select(full, {Split::Train});
  const Corpus f_dev = strip_annotations(select(full, {Split::Dev}));
  const Corpus f_dev_gold = select(full, {Split::Dev});
  const Corpus f_all = select(full, {Split::Train, Split::Dev});

  run.chosen_epochs = cfg.epochs_grid.front();
  if (cfg.epochs_grid.size() > 1 && !f_dev.documents.empty()) {
    double best = -1.0;
    for (int e : cfg.epochs_grid) {
      lo.epochs = e;
      const TrainedSystem ts = run_system(sys, f_train, partial, cfg.convergence, lo);
      const auto pred = predict_corpus(f_dev, ts.model, cfg.test_inference, false, solver);
      const BucketCounts c = count_pairwise(pred, f_dev_gold).at(Bucket::Overall);
      const double f = make_prf(c.correct, c.predicted, c.gold).f1;
      run.dev_scores.push_back({e, f});
      if (f > best) {
        best = f;
        run.chosen_epochs = e;
      }
    }
  }

  lo.epochs = run.chosen_epochs;
  const TrainedSystem ts = run_system(sys, f_all, partial, cfg.convergence, lo);
  run.bootstrap_iterations = ts.iterations;

  // Inference sees label-stripped copies; gold labels enter only below.
  const Corpus blind = strip_annotations(test);
  const auto pred = predict_corpus(blind, ts.model, cfg.test_inference, false, solver, log);
  run.metrics = evaluate(pred, test);

  for (std::size_t d = 0; d < test.documents.size(); ++d)
    for (const auto& [k, e] : test.documents[d].edges)
      run.correctness.push_back(pred[d].labels.at(k) == *e.label);
  return run;
}

ExperimentResult run_experiment(const RunConfig& cfg, RunLog* log) {
  cfg.validate();

  // Corpora per seed. With fixed corpus files every seed shares them.
  std::vector<SeedCorpora> corpora;
  if (!cfg.paths.full.empty()) {
    corpora.push_back(corpora_for(cfg, 0));
    check_roles(corpora.back());
  } else {
    for (std::uint64_t s : cfg.seeds) {
      corpora.push_back(corpora_for(cfg, s));
      check_roles(corpora.back());
    }
  }
  const auto corpora_of = [&](std::size_t seed_index) -> const SeedCorpora& {
    return corpora.size() == 1 ? corpora.front() : corpora[seed_index];
  };

  struct Task {
    int system_id;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  for (int id : cfg.systems)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) tasks.push_back({id, s});

  ExperimentResult result;
  result.runs.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      const SeedCorpora& c = corpora_of(t.seed_index);
      const std::uint64_t seed = cfg.seeds[t.seed_index];
      try {
        result.runs[i] = run_one(cfg, t.system_id, seed, c.full, c.partial, c.test, log);
      } catch (const SolverError& e) {
        result.runs[i].system_id = t.system_id;
        result.runs[i].seed = seed;
        result.runs[i].error = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(tasks.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  // Machine-readable records; everything below is in task order.
  std::string& rec = result.records;
  rec += ojson{{"record", "config"}, {"config", cfg.to_json()}}.dump() + '\n';
  for (const auto& run : result.runs) {
    if (run.error) {
      result.any_failed = true;
      rec += ojson{{"record", "failure"},
                   {"system_id", run.system_id},
                   {"seed", run.seed},
                   {"error", *run.error}}
                 .dump() +
             '\n';
      continue;
    }
    ojson dev = ojson::array();
    for (const auto& [e, f] : run.dev_scores) dev.push_back({e, f});
    rec += ojson{{"record", "run"},
                 {"system_id", run.system_id},
                 {"seed", run.seed},
                 {"epochs", run.chosen_epochs},
                 {"bootstrap_iterations", run.bootstrap_iterations},
                 {"awareness_skipped", run.metrics.awareness_skipped},
                 {"dev", dev}}
               .dump() +
           '\n';
    const std::pair<const char*, const PRF*> groups[] = {
        {"same", &run.metrics.same},
        {"nearby", &run.metrics.nearby},
        {"overall", &run.metrics.overall},
        {"awareness", &run.metrics.awareness}};
    for (const auto& [name, m] : groups)
      rec += ojson{{"record", "seed_metrics"},
                   {"system_id", run.system_id},
                   {"seed", run.seed},
                   {"bucket", name},
                   {"P", m->precision},
                   {"R", m->recall},
                   {"F", m->f1}}
                 .dump() +
             '\n';
  }

  for (int id : cfg.systems) {
    std::vector<const PRF*> same, nearby, overall, aware;
    for (const auto& run : result.runs) {
      if (run.system_id != id || run.error) continue;
      same.push_back(&run.metrics.same);
      nearby.push_back(&run.metrics.nearby);
      overall.push_back(&run.metrics.overall);
      aware.push_back(&run.metrics.awareness);
    }
    MetricsRow row;
    row.system_id = id;
    row.description = SystemConfig::from_id(id).describe();
    row.same = mean_prf(same);
    row.nearby = mean_prf(nearby);
    row.overall = mean_prf(overall);
    row.awareness = mean_prf(aware);
    result.mean_rows.push_back(row);
  }
  rec += report_records(result.mean_rows);

  // McNemar on per-edge correctness pooled over seeds.
  const auto pooled = [&](int id) -> std::optional<std::vector<bool>> {
    std::vector<bool> v;
    bool seen = false;
    for (const auto& run : result.runs) {
      if (run.system_id != id) continue;
      if (run.error) return std::nullopt;
      seen = true;
      v.insert(v.end(), run.correctness.begin(), run.correctness.end());
    }
    if (!seen) return std::nullopt;
    return v;
  };
  for (const auto [a, b] : {std::pair{9, 1}, std::pair{9, 5}}) {
    const auto va = pooled(a), vb = pooled(b);
    if (!va || !vb) continue;
    McNemarRecord m{a, b, mcnemar({*va, *vb})};
    result.significance.push_back(m);
    rec += ojson{{"record", "mcnemar"},
                 {"system_a", a},
                 {"system_b", b},
                 {"a_only", m.result.a_only},
                 {"b_only", m.result.b_only},
                 {"statistic", m.result.statistic},
                 {"p_value", m.result.p_value}}
               .dump() +
           '\n';
  }

  std::ostringstream text;
  text << render_report(result.mean_rows);
  for (const auto& m : result.significance)
    text << "McNemar system " << m.system_a << " vs " << m.system_b << ": b=" << m.result.a_only
         << " c=" << m.result.b_only << " chi2=" << m.result.statistic
         << " p=" << m.result.p_value << '\n';
  for (const auto& run : result.runs)
    if (run.error)
      text << "FAILED system " << run.system_id << " seed " << run.seed << ": " << *run.error
           << '\n';
  result.text_report = text.str();
  return result;
}

}  // namespace temprel
