#include <CLI11.hpp>

#include <fstream>
#include <sstream>

#include "temprel/error.hpp"
#include "temprel/experiment.hpp"

namespace temprel {

namespace {

using ojson = nlohmann::ordered_json;

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  std::string log;
  std::string test_inference;
};

RunConfig load_config(const GlobalFlags& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : RunConfig::load(g.config);
  if (g.jobs) cfg.jobs = *g.jobs;
  if (!g.test_inference.empty()) {
    if (g.test_inference == "global") cfg.test_inference = BootstrapMode::Global;
    else if (g.test_inference == "local") cfg.test_inference = BootstrapMode::Local;
    else throw ConfigError("--test-inference must be 'global' or 'local'");
  }
  cfg.validate();
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string require(const std::string& flag_value, const std::string& config_value,
                    const char* what) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  throw ConfigError(std::string("no ") + what + " path given");
}

// Predictions: one line per document, {"doc_id", "labels": [[src, dst, label], ...]}.
std::string serialize_predictions(const std::vector<DocumentPrediction>& preds) {
  std::string out;
  for (const auto& p : preds) {
    ojson labels = ojson::array();
    for (const auto& [k, r] : p.labels) labels.push_back({k.src, k.dst, std::string(to_string(r))});
    out += ojson{{"doc_id", p.doc_id}, {"labels", labels}}.dump() + '\n';
  }
  return out;
}

std::vector<DocumentPrediction> load_predictions(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<DocumentPrediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      DocumentPrediction p;
      p.doc_id = j.at("doc_id").get<std::string>();
      for (const auto& e : j.at("labels")) {
        const auto label = parse_label(e.at(2).get<std::string>());
        if (!label) throw ValidationError("unknown label '" + e.at(2).get<std::string>() + "'", lineno);
        p.labels.emplace(EdgeKey{e.at(0).get<int>(), e.at(1).get<int>()}, *label);
      }
      out.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(e.what(), lineno);
    }
  }
  return out;
}

std::string corpus_stats(const char* name, const Corpus& c) {
  const std::size_t total = c.total_edges(), annotated = c.annotated_edges();
  const double ratio = total ? static_cast<double>(annotated) / static_cast<double>(total) : 0.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s docs=%-5zu edges=%-7zu annotated=%-7zu ratio=%s%%\n", name,
                c.documents.size(), total, annotated, format_percent(ratio).c_str());
  return buf;
}

std::string row_text(const std::vector<DocumentPrediction>& pred, const Corpus& gold, int id,
                     const std::string& description, EvaluationResult* result_out) {
  const EvaluationResult r = evaluate(pred, gold);
  if (result_out) *result_out = r;
  MetricsRow row{id, description, r.same, r.nearby, r.overall, r.awareness};
  return render_report({row});
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal relation extraction from partially annotated data"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--seed", g.seed, "Seed override");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output path");
  app.add_option("--log", g.log, "Run log (line-delimited records)");
  app.add_option("--test-inference", g.test_inference, "global (default) or local")
      ->check(CLI::IsMember({"global", "local"}));

  auto* gen = app.add_subcommand("gen", "Generate F, P and test corpora");

  int system_id = 1;
  int epochs = 5;
  auto* train = app.add_subcommand("train", "Train a system (ids 1-9) and save the model");
  train->add_option("--system", system_id, "System id")->check(CLI::Range(1, 9));
  train->add_option("--epochs", epochs, "Perceptron epochs")->check(CLI::PositiveNumber);

  std::string data_dir;
  train->add_option("--data", data_dir, "Directory holding full.jsonl and partial.jsonl");

  std::string boot_mode = "global";
  auto* boot = app.add_subcommand("bootstrap", "Bootstrap on F + P and save the model");
  boot->add_option("--mode", boot_mode, "local or global")->check(CLI::IsMember({"local", "global"}));
  boot->add_option("--epochs", epochs, "Perceptron epochs")->check(CLI::PositiveNumber);
  boot->add_option("--data", data_dir, "Directory holding full.jsonl and partial.jsonl");

  std::string model_path, input_path;
  bool clamp = false;
  auto* infer = app.add_subcommand("infer", "Label a corpus with a trained model");
  infer->add_option("--model", model_path, "Model JSON");
  infer->add_option("--input", input_path, "Corpus to label")->required();
  infer->add_flag("--clamp", clamp, "Keep annotated labels fixed");

  std::string pred_path, gold_path;
  auto* eval = app.add_subcommand("eval", "Score predictions against a gold corpus");
  eval->add_option("--pred", pred_path, "Predictions file")->required();
  eval->add_option("--gold", gold_path, "Gold corpus")->required();

  auto* table = app.add_subcommand("table", "Print the composition table");

  auto* experiment = app.add_subcommand("experiment", "Run the system x seed matrix");

  std::optional<std::size_t> b_count, c_count;
  std::string pred_a, pred_b;
  auto* mcn = app.add_subcommand("mcnemar", "McNemar test from counts or two prediction files");
  mcn->add_option("--b", b_count, "Edges only system A gets right");
  mcn->add_option("--c", c_count, "Edges only system B gets right");
  mcn->add_option("--pred-a", pred_a, "Predictions of system A");
  mcn->add_option("--pred-b", pred_b, "Predictions of system B");
  mcn->add_option("--gold", gold_path, "Gold corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, e2;
    const int code = app.exit(e, o, e2);
    out << o.str();
    err << e2.str();
    return code == 0 ? exit_code::kOk : exit_code::kConfig;
  }

  try {
    std::ofstream log_file;
    if (!g.log.empty()) {
      log_file.open(g.log, std::ios::binary);
      if (!log_file) throw IoError("cannot write " + g.log);
    }
    RunLog log(g.log.empty() ? nullptr : &log_file);

    if (table->parsed()) {
      out << default_table().render();
      return exit_code::kOk;
    }

    RunConfig cfg = load_config(g);

    if (gen->parsed()) {
      if (g.seed) cfg.gen.seed = *g.seed;
      const auto corpora = gen_corpus(cfg.gen);
      std::filesystem::path full = cfg.paths.full, partial = cfg.paths.partial,
                            test = cfg.paths.test;
      if (!g.out.empty() || full.empty()) {
        const std::filesystem::path dir = g.out.empty() ? "data" : g.out;
        full = dir / "full.jsonl";
        partial = dir / "partial.jsonl";
        test = dir / "test.jsonl";
      }
      write_file(full, serialize_corpus(corpora.full));
      write_file(partial, serialize_corpus(corpora.partial));
      write_file(test, serialize_corpus(corpora.test));
      out << corpus_stats("full", corpora.full) << corpus_stats("partial", corpora.partial)
          << corpus_stats("test", corpora.test);
      return exit_code::kOk;
    }

    if (train->parsed() || boot->parsed()) {
      const std::filesystem::path dir = data_dir;
      const Corpus full = load_corpus(
          require(data_dir.empty() ? "" : (dir / "full.jsonl").string(), cfg.paths.full, "full corpus"));
      const Corpus partial = load_corpus(require(
          data_dir.empty() ? "" : (dir / "partial.jsonl").string(), cfg.paths.partial, "partial corpus"));
      LearnOptions lo;
      lo.epochs = epochs;
      lo.seed = g.seed.value_or(cfg.seeds.front());
      lo.solver.node_cap = cfg.node_cap;
      lo.on_iteration = [&](const IterationRecord& r) {
        const ojson rec{{"record", "iteration"},
                        {"iteration", r.iteration},
                        {"changed_fraction", r.changed_fraction},
                        {"train_examples", r.train_examples},
                        {"local_fallbacks", r.local_fallbacks},
                        {"wall_time", r.wall_time}};
        out << rec.dump() << '\n';
        log.write(rec);
      };
      lo.warn = [&](const std::string& m) { err << "warning: " << m << '\n'; };
      TrainedSystem ts;
      if (train->parsed()) {
        ts = run_system(SystemConfig::from_id(system_id), full, partial, cfg.convergence, lo);
      } else {
        const BootstrapMode mode =
            boot_mode == "local" ? BootstrapMode::Local : BootstrapMode::Global;
        ts = bootstrap(full, partial, mode, cfg.convergence, lo);
      }
      write_file(require(g.out, cfg.paths.model, "model output"), ts.model.serialize());
      return exit_code::kOk;
    }

    if (infer->parsed()) {
      const std::string path = require(model_path, cfg.paths.model, "model");
      WeightMatrix model;
      try {
        model = WeightMatrix::from_json(nlohmann::json::parse(read_file(path)));
      } catch (const nlohmann::json::exception& e) {
        throw DataError("model " + path + ": " + e.what());
      }
      Corpus docs = load_corpus(input_path);
      if (!clamp) docs = strip_annotations(docs);
      SolverOptions so;
      so.node_cap = cfg.node_cap;
      const auto preds = predict_corpus(docs, model, cfg.test_inference, clamp, so, &log);
      const std::string text = serialize_predictions(preds);
      if (g.out.empty()) out << text;
      else write_file(g.out, text);
      return exit_code::kOk;
    }

    if (eval->parsed()) {
      const auto preds = load_predictions(pred_path);
      const Corpus gold = load_corpus(gold_path);
      EvaluationResult r;
      const std::string text = row_text(preds, gold, 0, "predictions", &r);
      out << text;
      if (r.awareness_skipped)
        err << "warning: " << r.awareness_skipped
            << " document(s) with contradictory predictions left out of awareness\n";
      if (!g.out.empty())
        write_file(g.out,
                   report_records({MetricsRow{0, "predictions", r.same, r.nearby, r.overall,
                                              r.awareness}}));
      return exit_code::kOk;
    }

    if (mcn->parsed()) {
      McNemarResult r;
      if (b_count && c_count) {
        PairedCorrectness pc;
        pc.a.insert(pc.a.end(), *b_count, true);
        pc.b.insert(pc.b.end(), *b_count, false);
        pc.a.insert(pc.a.end(), *c_count, false);
        pc.b.insert(pc.b.end(), *c_count, true);
        r = mcnemar(pc);
      } else if (!pred_a.empty() && !pred_b.empty() && !gold_path.empty()) {
        const auto pa = load_predictions(pred_a), pb = load_predictions(pred_b);
        const Corpus gold = load_corpus(gold_path);
        count_pairwise(pa, gold);
        count_pairwise(pb, gold);
        std::map<std::string, const LabelGraph*> ia, ib;
        for (const auto& p : pa) ia.emplace(p.doc_id, &p.labels);
        for (const auto& p : pb) ib.emplace(p.doc_id, &p.labels);
        PairedCorrectness pc;
        for (const auto& doc : gold.documents)
          for (const auto& [k, e] : doc.edges) {
            pc.a.push_back(ia.at(doc.doc_id)->at(k) == *e.label);
            pc.b.push_back(ib.at(doc.doc_id)->at(k) == *e.label);
          }
        r = mcnemar(pc);
      } else {
        throw ConfigError("mcnemar needs --b and --c, or --pred-a, --pred-b and --gold");
      }
      const std::string rec = ojson{{"record", "mcnemar"},
                                    {"a_only", r.a_only},
                                    {"b_only", r.b_only},
                                    {"statistic", r.statistic},
                                    {"p_value", r.p_value}}
                                  .dump() +
                              '\n';
      out << rec;
      if (!g.out.empty()) write_file(g.out, rec);
      return exit_code::kOk;
    }

    if (experiment->parsed()) {
      if (g.seed) cfg.seeds = {*g.seed};
      const ExperimentResult res = run_experiment(cfg, &log);
      const std::string report_path = !g.out.empty() ? g.out : cfg.paths.report;
      if (!report_path.empty()) write_file(report_path, res.records);
      else out << res.records;
      out << res.text_report;
      return res.any_failed ? exit_code::kSolver : exit_code::kOk;
    }
    return exit_code::kInternal;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::kConfig;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return exit_code::kData;
  } catch (const InconsistentGraphError& e) {
    err << "data error: " << e.what() << '\n';
    return exit_code::kData;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << '\n';
    return exit_code::kSolver;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return exit_code::kIo;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return exit_code::kInternal;
  }
}

}  // namespace temprel
