#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "temprel/experiment.hpp"

namespace fs = std::filesystem;
using namespace temprel;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "temprel");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

const char* kSmallConfig = R"({
  "gen": {"n_docs": 44, "events_per_doc": [5, 8], "seed": 3},
  "epochs_grid": [1, 2],
  "seeds": [1, 2],
  "systems": [1, 5, 9],
  "convergence": {"max_iterations": 2, "change_threshold": 0.01}
})";

}  // namespace

TEST_CASE("table subcommand") {
  const Result r = cli({"table"});
  CHECK(r.code == exit_code::kOk);
  CHECK(r.out.find("{before}") != std::string::npos);
  CHECK(r.out == cli({"table"}).out);
  // The vague row is the full set.
  const auto vague_row = r.out.rfind("\nvague");
  REQUIRE(vague_row != std::string::npos);
  const std::string full = "{before, after, includes, is_included, simultaneous, vague}";
  CHECK(r.out.find(full, vague_row) != std::string::npos);

#ifdef TEMPREL_CLI_PATH
  const std::string cmd = std::string(TEMPREL_CLI_PATH) + " table > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
#endif
}

TEST_CASE("exit codes per failure class") {
  CHECK(cli({"no-such-command"}).code == exit_code::kConfig);
  CHECK(cli({"train", "--system", "12"}).code == exit_code::kConfig);
  CHECK(cli({"mcnemar"}).code == exit_code::kConfig);

  TempDir dir("temprel_cli_codes");
  write(dir.path / "bad.json", R"({"seeds": []})");
  CHECK(cli({"--config", (dir.path / "bad.json").string(), "experiment"}).code ==
        exit_code::kConfig);
  write(dir.path / "unknown.json", R"({"colour": 1})");
  CHECK(cli({"--config", (dir.path / "unknown.json").string(), "table"}).code == exit_code::kOk);
  CHECK(cli({"--config", (dir.path / "unknown.json").string(), "experiment"}).code ==
        exit_code::kConfig);

  CHECK(cli({"infer", "--model", (dir.path / "none.json").string(), "--input",
             (dir.path / "none.jsonl").string()})
            .code == exit_code::kIo);

  write(dir.path / "gold.jsonl", "{\"format\":\"temprel-corpus\",\"version\":1}\n{broken\n");
  write(dir.path / "pred.jsonl", "");
  CHECK(cli({"eval", "--pred", (dir.path / "pred.jsonl").string(), "--gold",
             (dir.path / "gold.jsonl").string()})
            .code == exit_code::kData);

  write(dir.path / "cap.json",
        R"({"gen": {"n_docs": 44, "events_per_doc": [10, 12], "sentences_per_doc": [2, 2]},
            "seeds": [1], "systems": [1], "epochs_grid": [1], "node_cap": 1})");
  const Result capped =
      cli({"--config", (dir.path / "cap.json").string(), "--out",
           (dir.path / "cap.jsonl").string(), "experiment"});
  CHECK(capped.code == exit_code::kSolver);
  CHECK(capped.out.find("FAILED") != std::string::npos);
}

TEST_CASE("gen writes reproducible corpora and statistics") {
  TempDir a("temprel_cli_gen_a"), b("temprel_cli_gen_b");
  TempDir cfgdir("temprel_cli_gen_cfg");
  write(cfgdir.path / "c.json", R"({"gen": {"n_docs": 44}})");
  const std::string cfg = (cfgdir.path / "c.json").string();
  const Result r1 = cli({"--config", cfg, "--seed", "5", "--out", a.path.string(), "gen"});
  const Result r2 = cli({"--config", cfg, "--seed", "5", "--out", b.path.string(), "gen"});
  REQUIRE(r1.code == exit_code::kOk);
  REQUIRE(r2.code == exit_code::kOk);
  CHECK(r1.out == r2.out);
  CHECK(r1.out.find("partial  docs=") != std::string::npos);
  CHECK(r1.out.find("ratio=") != std::string::npos);
  for (const char* f : {"full.jsonl", "partial.jsonl", "test.jsonl"}) {
    CHECK(fs::exists(a.path / f));
    CHECK(slurp(a.path / f) == slurp(b.path / f));
  }

  write(cfgdir.path / "zero.json", R"({"gen": {"n_docs": 0}})");
  TempDir z("temprel_cli_gen_zero");
  const Result r0 =
      cli({"--config", (cfgdir.path / "zero.json").string(), "--out", z.path.string(), "gen"});
  CHECK(r0.code == exit_code::kOk);
  CHECK(r0.out.find("docs=0 ") != std::string::npos);
  CHECK(r0.out.find("edges=0 ") != std::string::npos);
  CHECK(r0.out.find("annotated=0 ") != std::string::npos);
  CHECK(r0.out.find("ratio=0.0%") != std::string::npos);
}

TEST_CASE("train, infer, eval and mcnemar round trip") {
  TempDir d("temprel_cli_pipeline");
  write(d.path / "c.json", R"({"gen": {"n_docs": 44, "seed": 2}})");
  const std::string cfg = (d.path / "c.json").string();
  REQUIRE(cli({"--config", cfg, "--out", d.path.string(), "gen"}).code == 0);

  const std::string m1 = (d.path / "m1.json").string(), m9 = (d.path / "m9.json").string();
  REQUIRE(cli({"--config", cfg, "--out", m1, "train", "--system", "1", "--epochs", "2", "--data",
               d.path.string()})
              .code == 0);
  const Result boot = cli({"--config", cfg, "--out", m9, "bootstrap", "--mode", "global",
                           "--epochs", "2", "--data", d.path.string()});
  REQUIRE(boot.code == 0);
  CHECK(boot.out.find("\"record\":\"iteration\"") != std::string::npos);

  const std::string test = (d.path / "test.jsonl").string();
  const std::string p1 = (d.path / "p1.jsonl").string(), p9 = (d.path / "p9.jsonl").string();
  REQUIRE(cli({"--out", p1, "infer", "--model", m1, "--input", test}).code == 0);
  REQUIRE(cli({"--out", p9, "infer", "--model", m9, "--input", test}).code == 0);
  const auto first = nlohmann::json::parse(slurp(p1).substr(0, slurp(p1).find('\n')));
  CHECK(first.contains("doc_id"));
  CHECK(first.at("labels").is_array());

  const Result ev = cli({"eval", "--pred", p1, "--gold", test});
  CHECK(ev.code == 0);
  CHECK(ev.out.find("Overall") != std::string::npos);

  const Result mc = cli({"mcnemar", "--pred-a", p9, "--pred-b", p1, "--gold", test});
  CHECK(mc.code == 0);
  CHECK(mc.out.find("p_value") != std::string::npos);

  const Result counts = cli({"mcnemar", "--b", "10", "--c", "2"});
  const auto rec = nlohmann::json::parse(counts.out);
  CHECK(std::abs(rec.at("p_value").get<double>() - 0.0433) < 1e-3);
}

TEST_CASE("experiment reports are byte-identical across runs") {
  TempDir d("temprel_cli_experiment");
  write(d.path / "c.json", kSmallConfig);
  const std::string cfg = (d.path / "c.json").string();
  const Result a = cli({"--config", cfg, "--out", (d.path / "a.jsonl").string(), "experiment"});
  const Result b = cli({"--config", cfg, "--out", (d.path / "b.jsonl").string(), "experiment"});
  const Result c = cli({"--config", cfg, "--jobs", "2", "--out", (d.path / "c.jsonl").string(),
                        "experiment"});
  REQUIRE(a.code == exit_code::kOk);
  REQUIRE(b.code == exit_code::kOk);
  REQUIRE(c.code == exit_code::kOk);
  const std::string ra = slurp(d.path / "a.jsonl");
  CHECK(ra == slurp(d.path / "b.jsonl"));
  CHECK(a.out == b.out);
  // Worker count only shows up in the echoed config line.
  const auto body = [](const std::string& s) { return s.substr(s.find('\n')); };
  CHECK(body(ra) == body(slurp(d.path / "c.jsonl")));

  std::istringstream lines(ra);
  std::string line;
  int mean_rows = 0, mcnemar_rows = 0;
  bool echoed_config = false;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    if (!j.contains("record")) mean_rows += j.at("bucket") == "overall";
    else if (j.at("record") == "mcnemar") ++mcnemar_rows;
    else if (j.at("record") == "config") echoed_config = j.at("config").contains("gen");
  }
  CHECK(mean_rows == 3);
  CHECK(mcnemar_rows == 2);
  CHECK(echoed_config);
}
