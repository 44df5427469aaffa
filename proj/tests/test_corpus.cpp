#include "doctest.h"

#include <filesystem>
#include <random>

#include "support.hpp"
#include "temprel/corpus.hpp"
#include "temprel/error.hpp"

using namespace temprel;
using testing_support::make_doc;

namespace {

const CompositionTable& T() { return default_table(); }

// Labels for (0,2) that some assignment consistent with the clamped
// triangle admits, by direct scan over the composition table.
LabelSet brute_force_domain(RelLabel ab, RelLabel bc) {
  LabelSet out;
  for (RelLabel ac : kAllLabels) {
    const bool ok = T().compose(ab, bc).contains(ac) &&
                    T().compose(inverse(ab), ac).contains(bc) &&
                    T().compose(ac, inverse(bc)).contains(ab);
    if (ok) out.insert(ac);
  }
  return out;
}

}  // namespace

TEST_CASE("candidate edges follow the sentence window") {
  CHECK(candidate_edges(make_doc("a", {0, 0, 0})).size() == 3);
  CHECK(candidate_edges(make_doc("b", {0})).empty());
  const auto e = candidate_edges(make_doc("c", {0, 0, 1, 2}));
  const std::vector<EdgeKey> expect{{0, 1}, {0, 2}, {1, 2}, {2, 3}};
  CHECK(e == expect);
  CHECK(candidate_edges(make_doc("d", {0, 0, 1, 2}, {}, 2)).size() == 6);
}

TEST_CASE("reading an edge backwards inverts its label") {
  const Document d = make_doc("x", {0, 0}, {{{0, 1}, RelLabel::Includes}});
  CHECK(d.label(0, 1) == RelLabel::Includes);
  CHECK(d.label(1, 0) == RelLabel::IsIncluded);
  CHECK(d.sentence_distance({0, 1}) == 0);
}

TEST_CASE("Fig. 1 interval analog") {
  const Document d = make_doc("fig1", {0, 0, 0},
                              {{{0, 1}, RelLabel::Before}, {{1, 2}, RelLabel::Vague}});
  const DomainMap dom = propagate_domains(d, T());
  const LabelSet d13 = dom.at({0, 2});
  CHECK_FALSE(d13.contains(RelLabel::After));
  CHECK_FALSE(d13.contains(RelLabel::Simultaneous));
  CHECK(d13 == brute_force_domain(RelLabel::Before, RelLabel::Vague));
  CHECK(d13 == LabelSet::of({RelLabel::Before, RelLabel::IsIncluded, RelLabel::Vague}));
  CHECK(dom.at({0, 1}) == LabelSet::of(RelLabel::Before));
}

TEST_CASE("no annotations leaves every domain full") {
  for (const auto& [k, s] : propagate_domains(make_doc("u", {0, 0, 1, 1}), T()))
    CHECK(s.is_full());
}

TEST_CASE("consistency check") {
  using enum RelLabel;
  const Document bad = make_doc("bad", {0, 0, 0}, {{{0, 1}, Before}, {{1, 2}, Before},
                                                    {{0, 2}, Vague}});
  const ConsistencyReport r = check_consistency(bad, T());
  CHECK_FALSE(r.ok);
  CHECK_FALSE(r.conflicts.empty());
  const Document good = make_doc("good", {0, 0, 0}, {{{0, 1}, Before}, {{1, 2}, Before},
                                                      {{0, 2}, Before}});
  CHECK(check_consistency(good, T()).ok);
  CHECK(check_consistency(make_doc("none", {0, 0, 1}), T()).ok);
}

TEST_CASE("propagation is monotone, idempotent and order independent") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    const auto tl = testing_support::random_timeline(rng, 6);
    const LabelGraph full = testing_support::complete_graph(tl);
    std::map<EdgeKey, RelLabel> clamps;
    for (const auto& [k, r] : full)
      if (rng() % 3 == 0) clamps.emplace(k, r);
    const Document d = make_doc("p", {0, 0, 0, 0, 0, 0}, clamps);
    CHECK(check_consistency(d, T()).ok);

    const ConstraintGraph g(candidate_edges(d));
    std::vector<LabelSet> init;
    for (EdgeKey k : g.edges())
      init.push_back(clamps.count(k) ? LabelSet::of(clamps.at(k)) : LabelSet::full());

    std::vector<LabelSet> forward = init;
    REQUIRE(propagate(g, T(), forward));
    for (std::size_t i = 0; i < init.size(); ++i) {
      CHECK((forward[i] & init[i]) == forward[i]);
      // The generating timeline survives propagation.
      CHECK(forward[i].contains(full.at(g.edges()[i])));
    }

    std::vector<LabelSet> again = forward;
    REQUIRE(propagate(g, T(), again));
    CHECK(again == forward);

    std::vector<std::size_t> order(g.triangles().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
    std::vector<LabelSet> backward = init;
    REQUIRE(propagate(g, T(), backward, order));
    CHECK(backward == forward);
  }
}

TEST_CASE("corpus round trip") {
  Corpus c;
  c.documents.push_back(make_doc("d1", {0, 0, 1}, {{{0, 1}, RelLabel::After}}));
  Document full = make_doc("d2", {0, 1},
                           {{{0, 1}, RelLabel::Simultaneous}});
  full.split = Split::Test;
  c.documents.push_back(full);
  const std::string text = serialize_corpus(c);
  const Corpus back = parse_corpus(text);
  CHECK(back == c);
  CHECK(serialize_corpus(back) == text);

  const auto path = std::filesystem::temp_directory_path() / "temprel_corpus_rt.jsonl";
  save_corpus(c, path);
  CHECK(load_corpus(path) == c);
  std::filesystem::remove(path);

  CHECK(parse_corpus(serialize_corpus(Corpus{})).documents.empty());
}

TEST_CASE("corpus parse errors") {
  const std::string header = R"({"format":"temprel-corpus","version":1})";
  const std::string doc_prefix =
      R"({"doc_id":"x","split":"train","coverage":"partial","window":1,)"
      R"("events":[{"id":0,"sentence":0},{"id":1,"sentence":0}],"edges":[)";
  CHECK_THROWS_AS(parse_corpus(header + "\n" + doc_prefix +
                               R"({"src":0,"dst":1,"label":"overlaps","annotated":true,"features":[]}]})"),
                  ValidationError);
  CHECK_THROWS_AS(parse_corpus(header + "\n" + doc_prefix +
                               R"({"src":1,"dst":0,"annotated":false,"features":[]}]})"),
                  ValidationError);
  try {
    parse_corpus(header + "\n{not json");
    FAIL("expected a parse error");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse_corpus(""), DataError);
  CHECK_THROWS_AS(load_corpus("/nonexistent/dir/c.jsonl"), IoError);
}

TEST_CASE("document validation") {
  Document d = make_doc("v", {0, 1});
  d.nodes[1].sentence = -1;
  CHECK_THROWS_AS(d.validate(), ValidationError);
  Corpus c;
  c.documents = {make_doc("same", {0}), make_doc("same", {0})};
  CHECK_THROWS_AS(c.validate(), ValidationError);
}
