#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <boolrule/project.hpp>
#include <boolrule/ruleset.hpp>

#include "support/oracle.hpp"
#include "support/tempdir.hpp"

using namespace boolrule;
using testing_support::TempDir;

namespace {

LabelSet labels() { return LabelSet({"A", "B", "C"}); }

Corpus small_corpus() {
  Corpus c;
  c.add("d1", "we cannot conclude", {"A"});
  c.add("d2", "it is apparent", {"A"});
  c.add("d3", "the evidence shows", {"B"});
  c.add("d4", "we cannot find evidence", {"B"});
  c.add("d5", "nothing here", {"C"});
  return c;
}

}  // namespace

TEST(RuleSet, AddListRemove) {
  RuleSet rs;
  const auto id1 = rs.add_rule(labels(), "A", parse_query("cannot OR apparent"), "first");
  const auto id2 = rs.add_rule(labels(), "A", parse_query("conclude"), "");
  const auto listed = rs.list_rules("A");
  ASSERT_EQ(listed.size(), 2u);
  EXPECT_EQ(listed[0].id, id1);
  EXPECT_EQ(listed[1].id, id2);
  EXPECT_EQ(print_query(listed[0].query), "cannot OR apparent");
  EXPECT_EQ(rs.class_priority(), (std::vector<std::string>{"A"}));

  EXPECT_THROW(rs.remove_rule("r99"), RuleSetError);
  EXPECT_THROW(rs.add_rule(labels(), "Z", parse_query("x"), ""), RuleSetError);
  rs.remove_rule(id1);
  EXPECT_EQ(rs.class_priority(), (std::vector<std::string>{"A"}));
  rs.remove_rule(id2);
  EXPECT_TRUE(rs.class_priority().empty());
  EXPECT_TRUE(rs.empty());
}

TEST(RuleSet, FailedMutationLeavesStateUnchanged) {
  RuleSet rs;
  rs.add_rule(labels(), "A", parse_query("x"), "");
  const RuleSet before = rs;
  EXPECT_THROW(rs.add_rule(labels(), "nope", parse_query("y"), ""), RuleSetError);
  EXPECT_THROW(rs.remove_rule("missing"), RuleSetError);
  EXPECT_EQ(rs, before);
}

TEST(RuleSet, EffectiveQueryFoldsInOrder) {
  RuleSet rs;
  const auto q1 = parse_query("cannot"), q2 = parse_query("apparent"), q3 = parse_query("x AND y");
  rs.add_rule(labels(), "A", q1, "");
  EXPECT_EQ(*rs.effective_query("A"), *q1);
  rs.add_rule(labels(), "A", q2, "");
  EXPECT_EQ(print_query(rs.effective_query("A")), "cannot OR apparent");
  rs.add_rule(labels(), "A", q3, "");
  EXPECT_EQ(*rs.effective_query("A"), *make_or(make_or(q1, q2), q3));
  EXPECT_THROW(rs.effective_query("B"), RuleSetError);
}

TEST(Classify, EmptyAndSingleAndOverlap) {
  const Corpus c = small_corpus();
  const InvertedIndex idx(c);
  RuleSet rs;
  EXPECT_TRUE(classify(rs, idx, all_docs(c.size())).empty());
  rs.add_rule(c.labels(), "A", parse_query("cannot"), "");
  auto m = classify(rs, idx, all_docs(c.size()));
  EXPECT_EQ(m.at("A"), (DocSet{0, 3}));
  rs.add_rule(c.labels(), "B", parse_query("evidence"), "");
  m = classify(rs, idx, all_docs(c.size()));
  EXPECT_TRUE(contains(m.at("A"), 3) && contains(m.at("B"), 3));  // d4 matches both
}

TEST(Classify, EqualsOracleAndIsMonotone) {
  oracle::CorpusGen gen(31);
  for (int trial = 0; trial < 60; ++trial) {
    const Corpus c = gen.corpus(100);
    const InvertedIndex idx(c);
    RuleSet rs;
    std::map<std::string, DocSet> prev;
    for (int k = 0; k < 6; ++k) {
      const auto& cls = c.labels().names()[gen.uniform(c.labels().size())];
      rs.add_rule(c.labels(), cls, gen.query(3), "");
      const auto U = all_docs(c.size());
      const auto m = classify(rs, idx, U);
      for (const auto& [name, set] : m) {
        EXPECT_EQ(set, oracle::naive_eval(*rs.effective_query(name), c, U));
        if (prev.count(name)) EXPECT_TRUE(std::includes(set.begin(), set.end(), prev[name].begin(), prev[name].end()));
      }
      prev = m;
    }
    // Single-label prediction picks the first matching class in priority order.
    for (DocOrdinal d = 0; d < c.size(); ++d) {
      const auto got = predict_single_label(rs, idx, d);
      std::optional<std::string> expected;
      for (const auto& cls : rs.class_priority())
        if (!expected && contains(prev[cls], d)) expected = cls;
      EXPECT_EQ(got, expected);
    }
  }
}

TEST(PredictSingleLabel, PriorityOrder) {
  const Corpus c = small_corpus();
  const InvertedIndex idx(c);
  RuleSet rs;
  rs.add_rule(c.labels(), "C", parse_query("nothing"), "");
  rs.add_rule(c.labels(), "A", parse_query("cannot"), "");
  rs.add_rule(c.labels(), "B", parse_query("evidence"), "");
  // d4 matches A (position 2) and B (position 3).
  EXPECT_EQ(predict_single_label(rs, idx, 3), "A");
  rs.set_class_priority({"B", "A", "C"});
  EXPECT_EQ(predict_single_label(rs, idx, 3), "B");
  EXPECT_EQ(predict_single_label(rs, idx, 1), std::nullopt);
  EXPECT_THROW(rs.set_class_priority({"A", "B"}), RuleSetError);

  RuleSet single;
  single.add_rule(c.labels(), "A", parse_query("cannot"), "");
  EXPECT_EQ(predict_single_label(single, idx, 0), "A");
}

TEST(Project, SaveLoadSaveIsByteIdentical) {
  const Corpus c = small_corpus();
  Project p;
  p.corpus = {"corpus.jsonl", sha256_hex("x")};
  p.split = split_corpus(c, kDefaultRatios, 9);
  p.rules.add_rule(c.labels(), "A", parse_query("cannot OR apparent"), "note \"quoted\"", "2026-01-01T00:00:00Z");
  p.rules.add_rule(c.labels(), "B", parse_query("NOT (a OR \"or\") AND \"we cannot find\""), "", "2026-01-02T00:00:00Z");
  const auto text = save_project(p, c);
  const Project loaded = load_project(text, c);
  EXPECT_EQ(loaded, p);
  EXPECT_EQ(save_project(loaded, c), text);
}

TEST(Project, DistinctLoadErrors) {
  const Corpus c = small_corpus();
  Project p;
  p.corpus = {"corpus.jsonl", "00"};
  p.rules.add_rule(c.labels(), "A", parse_query("cannot"), "", "t");
  auto text = save_project(p, c);

  auto kind_of = [&](const std::string& t) {
    try {
      load_project(t, c);
    } catch (const ProjectError& e) {
      return e.kind();
    }
    return ProjectError::Kind::Io;  // sentinel: no error
  };
  auto version = text;
  version.replace(version.find("\"format_version\": 1"), 19, "\"format_version\": 7");
  EXPECT_EQ(kind_of(version), ProjectError::Kind::UnknownVersion);
  auto bad_query = text;
  bad_query.replace(bad_query.find("\"query\": \"cannot\""), 17, "\"query\": \"cannot AND\"");
  EXPECT_EQ(kind_of(bad_query), ProjectError::Kind::BadQuery);
  EXPECT_EQ(kind_of("{"), ProjectError::Kind::Malformed);
}

TEST(Workspace, HashMismatchDetectedOnOpen) {
  TempDir dir;
  const auto corpus_path = dir.path / "c.jsonl";
  {
    std::ofstream out(corpus_path);
    write_jsonl(small_corpus(), out);
  }
  auto ws = Workspace::create(corpus_path, dir.path / "p.json");
  EXPECT_EQ(ws.project.corpus.path, "c.jsonl");
  ws.project.split = split_corpus(ws.corpus, kDefaultRatios, 1);
  ws.save();
  const auto reopened = Workspace::open(dir.path / "p.json");
  EXPECT_EQ(reopened.project, ws.project);
  EXPECT_EQ(reopened.corpus, ws.corpus);

  {
    std::ofstream out(corpus_path, std::ios::app);
    out << R"({"id":"extra","text":"x","labels":["A"]})" << '\n';
  }
  try {
    Workspace::open(dir.path / "p.json");
    FAIL();
  } catch (const ProjectError& e) {
    EXPECT_EQ(e.kind(), ProjectError::Kind::HashMismatch);
  }
}
