// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include <boolrule/boolrule.hpp>

#include "support/oracle.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace boolrule;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few mismatches so a failure says what went wrong.
class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (failures_++ < 3) msgs_ << (msgs_.tellp() > 0 ? "; " : "") << what;
  }
  Outcome done(const std::string& summary) const {
    if (failures_ == 0) return {true, summary};
    return {false, std::to_string(failures_) + " failure(s): " + msgs_.str()};
  }

 private:
  std::size_t failures_ = 0;
  std::ostringstream msgs_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Shared by the first two criteria: one case is a fresh corpus and query.
struct EvalCase {
  Corpus corpus;
  QueryPtr a, b;
};

std::vector<EvalCase> eval_cases(std::size_t n) {
  oracle::CorpusGen gen(2024);
  std::vector<EvalCase> cases;
  for (std::size_t i = 0; i < n; ++i) {
    EvalCase c;
    c.corpus = gen.corpus(200);
    c.a = gen.query(gen.uniform(5));
    c.b = gen.query(gen.uniform(5));
    cases.push_back(std::move(c));
  }
  return cases;
}

Outcome evaluator_oracle() {
  const auto t0 = Clock::now();
  Check check;
  const auto cases = eval_cases(1000);
  std::size_t i = 0;
  for (const auto& c : cases) {
    const InvertedIndex idx(c.corpus);
    const auto U = all_docs(c.corpus.size());
    for (const auto& q : {c.a, c.b}) {
      check.require(eval_query(q, idx, U) == oracle::naive_eval(*q, c.corpus, U),
                    "case " + std::to_string(i) + ": " + print_query(q));
    }
    ++i;
  }
  const double secs = seconds_since(t0);
  check.require(secs < 30.0, "runtime " + fmt("%.2f s", secs));
  return check.done("2000 queries over 1000 corpora, " + fmt("%.2f s", secs));
}

Outcome de_morgan_and_containment() {
  Check check;
  oracle::CorpusGen subsets(7);
  std::size_t i = 0;
  for (const auto& c : eval_cases(1000)) {
    const InvertedIndex idx(c.corpus);
    const auto U = all_docs(c.corpus.size());
    const auto tag = "case " + std::to_string(i++);
    const auto A = eval_query(c.a, idx, U), B = eval_query(c.b, idx, U);
    const auto AB = eval_query(make_and(c.a, c.b), idx, U);
    const auto AoB = eval_query(make_or(c.a, c.b), idx, U);
    check.require(eval_query(make_not(make_and(c.a, c.b)), idx, U) ==
                      eval_query(make_or(make_not(c.a), make_not(c.b)), idx, U),
                  tag + " NOT(a AND b)");
    check.require(eval_query(make_not(make_or(c.a, c.b)), idx, U) ==
                      eval_query(make_and(make_not(c.a), make_not(c.b)), idx, U),
                  tag + " NOT(a OR b)");
    check.require(std::includes(A.begin(), A.end(), AB.begin(), AB.end()), tag + " a AND b within a");
    check.require(std::includes(AoB.begin(), AoB.end(), B.begin(), B.end()), tag + " b within a OR b");
    // Restricting the universe never adds matches.
    const auto S = subsets.subset(c.corpus.size());
    const auto AS = eval_query(c.a, idx, S);
    check.require(AS == intersect(A, S), tag + " universe restriction");
  }
  return check.done("De Morgan (both forms), AND/OR containment and universe restriction on 1000 cases");
}

Outcome parser_round_trip() {
  Check check;
  oracle::CorpusGen gen(99);
  for (int i = 0; i < 1000; ++i) {
    const auto q = gen.query(1 + gen.uniform(5));
    const auto text = print_query(q);
    try {
      check.require(*parse_query(text) == *q, "mismatch: " + text);
    } catch (const QuerySyntaxError&) {
      check.require(false, "does not parse: " + text);
    }
  }
  return check.done("1000 random ASTs");
}

Outcome metrics_oracle() {
  Check check;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    DocSet U, pred, gold;
    const std::size_t n = 1 + rng() % 80;
    for (DocOrdinal d = 0; U.size() < n; ++d)
      if (rng() % 3) U.push_back(d);
    for (auto d : U) {
      if (rng() % 2) pred.push_back(d);
      if (rng() % 3 == 0) gold.push_back(d);
    }
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (auto d : U) {
      const bool p = std::binary_search(pred.begin(), pred.end(), d);
      const bool g = std::binary_search(gold.begin(), gold.end(), d);
      tp += p && g;
      fp += p && !g;
      fn += !p && g;
      tn += !p && !g;
    }
    const auto e = evaluate_class(pred, gold, U);
    check.require(e.tp == tp && e.fp == fp && e.fn == fn && e.tn == tn, "counts, trial " + std::to_string(trial));
    const double P = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    const double R = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    const double F = P + R > 0 ? 2 * P * R / (P + R) : 0.0;
    check.require(std::abs(e.precision - P) <= 1e-12 && std::abs(e.recall - R) <= 1e-12 &&
                      std::abs(e.f1 - F) <= 1e-12,
                  "ratios, trial " + std::to_string(trial));
  }
  const auto w = evaluate_class(DocSet{0, 1, 2, 3}, DocSet{0, 1, 2, 4, 5}, all_docs(10));
  check.require(w.tp == 3 && w.fp == 1 && w.fn == 2, "worked example counts");
  check.require(std::abs(w.precision - 0.75) <= 1e-12, "worked example P");
  check.require(std::abs(w.recall - 0.6) <= 1e-12, "worked example R");
  check.require(std::abs(w.f1 - 0.6667) < 1e-4, "worked example F1");
  return check.done("500 random settings; tp=3 fp=1 fn=2 gives P=0.75 R=0.6 F1=" + fmt("%.4f", w.f1));
}

Outcome aggregates() {
  Check check;
  BinaryEval a, b;
  a.f1 = 0.5;
  b.f1 = 0.9;
  const auto [macro, weighted] = aggregate({{a, 10}, {b, 30}});
  check.require(std::abs(macro.f1 - 0.7) <= 1e-12, "overall " + fmt("%.6f", macro.f1));
  check.require(std::abs(weighted.f1 - 0.8) <= 1e-12, "overall_w " + fmt("%.6f", weighted.f1));
  return check.done("overall=" + fmt("%.2f", macro.f1) + " overall_w=" + fmt("%.2f", weighted.f1));
}

Outcome split_protocol() {
  Check check;
  Corpus c;
  std::mt19937_64 rng(11);
  const std::vector<std::string> labels = {"L1", "L2", "L3", "L4", "L5"};
  const std::vector<double> weights = {0.4, 0.25, 0.2, 0.1, 0.05};
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  for (int i = 0; i < 1000; ++i) c.add("d" + std::to_string(i), "text " + std::to_string(i), {labels[pick(rng)]});

  const auto s = split_corpus(c);
  const auto sizes = s.sizes();
  check.require(sizes[0] == 200 && sizes[1] == 100 && sizes[2] == 700,
                "sizes " + std::to_string(sizes[0]) + "/" + std::to_string(sizes[1]) + "/" + std::to_string(sizes[2]));
  for (const auto& label : labels) {
    std::size_t n = 0;
    for (DocOrdinal d = 0; d < c.size(); ++d) n += c[d].gold_labels.front() == label;
    for (Part p : kAllParts) {
      const auto got = class_distribution(c, s, p)[label];
      const double want = kDefaultRatios[static_cast<std::size_t>(p)] * static_cast<double>(n);
      check.require(std::abs(static_cast<double>(got) - want) <= 1.0,
                    label + " in " + std::string(part_name(p)) + ": " + std::to_string(got));
    }
  }
  check.require(split_corpus(c).part_of == s.part_of, "same seed gives a different split");
  check.require(split_corpus(c, kDefaultRatios, 43).part_of != s.part_of, "seed has no effect");
  return check.done("200/100/700, every label within +-1 of its share, deterministic per seed");
}

Outcome any_of_four_end_to_end() {
  Check check;
  const Corpus c = synthetic::any_of_four(1000, 31);
  const InvertedIndex idx(c);
  const auto split = split_corpus(c);
  RuleSet rules;
  rules.add_rule(c.labels(), "analysis", parse_query("cannot OR apparent OR prohibit OR definition"), "");
  for (Part p : kAllParts) {
    const auto r = evaluate_ruleset(rules, c, idx, split.members(p), p);
    const auto* e = r.find("analysis");
    check.require(e && e->precision == 1.0 && e->recall == 1.0 && e->f1 == 1.0,
                  std::string(part_name(p)) + (e ? " F1=" + fmt("%.4f", e->f1) : " missing"));
  }
  return check.done("P=R=F1=1.0 on train, validation and test");
}

Outcome induction_recovery() {
  const auto t0 = Clock::now();
  Check check;
  std::size_t good = 0;
  std::string f1s;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Corpus c = synthetic::alpha_not_beta(1000, 100 + seed);
    const InvertedIndex idx(c);
    const auto split = split_corpus(c, kDefaultRatios, seed);
    InductionParams params;
    params.seed = seed;
    // Every feature is a split candidate; with the sqrt default most trees
    // never see alpha and beta together on one path.
    params.max_candidates = params.max_features;
    double f1 = 0.0;
    try {
      const auto res =
          induct_class(c, idx, split.members(Part::Train), split.members(Part::Validation), "pos", params);
      if (auto q = res.query()) {
        const auto T = split.members(Part::Test);
        f1 = evaluate_class(eval_query(q, idx, T), gold_docs(c, T, "pos"), T).f1;
      }
    } catch (const InductionError&) {
    }
    good += f1 >= 0.95;
    f1s += (f1s.empty() ? "" : " ") + fmt("%.3f", f1);
  }
  const double secs = seconds_since(t0);
  check.require(good >= 4, "only " + std::to_string(good) + "/5 seeds reach F1 0.95 (" + f1s + ")");
  check.require(secs < 60.0, "runtime " + fmt("%.2f s", secs));
  return check.done(std::to_string(good) + "/5 seeds with test F1 >= 0.95 (" + f1s + "), " + fmt("%.2f s", secs));
}

Outcome persistence_round_trip() {
  Check check;
  testing_support::TempDir dir;
  const Corpus c = synthetic::any_of_four(200, 8);
  testing_support::write_corpus(c, dir.path / "corpus.jsonl");
  auto ws = Workspace::create(dir.path / "corpus.jsonl", dir.path / "a.json");
  ws.project.split = split_corpus(ws.corpus, kDefaultRatios, 3);
  oracle::CorpusGen gen(4);
  const auto& names = ws.corpus.labels().names();
  for (int i = 0; i < 12; ++i)
    ws.project.rules.add_rule(ws.corpus.labels(), names[static_cast<std::size_t>(i) % names.size()], gen.query(3),
                              i % 2 ? "note " + std::to_string(i) : "");
  ws.project.rules.set_class_priority({names[2], names[0], names[1]});
  ws.save();
  const auto first = testing_support::slurp(dir.path / "a.json");
  auto reopened = Workspace::open(dir.path / "a.json");
  reopened.save_to(dir.path / "b.json");
  const auto second = testing_support::slurp(dir.path / "b.json");
  check.require(!first.empty() && first == second, "bytes differ after save-load-save");
  check.require(reopened.project == ws.project, "loaded project differs");
  return check.done("12 rules across 3 classes, " + std::to_string(first.size()) + " bytes identical");
}

Outcome latency() {
  Check check;
  auto t0 = Clock::now();
  const Corpus c = synthetic::large(100000, 100, 20000, 77);
  const double gen_secs = seconds_since(t0);

  t0 = Clock::now();
  const InvertedIndex idx(c);
  const double build = seconds_since(t0);
  check.require(build < 60.0, "index build " + fmt("%.2f s", build));

  RuleSet rules;
  rules.add_rule(c.labels(), "A", parse_query("n10 AND NOT n11 OR \"n3 n4\" AND n200"), "");
  rules.add_rule(c.labels(), "A", parse_query("n5000 OR n7 AND n8 AND NOT (n9 OR n12)"), "");
  const auto q = rules.effective_query("A");
  const auto U = all_docs(c.size());
  double worst_query = 0.0;
  std::size_t hits = 0;
  for (int i = 0; i < 5; ++i) {
    t0 = Clock::now();
    hits = eval_query(q, idx, U).size();
    worst_query = std::max(worst_query, seconds_since(t0));
  }
  check.require(worst_query < 0.1, "query " + fmt("%.1f ms", worst_query * 1e3));

  t0 = Clock::now();
  const auto stats = class_term_stats(idx, c, U, "A", 1, 2);
  const auto top = rank_terms(stats, {}, 50);
  const double stats_secs = seconds_since(t0);
  check.require(stats_secs < 2.0, "stats " + fmt("%.2f s", stats_secs));
  check.require(!top.empty(), "empty stats table");

  return check.done("100k docs x 100 tokens (generated in " + fmt("%.1f s", gen_secs) + "): build " +
                    fmt("%.2f s", build) + ", query " + fmt("%.1f ms", worst_query * 1e3) + " (" +
                    std::to_string(hits) + " hits), unigram stats " + fmt("%.2f s", stats_secs));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"evaluator-oracle", evaluator_oracle},
      {"de-morgan-containment", de_morgan_and_containment},
      {"parser-round-trip", parser_round_trip},
      {"metrics-oracle", metrics_oracle},
      {"aggregates", aggregates},
      {"split-protocol", split_protocol},
      {"any-of-four-end-to-end", any_of_four_end_to_end},
      {"induction-recovery", induction_recovery},
      {"persistence-round-trip", persistence_round_trip},
      {"interactive-latency", latency},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
