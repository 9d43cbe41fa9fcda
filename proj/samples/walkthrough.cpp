// Walks through one rule-writing session on a small corpus: split, look at
// the strongest terms for a class, try a query, save it and score the rules.

#include <fstream>
#include <iostream>

#include <boolrule/boolrule.hpp>
#include <boolrule/serialize.hpp>

using namespace boolrule;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : BOOLRULE_SAMPLE_CORPUS;
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << '\n';
    return 2;
  }
  const Corpus corpus = ingest_jsonl(in);
  const InvertedIndex index(corpus);
  const auto split = split_corpus(corpus);
  const auto train = split.members(Part::Train);
  std::cout << corpus.size() << " documents, " << corpus.labels().size() << " classes, " << train.size()
            << " in train\n\n";

  std::cout << "top unigrams for 'analysis' on train:\n";
  write_stats_tsv(rank_terms(class_term_stats(index, corpus, train, "analysis", 1, 1), {}, 8), std::cout);

  const auto query = parse_query("cannot OR apparent OR prohibit OR definition");
  const auto e = evaluate_class(eval_query(query, index, train), gold_docs(corpus, train, "analysis"), train);
  std::cout << "\nquery: " << print_query(query) << "\ntrain P=" << e.precision << " R=" << e.recall
            << " F1=" << e.f1 << "\n\n";

  RuleSet rules;
  rules.add_rule(corpus.labels(), "analysis", query, "cue words");
  rules.add_rule(corpus.labels(), "procedure", parse_query("motion OR appeal OR court AND NOT cannot"), "");
  const auto validation = split.members(Part::Validation);
  std::cout << format_report_table(evaluate_ruleset(rules, corpus, index, validation, Part::Validation));
  return 0;
}
