#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eval.hpp"
#include "induct.hpp"
#include "ruleset.hpp"
#include "stats.hpp"

namespace boolrule {

inline nlohmann::ordered_json to_json(const TermStats& s) {
  return {{"ngram", s.ngram},
          {"df_in", s.df_in},
          {"df_out", s.df_out},
          {"class_size", s.class_size},
          {"universe_size", s.universe_size},
          {"term_precision", s.term_precision},
          {"term_recall", s.term_recall},
          {"term_f1", s.term_f1},
          {"lift", s.lift}};
}

inline nlohmann::ordered_json to_json(const Rule& r) {
  return {{"id", r.id}, {"class", r.class_name}, {"query", print_query(r.query)}, {"note", r.note},
          {"created_at", r.created_at}};
}

inline nlohmann::ordered_json to_json(const InducedRule& r) {
  nlohmann::ordered_json lits = nlohmann::ordered_json::array();
  for (const auto& l : r.literals) lits.push_back({{"ngram", l.ngram}, {"present", l.present}});
  return {{"query", print_query(rule_query(r))},
          {"literals", std::move(lits)},
          {"train_precision", r.train_precision},
          {"train_recall", r.train_recall},
          {"validation_precision", r.validation_precision},
          {"validation_recall", r.validation_recall},
          {"validation_f1", r.validation_f1}};
}

inline nlohmann::ordered_json to_json(const InductionResult& res) {
  nlohmann::ordered_json j;
  j["feature_count"] = res.feature_count;
  j["candidate_count"] = res.candidate_count;
  j["rules"] = nlohmann::ordered_json::array();
  for (const auto& r : res.rules) j["rules"].push_back(to_json(r));
  if (auto q = res.query()) j["query"] = print_query(q);
  else j["query"] = nullptr;
  return j;
}

// Missing keys keep their defaults.
inline InductionParams induction_params_from_json(const nlohmann::json& j, InductionParams p = {}) {
  if (j.is_null()) return p;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("max_n", p.max_n);
  get("min_df", p.min_df);
  get("max_features", p.max_features);
  get("n_trees", p.n_trees);
  get("max_depth", p.max_depth);
  get("min_leaf", p.min_leaf);
  get("max_candidates", p.max_candidates);
  get("min_precision", p.min_precision);
  get("min_recall", p.min_recall);
  get("max_rules", p.max_rules);
  get("seed", p.seed);
  return p;
}

inline std::string induced_note(std::uint64_t seed) { return "induced(seed=" + std::to_string(seed) + ")"; }

/// TSV with a header row; columns in TermStats field order, n-grams joined by
/// single spaces.
inline void write_stats_tsv(const std::vector<TermStats>& rows, std::ostream& out) {
  out << "ngram\tdf_in\tdf_out\tclass_size\tuniverse_size\tterm_precision\tterm_recall\tterm_f1\tlift\n";
  char buf[160];
  for (const auto& s : rows) {
    std::snprintf(buf, sizeof buf, "\t%zu\t%zu\t%zu\t%zu\t%.6f\t%.6f\t%.6f\t%.6f\n", s.df_in, s.df_out, s.class_size,
                  s.universe_size, s.term_precision, s.term_recall, s.term_f1, s.lift);
    out << join_tokens(s.ngram) << buf;
  }
}

}  // namespace boolrule
