#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "docset.hpp"
#include "index.hpp"
#include "ruleset.hpp"

namespace boolrule {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Confusion counts of one binary classifier. Ratios with a zero denominator
// are 0.
struct BinaryEval {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, f1 = 0;

  bool operator==(const BinaryEval&) const = default;
};

inline BinaryEval make_binary_eval(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
  BinaryEval e{tp, fp, fn, tn};
  e.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  e.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  e.f1 = e.precision + e.recall > 0 ? 2 * e.precision * e.recall / (e.precision + e.recall) : 0.0;
  return e;
}

inline BinaryEval evaluate_class(std::span<const DocOrdinal> predicted, std::span<const DocOrdinal> gold,
                                 std::span<const DocOrdinal> universe) {
  if (universe.empty()) throw EvalError("cannot evaluate over an empty universe");
  const std::size_t tp = intersect(predicted, gold).size();
  const std::size_t fp = predicted.size() - tp;
  const std::size_t fn = gold.size() - tp;
  return make_binary_eval(tp, fp, fn, universe.size() - tp - fp - fn);
}

// Docs of `part` whose gold labels include the class.
inline DocSet gold_docs(const Corpus& corpus, std::span<const DocOrdinal> part, std::string_view class_name) {
  DocSet out;
  for (DocOrdinal d : part)
    if (corpus[d].has_label(class_name)) out.push_back(d);
  return out;
}

struct Scores {
  double precision = 0, recall = 0, f1 = 0;
  bool operator==(const Scores&) const = default;
};

struct EvalReport {
  std::string part;
  std::vector<std::pair<std::string, BinaryEval>> per_class;  // label order
  std::vector<std::pair<std::string, std::size_t>> support;   // every label
  Scores overall;    // unweighted mean over classes with rules
  Scores overall_w;  // weighted by gold support in the part
  std::vector<std::string> excluded_classes;  // labels without rules

  bool operator==(const EvalReport&) const = default;

  const BinaryEval* find(std::string_view cls) const {
    for (const auto& [name, e] : per_class)
      if (name == cls) return &e;
    return nullptr;
  }
};

/// Macro and support-weighted averages of per-class scores. Weighted scores
/// are 0 when every support is 0.
inline std::pair<Scores, Scores> aggregate(const std::vector<std::pair<BinaryEval, std::size_t>>& rows) {
  Scores macro, weighted;
  if (rows.empty()) return {macro, weighted};
  double total = 0;
  for (const auto& [e, s] : rows) {
    macro.precision += e.precision;
    macro.recall += e.recall;
    macro.f1 += e.f1;
    total += static_cast<double>(s);
  }
  const double n = static_cast<double>(rows.size());
  macro.precision /= n;
  macro.recall /= n;
  macro.f1 /= n;
  if (total > 0) {
    for (const auto& [e, s] : rows) {
      const double w = static_cast<double>(s) / total;
      weighted.precision += w * e.precision;
      weighted.recall += w * e.recall;
      weighted.f1 += w * e.f1;
    }
  }
  return {macro, weighted};
}

/// Report for every class that has rules; classes without rules are listed
/// as excluded. An empty rule set gives an empty report.
inline EvalReport build_report(const RuleSet& rules, const Corpus& corpus, const InvertedIndex& index,
                               std::span<const DocOrdinal> part_docs, Part part) {
  if (part_docs.empty()) throw EvalError("split part '" + std::string(part_name(part)) + "' is empty");
  EvalReport report;
  report.part = std::string(part_name(part));
  const auto predicted = classify(rules, index, part_docs);
  std::vector<std::pair<BinaryEval, std::size_t>> rows;
  for (const auto& cls : corpus.labels().names()) {
    const DocSet gold = gold_docs(corpus, part_docs, cls);
    report.support.emplace_back(cls, gold.size());
    auto it = predicted.find(cls);
    if (it == predicted.end()) {
      report.excluded_classes.push_back(cls);
      continue;
    }
    const auto e = evaluate_class(it->second, gold, part_docs);
    report.per_class.emplace_back(cls, e);
    rows.emplace_back(e, gold.size());
  }
  std::tie(report.overall, report.overall_w) = aggregate(rows);
  return report;
}

inline EvalReport evaluate_ruleset(const RuleSet& rules, const Corpus& corpus, const InvertedIndex& index,
                                   std::span<const DocOrdinal> part_docs, Part part) {
  if (rules.empty()) throw EvalError("rule set has no rules");
  return build_report(rules, corpus, index, part_docs, part);
}

struct MisclassifiedListing {
  std::string class_name;
  std::vector<std::string> false_positives;  // predicted, not gold
  std::vector<std::string> false_negatives;  // gold, not predicted
  bool operator==(const MisclassifiedListing&) const = default;
};

inline MisclassifiedListing misclassified(const RuleSet& rules, const Corpus& corpus, const InvertedIndex& index,
                                          std::string_view class_name, std::span<const DocOrdinal> part_docs) {
  const DocSet predicted = eval_query(rules.effective_query(class_name), index, part_docs);
  const DocSet gold = gold_docs(corpus, part_docs, class_name);
  MisclassifiedListing out{std::string(class_name)};
  for (DocOrdinal d : subtract(predicted, gold)) out.false_positives.push_back(corpus[d].id);
  for (DocOrdinal d : subtract(gold, predicted)) out.false_negatives.push_back(corpus[d].id);
  std::sort(out.false_positives.begin(), out.false_positives.end());
  std::sort(out.false_negatives.begin(), out.false_negatives.end());
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::ordered_json to_json(const BinaryEval& e) {
  return {{"tp", e.tp},       {"fp", e.fp},         {"fn", e.fn}, {"tn", e.tn},
          {"precision", e.precision}, {"recall", e.recall}, {"f1", e.f1}};
}

inline nlohmann::ordered_json to_json(const Scores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["part"] = r.part;
  j["per_class"] = nlohmann::ordered_json::object();
  for (const auto& [cls, e] : r.per_class) j["per_class"][cls] = to_json(e);
  j["support"] = nlohmann::ordered_json::object();
  for (const auto& [cls, s] : r.support) j["support"][cls] = s;
  j["overall"] = to_json(r.overall);
  j["overall_w"] = to_json(r.overall_w);
  j["excluded_classes"] = r.excluded_classes;
  return j;
}

inline nlohmann::ordered_json to_json(const MisclassifiedListing& m) {
  return {{"class", m.class_name}, {"false_positives", m.false_positives}, {"false_negatives", m.false_negatives}};
}

inline BinaryEval binary_eval_from_json(const nlohmann::ordered_json& j) {
  BinaryEval e;
  e.tp = j.at("tp").get<std::size_t>();
  e.fp = j.at("fp").get<std::size_t>();
  e.fn = j.at("fn").get<std::size_t>();
  e.tn = j.at("tn").get<std::size_t>();
  e.precision = j.at("precision").get<double>();
  e.recall = j.at("recall").get<double>();
  e.f1 = j.at("f1").get<double>();
  return e;
}

inline Scores scores_from_json(const nlohmann::ordered_json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(), j.at("f1").get<double>()};
}

inline EvalReport report_from_json(const nlohmann::ordered_json& j) {
  EvalReport r;
  r.part = j.at("part").get<std::string>();
  for (const auto& [cls, e] : j.at("per_class").items()) r.per_class.emplace_back(cls, binary_eval_from_json(e));
  for (const auto& [cls, s] : j.at("support").items()) r.support.emplace_back(cls, s.get<std::size_t>());
  r.overall = scores_from_json(j.at("overall"));
  r.overall_w = scores_from_json(j.at("overall_w"));
  r.excluded_classes = j.at("excluded_classes").get<std::vector<std::string>>();
  return r;
}

namespace detail {

// ".84" style, as in published result tables; 1 prints as "1.00".
inline std::string short_decimal(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s;
}

}  // namespace detail

/// Fixed-width table: one row per class, then overall and overall-w rows.
inline std::string format_report_table(const EvalReport& r) {
  std::size_t width = std::string("-overall-w").size();
  for (const auto& [cls, e] : r.per_class) width = std::max(width, cls.size() + 1);
  std::ostringstream out;
  auto row = [&](const std::string& name, double p, double rc, double f, const std::string& extra) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %5s %5s %5s", detail::short_decimal(p).c_str(),
                  detail::short_decimal(rc).c_str(), detail::short_decimal(f).c_str());
    out << name << std::string(width - name.size(), ' ') << buf << extra << '\n';
  };
  out << "part: " << r.part << '\n';
  out << std::string(width, ' ') << "     P     R    F1  support\n";
  for (const auto& [cls, e] : r.per_class) {
    std::size_t sup = 0;
    for (const auto& [c, s] : r.support)
      if (c == cls) sup = s;
    char buf[32];
    std::snprintf(buf, sizeof buf, "  %7zu", sup);
    row("-" + cls, e.precision, e.recall, e.f1, buf);
  }
  if (!r.per_class.empty()) {
    row("-overall", r.overall.precision, r.overall.recall, r.overall.f1, "");
    row("-overall-w", r.overall_w.precision, r.overall_w.recall, r.overall_w.f1, "");
  }
  out << "aggregates over " << r.per_class.size() << " class(es) with rules";
  if (!r.excluded_classes.empty()) {
    out << "; excluded (no rules):";
    for (const auto& c : r.excluded_classes) out << ' ' << c;
  }
  out << '\n';
  return out.str();
}

}  // namespace boolrule
