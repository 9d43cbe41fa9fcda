#pragma once

#include <algorithm>
#include <chrono>
#include <ctime>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.hpp"
#include "docset.hpp"
#include "index.hpp"
#include "query.hpp"

namespace boolrule {

struct Rule {
  std::string id;
  std::string class_name;
  QueryPtr query;
  std::string note;
  std::string created_at;  // ISO-8601 UTC

  friend bool operator==(const Rule& a, const Rule& b) {
    return a.id == b.id && a.class_name == b.class_name && *a.query == *b.query && a.note == b.note &&
           a.created_at == b.created_at;
  }
};

class RuleSetError : public std::runtime_error {
 public:
  enum class Kind { UnknownClass, UnknownRule, NoRules, Conflict };
  RuleSetError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Saved per-class queries. Each class's classifier is the OR of its rules.
class RuleSet {
 public:
  /// Appends a rule and returns its id. A class's first rule also appends the
  /// class to the priority order.
  std::string add_rule(const LabelSet& labels, std::string class_name, QueryPtr query, std::string note,
                       std::string created_at = utc_timestamp()) {
    if (!labels.contains(class_name))
      throw RuleSetError(RuleSetError::Kind::UnknownClass, "unknown class '" + class_name + "'");
    std::string id = "r" + std::to_string(next_id_++);
    insert(Rule{id, std::move(class_name), std::move(query), std::move(note), std::move(created_at)});
    return id;
  }

  // Inserts a rule with a caller-chosen id (used when loading projects).
  void insert(Rule rule) {
    if (find(rule.id)) throw RuleSetError(RuleSetError::Kind::Conflict, "duplicate rule id '" + rule.id + "'");
    if (rule.id.size() > 1 && rule.id[0] == 'r' &&
        rule.id.find_first_not_of("0123456789", 1) == std::string::npos) {
      const auto n = std::stoull(rule.id.substr(1));
      next_id_ = std::max<std::uint64_t>(next_id_, n + 1);
    }
    if (std::find(priority_.begin(), priority_.end(), rule.class_name) == priority_.end())
      priority_.push_back(rule.class_name);
    rules_.push_back(std::move(rule));
  }

  void remove_rule(std::string_view id) {
    auto it = std::find_if(rules_.begin(), rules_.end(), [&](const Rule& r) { return r.id == id; });
    if (it == rules_.end()) throw RuleSetError(RuleSetError::Kind::UnknownRule, "unknown rule '" + std::string(id) + "'");
    const std::string cls = it->class_name;
    rules_.erase(it);
    if (!has_rules(cls)) priority_.erase(std::find(priority_.begin(), priority_.end(), cls));
  }

  std::vector<Rule> list_rules(std::optional<std::string_view> class_name = std::nullopt) const {
    std::vector<Rule> out;
    for (const auto& r : rules_)
      if (!class_name || r.class_name == *class_name) out.push_back(r);
    return out;
  }

  const Rule* find(std::string_view id) const {
    for (const auto& r : rules_)
      if (r.id == id) return &r;
    return nullptr;
  }

  bool has_rules(std::string_view class_name) const {
    return std::any_of(rules_.begin(), rules_.end(), [&](const Rule& r) { return r.class_name == class_name; });
  }

  /// OR of the class's rule queries in insertion order.
  QueryPtr effective_query(std::string_view class_name) const {
    std::vector<QueryPtr> qs;
    for (const auto& r : rules_)
      if (r.class_name == class_name) qs.push_back(r.query);
    if (qs.empty()) throw RuleSetError(RuleSetError::Kind::NoRules, "class '" + std::string(class_name) + "' has no rules");
    return or_fold(qs);
  }

  // Classes that have at least one rule, in priority order.
  const std::vector<std::string>& class_priority() const { return priority_; }

  void set_class_priority(std::vector<std::string> order) {
    auto a = order, b = priority_;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
      throw RuleSetError(RuleSetError::Kind::Conflict, "class priority must be a permutation of the rule-bearing classes");
    priority_ = std::move(order);
  }

  const std::vector<Rule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

  friend bool operator==(const RuleSet& a, const RuleSet& b) {
    return a.rules_ == b.rules_ && a.priority_ == b.priority_;
  }

 private:
  std::vector<Rule> rules_;
  std::vector<std::string> priority_;
  std::uint64_t next_id_ = 1;
};

/// One-vs-rest prediction: for every class with rules, the docs of the
/// universe its effective query matches. Sets may overlap.
inline std::map<std::string, DocSet> classify(const RuleSet& rules, const InvertedIndex& index,
                                              std::span<const DocOrdinal> universe) {
  std::map<std::string, DocSet> out;
  for (const auto& cls : rules.class_priority()) out[cls] = eval_query(rules.effective_query(cls), index, universe);
  return out;
}

/// First class in priority order whose rules match the doc.
inline std::optional<std::string> predict_single_label(const RuleSet& rules, const InvertedIndex& index,
                                                       DocOrdinal doc) {
  const DocSet single{doc};
  for (const auto& cls : rules.class_priority())
    if (!eval_query(rules.effective_query(cls), index, single).empty()) return cls;
  return std::nullopt;
}

}  // namespace boolrule
