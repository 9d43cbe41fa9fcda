#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "docset.hpp"
#include "eval.hpp"
#include "index.hpp"
#include "query.hpp"
#include "random.hpp"

namespace boolrule {

// Binary n-gram presence features over a set of documents (the rows).
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<Ngram> features, DocSet docs)
      : features_(std::move(features)), docs_(std::move(docs)), words_((features_.size() + 63) / 64) {
    bits_.assign(docs_.size() * words_, 0);
  }

  void set(std::size_t row, std::size_t feature) { bits_[row * words_ + feature / 64] |= 1ull << (feature % 64); }
  bool bit(std::size_t row, std::size_t feature) const {
    return (bits_[row * words_ + feature / 64] >> (feature % 64)) & 1u;
  }

  const std::vector<Ngram>& features() const { return features_; }
  const DocSet& docs() const { return docs_; }
  std::size_t rows() const { return docs_.size(); }
  std::size_t cols() const { return features_.size(); }

 private:
  std::vector<Ngram> features_;
  DocSet docs_;
  std::size_t words_ = 0;
  std::vector<std::uint64_t> bits_;
};

class InductionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Features are the `max_features` most frequent n-grams of the part (ties by
/// n-gram order) with df >= min_df, listed in n-gram order. Bits come from
/// positional matching, so phrase features mean consecutive tokens.
inline FeatureMatrix extract_features(const InvertedIndex& index, std::span<const DocOrdinal> part, std::size_t max_n,
                                      std::size_t min_df, std::size_t max_features) {
  auto vocab = vocabulary(index, part, max_n, min_df);
  std::stable_sort(vocab.begin(), vocab.end(), [](const auto& a, const auto& b) { return a.df_total > b.df_total; });
  if (vocab.size() > max_features) vocab.resize(max_features);
  if (vocab.empty()) throw InductionError("no features left after min_df/max_features filtering");
  std::vector<Ngram> features;
  for (auto& r : vocab) features.push_back(std::move(r.ngram));
  std::sort(features.begin(), features.end());

  FeatureMatrix m(features, DocSet(part.begin(), part.end()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    const DocSet hits = index.match_ngram(features[j], part);
    std::size_t row = 0;
    for (DocOrdinal d : hits) {
      while (m.docs()[row] != d) ++row;
      m.set(row, j);
    }
  }
  return m;
}

// Gini impurity of a node holding `pos` positives out of `n`.
inline double gini(std::size_t pos, std::size_t n) {
  if (n == 0) return 0;
  const double p = static_cast<double>(pos) / static_cast<double>(n);
  return 1.0 - p * p - (1 - p) * (1 - p);
}

struct TreeNode {
  int feature = -1;  // -1 for leaves
  int absent = -1;   // child index when the feature is absent
  int present = -1;  // child index when the feature is present
  double positive_fraction = 0;
  std::size_t samples = 0;
  std::size_t depth = 0;

  bool is_leaf() const { return feature < 0; }
};

// Flat binary tree; nodes[0] is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& root() const { return nodes.front(); }
  std::size_t depth() const {
    std::size_t d = 0;
    for (const auto& n : nodes) d = std::max(d, n.depth);
    return d;
  }
};

struct TreeParams {
  std::size_t max_depth = 3;
  std::size_t min_leaf = 5;
  std::size_t max_candidates = 0;  // features tried per node; 0 means ceil(sqrt(#features))
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& m, const std::vector<char>& labels, TreeParams params, Rng& rng)
      : m_(m), labels_(labels), params_(params), rng_(rng) {
    const auto f = static_cast<double>(m.cols());
    candidates_ = params.max_candidates ? params.max_candidates : static_cast<std::size_t>(std::ceil(std::sqrt(f)));
  }

  int grow(const std::vector<std::uint32_t>& samples, std::size_t depth, std::vector<char>& on_path) {
    std::size_t pos = 0;
    for (auto r : samples) pos += labels_[r] ? 1 : 0;
    const int id = static_cast<int>(tree.nodes.size());
    TreeNode node;
    node.samples = samples.size();
    node.depth = depth;
    node.positive_fraction = samples.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(samples.size());
    tree.nodes.push_back(node);

    const std::size_t n = samples.size();
    if (depth >= params_.max_depth || n < 2 * params_.min_leaf || pos == 0 || pos == n) return id;

    // Random candidate subset among features not yet used on this path.
    std::vector<std::uint32_t> pool;
    for (std::uint32_t j = 0; j < m_.cols(); ++j)
      if (!on_path[j]) pool.push_back(j);
    const std::size_t k = std::min(candidates_, pool.size());
    for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng_.below(pool.size() - i)]);
    pool.resize(k);
    std::sort(pool.begin(), pool.end());

    const double parent = gini(pos, n);
    double best = parent;
    int best_feature = -1;
    for (auto j : pool) {
      std::size_t n1 = 0, pos1 = 0;
      for (auto r : samples) {
        if (m_.bit(r, j)) {
          ++n1;
          pos1 += labels_[r] ? 1 : 0;
        }
      }
      const std::size_t n0 = n - n1, pos0 = pos - pos1;
      if (n0 < params_.min_leaf || n1 < params_.min_leaf) continue;
      const double w = (static_cast<double>(n0) * gini(pos0, n0) + static_cast<double>(n1) * gini(pos1, n1)) /
                       static_cast<double>(n);
      if (w < best - 1e-12) {
        best = w;
        best_feature = static_cast<int>(j);
      }
    }
    if (best_feature < 0) return id;

    std::vector<std::uint32_t> left, right;
    for (auto r : samples) (m_.bit(r, static_cast<std::size_t>(best_feature)) ? right : left).push_back(r);
    on_path[static_cast<std::size_t>(best_feature)] = 1;
    const int a = grow(left, depth + 1, on_path);
    const int b = grow(right, depth + 1, on_path);
    on_path[static_cast<std::size_t>(best_feature)] = 0;
    tree.nodes[static_cast<std::size_t>(id)].feature = best_feature;
    tree.nodes[static_cast<std::size_t>(id)].absent = a;
    tree.nodes[static_cast<std::size_t>(id)].present = b;
    return id;
  }

  DecisionTree tree;

 private:
  const FeatureMatrix& m_;
  const std::vector<char>& labels_;
  TreeParams params_;
  Rng& rng_;
  std::size_t candidates_ = 1;
};

}  // namespace detail

/// Greedy Gini tree over the given sample rows (repeats allowed, as in a
/// bootstrap). Each node considers max_candidates random features (default
/// ceil(sqrt(#features))) not already split on along its path. A node becomes a leaf at max_depth, when
/// pure, when smaller than 2*min_leaf, or when no admissible split lowers the
/// impurity.
inline DecisionTree train_tree(const FeatureMatrix& m, const std::vector<char>& labels,
                               const std::vector<std::uint32_t>& samples, TreeParams params, Rng& rng) {
  if (labels.size() != m.rows()) throw std::invalid_argument("label count does not match matrix rows");
  if (params.min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
  detail::TreeBuilder b(m, labels, params, rng);
  std::vector<char> on_path(m.cols(), 0);
  b.grow(samples, 0, on_path);
  return std::move(b.tree);
}

inline DecisionTree train_tree(const FeatureMatrix& m, const std::vector<char>& labels, TreeParams params, Rng& rng) {
  std::vector<std::uint32_t> all(m.rows());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  return train_tree(m, labels, all, params, rng);
}

struct Literal {
  Ngram ngram;
  bool present = true;

  bool operator==(const Literal&) const = default;
  // Ordered by n-gram, then present before absent.
  friend bool operator<(const Literal& a, const Literal& b) {
    if (a.ngram != b.ngram) return a.ngram < b.ngram;
    return a.present && !b.present;
  }
};

struct InducedRule {
  std::vector<Literal> literals;  // canonical order, see Literal::operator<
  double train_precision = 0;     // out-of-bag
  double train_recall = 0;        // out-of-bag
  double validation_precision = 0;
  double validation_recall = 0;
  double validation_f1 = 0;
};

namespace detail {

inline bool rule_matches(const FeatureMatrix& m, std::size_t row, const std::vector<std::pair<int, bool>>& path) {
  for (const auto& [j, present] : path)
    if (m.bit(row, static_cast<std::size_t>(j)) != present) return false;
  return true;
}

inline void collect_paths(const DecisionTree& t, int node, std::vector<std::pair<int, bool>>& path,
                          std::vector<std::vector<std::pair<int, bool>>>& out) {
  const auto& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) {
    if (n.positive_fraction > 0.5 && !path.empty()) out.push_back(path);
    return;
  }
  path.emplace_back(n.feature, false);
  collect_paths(t, n.absent, path, out);
  path.back().second = true;
  collect_paths(t, n.present, path, out);
  path.pop_back();
}

}  // namespace detail

/// Positive-leaf paths of a tree as (feature, present) conjunctions.
inline std::vector<std::vector<std::pair<int, bool>>> positive_paths(const DecisionTree& t) {
  std::vector<std::vector<std::pair<int, bool>>> out;
  std::vector<std::pair<int, bool>> path;
  detail::collect_paths(t, 0, path, out);
  return out;
}

/// Bagged trees; every root-to-leaf path ending in a majority-positive leaf
/// becomes a candidate conjunction scored on that tree's out-of-bag rows.
/// Candidates with the same literal set are merged, keeping the better
/// out-of-bag F1.
inline std::vector<InducedRule> induce_rules(const FeatureMatrix& m, const std::vector<char>& labels,
                                             std::size_t n_trees, TreeParams params, std::uint64_t seed) {
  if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
  std::vector<InducedRule> out;
  std::map<std::vector<Literal>, std::size_t> seen;
  const std::size_t n = m.rows();
  if (n == 0) return out;
  Rng rng(seed);
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::vector<std::uint32_t> sample(n);
    std::vector<char> in_bag(n, 0);
    for (auto& s : sample) {
      s = static_cast<std::uint32_t>(rng.below(n));
      in_bag[s] = 1;
    }
    const DecisionTree tree = train_tree(m, labels, sample, params, rng);
    for (const auto& path : positive_paths(tree)) {
      std::size_t tp = 0, predicted = 0, gold = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (in_bag[r]) continue;
        const bool hit = detail::rule_matches(m, r, path);
        predicted += hit;
        gold += labels[r] ? 1 : 0;
        tp += hit && labels[r];
      }
      InducedRule rule;
      for (const auto& [j, present] : path) rule.literals.push_back({m.features()[static_cast<std::size_t>(j)], present});
      std::sort(rule.literals.begin(), rule.literals.end());
      const auto e = make_binary_eval(tp, predicted - tp, gold - tp, 0);
      rule.train_precision = e.precision;
      rule.train_recall = e.recall;
      auto [it, fresh] = seen.try_emplace(rule.literals, out.size());
      if (fresh) {
        out.push_back(std::move(rule));
      } else {
        auto& kept = out[it->second];
        const double p0 = kept.train_precision, r0 = kept.train_recall;
        const double f_old = p0 + r0 > 0 ? 2 * p0 * r0 / (p0 + r0) : 0.0;
        if (e.f1 > f_old || (e.f1 == f_old && e.precision > p0)) {
          kept.train_precision = e.precision;
          kept.train_recall = e.recall;
        }
      }
    }
  }
  return out;
}

inline QueryPtr literal_query(const Literal& lit) {
  QueryPtr q = make_phrase(lit.ngram);
  return lit.present ? q : make_not(std::move(q));
}

/// AND of one rule's literals in canonical order.
inline QueryPtr rule_query(const InducedRule& rule) {
  if (rule.literals.empty()) throw InductionError("rule without literals");
  auto lits = rule.literals;
  std::sort(lits.begin(), lits.end());
  std::vector<QueryPtr> parts;
  for (const auto& l : lits) parts.push_back(literal_query(l));
  return and_fold(parts);
}

/// OR of the rules' conjunctions, in list order.
inline QueryPtr to_query(const std::vector<InducedRule>& rules) {
  if (rules.empty()) throw InductionError("cannot build a query from an empty rule list");
  std::vector<QueryPtr> qs;
  for (const auto& r : rules) qs.push_back(rule_query(r));
  return or_fold(qs);
}

/// Re-scores candidates on the validation part through query evaluation,
/// drops those under either threshold and duplicates, orders by validation
/// F1 (desc) then literal count (asc) and keeps at most max_rules.
inline std::vector<InducedRule> filter_rules(const std::vector<InducedRule>& candidates, const Corpus& corpus,
                                             const InvertedIndex& index, std::span<const DocOrdinal> validation,
                                             std::string_view class_name, double min_precision, double min_recall,
                                             std::size_t max_rules) {
  if (min_precision < 0 || min_precision > 1 || min_recall < 0 || min_recall > 1)
    throw std::invalid_argument("thresholds must be within [0, 1]");
  std::vector<InducedRule> kept;
  if (candidates.empty() || validation.empty()) return kept;
  const DocSet gold = gold_docs(corpus, validation, class_name);
  std::map<std::vector<Literal>, bool> seen;
  std::vector<std::string> printed;
  for (const auto& c : candidates) {
    auto lits = c.literals;
    std::sort(lits.begin(), lits.end());
    if (!seen.emplace(lits, true).second) continue;
    InducedRule r = c;
    r.literals = std::move(lits);
    const auto e = evaluate_class(eval_query(rule_query(r), index, validation), gold, validation);
    r.validation_precision = e.precision;
    r.validation_recall = e.recall;
    r.validation_f1 = e.f1;
    if (r.validation_precision < min_precision || r.validation_recall < min_recall) continue;
    kept.push_back(std::move(r));
  }
  std::vector<std::pair<std::string, std::size_t>> keys;
  for (std::size_t i = 0; i < kept.size(); ++i) keys.emplace_back(print_query(rule_query(kept[i])), i);
  std::vector<std::size_t> order(kept.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = kept[a];
    const auto& y = kept[b];
    if (x.validation_f1 != y.validation_f1) return x.validation_f1 > y.validation_f1;
    if (x.literals.size() != y.literals.size()) return x.literals.size() < y.literals.size();
    return keys[a].first < keys[b].first;
  });
  std::vector<InducedRule> out;
  for (std::size_t i = 0; i < order.size() && out.size() < max_rules; ++i) out.push_back(kept[order[i]]);
  return out;
}

struct InductionParams {
  std::size_t max_n = 3;
  std::size_t min_df = 2;
  std::size_t max_features = 1000;
  std::size_t n_trees = 30;
  std::size_t max_depth = 3;
  std::size_t min_leaf = 5;
  std::size_t max_candidates = 0;
  double min_precision = 0.5;
  double min_recall = 0.05;
  std::size_t max_rules = 16;
  std::uint64_t seed = 42;
};

struct InductionResult {
  std::size_t feature_count = 0;
  std::size_t candidate_count = 0;
  std::vector<InducedRule> rules;  // filtered; may be empty

  // Combined classifier, or null when no rule survived filtering.
  QueryPtr query() const { return rules.empty() ? nullptr : to_query(rules); }
};

/// Full pipeline for one class: features and trees on `train`, filtering on
/// `validation`.
inline InductionResult induct_class(const Corpus& corpus, const InvertedIndex& index, std::span<const DocOrdinal> train,
                                    std::span<const DocOrdinal> validation, std::string_view class_name,
                                    const InductionParams& p) {
  if (!corpus.labels().contains(class_name)) throw InductionError("unknown class '" + std::string(class_name) + "'");
  if (train.empty()) throw InductionError("training part is empty");
  const FeatureMatrix m = extract_features(index, train, p.max_n, p.min_df, p.max_features);
  std::vector<char> labels(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) labels[r] = corpus[m.docs()[r]].has_label(class_name) ? 1 : 0;
  const auto candidates = induce_rules(m, labels, p.n_trees, {p.max_depth, p.min_leaf, p.max_candidates}, p.seed);
  InductionResult res;
  res.feature_count = m.cols();
  res.candidate_count = candidates.size();
  res.rules = filter_rules(candidates, corpus, index, validation, class_name, p.min_precision, p.min_recall, p.max_rules);
  return res;
}

}  // namespace boolrule
