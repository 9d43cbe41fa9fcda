#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "corpus.hpp"
#include "docset.hpp"
#include "index.hpp"

namespace boolrule {

// Per-class statistics of one n-gram, treating "document contains the
// n-gram" as a single-term classifier for the class.
struct TermStats {
  Ngram ngram;
  std::size_t df_in = 0;
  std::size_t df_out = 0;
  std::size_t class_size = 0;
  std::size_t universe_size = 0;
  double term_precision = 0;
  double term_recall = 0;
  double term_f1 = 0;
  double lift = 0;

  bool operator==(const TermStats&) const = default;
};

inline TermStats make_term_stats(Ngram ngram, std::size_t df_in, std::size_t df_out, std::size_t class_size,
                                 std::size_t universe_size) {
  TermStats s{std::move(ngram), df_in, df_out, class_size, universe_size};
  const double in = static_cast<double>(df_in);
  const double df = static_cast<double>(df_in + df_out);
  s.term_precision = df > 0 ? in / df : 0.0;
  s.term_recall = class_size > 0 ? in / static_cast<double>(class_size) : 0.0;
  const double pr = s.term_precision + s.term_recall;
  s.term_f1 = pr > 0 ? 2 * s.term_precision * s.term_recall / pr : 0.0;
  // Add-one smoothing on both rates.
  s.lift = ((in + 1) / (static_cast<double>(class_size) + 1)) / ((df + 1) / (static_cast<double>(universe_size) + 1));
  return s;
}

enum class StatColumn { DfIn, DfOut, Precision, Recall, F1, Lift };

struct SortKey {
  StatColumn column = StatColumn::F1;
  bool descending = true;
};

inline std::string_view column_name(StatColumn c) {
  switch (c) {
    case StatColumn::DfIn: return "df_in";
    case StatColumn::DfOut: return "df_out";
    case StatColumn::Precision: return "term_precision";
    case StatColumn::Recall: return "term_recall";
    case StatColumn::F1: return "term_f1";
    case StatColumn::Lift: return "lift";
  }
  return "term_f1";
}

// Accepts the full column names and the short forms precision/recall/f1.
inline std::optional<StatColumn> parse_column(std::string_view name) {
  for (auto c : {StatColumn::DfIn, StatColumn::DfOut, StatColumn::Precision, StatColumn::Recall, StatColumn::F1,
                 StatColumn::Lift})
    if (column_name(c) == name) return c;
  if (name == "precision") return StatColumn::Precision;
  if (name == "recall") return StatColumn::Recall;
  if (name == "f1") return StatColumn::F1;
  return std::nullopt;
}

inline double column_value(const TermStats& s, StatColumn c) {
  switch (c) {
    case StatColumn::DfIn: return static_cast<double>(s.df_in);
    case StatColumn::DfOut: return static_cast<double>(s.df_out);
    case StatColumn::Precision: return s.term_precision;
    case StatColumn::Recall: return s.term_recall;
    case StatColumn::F1: return s.term_f1;
    case StatColumn::Lift: return s.lift;
  }
  return 0;
}

class StatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Term statistics for `class_name` over the docs of `part`: one row per
/// n-gram (n <= max_n) whose document frequency in the part is >= min_df.
inline std::vector<TermStats> class_term_stats(const InvertedIndex& index, const Corpus& corpus,
                                               std::span<const DocOrdinal> part, std::string_view class_name,
                                               std::size_t max_n, std::size_t min_df) {
  if (!corpus.labels().contains(class_name)) throw StatsError("unknown class '" + std::string(class_name) + "'");
  if (part.empty()) throw StatsError("split part is empty");
  if (max_n < 1 || max_n > kMaxNgram) throw StatsError("max_n must be 1-3");
  if (min_df < 1) throw StatsError("min_df must be >= 1");

  std::vector<char> in_class(corpus.size(), 0);
  std::size_t class_size = 0;
  for (DocOrdinal d : part) {
    if (corpus[d].has_label(class_name)) {
      in_class[d] = 1;
      ++class_size;
    }
  }
  if (class_size == 0)
    throw StatsError("class '" + std::string(class_name) + "' has no documents in the selected part");

  std::vector<TermStats> out;
  for (const auto& [key, c] : detail::count_ngrams(index, part, max_n, in_class)) {
    if (c.df < min_df) continue;
    out.push_back(make_term_stats(detail::key_tokens(index, key), c.df_in, c.df - c.df_in, class_size, part.size()));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ngram < b.ngram; });
  return out;
}

/// Stable sort by the chosen column; ties by df_in descending, then n-gram.
inline std::vector<TermStats> rank_terms(std::vector<TermStats> stats, SortKey key, std::size_t limit,
                                         std::size_t offset = 0) {
  if (limit < 1) throw StatsError("limit must be >= 1");
  std::stable_sort(stats.begin(), stats.end(), [&](const TermStats& a, const TermStats& b) {
    const double va = column_value(a, key.column);
    const double vb = column_value(b, key.column);
    if (va != vb) return key.descending ? va > vb : va < vb;
    if (a.df_in != b.df_in) return a.df_in > b.df_in;
    return a.ngram < b.ngram;
  });
  if (offset >= stats.size()) return {};
  stats.erase(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(offset));
  if (stats.size() > limit) stats.resize(limit);
  return stats;
}

}  // namespace boolrule
