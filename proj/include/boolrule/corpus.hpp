#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "random.hpp"
#include "tokenize.hpp"

namespace boolrule {

using DocOrdinal = std::uint32_t;

struct Document {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  std::vector<std::string> gold_labels;  // first-seen order, no duplicates

  bool has_label(std::string_view label) const {
    return std::find(gold_labels.begin(), gold_labels.end(), label) != gold_labels.end();
  }
  bool operator==(const Document&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered class names; order defines display and report order.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names) {
    for (auto& n : names) add(std::move(n));
  }

  // Returns false when the name was already present.
  bool add(std::string name) {
    if (contains(name)) return false;
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
    return true;
  }
  bool contains(std::string_view name) const { return index_.count(std::string(name)) != 0; }
  std::optional<std::size_t> position(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  bool operator==(const LabelSet& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

class Corpus {
 public:
  Corpus() = default;

  // Takes documents with raw text and labels; tokens are recomputed.
  explicit Corpus(std::vector<Document> docs) {
    for (auto& d : docs) add(std::move(d.id), std::move(d.text), std::move(d.gold_labels));
  }

  void add(std::string id, std::string text, std::vector<std::string> labels) {
    if (by_id_.count(id)) throw CorpusError("duplicate document id '" + id + "'");
    if (labels.empty()) throw CorpusError("document '" + id + "' has no labels");
    Document doc;
    doc.id = std::move(id);
    doc.tokens = tokenize(text);
    doc.text = std::move(text);
    for (auto& l : labels) {
      labels_.add(l);
      if (!doc.has_label(l)) doc.gold_labels.push_back(std::move(l));
    }
    by_id_.emplace(doc.id, static_cast<DocOrdinal>(docs_.size()));
    docs_.push_back(std::move(doc));
  }

  const std::vector<Document>& docs() const { return docs_; }
  const Document& operator[](DocOrdinal ord) const { return docs_[ord]; }
  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const LabelSet& labels() const { return labels_; }

  std::optional<DocOrdinal> find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  bool operator==(const Corpus& o) const { return docs_ == o.docs_ && labels_ == o.labels_; }

 private:
  std::vector<Document> docs_;
  LabelSet labels_;
  std::unordered_map<std::string, DocOrdinal> by_id_;
};

/// Reads one JSON object per line ({"id", "text", "labels"}). Blank lines are
/// skipped. Errors name the offending line number or document id.
inline Corpus ingest_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::string where = "line " + std::to_string(lineno);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw CorpusError(where + ": invalid JSON (" + e.what() + ")");
    }
    if (!obj.is_object()) throw CorpusError(where + ": expected a JSON object");
    for (const char* field : {"id", "text", "labels"})
      if (!obj.contains(field)) throw CorpusError(where + ": missing field '" + field + "'");
    if (!obj["id"].is_string()) throw CorpusError(where + ": field 'id' must be a string");
    if (!obj["text"].is_string()) throw CorpusError(where + ": field 'text' must be a string");
    const auto& labels_json = obj["labels"];
    if (!labels_json.is_array()) throw CorpusError(where + ": field 'labels' must be an array");
    if (labels_json.empty()) throw CorpusError(where + ": empty labels");
    std::vector<std::string> labels;
    for (const auto& l : labels_json) {
      if (!l.is_string() || l.get<std::string>().empty())
        throw CorpusError(where + ": labels must be non-empty strings");
      labels.push_back(l.get<std::string>());
    }
    auto id = obj["id"].get<std::string>();
    if (corpus.find(id)) throw CorpusError(where + ": duplicate document id '" + id + "'");
    corpus.add(std::move(id), obj["text"].get<std::string>(), std::move(labels));
  }
  return corpus;
}

inline Corpus ingest_jsonl_string(const std::string& text) {
  std::istringstream in(text);
  return ingest_jsonl(in);
}

inline void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& d : corpus.docs()) {
    nlohmann::ordered_json obj;
    obj["id"] = d.id;
    obj["text"] = d.text;
    obj["labels"] = d.gold_labels;
    out << obj.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splits

enum class Part : std::uint8_t { Train = 0, Validation = 1, Test = 2 };

inline constexpr std::array<Part, 3> kAllParts = {Part::Train, Part::Validation, Part::Test};

inline std::string_view part_name(Part p) {
  switch (p) {
    case Part::Train: return "train";
    case Part::Validation: return "validation";
    case Part::Test: return "test";
  }
  return "train";
}

inline std::optional<Part> parse_part(std::string_view name) {
  for (Part p : kAllParts)
    if (part_name(p) == name) return p;
  return std::nullopt;
}

using SplitRatios = std::array<double, 3>;

inline constexpr SplitRatios kDefaultRatios = {0.2, 0.1, 0.7};
inline constexpr std::uint64_t kDefaultSeed = 42;

struct SplitAssignment {
  std::vector<Part> part_of;  // indexed by doc ordinal
  std::uint64_t seed = kDefaultSeed;
  SplitRatios ratios = kDefaultRatios;

  std::vector<DocOrdinal> members(Part p) const {
    std::vector<DocOrdinal> out;
    for (DocOrdinal d = 0; d < part_of.size(); ++d)
      if (part_of[d] == p) out.push_back(d);
    return out;
  }
  std::array<std::size_t, 3> sizes() const {
    std::array<std::size_t, 3> s{};
    for (Part p : part_of) ++s[static_cast<std::size_t>(p)];
    return s;
  }
  bool operator==(const SplitAssignment&) const = default;
};

/// Largest-remainder apportionment of `total` items over `ratios`. Ties in the
/// fractional remainder go to the earlier part.
inline std::array<std::size_t, 3> largest_remainder(std::size_t total, const SplitRatios& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double exact = static_cast<double>(total) * ratios[k];
    counts[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[k] = exact - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < total; k = (k + 1) % 3) {
    ++counts[order[k]];
    ++assigned;
  }
  while (assigned > total) {  // float slop on ratios summing just above 1
    for (std::size_t k = 3; k-- > 0 && assigned > total;) {
      if (counts[order[k]] > 0) {
        --counts[order[k]];
        --assigned;
      }
    }
  }
  return counts;
}

namespace detail {

// Distributes each group's leftover items (after flooring its exact shares)
// over the parts so that the per-part totals hit `targets`. Each (group, part)
// cell takes at most one extra item, which keeps every group within one item
// of its exact share. Greedy by descending remainder, then augmenting paths
// for anything the greedy pass could not place.
inline std::vector<std::array<std::size_t, 3>> controlled_rounding(
    const std::vector<std::size_t>& group_sizes, const SplitRatios& ratios,
    const std::array<std::size_t, 3>& targets) {
  const std::size_t g = group_sizes.size();
  std::vector<std::array<std::size_t, 3>> cells(g);
  std::vector<std::array<double, 3>> rem(g);
  std::vector<std::size_t> leftover(g, 0);
  std::array<std::size_t, 3> filled{};
  for (std::size_t i = 0; i < g; ++i) {
    std::size_t used = 0;
    for (std::size_t p = 0; p < 3; ++p) {
      const double exact = static_cast<double>(group_sizes[i]) * ratios[p];
      cells[i][p] = static_cast<std::size_t>(std::floor(exact + 1e-9));
      rem[i][p] = exact - static_cast<double>(cells[i][p]);
      used += cells[i][p];
    }
    while (used > group_sizes[i]) {
      for (std::size_t p = 3; p-- > 0 && used > group_sizes[i];)
        if (cells[i][p] > 0) --cells[i][p], --used;
    }
    leftover[i] = group_sizes[i] - used;
    for (std::size_t p = 0; p < 3; ++p) filled[p] += cells[i][p];
  }
  std::array<std::size_t, 3> need{};
  for (std::size_t p = 0; p < 3; ++p) need[p] = targets[p] > filled[p] ? targets[p] - filled[p] : 0;

  std::vector<std::array<bool, 3>> extra(g, {false, false, false});
  struct Cand {
    double r;
    std::size_t group, part;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t p = 0; p < 3; ++p) cands.push_back({rem[i][p], i, p});
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.r > b.r; });
  for (const auto& c : cands) {
    if (leftover[c.group] && need[c.part]) {
      extra[c.group][c.part] = true;
      --leftover[c.group];
      --need[c.part];
    }
  }
  // Augment: move an item from group i into a part q that still needs one, via
  // a chain i->p (new extra), j: p->q (swap an existing extra of j from p to q).
  for (std::size_t i = 0; i < g; ++i) {
    while (leftover[i]) {
      // BFS over parts.
      std::array<int, 3> prev_part = {-1, -1, -1};
      std::array<long, 3> via_group = {-1, -1, -1};
      std::array<bool, 3> seen{};
      std::vector<std::size_t> queue;
      for (std::size_t p = 0; p < 3; ++p)
        if (!extra[i][p]) {
          seen[p] = true;
          queue.push_back(p);
        }
      long found = -1;
      for (std::size_t qi = 0; qi < queue.size() && found < 0; ++qi) {
        const std::size_t p = queue[qi];
        if (need[p]) {
          found = static_cast<long>(p);
          break;
        }
        for (std::size_t j = 0; j < g; ++j) {
          if (!extra[j][p]) continue;
          for (std::size_t q = 0; q < 3; ++q) {
            if (seen[q] || extra[j][q]) continue;
            seen[q] = true;
            prev_part[q] = static_cast<int>(p);
            via_group[q] = static_cast<long>(j);
            queue.push_back(q);
          }
        }
      }
      if (found < 0) throw std::logic_error("split rounding could not be balanced");
      std::size_t q = static_cast<std::size_t>(found);
      --need[q];
      while (prev_part[q] >= 0) {
        const auto p = static_cast<std::size_t>(prev_part[q]);
        const auto j = static_cast<std::size_t>(via_group[q]);
        extra[j][p] = false;
        extra[j][q] = true;
        q = p;
      }
      extra[i][q] = true;
      --leftover[i];
    }
  }
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t p = 0; p < 3; ++p) cells[i][p] += extra[i][p] ? 1 : 0;
  return cells;
}

}  // namespace detail

/// Stratified, seeded train/validation/test assignment. Documents are grouped
/// by their first gold label; each group is shuffled and cut into parts whose
/// sizes stay within one document of the group's exact share while the part
/// totals equal the largest-remainder apportionment of the whole corpus.
inline SplitAssignment split_corpus(const Corpus& corpus, const SplitRatios& ratios = kDefaultRatios,
                                    std::uint64_t seed = kDefaultSeed) {
  if (corpus.empty()) throw CorpusError("cannot split an empty corpus");
  double sum = 0;
  for (double r : ratios) {
    if (!(r >= 0)) throw CorpusError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw CorpusError("split ratios must sum to 1");

  const auto& names = corpus.labels().names();
  std::vector<std::vector<DocOrdinal>> groups(names.size());
  for (DocOrdinal d = 0; d < corpus.size(); ++d)
    groups[*corpus.labels().position(corpus[d].gold_labels.front())].push_back(d);

  std::vector<std::size_t> sizes;
  for (const auto& grp : groups) sizes.push_back(grp.size());
  const auto cells = detail::controlled_rounding(sizes, ratios, largest_remainder(corpus.size(), ratios));

  SplitAssignment split;
  split.seed = seed;
  split.ratios = ratios;
  split.part_of.assign(corpus.size(), Part::Test);
  Rng rng(seed);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    auto members = groups[gi];
    rng.shuffle(members);
    std::size_t k = 0;
    for (std::size_t p = 0; p < 3; ++p)
      for (std::size_t c = 0; c < cells[gi][p]; ++c) split.part_of[members[k++]] = kAllParts[p];
  }
  return split;
}

/// Per-class document counts in one part. Multi-label documents count once
/// for each of their labels.
inline std::map<std::string, std::size_t> class_distribution(const Corpus& corpus, const SplitAssignment& split,
                                                             Part part) {
  std::map<std::string, std::size_t> counts;
  for (const auto& name : corpus.labels().names()) counts[name] = 0;
  for (DocOrdinal d = 0; d < corpus.size(); ++d) {
    if (split.part_of[d] != part) continue;
    for (const auto& l : corpus[d].gold_labels) ++counts[l];
  }
  return counts;
}

}  // namespace boolrule
