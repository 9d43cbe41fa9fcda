#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "docset.hpp"

namespace boolrule {

using TokenId = std::uint32_t;
inline constexpr TokenId kNoToken = std::numeric_limits<TokenId>::max();
inline constexpr std::size_t kMaxNgram = 3;

// Postings for one token in compressed-row form: docs[k] occupies
// positions[offsets[k] .. offsets[k+1]).
struct PostingList {
  std::vector<DocOrdinal> docs;
  std::vector<std::uint32_t> offsets;
  std::vector<std::uint32_t> positions;

  std::span<const std::uint32_t> positions_of(std::size_t k) const {
    return {positions.data() + offsets[k], offsets[k + 1] - offsets[k]};
  }
};

using Ngram = std::vector<std::string>;

struct NgramRecord {
  Ngram ngram;
  std::size_t df_total = 0;
  bool operator==(const NgramRecord&) const = default;
};

// Positional inverted index plus a forward token-id store. Immutable once
// built; all queries are const.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  explicit InvertedIndex(const Corpus& corpus) {
    doc_ids_.reserve(corpus.size());
    doc_start_.reserve(corpus.size() + 1);
    doc_start_.push_back(0);
    for (DocOrdinal d = 0; d < corpus.size(); ++d) {
      const auto& doc = corpus[d];
      doc_ids_.push_back(doc.id);
      for (std::uint32_t pos = 0; pos < doc.tokens.size(); ++pos) {
        const TokenId t = intern(doc.tokens[pos]);
        forward_.push_back(t);
        auto& pl = postings_[t];
        if (pl.docs.empty() || pl.docs.back() != d) {
          pl.docs.push_back(d);
          pl.offsets.push_back(static_cast<std::uint32_t>(pl.positions.size()));
        }
        pl.positions.push_back(pos);
      }
      doc_start_.push_back(forward_.size());
    }
    for (auto& pl : postings_) pl.offsets.push_back(static_cast<std::uint32_t>(pl.positions.size()));
  }

  std::size_t doc_count() const { return doc_ids_.size(); }
  std::size_t vocabulary_size() const { return tokens_.size(); }
  const std::string& doc_id(DocOrdinal d) const { return doc_ids_[d]; }
  const std::string& token(TokenId t) const { return tokens_[t]; }
  const PostingList& postings(TokenId t) const { return postings_[t]; }

  TokenId lookup(std::string_view tok) const {
    auto it = ids_.find(std::string(tok));
    return it == ids_.end() ? kNoToken : it->second;
  }

  std::span<const TokenId> doc_tokens(DocOrdinal d) const {
    return {forward_.data() + doc_start_[d], doc_start_[d + 1] - doc_start_[d]};
  }

  std::size_t total_postings() const { return forward_.size(); }

  /// Docs in `universe` that contain `ngram` as consecutive tokens. Unknown
  /// tokens give an empty set.
  DocSet match_ngram(std::span<const std::string> ngram, std::span<const DocOrdinal> universe) const {
    if (ngram.empty() || ngram.size() > kMaxNgram) throw std::invalid_argument("ngram length must be 1-3");
    std::array<TokenId, kMaxNgram> ids{};
    for (std::size_t k = 0; k < ngram.size(); ++k) {
      ids[k] = lookup(ngram[k]);
      if (ids[k] == kNoToken) return {};
    }
    return match_ids(std::span<const TokenId>(ids.data(), ngram.size()), universe);
  }

  DocSet match_ids(std::span<const TokenId> ids, std::span<const DocOrdinal> universe) const {
    // Candidate docs: rarest token's postings restricted to the universe.
    std::size_t rarest = 0;
    for (std::size_t k = 1; k < ids.size(); ++k)
      if (postings_[ids[k]].docs.size() < postings_[ids[rarest]].docs.size()) rarest = k;
    DocSet candidates = intersect(postings_[ids[rarest]].docs, universe);
    if (ids.size() == 1) return candidates;

    DocSet out;
    const auto& pl = postings_[ids[rarest]];
    auto it = pl.docs.begin();
    for (DocOrdinal d : candidates) {
      it = std::lower_bound(it, pl.docs.end(), d);
      const auto k = static_cast<std::size_t>(it - pl.docs.begin());
      const auto toks = doc_tokens(d);
      for (std::uint32_t pos : pl.positions_of(k)) {
        if (pos < rarest) continue;
        const std::size_t start = pos - rarest;
        if (start + ids.size() > toks.size()) continue;
        bool hit = true;
        for (std::size_t j = 0; j < ids.size() && hit; ++j) hit = toks[start + j] == ids[j];
        if (hit) {
          out.push_back(d);
          break;
        }
      }
    }
    return out;
  }

 private:
  TokenId intern(const std::string& tok) {
    auto [it, inserted] = ids_.try_emplace(tok, static_cast<TokenId>(tokens_.size()));
    if (inserted) {
      tokens_.push_back(tok);
      postings_.emplace_back();
    }
    return it->second;
  }

  std::unordered_map<std::string, TokenId> ids_;
  std::vector<std::string> tokens_;
  std::vector<PostingList> postings_;
  std::vector<std::string> doc_ids_;
  std::vector<TokenId> forward_;
  std::vector<std::size_t> doc_start_;
};

inline InvertedIndex build_index(const Corpus& corpus) { return InvertedIndex(corpus); }

namespace detail {

struct NgramKey {
  std::array<TokenId, kMaxNgram> ids{kNoToken, kNoToken, kNoToken};
  bool operator==(const NgramKey&) const = default;
  std::size_t length() const {
    std::size_t n = 0;
    while (n < kMaxNgram && ids[n] != kNoToken) ++n;
    return n;
  }
};

struct NgramKeyHash {
  std::size_t operator()(const NgramKey& k) const noexcept {
    std::uint64_t h = 0x9E3779B97F4A7C15ull;
    for (TokenId t : k.ids) {
      h ^= t + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
      h *= 0xBF58476D1CE4E5B9ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 31));
  }
};

struct NgramCounts {
  std::size_t df = 0;
  std::size_t df_in = 0;
  DocOrdinal last_doc = std::numeric_limits<DocOrdinal>::max();
};

// Document frequency over `universe` of every n-gram with n <= max_n, plus the
// frequency restricted to docs flagged in `in_mask` (may be empty).
inline std::unordered_map<NgramKey, NgramCounts, NgramKeyHash> count_ngrams(
    const InvertedIndex& index, std::span<const DocOrdinal> universe, std::size_t max_n,
    const std::vector<char>& in_mask) {
  std::unordered_map<NgramKey, NgramCounts, NgramKeyHash> counts;
  // Unigrams go through a dense array; longer n-grams through the hash map.
  std::vector<NgramCounts> uni(index.vocabulary_size());
  for (DocOrdinal d : universe) {
    const bool in = !in_mask.empty() && in_mask[d];
    const auto toks = index.doc_tokens(d);
    for (std::size_t p = 0; p < toks.size(); ++p) {
      auto& u = uni[toks[p]];
      if (u.last_doc != d) {
        u.last_doc = d;
        ++u.df;
        if (in) ++u.df_in;
      }
      for (std::size_t n = 2; n <= max_n && p + n <= toks.size(); ++n) {
        NgramKey key;
        for (std::size_t j = 0; j < n; ++j) key.ids[j] = toks[p + j];
        auto& c = counts[key];
        if (c.last_doc != d) {
          c.last_doc = d;
          ++c.df;
          if (in) ++c.df_in;
        }
      }
    }
  }
  for (TokenId t = 0; t < uni.size(); ++t) {
    if (uni[t].df == 0) continue;
    NgramKey key;
    key.ids[0] = t;
    counts.emplace(key, uni[t]);
  }
  return counts;
}

inline Ngram key_tokens(const InvertedIndex& index, const NgramKey& key) {
  Ngram out;
  for (std::size_t j = 0; j < key.length(); ++j) out.push_back(index.token(key.ids[j]));
  return out;
}

}  // namespace detail

/// Every n-gram of length <= max_n that occurs in at least min_df docs of
/// the universe, once each, ordered lexicographically by tokens.
inline std::vector<NgramRecord> vocabulary(const InvertedIndex& index, std::span<const DocOrdinal> universe,
                                           std::size_t max_n, std::size_t min_df) {
  if (max_n < 1 || max_n > kMaxNgram) throw std::invalid_argument("max_n must be 1-3");
  if (min_df < 1) throw std::invalid_argument("min_df must be >= 1");
  std::vector<NgramRecord> out;
  if (min_df > universe.size()) return out;
  for (const auto& [key, c] : detail::count_ngrams(index, universe, max_n, {}))
    if (c.df >= min_df) out.push_back({detail::key_tokens(index, key), c.df});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ngram < b.ngram; });
  return out;
}

}  // namespace boolrule
