#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <span>
#include <vector>

namespace boolrule {

using DocOrdinal = std::uint32_t;

// Sorted, duplicate-free list of document ordinals.
using DocSet = std::vector<DocOrdinal>;

inline DocSet all_docs(std::size_t n) {
  DocSet out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<DocOrdinal>(i);
  return out;
}

inline bool is_docset(std::span<const DocOrdinal> s) {
  return std::adjacent_find(s.begin(), s.end(), [](auto a, auto b) { return a >= b; }) == s.end();
}

inline DocSet intersect(std::span<const DocOrdinal> a, std::span<const DocOrdinal> b) {
  if (a.size() > b.size()) std::swap(a, b);
  DocSet out;
  if (a.empty()) return out;
  // Galloping pays off once one side is much smaller.
  if (a.size() * 16 < b.size()) {
    auto lo = b.begin();
    for (DocOrdinal x : a) {
      lo = std::lower_bound(lo, b.end(), x);
      if (lo == b.end()) break;
      if (*lo == x) out.push_back(x);
    }
    return out;
  }
  out.reserve(a.size());
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline DocSet unite(std::span<const DocOrdinal> a, std::span<const DocOrdinal> b) {
  DocSet out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline DocSet subtract(std::span<const DocOrdinal> a, std::span<const DocOrdinal> b) {
  DocSet out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

inline bool contains(std::span<const DocOrdinal> s, DocOrdinal d) {
  return std::binary_search(s.begin(), s.end(), d);
}

// Dense membership mask over [0, n).
inline std::vector<char> to_mask(std::span<const DocOrdinal> s, std::size_t n) {
  std::vector<char> mask(n, 0);
  for (DocOrdinal d : s) mask[d] = 1;
  return mask;
}

}  // namespace boolrule
