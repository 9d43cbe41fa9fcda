#pragma once

#include <cctype>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "docset.hpp"
#include "index.hpp"
#include "tokenize.hpp"

namespace boolrule {

class Query;
using QueryPtr = std::shared_ptr<const Query>;

struct TermNode {
  std::string token;
};
struct PhraseNode {
  std::vector<std::string> tokens;  // 2-3 tokens
};
struct AndNode {
  QueryPtr left, right;
};
struct OrNode {
  QueryPtr left, right;
};
struct NotNode {
  QueryPtr child;
};

// Immutable Boolean query tree. Subtrees are shared, never mutated.
class Query {
 public:
  using Node = std::variant<TermNode, PhraseNode, AndNode, OrNode, NotNode>;

  explicit Query(Node node) : node_(std::move(node)) {}

  const Node& node() const { return node_; }

  template <typename T>
  const T* as() const {
    return std::get_if<T>(&node_);
  }

  friend bool operator==(const Query& a, const Query& b) {
    if (a.node_.index() != b.node_.index()) return false;
    return std::visit(
        [&](const auto& x) -> bool {
          using T = std::decay_t<decltype(x)>;
          const auto& y = std::get<T>(b.node_);
          if constexpr (std::is_same_v<T, TermNode>) return x.token == y.token;
          else if constexpr (std::is_same_v<T, PhraseNode>) return x.tokens == y.tokens;
          else if constexpr (std::is_same_v<T, NotNode>) return *x.child == *y.child;
          else return *x.left == *y.left && *x.right == *y.right;
        },
        a.node_);
  }

 private:
  Node node_;
};

inline QueryPtr make_term(std::string token) { return std::make_shared<const Query>(TermNode{std::move(token)}); }
inline QueryPtr make_phrase(std::vector<std::string> tokens) {
  if (tokens.size() == 1) return make_term(std::move(tokens.front()));
  return std::make_shared<const Query>(PhraseNode{std::move(tokens)});
}
inline QueryPtr make_and(QueryPtr l, QueryPtr r) {
  return std::make_shared<const Query>(AndNode{std::move(l), std::move(r)});
}
inline QueryPtr make_or(QueryPtr l, QueryPtr r) {
  return std::make_shared<const Query>(OrNode{std::move(l), std::move(r)});
}
inline QueryPtr make_not(QueryPtr c) { return std::make_shared<const Query>(NotNode{std::move(c)}); }

inline bool same_query(const QueryPtr& a, const QueryPtr& b) { return *a == *b; }

class QuerySyntaxError : public std::runtime_error {
 public:
  QuerySyntaxError(std::size_t position, std::string message)
      : std::runtime_error("query syntax error at " + std::to_string(position) + ": " + message),
        position_(position),
        message_(std::move(message)) {}

  std::size_t position() const { return position_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t position_;
  std::string message_;
};

namespace detail {

enum class Lex { End, LParen, RParen, And, Or, Not, Word, Quoted };

struct Lexeme {
  Lex kind = Lex::End;
  std::size_t pos = 0;
  std::string text;
};

inline bool is_keyword(std::string_view w, std::string_view kw) {
  if (w.size() != kw.size()) return false;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(w[i])) != kw[i]) return false;
  return true;
}

inline std::vector<Lexeme> lex_query(std::string_view in) {
  std::vector<Lexeme> out;
  std::size_t i = 0;
  while (i < in.size()) {
    const char c = in[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '(') {
      out.push_back({Lex::LParen, i++, "("});
    } else if (c == ')') {
      out.push_back({Lex::RParen, i++, ")"});
    } else if (c == '"') {
      const auto close = in.find('"', i + 1);
      if (close == std::string_view::npos) throw QuerySyntaxError(i, "unterminated quote");
      out.push_back({Lex::Quoted, i, std::string(in.substr(i + 1, close - i - 1))});
      i = close + 1;
    } else {
      const std::size_t start = i;
      while (i < in.size() && !std::isspace(static_cast<unsigned char>(in[i])) && in[i] != '(' && in[i] != ')' &&
             in[i] != '"')
        ++i;
      std::string w(in.substr(start, i - start));
      Lex kind = Lex::Word;
      if (is_keyword(w, "and")) kind = Lex::And;
      else if (is_keyword(w, "or")) kind = Lex::Or;
      else if (is_keyword(w, "not")) kind = Lex::Not;
      out.push_back({kind, start, std::move(w)});
    }
  }
  out.push_back({Lex::End, in.size(), ""});
  return out;
}

class QueryParser {
 public:
  explicit QueryParser(std::string_view input) : lex_(lex_query(input)) {}

  QueryPtr parse() {
    if (peek().kind == Lex::End) throw QuerySyntaxError(0, "empty query");
    auto q = parse_or();
    const auto& next = peek();
    switch (next.kind) {
      case Lex::End: return q;
      case Lex::RParen: throw QuerySyntaxError(next.pos, "unbalanced ')'");
      case Lex::Word:
      case Lex::Quoted:
      case Lex::LParen:
      case Lex::Not: throw QuerySyntaxError(next.pos, "missing operator between operands");
      default: throw QuerySyntaxError(next.pos, "unexpected '" + next.text + "'");
    }
  }

 private:
  const Lexeme& peek() const { return lex_[at_]; }
  const Lexeme& take() { return lex_[at_++]; }

  QueryPtr parse_or() {
    auto left = parse_and();
    while (peek().kind == Lex::Or) {
      take();
      left = make_or(std::move(left), parse_and());
    }
    return left;
  }

  QueryPtr parse_and() {
    auto left = parse_unary();
    while (peek().kind == Lex::And) {
      take();
      left = make_and(std::move(left), parse_unary());
    }
    return left;
  }

  QueryPtr parse_unary() {
    if (peek().kind == Lex::Not) {
      take();
      return make_not(parse_unary());
    }
    return parse_primary();
  }

  QueryPtr parse_primary() {
    const Lexeme& lx = take();
    switch (lx.kind) {
      case Lex::LParen: {
        if (peek().kind == Lex::RParen) throw QuerySyntaxError(peek().pos, "empty parentheses");
        auto inner = parse_or();
        if (peek().kind != Lex::RParen) {
          if (peek().kind == Lex::End) throw QuerySyntaxError(lx.pos, "unbalanced '('");
          throw QuerySyntaxError(peek().pos, "missing operator between operands");
        }
        take();
        return inner;
      }
      case Lex::Word: {
        auto toks = tokenize(lx.text);
        if (toks.empty()) throw QuerySyntaxError(lx.pos, "'" + lx.text + "' contains no searchable characters");
        if (toks.size() > 1)
          throw QuerySyntaxError(lx.pos, "'" + lx.text + "' splits into " + std::to_string(toks.size()) +
                                             " tokens; quote it as a phrase");
        return make_term(std::move(toks.front()));
      }
      case Lex::Quoted: {
        auto toks = tokenize(lx.text);
        if (toks.empty()) throw QuerySyntaxError(lx.pos, "empty quoted phrase");
        if (toks.size() > kMaxNgram)
          throw QuerySyntaxError(lx.pos, "quoted phrase has " + std::to_string(toks.size()) + " tokens; at most 3");
        return make_phrase(std::move(toks));
      }
      case Lex::End: throw QuerySyntaxError(lx.pos, "expected an operand");
      case Lex::RParen: throw QuerySyntaxError(lx.pos, "expected an operand before ')'");
      default: throw QuerySyntaxError(lx.pos, "expected an operand before '" + lx.text + "'");
    }
  }

  std::vector<Lexeme> lex_;
  std::size_t at_ = 0;
};

// Binding strength: OR < AND < NOT < atoms.
inline int precedence(const Query& q) {
  if (q.as<OrNode>()) return 1;
  if (q.as<AndNode>()) return 2;
  if (q.as<NotNode>()) return 3;
  return 4;
}

inline void print_into(const Query& q, std::string& out);

inline void print_child(const Query& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_into(child, out);
  if (parens) out += ')';
}

inline void print_into(const Query& q, std::string& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TermNode>) {
          const bool reserved = n.token == "and" || n.token == "or" || n.token == "not";
          if (reserved) out += '"';
          out += n.token;
          if (reserved) out += '"';
        } else if constexpr (std::is_same_v<T, PhraseNode>) {
          out += '"';
          out += join_tokens(n.tokens);
          out += '"';
        } else if constexpr (std::is_same_v<T, NotNode>) {
          out += "NOT ";
          print_child(*n.child, precedence(*n.child) < 3, out);
        } else {
          const int p = precedence(q);
          print_child(*n.left, precedence(*n.left) < p, out);
          out += std::is_same_v<T, AndNode> ? " AND " : " OR ";
          print_child(*n.right, precedence(*n.right) <= p, out);
        }
      },
      q.node());
}

}  // namespace detail

/// Parses the Boolean query surface syntax: bare words and double-quoted
/// phrases combined with AND, OR and unary NOT (keywords case-insensitive),
/// NOT binding tightest and OR loosest, left-associative, parentheses group.
inline QueryPtr parse_query(std::string_view input) { return detail::QueryParser(input).parse(); }

/// Canonical text with the fewest parentheses that re-parse to the same tree.
inline std::string print_query(const Query& q) {
  std::string out;
  detail::print_into(q, out);
  return out;
}
inline std::string print_query(const QueryPtr& q) { return print_query(*q); }

/// Documents of `universe` matched by `q`. NOT complements within the universe.
inline DocSet eval_query(const Query& q, const InvertedIndex& index, std::span<const DocOrdinal> universe) {
  return std::visit(
      [&](const auto& n) -> DocSet {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TermNode>) {
          return index.match_ngram(std::span<const std::string>(&n.token, 1), universe);
        } else if constexpr (std::is_same_v<T, PhraseNode>) {
          return index.match_ngram(n.tokens, universe);
        } else if constexpr (std::is_same_v<T, NotNode>) {
          return subtract(universe, eval_query(*n.child, index, universe));
        } else if constexpr (std::is_same_v<T, AndNode>) {
          // Restricting the right operand to the left result is exact because
          // evaluation commutes with universe restriction.
          const DocSet left = eval_query(*n.left, index, universe);
          if (left.empty()) return left;
          return eval_query(*n.right, index, left);
        } else {
          return unite(eval_query(*n.left, index, universe), eval_query(*n.right, index, universe));
        }
      },
      q.node());
}

inline DocSet eval_query(const QueryPtr& q, const InvertedIndex& index, std::span<const DocOrdinal> universe) {
  return eval_query(*q, index, universe);
}

// OR-fold in order; a single query is returned unchanged.
inline QueryPtr or_fold(const std::vector<QueryPtr>& qs) {
  if (qs.empty()) throw std::invalid_argument("or_fold of nothing");
  QueryPtr acc = qs.front();
  for (std::size_t k = 1; k < qs.size(); ++k) acc = make_or(acc, qs[k]);
  return acc;
}

inline QueryPtr and_fold(const std::vector<QueryPtr>& qs) {
  if (qs.empty()) throw std::invalid_argument("and_fold of nothing");
  QueryPtr acc = qs.front();
  for (std::size_t k = 1; k < qs.size(); ++k) acc = make_and(acc, qs[k]);
  return acc;
}

// Every Term and Phrase literal appearing in the query, in left-to-right order.
inline void collect_literals(const Query& q, std::vector<Ngram>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, TermNode>) out.push_back({n.token});
        else if constexpr (std::is_same_v<T, PhraseNode>) out.push_back(n.tokens);
        else if constexpr (std::is_same_v<T, NotNode>) collect_literals(*n.child, out);
        else {
          collect_literals(*n.left, out);
          collect_literals(*n.right, out);
        }
      },
      q.node());
}

}  // namespace boolrule
