#pragma once

#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "eval.hpp"
#include "induct.hpp"
#include "project.hpp"
#include "query.hpp"
#include "serialize.hpp"
#include "stats.hpp"

namespace boolrule {

// Error returned to API clients as {"error": {"code", "message", "position"?}}.
class ApiError : public std::runtime_error {
 public:
  enum class Code { BadQuery, BadRequest, UnknownClass, UnknownRule, Conflict, Internal };

  ApiError(Code code, const std::string& message, std::optional<std::size_t> position = std::nullopt)
      : std::runtime_error(message), code_(code), position_(position) {}

  Code code() const { return code_; }
  std::optional<std::size_t> position() const { return position_; }

  static std::string_view code_name(Code c) {
    switch (c) {
      case Code::BadQuery: return "bad_query";
      case Code::BadRequest: return "bad_request";
      case Code::UnknownClass: return "unknown_class";
      case Code::UnknownRule: return "unknown_rule";
      case Code::Conflict: return "conflict";
      case Code::Internal: return "internal";
    }
    return "internal";
  }

  int http_status() const {
    switch (code_) {
      case Code::BadQuery:
      case Code::BadRequest: return 400;
      case Code::UnknownClass:
      case Code::UnknownRule: return 404;
      case Code::Conflict: return 409;
      case Code::Internal: return 500;
    }
    return 500;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json e{{"code", code_name(code_)}, {"message", what()}};
    if (position_) e["position"] = *position_;
    return {{"error", e}};
  }

 private:
  Code code_;
  std::optional<std::size_t> position_;
};

// Byte spans in `text` covered by occurrences of any of the n-grams.
inline std::vector<TokenSpan> highlight_spans(const std::string& text, const std::vector<std::string>& tokens,
                                              const std::vector<Ngram>& ngrams) {
  const auto spans = token_spans(text);
  std::vector<char> marked(tokens.size(), 0);
  for (const auto& g : ngrams) {
    if (g.empty() || g.size() > tokens.size()) continue;
    for (std::size_t p = 0; p + g.size() <= tokens.size(); ++p) {
      bool hit = true;
      for (std::size_t j = 0; j < g.size() && hit; ++j) hit = tokens[p + j] == g[j];
      if (hit)
        for (std::size_t j = 0; j < g.size(); ++j) marked[p + j] = 1;
    }
  }
  std::vector<TokenSpan> out;
  for (std::size_t k = 0; k < marked.size() && k < spans.size(); ++k) {
    if (!marked[k]) continue;
    if (!out.empty() && k > 0 && marked[k - 1]) out.back().end = spans[k].end;
    else out.push_back(spans[k]);
  }
  return out;
}

/// HTTP JSON API over one loaded project. Reads run concurrently against a
/// consistent snapshot; rule mutations and saves take an exclusive lock.
class WorkbenchService {
 public:
  explicit WorkbenchService(Workspace ws, std::ostream& log = std::cerr) : ws_(std::move(ws)), log_(log) {}

  void mount(httplib::Server& srv) {
    srv.Get("/api/classes", wrap([this](const auto& req, auto& res) { get_classes(req, res); }));
    srv.Get("/api/stats", wrap([this](const auto& req, auto& res) { get_stats(req, res); }));
    srv.Post("/api/query/eval", wrap([this](const auto& req, auto& res) { post_query_eval(req, res); }));
    srv.Get("/api/rules", wrap([this](const auto& req, auto& res) { get_rules(req, res); }));
    srv.Post("/api/rules", wrap([this](const auto& req, auto& res) { post_rule(req, res); }));
    srv.Delete(R"(/api/rules/([^/]+))", wrap([this](const auto& req, auto& res) { delete_rule(req, res); }));
    srv.Get("/api/report", wrap([this](const auto& req, auto& res) { get_report(req, res); }));
    srv.Get("/api/misclassified", wrap([this](const auto& req, auto& res) { get_misclassified(req, res); }));
    srv.Post("/api/induct", wrap([this](const auto& req, auto& res) { post_induct(req, res, false); }));
    srv.Post("/api/induct/accept", wrap([this](const auto& req, auto& res) { post_induct(req, res, true); }));
    srv.Post("/api/project/save", wrap([this](const auto& req, auto& res) { post_save(req, res); }));
    srv.Get(R"(/api/doc/(.+))", wrap([this](const auto& req, auto& res) { get_doc(req, res); }));
  }

  // Hash of the serialized project; changes iff the persisted state changes.
  std::string state_hash() const {
    std::shared_lock lock(mu_);
    return sha256_hex(ws_.serialize());
  }

  std::uint64_t revision() const {
    std::shared_lock lock(mu_);
    return revision_;
  }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  Handler wrap(Handler h) {
    return [this, h](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const ApiError& e) {
        send_error(res, e);
      } catch (const QuerySyntaxError& e) {
        send_error(res, ApiError(ApiError::Code::BadQuery, e.message(), e.position()));
      } catch (const RuleSetError& e) {
        send_error(res, from_ruleset_error(e));
      } catch (const nlohmann::json::exception& e) {
        send_error(res, ApiError(ApiError::Code::BadRequest, std::string("malformed request body: ") + e.what()));
      } catch (const std::exception& e) {
        send_error(res, ApiError(ApiError::Code::Internal, e.what()));
      }
    };
  }

  static ApiError from_ruleset_error(const RuleSetError& e) {
    switch (e.kind()) {
      case RuleSetError::Kind::UnknownClass: return {ApiError::Code::UnknownClass, e.what()};
      case RuleSetError::Kind::UnknownRule: return {ApiError::Code::UnknownRule, e.what()};
      default: return {ApiError::Code::Conflict, e.what()};
    }
  }

  static void send_json(httplib::Response& res, const nlohmann::ordered_json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, const ApiError& e) { send_json(res, e.to_json(), e.http_status()); }

  Part part_param(const httplib::Request& req, const std::string& value, const char* endpoint) const {
    const auto p = parse_part(value.empty() ? "train" : value);
    if (!p) throw ApiError(ApiError::Code::BadRequest, "unknown part '" + value + "'");
    if (*p == Part::Test) log_line(std::string("test-part access via ") + endpoint + " (" + req.path + ")");
    return *p;
  }

  Part part_from_query(const httplib::Request& req, const char* endpoint) const {
    return part_param(req, req.has_param("part") ? req.get_param_value("part") : "", endpoint);
  }

  void log_line(const std::string& msg) const {
    std::lock_guard lock(log_mu_);
    log_ << "[boolrule] " << msg << std::endl;
  }

  DocSet part_docs(Part p) const {
    if (!ws_.has_split()) throw ApiError(ApiError::Code::Conflict, "project has no split; run split first");
    DocSet docs = ws_.part_docs(p);
    if (docs.empty()) throw ApiError(ApiError::Code::Conflict, "split part '" + std::string(part_name(p)) + "' is empty");
    return docs;
  }

  void require_class(const std::string& cls) const {
    if (!ws_.corpus.labels().contains(cls)) throw ApiError(ApiError::Code::UnknownClass, "unknown class '" + cls + "'");
  }

  static std::size_t size_param(const httplib::Request& req, const char* key, std::size_t dflt) {
    if (!req.has_param(key)) return dflt;
    const auto v = req.get_param_value(key);
    try {
      std::size_t used = 0;
      const auto n = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
      throw ApiError(ApiError::Code::BadRequest, std::string("parameter '") + key + "' must be a non-negative integer");
    }
  }

  nlohmann::ordered_json doc_json(DocOrdinal d, const std::vector<Ngram>* highlight = nullptr) const {
    const auto& doc = ws_.corpus[d];
    nlohmann::ordered_json j{{"id", doc.id}, {"text", doc.text}, {"labels", doc.gold_labels}};
    if (ws_.has_split()) j["part"] = part_name(ws_.project.split->part_of[d]);
    if (highlight) {
      nlohmann::ordered_json spans = nlohmann::ordered_json::array();
      for (const auto& s : highlight_spans(doc.text, doc.tokens, *highlight)) spans.push_back({s.begin, s.end});
      j["highlights"] = std::move(spans);
    }
    return j;
  }

  // GET /api/classes
  void get_classes(const httplib::Request&, httplib::Response& res) const {
    std::shared_lock lock(mu_);
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    std::map<Part, std::map<std::string, std::size_t>> dist;
    if (ws_.has_split())
      for (Part p : kAllParts) dist[p] = class_distribution(ws_.corpus, *ws_.project.split, p);
    for (const auto& name : ws_.corpus.labels().names()) {
      nlohmann::ordered_json c{{"name", name}};
      nlohmann::ordered_json sup = nlohmann::ordered_json::object();
      for (Part p : kAllParts)
        if (ws_.has_split()) sup[std::string(part_name(p))] = dist[p][name];
      c["support"] = std::move(sup);
      c["has_rules"] = ws_.project.rules.has_rules(name);
      classes.push_back(std::move(c));
    }
    send_json(res, {{"classes", std::move(classes)}, {"split", ws_.has_split()}, {"revision", revision_}});
  }

  std::shared_ptr<const std::vector<TermStats>> cached_stats(Part part, const std::string& cls, std::size_t max_n,
                                                             std::size_t min_df) const {
    const auto key = std::make_tuple(static_cast<int>(part), cls, max_n, min_df);
    {
      std::lock_guard lock(cache_mu_);
      if (auto it = stats_cache_.find(key); it != stats_cache_.end()) return it->second;
    }
    const DocSet docs = part_docs(part);
    std::shared_ptr<const std::vector<TermStats>> stats;
    try {
      stats = std::make_shared<const std::vector<TermStats>>(
          class_term_stats(ws_.index, ws_.corpus, docs, cls, max_n, min_df));
    } catch (const StatsError& e) {
      throw ApiError(ApiError::Code::Conflict, e.what());
    }
    std::lock_guard lock(cache_mu_);
    stats_cache_.emplace(key, stats);
    return stats;
  }

  // GET /api/stats?class&part&sort&dir&max_n&min_df&limit&offset
  void get_stats(const httplib::Request& req, httplib::Response& res) const {
    std::shared_lock lock(mu_);
    if (!req.has_param("class")) throw ApiError(ApiError::Code::BadRequest, "missing parameter 'class'");
    const auto cls = req.get_param_value("class");
    require_class(cls);
    const Part part = part_from_query(req, "/api/stats");
    const std::string sort = req.has_param("sort") ? req.get_param_value("sort") : "term_f1";
    const auto column = parse_column(sort);
    if (!column) throw ApiError(ApiError::Code::BadRequest, "unknown sort column '" + sort + "'");
    const std::string dir = req.has_param("dir") ? req.get_param_value("dir") : "desc";
    if (dir != "asc" && dir != "desc") throw ApiError(ApiError::Code::BadRequest, "dir must be asc or desc");
    const auto max_n = size_param(req, "max_n", 1);
    const auto min_df = size_param(req, "min_df", 2);
    const auto limit = size_param(req, "limit", 50);
    const auto offset = size_param(req, "offset", 0);
    if (max_n < 1 || max_n > 3) throw ApiError(ApiError::Code::BadRequest, "max_n must be 1-3");
    if (min_df < 1) throw ApiError(ApiError::Code::BadRequest, "min_df must be >= 1");
    if (limit < 1) throw ApiError(ApiError::Code::BadRequest, "limit must be >= 1");

    const auto stats = cached_stats(part, cls, max_n, min_df);
    const auto page = rank_terms(*stats, {*column, dir == "desc"}, limit, offset);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& s : page) rows.push_back(to_json(s));
    send_json(res, {{"class", cls},
                    {"part", part_name(part)},
                    {"sort", column_name(*column)},
                    {"dir", dir},
                    {"total", stats->size()},
                    {"offset", offset},
                    {"rows", std::move(rows)}});
  }

  // POST /api/query/eval {query, part?, class?, sample_limit?}
  void post_query_eval(const httplib::Request& req, httplib::Response& res) const {
    const auto body = nlohmann::json::parse(req.body);
    if (!body.contains("query") || !body["query"].is_string())
      throw ApiError(ApiError::Code::BadQuery, "missing query", 0);
    const QueryPtr q = parse_query(body["query"].get<std::string>());
    std::shared_lock lock(mu_);
    const Part part = part_param(req, body.value("part", std::string()), "/api/query/eval");
    const DocSet docs = part_docs(part);
    const std::size_t sample_limit = body.value("sample_limit", std::size_t{20});
    const DocSet matched = eval_query(q, ws_.index, docs);
    std::vector<Ngram> literals;
    collect_literals(*q, literals);

    nlohmann::ordered_json out;
    out["query"] = print_query(q);
    out["part"] = part_name(part);
    out["count"] = matched.size();
    out["universe_size"] = docs.size();
    nlohmann::ordered_json ids = nlohmann::ordered_json::array();
    for (DocOrdinal d : matched) ids.push_back(ws_.corpus[d].id);
    out["matched"] = std::move(ids);
    nlohmann::ordered_json samples = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < matched.size() && k < sample_limit; ++k) samples.push_back(doc_json(matched[k], &literals));
    out["samples"] = std::move(samples);

    if (body.contains("class") && !body["class"].is_null()) {
      const auto cls = body["class"].get<std::string>();
      require_class(cls);
      const DocSet gold = gold_docs(ws_.corpus, docs, cls);
      out["class"] = cls;
      out["eval"] = to_json(evaluate_class(matched, gold, docs));
      nlohmann::ordered_json fps = nlohmann::ordered_json::array(), fns = nlohmann::ordered_json::array();
      const DocSet fp = subtract(matched, gold), fn = subtract(gold, matched);
      for (std::size_t k = 0; k < fp.size() && k < sample_limit; ++k) fps.push_back(doc_json(fp[k], &literals));
      for (std::size_t k = 0; k < fn.size() && k < sample_limit; ++k) fns.push_back(doc_json(fn[k], &literals));
      out["false_positives"] = std::move(fps);
      out["false_negatives"] = std::move(fns);
    }
    send_json(res, out);
  }

  nlohmann::ordered_json rules_json() const {
    nlohmann::ordered_json rules = nlohmann::ordered_json::array();
    for (const auto& r : ws_.project.rules.rules()) rules.push_back(to_json(r));
    return {{"rules", std::move(rules)},
            {"class_priority", ws_.project.rules.class_priority()},
            {"revision", revision_}};
  }

  // GET /api/rules
  void get_rules(const httplib::Request&, httplib::Response& res) const {
    std::shared_lock lock(mu_);
    send_json(res, rules_json());
  }

  // POST /api/rules {class, query, note?}
  void post_rule(const httplib::Request& req, httplib::Response& res) {
    const auto body = nlohmann::json::parse(req.body);
    if (!body.contains("query") || !body["query"].is_string())
      throw ApiError(ApiError::Code::BadQuery, "missing query", 0);
    if (!body.contains("class") || !body["class"].is_string())
      throw ApiError(ApiError::Code::BadRequest, "missing class");
    const QueryPtr q = parse_query(body["query"].get<std::string>());
    std::unique_lock lock(mu_);
    const auto id = ws_.project.rules.add_rule(ws_.corpus.labels(), body["class"].get<std::string>(), q,
                                               body.value("note", std::string()));
    ++revision_;
    send_json(res, {{"id", id}, {"query", print_query(q)}, {"revision", revision_}}, 201);
  }

  // DELETE /api/rules/{id}
  void delete_rule(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    std::unique_lock lock(mu_);
    ws_.project.rules.remove_rule(id);
    ++revision_;
    send_json(res, {{"removed", id}, {"revision", revision_}});
  }

  // GET /api/report?part
  void get_report(const httplib::Request& req, httplib::Response& res) const {
    std::shared_lock lock(mu_);
    const Part part = part_from_query(req, "/api/report");
    const EvalReport report = build_report(ws_.project.rules, ws_.corpus, ws_.index, part_docs(part), part);
    res.set_header("X-Revision", std::to_string(revision_));
    send_json(res, to_json(report));
  }

  // GET /api/misclassified?class&part
  void get_misclassified(const httplib::Request& req, httplib::Response& res) const {
    std::shared_lock lock(mu_);
    if (!req.has_param("class")) throw ApiError(ApiError::Code::BadRequest, "missing parameter 'class'");
    const auto cls = req.get_param_value("class");
    require_class(cls);
    const Part part = part_from_query(req, "/api/misclassified");
    const auto listing = misclassified(ws_.project.rules, ws_.corpus, ws_.index, cls, part_docs(part));
    const QueryPtr q = ws_.project.rules.effective_query(cls);
    std::vector<Ngram> literals;
    collect_literals(*q, literals);
    auto docs = [&](const std::vector<std::string>& ids) {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& id : ids) arr.push_back(doc_json(*ws_.corpus.find(id), &literals));
      return arr;
    };
    send_json(res, {{"class", cls},
                    {"part", part_name(part)},
                    {"false_positives", docs(listing.false_positives)},
                    {"false_negatives", docs(listing.false_negatives)}});
  }

  // POST /api/induct {class, params} and POST /api/induct/accept {class, params}
  void post_induct(const httplib::Request& req, httplib::Response& res, bool accept) {
    const auto body = nlohmann::json::parse(req.body);
    if (!body.contains("class") || !body["class"].is_string())
      throw ApiError(ApiError::Code::BadRequest, "missing class");
    const auto cls = body["class"].get<std::string>();
    const auto params = induction_params_from_json(body.value("params", nlohmann::json()));
    InductionResult result;
    {
      std::shared_lock lock(mu_);
      require_class(cls);
      try {
        result = induct_class(ws_.corpus, ws_.index, part_docs(Part::Train), part_docs(Part::Validation), cls, params);
      } catch (const InductionError& e) {
        throw ApiError(ApiError::Code::Conflict, e.what());
      }
    }
    auto out = to_json(result);
    if (accept) {
      std::unique_lock lock(mu_);
      nlohmann::ordered_json ids = nlohmann::ordered_json::array();
      for (const auto& r : result.rules)
        ids.push_back(ws_.project.rules.add_rule(ws_.corpus.labels(), cls, rule_query(r), induced_note(params.seed)));
      if (!result.rules.empty()) ++revision_;
      out["accepted_ids"] = std::move(ids);
      out["revision"] = revision_;
    }
    send_json(res, out);
  }

  // POST /api/project/save
  void post_save(const httplib::Request&, httplib::Response& res) {
    std::unique_lock lock(mu_);
    ws_.save();
    send_json(res, {{"path", ws_.project_path.string()}, {"revision", revision_}});
  }

  // GET /api/doc/{id}
  void get_doc(const httplib::Request& req, httplib::Response& res) const {
    std::shared_lock lock(mu_);
    const std::string id = req.matches[1];
    const auto d = ws_.corpus.find(id);
    if (!d) throw ApiError(ApiError::Code::BadRequest, "unknown document '" + id + "'");
    if (ws_.has_split() && ws_.project.split->part_of[*d] == Part::Test) log_line("test-part access via /api/doc");
    send_json(res, doc_json(*d));
  }

  mutable std::shared_mutex mu_;
  Workspace ws_;
  std::uint64_t revision_ = 0;
  std::ostream& log_;
  mutable std::mutex log_mu_;
  mutable std::mutex cache_mu_;
  mutable std::map<std::tuple<int, std::string, std::size_t, std::size_t>, std::shared_ptr<const std::vector<TermStats>>>
      stats_cache_;
};

/// Blocks serving the project on host:port until the server is stopped.
inline bool serve(Workspace ws, const std::string& host, int port, std::ostream& log = std::cerr) {
  httplib::Server srv;
  WorkbenchService service(std::move(ws), log);
  service.mount(srv);
  log << "[boolrule] listening on " << host << ":" << port << std::endl;
  return srv.listen(host, port);
}

}  // namespace boolrule
