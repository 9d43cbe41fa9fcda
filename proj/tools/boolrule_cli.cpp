// Command-line front end: ingestion, splitting, statistics, evaluation,
// induction and the HTTP service.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <boolrule/boolrule.hpp>
#include <boolrule/serialize.hpp>
#include <boolrule/service.hpp>

namespace {

using namespace boolrule;

enum ExitStatus : int { kOk = 0, kUsage = 1, kData = 2, kEval = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Part require_part(const std::string& name) {
  const auto p = parse_part(name);
  if (!p) throw UsageError("unknown part '" + name + "' (train, validation, test)");
  return *p;
}

DocSet nonempty_part(const Workspace& ws, Part p) {
  if (!ws.has_split()) throw EvalError("project has no split; run `split` first");
  DocSet docs = ws.part_docs(p);
  if (docs.empty()) throw EvalError("split part '" + std::string(part_name(p)) + "' is empty");
  return docs;
}

void require_class(const Workspace& ws, const std::string& cls) {
  if (!ws.corpus.labels().contains(cls)) throw UsageError("unknown class '" + cls + "'");
}

SplitRatios parse_ratios(const std::string& text) {
  SplitRatios r{};
  std::stringstream ss(text);
  std::string item;
  std::size_t k = 0;
  while (std::getline(ss, item, ',')) {
    if (k >= 3) throw UsageError("--ratios takes exactly three comma-separated numbers");
    try {
      std::size_t used = 0;
      r[k] = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad ratio '" + item + "'");
    }
    ++k;
  }
  if (k != 3) throw UsageError("--ratios takes exactly three comma-separated numbers");
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boolean rule workbench for text classification"};
  app.require_subcommand(1);

  std::string project_path, corpus_path, out_path, class_name, part = "train", query_text, addr = "127.0.0.1:8080";
  std::string ratios_text = "0.2,0.1,0.7", sort = "f1", dir = "desc", note;
  std::uint64_t seed = kDefaultSeed;
  std::size_t limit = 50, max_n = 1, min_df = 2;
  bool as_json = false, accept = false;
  InductionParams ip;

  auto* ingest = app.add_subcommand("ingest", "Create a project from a JSONL corpus");
  ingest->add_option("--corpus", corpus_path, "JSONL corpus")->required();
  ingest->add_option("--out", out_path, "Project file to write")->required();

  auto* split = app.add_subcommand("split", "Assign train/validation/test parts");
  split->add_option("--project", project_path)->required();
  split->add_option("--ratios", ratios_text, "train,validation,test fractions")->capture_default_str();
  split->add_option("--seed", seed)->capture_default_str();

  auto* stats = app.add_subcommand("stats", "Per-class term statistics as TSV");
  stats->add_option("--project", project_path)->required();
  stats->add_option("--class", class_name)->required();
  stats->add_option("--part", part)->capture_default_str();
  stats->add_option("--sort", sort, "df_in, df_out, precision, recall, f1 or lift")->capture_default_str();
  stats->add_option("--dir", dir)->check(CLI::IsMember({"asc", "desc"}))->capture_default_str();
  stats->add_option("--limit", limit)->capture_default_str();
  stats->add_option("--max-n", max_n)->check(CLI::Range(1, 3))->capture_default_str();
  stats->add_option("--min-df", min_df)->check(CLI::PositiveNumber)->capture_default_str();

  auto* eval_query_cmd = app.add_subcommand("eval-query", "Evaluate one query against a split part");
  eval_query_cmd->add_option("--project", project_path)->required();
  eval_query_cmd->add_option("--query", query_text)->required();
  eval_query_cmd->add_option("--class", class_name, "Score the matches against this class");
  eval_query_cmd->add_option("--part", part)->capture_default_str();

  auto* eval_ruleset_cmd = app.add_subcommand("eval-ruleset", "Evaluate the saved rules");
  eval_ruleset_cmd->add_option("--project", project_path)->required();
  eval_ruleset_cmd->add_option("--part", part)->capture_default_str();
  eval_ruleset_cmd->add_flag("--json", as_json, "Emit the report as JSON");

  auto* add_rule = app.add_subcommand("add-rule", "Save a query as a rule for a class");
  add_rule->add_option("--project", project_path)->required();
  add_rule->add_option("--class", class_name)->required();
  add_rule->add_option("--query", query_text)->required();
  add_rule->add_option("--note", note);

  std::string rule_id;
  auto* remove_rule = app.add_subcommand("remove-rule", "Delete a saved rule");
  remove_rule->add_option("--project", project_path)->required();
  remove_rule->add_option("--id", rule_id)->required();

  auto* list_rules = app.add_subcommand("list-rules", "List saved rules");
  list_rules->add_option("--project", project_path)->required();
  list_rules->add_option("--class", class_name);

  auto* induct = app.add_subcommand("induct", "Induce rules from bagged decision trees");
  induct->add_option("--project", project_path)->required();
  induct->add_option("--class", class_name)->required();
  induct->add_option("--seed", ip.seed)->capture_default_str();
  induct->add_option("--n-trees", ip.n_trees)->check(CLI::PositiveNumber)->capture_default_str();
  induct->add_option("--max-depth", ip.max_depth)->check(CLI::PositiveNumber)->capture_default_str();
  induct->add_option("--min-leaf", ip.min_leaf)->check(CLI::PositiveNumber)->capture_default_str();
  induct->add_option("--max-candidates", ip.max_candidates, "Features tried per split; 0 means sqrt of the feature count")
      ->capture_default_str();
  induct->add_option("--min-precision", ip.min_precision)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  induct->add_option("--min-recall", ip.min_recall)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  induct->add_option("--max-rules", ip.max_rules)->capture_default_str();
  induct->add_option("--max-n", ip.max_n)->check(CLI::Range(1, 3))->capture_default_str();
  induct->add_option("--min-df", ip.min_df)->check(CLI::PositiveNumber)->capture_default_str();
  induct->add_option("--max-features", ip.max_features)->check(CLI::PositiveNumber)->capture_default_str();
  induct->add_flag("--accept", accept, "Save the induced rules into the project");

  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API for one project");
  serve_cmd->add_option("--project", project_path)->required();
  serve_cmd->add_option("--addr", addr, "host:port")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*ingest) {
      auto ws = Workspace::create(corpus_path, out_path);
      ws.save();
      std::cout << "ingested " << ws.corpus.size() << " documents, " << ws.corpus.labels().size() << " classes\n";
      return kOk;
    }

    // Parse before touching the project so syntax errors stay usage errors.
    QueryPtr query;
    if ((*eval_query_cmd || *add_rule) && !query_text.empty()) query = parse_query(query_text);
    else if (*eval_query_cmd || *add_rule) throw QuerySyntaxError(0, "empty query");

    auto ws = Workspace::open(project_path);

    if (*split) {
      const auto ratios = parse_ratios(ratios_text);
      try {
        ws.project.split = split_corpus(ws.corpus, ratios, seed);
      } catch (const CorpusError& e) {
        throw UsageError(e.what());
      }
      ws.save();
      const auto sizes = ws.project.split->sizes();
      for (Part p : kAllParts) std::cout << part_name(p) << '\t' << sizes[static_cast<std::size_t>(p)] << '\n';
      return kOk;
    }

    if (*stats) {
      require_class(ws, class_name);
      const auto column = parse_column(sort);
      if (!column) throw UsageError("unknown sort column '" + sort + "'");
      if (limit < 1) throw UsageError("--limit must be >= 1");
      const DocSet docs = nonempty_part(ws, require_part(part));
      std::vector<TermStats> rows;
      try {
        rows = class_term_stats(ws.index, ws.corpus, docs, class_name, max_n, min_df);
      } catch (const StatsError& e) {
        throw EvalError(e.what());
      }
      write_stats_tsv(rank_terms(std::move(rows), {*column, dir == "desc"}, limit), std::cout);
      return kOk;
    }

    if (*eval_query_cmd) {
      const Part p = require_part(part);
      if (!class_name.empty()) require_class(ws, class_name);
      const DocSet docs = nonempty_part(ws, p);
      const DocSet matched = eval_query(query, ws.index, docs);
      nlohmann::ordered_json out;
      out["query"] = print_query(query);
      out["part"] = part_name(p);
      out["count"] = matched.size();
      if (!class_name.empty()) {
        out["class"] = class_name;
        out["eval"] = to_json(evaluate_class(matched, gold_docs(ws.corpus, docs, class_name), docs));
      } else {
        std::vector<std::string> ids;
        for (DocOrdinal d : matched) ids.push_back(ws.corpus[d].id);
        out["matched"] = ids;
      }
      std::cout << out.dump(2) << '\n';
      return kOk;
    }

    if (*eval_ruleset_cmd) {
      const Part p = require_part(part);
      const auto report = evaluate_ruleset(ws.project.rules, ws.corpus, ws.index, nonempty_part(ws, p), p);
      if (as_json) std::cout << to_json(report).dump(2) << '\n';
      else std::cout << format_report_table(report);
      return kOk;
    }

    if (*add_rule) {
      require_class(ws, class_name);
      const auto id = ws.project.rules.add_rule(ws.corpus.labels(), class_name, query, note);
      ws.save();
      std::cout << id << '\t' << class_name << '\t' << print_query(query) << '\n';
      return kOk;
    }

    if (*remove_rule) {
      try {
        ws.project.rules.remove_rule(rule_id);
      } catch (const RuleSetError& e) {
        throw UsageError(e.what());
      }
      ws.save();
      std::cout << "removed " << rule_id << '\n';
      return kOk;
    }

    if (*list_rules) {
      const auto rules = class_name.empty() ? ws.project.rules.list_rules()
                                            : ws.project.rules.list_rules(std::string_view(class_name));
      for (const auto& r : rules) std::cout << r.id << '\t' << r.class_name << '\t' << print_query(r.query) << '\n';
      return kOk;
    }

    if (*induct) {
      require_class(ws, class_name);
      InductionResult result;
      try {
        result = induct_class(ws.corpus, ws.index, nonempty_part(ws, Part::Train),
                              nonempty_part(ws, Part::Validation), class_name, ip);
      } catch (const InductionError& e) {
        throw EvalError(e.what());
      }
      std::cout << "features\t" << result.feature_count << "\ncandidates\t" << result.candidate_count << '\n';
      for (const auto& r : result.rules) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "\tP=%.3f\tR=%.3f\tF1=%.3f", r.validation_precision, r.validation_recall,
                      r.validation_f1);
        std::cout << "rule\t" << print_query(rule_query(r)) << buf << '\n';
      }
      if (auto q = result.query()) std::cout << "query\t" << print_query(q) << '\n';
      else std::cout << "query\t(no rule passed the filters)\n";
      if (accept) {
        for (const auto& r : result.rules)
          ws.project.rules.add_rule(ws.corpus.labels(), class_name, rule_query(r), induced_note(ip.seed));
        ws.save();
        std::cout << "accepted\t" << result.rules.size() << '\n';
      }
      return kOk;
    }

    if (*serve_cmd) {
      const auto colon = addr.rfind(':');
      if (colon == std::string::npos) throw UsageError("--addr must be host:port");
      int port = 0;
      try {
        port = std::stoi(addr.substr(colon + 1));
      } catch (const std::exception&) {
        throw UsageError("bad port in --addr");
      }
      return serve(std::move(ws), addr.substr(0, colon), port) ? kOk : kData;
    }
  } catch (const QuerySyntaxError& e) {
    std::cerr << "error: " << e.message() << '\n' << "  " << query_text << '\n'
              << "  " << std::string(e.position(), ' ') << "^ (position " << e.position() << ")\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const RuleSetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.kind() == RuleSetError::Kind::NoRules ? kEval : kUsage;
  } catch (const ProjectError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const CorpusError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const EvalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kEval;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
