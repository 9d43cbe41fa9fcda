#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>
#include <openssl/evp.h>

#include "corpus.hpp"
#include "index.hpp"
#include "query.hpp"
#include "ruleset.hpp"

namespace boolrule {

inline constexpr int kProjectFormatVersion = 1;

class ProjectError : public std::runtime_error {
 public:
  enum class Kind { Io, Malformed, UnknownVersion, HashMismatch, BadQuery, BadCorpus };
  ProjectError(Kind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProjectError(ProjectError::Kind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CorpusRef {
  std::string path;  // as written; relative paths resolve against the project file's directory
  std::string sha256;
  bool operator==(const CorpusRef&) const = default;
};

struct Project {
  int format_version = kProjectFormatVersion;
  CorpusRef corpus;
  std::optional<SplitAssignment> split;
  RuleSet rules;

  bool operator==(const Project&) const = default;
};

/// Serializes the project. Queries are stored in canonical printed form and
/// the split assignment in corpus order, so the output is a pure function of
/// the project value.
inline std::string save_project(const Project& p, const Corpus& corpus) {
  nlohmann::ordered_json j;
  j["format_version"] = p.format_version;
  j["corpus"] = {{"path", p.corpus.path}, {"sha256", p.corpus.sha256}};
  if (p.split) {
    nlohmann::ordered_json assignment = nlohmann::ordered_json::object();
    for (DocOrdinal d = 0; d < corpus.size(); ++d)
      assignment[corpus[d].id] = std::string(part_name(p.split->part_of[d]));
    j["split"] = {{"seed", p.split->seed}, {"ratios", p.split->ratios}, {"assignment", std::move(assignment)}};
  } else {
    j["split"] = nullptr;
  }
  j["rules"] = nlohmann::ordered_json::array();
  for (const auto& r : p.rules.rules())
    j["rules"].push_back(
        {{"id", r.id}, {"class", r.class_name}, {"query", print_query(r.query)}, {"note", r.note}, {"created_at", r.created_at}});
  j["class_priority"] = p.rules.class_priority();
  return j.dump(2) + "\n";
}

/// Parses a project file against an already loaded corpus. The caller checks
/// the corpus hash (see Workspace::open).
inline Project load_project(const std::string& text, const Corpus& corpus) {
  using K = ProjectError::Kind;
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProjectError(K::Malformed, std::string("project file is not valid JSON: ") + e.what());
  }
  Project p;
  try {
    if (!j.is_object() || !j.contains("format_version")) throw ProjectError(K::Malformed, "missing format_version");
    p.format_version = j.at("format_version").get<int>();
    if (p.format_version != kProjectFormatVersion)
      throw ProjectError(K::UnknownVersion, "unknown project format_version " + std::to_string(p.format_version));
    p.corpus.path = j.at("corpus").at("path").get<std::string>();
    p.corpus.sha256 = j.at("corpus").at("sha256").get<std::string>();

    const auto& js = j.at("split");
    if (!js.is_null()) {
      SplitAssignment split;
      split.seed = js.at("seed").get<std::uint64_t>();
      const auto ratios = js.at("ratios").get<std::vector<double>>();
      if (ratios.size() != 3) throw ProjectError(K::Malformed, "split ratios must have three entries");
      std::copy(ratios.begin(), ratios.end(), split.ratios.begin());
      const auto& assignment = js.at("assignment");
      if (!assignment.is_object() || assignment.size() != corpus.size())
        throw ProjectError(K::Malformed, "split assignment must cover every document exactly once");
      split.part_of.assign(corpus.size(), Part::Train);
      std::vector<char> seen(corpus.size(), 0);
      for (const auto& [id, part] : assignment.items()) {
        const auto ord = corpus.find(id);
        if (!ord) throw ProjectError(K::Malformed, "split assigns unknown document '" + id + "'");
        const auto pp = parse_part(part.get<std::string>());
        if (!pp) throw ProjectError(K::Malformed, "unknown split part '" + part.get<std::string>() + "'");
        if (seen[*ord]++) throw ProjectError(K::Malformed, "document '" + id + "' assigned twice");
        split.part_of[*ord] = *pp;
      }
      p.split = std::move(split);
    }

    for (const auto& jr : j.at("rules")) {
      Rule r;
      r.id = jr.at("id").get<std::string>();
      r.class_name = jr.at("class").get<std::string>();
      const auto qtext = jr.at("query").get<std::string>();
      try {
        r.query = parse_query(qtext);
      } catch (const QuerySyntaxError& e) {
        throw ProjectError(K::BadQuery, "rule '" + r.id + "' has an unparsable query: " + e.what());
      }
      r.note = jr.at("note").get<std::string>();
      r.created_at = jr.at("created_at").get<std::string>();
      if (!corpus.labels().contains(r.class_name))
        throw ProjectError(K::Malformed, "rule '" + r.id + "' names unknown class '" + r.class_name + "'");
      try {
        p.rules.insert(std::move(r));
      } catch (const RuleSetError& e) {
        throw ProjectError(K::Malformed, e.what());
      }
    }
    try {
      p.rules.set_class_priority(j.at("class_priority").get<std::vector<std::string>>());
    } catch (const RuleSetError& e) {
      throw ProjectError(K::Malformed, e.what());
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProjectError(K::Malformed, std::string("malformed project file: ") + e.what());
  }
  return p;
}

// A loaded project with its corpus and index. Owns everything the service and
// the CLI commands operate on.
struct Workspace {
  std::filesystem::path project_path;
  Project project;
  Corpus corpus;
  InvertedIndex index;

  std::filesystem::path corpus_file() const {
    std::filesystem::path cp(project.corpus.path);
    if (cp.is_relative()) cp = project_path.parent_path() / cp;
    return cp;
  }

  /// Creates a project for a corpus file (no split, no rules).
  static Workspace create(const std::filesystem::path& corpus_path, const std::filesystem::path& project_path) {
    Workspace ws;
    ws.project_path = project_path;
    const std::string bytes = read_file(corpus_path);
    ws.corpus = parse_corpus(bytes);
    auto rel = std::filesystem::proximate(corpus_path, std::filesystem::absolute(project_path).parent_path());
    ws.project.corpus = {rel.generic_string(), sha256_hex(bytes)};
    ws.index = build_index(ws.corpus);
    return ws;
  }

  static Workspace open(const std::filesystem::path& project_path) {
    Workspace ws;
    ws.project_path = project_path;
    const std::string text = read_file(project_path);
    // Peek the corpus reference before full validation, which needs the corpus.
    nlohmann::json head;
    try {
      head = nlohmann::json::parse(text);
      if (head.contains("format_version") && head["format_version"].is_number_integer() &&
          head["format_version"].get<int>() != kProjectFormatVersion)
        throw ProjectError(ProjectError::Kind::UnknownVersion,
                           "unknown project format_version " + std::to_string(head["format_version"].get<int>()));
      ws.project.corpus.path = head.at("corpus").at("path").get<std::string>();
      ws.project.corpus.sha256 = head.at("corpus").at("sha256").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProjectError(ProjectError::Kind::Malformed, std::string("malformed project file: ") + e.what());
    }
    const std::string bytes = read_file(ws.corpus_file());
    if (sha256_hex(bytes) != ws.project.corpus.sha256)
      throw ProjectError(ProjectError::Kind::HashMismatch,
                         "corpus '" + ws.corpus_file().string() + "' does not match the hash recorded in the project");
    ws.corpus = parse_corpus(bytes);
    ws.project = load_project(text, ws.corpus);
    ws.index = build_index(ws.corpus);
    return ws;
  }

  std::string serialize() const { return save_project(project, corpus); }

  void save() const { save_to(project_path); }

  void save_to(const std::filesystem::path& path) const {
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw ProjectError(ProjectError::Kind::Io, "cannot write '" + tmp + "'");
      out << serialize();
      if (!out) throw ProjectError(ProjectError::Kind::Io, "write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
  }

  bool has_split() const { return project.split.has_value(); }

  DocSet part_docs(Part p) const {
    if (!project.split) throw ProjectError(ProjectError::Kind::Malformed, "project has no split; run split first");
    return project.split->members(p);
  }

 private:
  static Corpus parse_corpus(const std::string& bytes) {
    try {
      return ingest_jsonl_string(bytes);
    } catch (const CorpusError& e) {
      throw ProjectError(ProjectError::Kind::BadCorpus, std::string("corpus: ") + e.what());
    }
  }
};

}  // namespace boolrule
