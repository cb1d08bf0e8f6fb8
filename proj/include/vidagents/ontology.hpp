#pragma once

// Two-level concept store: "common" media-level concepts shared by every
// domain, plus per-domain concept graphs (is-a edges, synonym sets).

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vidagents/error.hpp"
#include "vidagents/io.hpp"
#include "vidagents/text.hpp"

namespace vidagents {

inline constexpr std::string_view kCommonDomain = "common";

struct Concept {
  std::string id;
  std::string label;
  std::string domain;
  std::set<std::string> synonyms;
  std::optional<std::string> parent;
  bool operator==(const Concept&) const = default;
};

inline void to_json(json& j, const Concept& c) {
  j = json{{"id", c.id}, {"label", c.label}, {"domain", c.domain}, {"synonyms", c.synonyms}};
  j["parent"] = c.parent ? json(*c.parent) : json(nullptr);
}

inline void from_json(const json& j, Concept& c) {
  j.at("id").get_to(c.id);
  j.at("label").get_to(c.label);
  j.at("domain").get_to(c.domain);
  c.synonyms.clear();
  for (const auto& s : j.value("synonyms", std::vector<std::string>{})) c.synonyms.insert(fold_case(s));
  c.parent.reset();
  if (auto it = j.find("parent"); it != j.end() && !it->is_null()) c.parent = it->get<std::string>();
}

class ConceptLexicon {
 public:
  /// Adds a concept; the case-folded label is always part of its synonyms.
  void add(Concept c) {
    if (c.id.empty()) throw Error(Errc::InvalidOntology, "concept id must be non-empty");
    if (concepts_.contains(c.id)) throw Error(Errc::InvalidOntology, "duplicate concept id " + c.id);
    if (c.domain.empty()) c.domain = std::string(kCommonDomain);
    c.synonyms.insert(fold_case(c.label));
    if (c.domain != kCommonDomain) domains_.insert(c.domain);
    concepts_.emplace(c.id, std::move(c));
  }

  /// Checks parent edges: no dangling parents, no cycles, and level-2
  /// concepts only point at their own domain or at common concepts.
  void validate() const {
    for (const auto& [id, c] : concepts_) {
      if (!c.parent) continue;
      auto parent = concepts_.find(*c.parent);
      if (parent == concepts_.end()) throw Error(Errc::InvalidOntology, "concept " + id + " has dangling parent " + *c.parent);
      if (parent->second.domain != c.domain && parent->second.domain != kCommonDomain) {
        throw Error(Errc::InvalidOntology, "concept " + id + " crosses into domain " + parent->second.domain);
      }
      std::set<std::string> seen{id};
      for (auto cur = c.parent; cur; cur = concepts_.at(*cur).parent) {
        if (!seen.insert(*cur).second) throw Error(Errc::InvalidOntology, "cycle through concept " + id);
      }
    }
  }

  bool contains(std::string_view id) const { return concepts_.find(std::string(id)) != concepts_.end(); }

  const Concept& at(std::string_view id) const {
    auto it = concepts_.find(std::string(id));
    if (it == concepts_.end()) throw Error(Errc::UnknownConcept, "unknown concept " + std::string(id));
    return it->second;
  }

  const Concept* find(std::string_view id) const {
    auto it = concepts_.find(std::string(id));
    return it == concepts_.end() ? nullptr : &it->second;
  }

  /// Parent chain, nearest first.
  std::vector<std::string> ancestors(std::string_view id) const {
    std::vector<std::string> out;
    for (auto cur = at(id).parent; cur; cur = at(*cur).parent) out.push_back(*cur);
    return out;
  }

  std::vector<const Concept*> in_domain(std::string_view domain) const {
    std::vector<const Concept*> out;
    for (const auto& [id, c] : concepts_) {
      if (c.domain == domain) out.push_back(&c);
    }
    return out;
  }

  std::string domain_of(std::string_view id) const {
    const Concept* c = find(id);
    return c ? c->domain : std::string(kCommonDomain);
  }

  std::string label_of(std::string_view id) const {
    const Concept* c = find(id);
    return c ? c->label : std::string(id);
  }

  const std::map<std::string, Concept>& concepts() const noexcept { return concepts_; }
  const std::set<std::string>& domains() const noexcept { return domains_; }
  std::size_t size() const noexcept { return concepts_.size(); }

  bool operator==(const ConceptLexicon&) const = default;

 private:
  std::map<std::string, Concept> concepts_;
  std::set<std::string> domains_;
};

/// Level 1 = domain "common"; level 2 = one lexicon slice per domain.
class OntologyStore {
 public:
  OntologyStore() = default;
  explicit OntologyStore(ConceptLexicon lexicon) : lexicon_(std::move(lexicon)) { lexicon_.validate(); }

  bool has_domain(std::string_view domain) const {
    return domain == kCommonDomain || lexicon_.domains().contains(std::string(domain));
  }

  void require_domain(std::string_view domain) const {
    if (!has_domain(domain)) throw Error(Errc::UnknownDomain, "unknown domain " + std::string(domain));
  }

  std::vector<const Concept*> level1() const { return lexicon_.in_domain(kCommonDomain); }

  std::vector<const Concept*> level2(std::string_view domain) const {
    if (domain == kCommonDomain || !has_domain(domain)) {
      throw Error(Errc::UnknownDomain, "no level-2 lexicon for domain " + std::string(domain));
    }
    return lexicon_.in_domain(domain);
  }

  /// Concepts a query in `domain` is matched against.
  std::vector<const Concept*> concepts_for(std::string_view domain) const {
    require_domain(domain);
    return lexicon_.in_domain(domain);
  }

  const ConceptLexicon& lexicon() const noexcept { return lexicon_; }
  const std::set<std::string>& domains() const noexcept { return lexicon_.domains(); }

  bool operator==(const OntologyStore&) const = default;

 private:
  ConceptLexicon lexicon_;
};

inline void to_json(json& j, const OntologyStore& store) {
  json concepts = json::array();
  for (const auto& [id, c] : store.lexicon().concepts()) concepts.push_back(c);
  j = json{{"concepts", concepts}};
}

inline OntologyStore parse_ontology(const json& doc) {
  ConceptLexicon lexicon;
  try {
    for (const auto& row : doc.at("concepts")) lexicon.add(row.get<Concept>());
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidOntology, std::string("malformed ontology: ") + e.what());
  }
  return OntologyStore(std::move(lexicon));
}

inline OntologyStore load_ontology(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidOntology, path.string() + ": " + e.what());
  }
  return parse_ontology(doc);
}

/// Sample ontology covering the news, sports and art domains.
inline OntologyStore bundled_ontology() {
  struct Row {
    const char* id;
    const char* domain;
    std::vector<std::string> synonyms;
    const char* parent;
  };
  const std::vector<Row> rows = {
      {"video", "common", {"video", "clip", "footage"}, nullptr},
      {"outdoor", "common", {"outdoor", "outside", "exterior"}, "video"},
      {"indoor", "common", {"indoor", "inside", "interior"}, "video"},
      {"crowd", "common", {"crowd", "audience", "spectators"}, "video"},
      {"studio", "common", {"studio", "set"}, "indoor"},
      {"speech", "common", {"speech", "talk", "interview"}, "video"},

      {"news", "news", {"news", "bulletin", "headline", "journal", "broadcast", "coverage"}, "video"},
      {"politics", "news", {"politics", "election", "parliament", "minister"}, "news"},
      {"economy", "news", {"economy", "market", "finance", "inflation"}, "news"},
      {"weather", "news", {"weather", "forecast", "storm", "climate"}, "news"},

      {"sports", "sports", {"sports", "sport", "match", "game", "team", "season", "league"}, "video"},
      {"football", "sports", {"football", "footy"}, "sports"},
      {"tennis", "sports", {"tennis", "racket"}, "sports"},
      {"basketball", "sports", {"basketball", "hoops"}, "sports"},

      {"art", "art", {"art", "arts", "culture", "exhibition", "gallery", "artist"}, "video"},
      {"painting", "art", {"painting", "canvas", "painter"}, "art"},
      {"music", "art", {"music", "concert", "orchestra"}, "art"},
      {"dance", "art", {"dance", "ballet", "choreography"}, "art"},
  };
  ConceptLexicon lexicon;
  for (const auto& row : rows) {
    Concept c;
    c.id = row.id;
    c.label = row.id;
    c.domain = row.domain;
    c.synonyms.insert(row.synonyms.begin(), row.synonyms.end());
    if (row.parent != nullptr) c.parent = row.parent;
    lexicon.add(std::move(c));
  }
  return OntologyStore(std::move(lexicon));
}

}  // namespace vidagents
