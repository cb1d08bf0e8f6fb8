#pragma once

// Enrichment -> concept mapping -> candidate search -> hybrid scoring ->
// tier-first ranking, plus the global performance product P = prod(P_i).

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vidagents/classification.hpp"
#include "vidagents/error.hpp"
#include "vidagents/ingestion.hpp"
#include "vidagents/knowledge_base.hpp"
#include "vidagents/ontology.hpp"
#include "vidagents/personalization.hpp"
#include "vidagents/synonyms.hpp"
#include "vidagents/text.hpp"

namespace vidagents {

inline constexpr std::size_t kDefaultEnrichCount = 3;
inline constexpr double kInjectedTermWeight = 0.3;
inline constexpr double kDefaultMappingThreshold = 0.3;
inline constexpr std::size_t kDefaultStoryboardSize = 8;

struct RawQuery {
  std::string user_id;
  std::string domain;
  std::string text;
  std::size_t k = 10;
};

struct WeightedTerm {
  std::string term;
  double weight = 1.0;
  bool injected = false;
  bool operator==(const WeightedTerm&) const = default;
};

struct EnrichedQuery {
  std::vector<WeightedTerm> terms;

  bool contains(std::string_view term) const {
    return std::any_of(terms.begin(), terms.end(), [&](const WeightedTerm& t) { return t.term == term; });
  }
};

struct MappedTerm {
  std::string term;
  std::string concept_id;
  double similarity = 0.0;
  bool operator==(const MappedTerm&) const = default;
};

struct ConceptMapping {
  std::vector<MappedTerm> pairs;
  std::vector<std::string> unmapped;

  /// Distinct mapped concept ids in first-seen order.
  std::vector<std::string> concept_ids() const {
    std::vector<std::string> out;
    for (const auto& p : pairs) {
      if (std::find(out.begin(), out.end(), p.concept_id) == out.end()) out.push_back(p.concept_id);
    }
    return out;
  }
};

struct StrategyWeights {
  double semantic = 0.5;
  double text = 0.2;
  double pref = 0.2;
  double pher = 0.1;

  void validate() const {
    if (semantic < 0 || text < 0 || pref < 0 || pher < 0) {
      throw Error(Errc::InvalidArgument, "strategy weights must be non-negative");
    }
    if (!(semantic > 0 || text > 0 || pref > 0 || pher > 0)) {
      throw Error(Errc::InvalidArgument, "at least one strategy weight must be positive");
    }
  }

  StrategyWeights scaled(double c) const { return {semantic * c, text * c, pref * c, pher * c}; }
  bool operator==(const StrategyWeights&) const = default;
};

inline void to_json(json& j, const StrategyWeights& w) {
  j = json{{"concept", w.semantic}, {"text", w.text}, {"pref", w.pref}, {"pher", w.pher}};
}
inline void from_json(const json& j, StrategyWeights& w) {
  j.at("concept").get_to(w.semantic);
  j.at("text").get_to(w.text);
  j.at("pref").get_to(w.pref);
  j.at("pher").get_to(w.pher);
}

using StrategyCatalog = std::map<std::string, StrategyWeights>;

inline StrategyCatalog default_strategy_catalog() {
  return {
      {"concept-first", {0.5, 0.2, 0.2, 0.1}},
      {"text-first", {0.2, 0.5, 0.2, 0.1}},
      {"personalized", {0.25, 0.25, 0.4, 0.1}},
      {"popular", {0.2, 0.2, 0.1, 0.5}},
      {"hybrid", {0.5, 0.2, 0.2, 0.1}},
  };
}

/// Per-component values in [0,1] and their weighted contributions.
struct ScoreBreakdown {
  double semantic = 0.0;
  double text = 0.0;
  double pref = 0.0;
  double pher = 0.0;
  StrategyWeights weights;

  double total() const {
    return weights.semantic * semantic + weights.text * text + weights.pref * pref + weights.pher * pher;
  }
};

struct RankedResult {
  std::string doc_id;
  std::string title;
  double score = 0.0;
  Tier tier = Tier::Usual;
  double tau = 0.0;
  ScoreBreakdown breakdown;
  Storyboard storyboard;
};

struct PerformanceReport {
  std::vector<std::pair<std::string, double>> stages;
  std::size_t n = 0;
  double p = 1.0;
};

struct QueryResult {
  std::vector<RankedResult> results;
  PerformanceReport performance;
  EnrichedQuery enriched;
  ConceptMapping mapping;
  std::string strategy;
};

// ---------------------------------------------------------------------------

/// P = product of the stage performances. Every P_i must lie in [0, 1].
inline PerformanceReport global_performance(std::vector<std::pair<std::string, double>> stages) {
  PerformanceReport report;
  for (const auto& [name, p] : stages) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(Errc::OutOfRangePerformance, "stage " + name + " performance " + std::to_string(p) + " outside [0,1]");
    }
    report.p *= p;
  }
  report.n = stages.size();
  report.stages = std::move(stages);
  return report;
}

/// Raw terms at weight 1; up to `m` top preferred concept labels of the
/// query domain are appended at weight 0.3 unless already present.
inline EnrichedQuery enrich(const RawQuery& raw, const AvatarProfile& profile, const ConceptLexicon& lexicon,
                            std::size_t m = kDefaultEnrichCount) {
  if (profile.user_id != raw.user_id) throw Error(Errc::UnknownUser, "profile does not belong to " + raw.user_id);
  EnrichedQuery q;
  for (auto& token : tokenize(raw.text)) {
    if (!q.contains(token)) q.terms.push_back({std::move(token), 1.0, false});
  }
  const auto top = ranked_concepts(profile.prefs_for(raw.domain));
  for (std::size_t i = 0; i < top.size() && i < m; ++i) {
    const std::string label = fold_case(lexicon.label_of(top[i].first));
    if (label.empty() || q.contains(label)) continue;
    q.terms.push_back({label, kInjectedTermWeight, true});
  }
  return q;
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.contains(x) ? 1 : 0;
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

/// Each term goes to its best concept in the domain (exact synonym = 1.0,
/// otherwise Jaccard of the resource synset with the concept synonyms) when
/// the similarity reaches `threshold`; ties go to the smaller concept id.
inline ConceptMapping map_concepts(const EnrichedQuery& q, const OntologyStore& ontology, const std::string& domain,
                                   const SynonymResource& synonyms, double threshold = kDefaultMappingThreshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(Errc::InvalidArgument, "mapping threshold must lie in (0, 1]");
  const auto concepts = ontology.concepts_for(domain);  // ordered by id
  ConceptMapping mapping;
  std::set<std::string> seen;
  for (const auto& wt : q.terms) {
    const std::string term = fold_case(wt.term);
    if (!seen.insert(term).second) continue;
    const std::set<std::string> synset = synonyms.synset(term);
    const Concept* best = nullptr;
    double best_sim = 0.0;
    for (const Concept* c : concepts) {
      const double sim = c->synonyms.contains(term) ? 1.0 : (synset.empty() ? 0.0 : jaccard(synset, c->synonyms));
      if (sim > best_sim) {
        best = c;
        best_sim = sim;
      }
    }
    if (best != nullptr && best_sim >= threshold) {
      mapping.pairs.push_back({term, best->id, best_sim});
    } else {
      mapping.unmapped.push_back(term);
    }
  }
  return mapping;
}

/// Document-frequency table over a store snapshot, for query/document cosine.
class TextIndex {
 public:
  explicit TextIndex(std::span<const KbDocument> docs) : doc_count_(docs.size()) {
    for (const auto& d : docs) {
      for (const auto& [term, count] : d.record.text_terms) {
        if (count > 0) ++doc_freq_[term];
      }
    }
  }

  double idf(const std::string& term) const {
    auto it = doc_freq_.find(term);
    return smoothed_idf(doc_count_, it == doc_freq_.end() ? 0 : it->second);
  }

  double cosine(const EnrichedQuery& q, const MetadataRecord& record) const {
    double dot = 0.0;
    double qn = 0.0;
    for (const auto& t : q.terms) {
      const double w = t.weight * idf(t.term);
      qn += w * w;
      if (auto it = record.text_terms.find(t.term); it != record.text_terms.end()) {
        dot += w * static_cast<double>(it->second) * idf(t.term);
      }
    }
    if (dot <= 0.0) return 0.0;
    double dn = 0.0;
    for (const auto& [term, count] : record.text_terms) {
      const double w = static_cast<double>(count) * idf(term);
      dn += w * w;
    }
    return std::min(1.0, dot / (std::sqrt(qn) * std::sqrt(dn)));
  }

 private:
  std::size_t doc_count_;
  std::map<std::string, std::size_t> doc_freq_;
};

inline double preference_cosine(const PreferenceVector& prefs, const std::vector<ConceptScore>& concepts) {
  double dot = 0.0, pn = 0.0, dn = 0.0;
  for (const auto& [id, w] : prefs) pn += w * w;
  for (const auto& c : concepts) {
    dn += c.confidence * c.confidence;
    if (auto it = prefs.find(c.concept_id); it != prefs.end()) dot += it->second * c.confidence;
  }
  if (dot <= 0.0) return 0.0;
  return std::min(1.0, dot / (std::sqrt(pn) * std::sqrt(dn)));
}

/// Confidence-weighted share of the mapped concepts the document carries.
inline double concept_overlap(const std::vector<std::string>& mapped, const MetadataRecord& record) {
  if (mapped.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& id : mapped) sum += record.concept_confidence(id).value_or(0.0);
  return std::min(1.0, sum / static_cast<double>(mapped.size()));
}

/// score = w_concept*C + w_text*T + w_pref*R + w_pher*(tau/tau_max)
inline ScoreBreakdown score(const KbDocument& doc, const ConceptMapping& mapping, const EnrichedQuery& q,
                            const PreferenceVector& prefs, const StrategyWeights& weights, double tau_max,
                            const TextIndex& index) {
  if (!(tau_max > 0.0)) throw Error(Errc::InvalidArgument, "tau_max must be positive");
  ScoreBreakdown b;
  b.weights = weights;
  b.semantic = concept_overlap(mapping.concept_ids(), doc.record);
  b.text = index.cosine(q, doc.record);
  b.pref = preference_cosine(prefs, doc.record.concepts);
  b.pher = std::clamp(doc.tau / tau_max, 0.0, 1.0);
  return b;
}

/// Final result order: tier (Active first), score descending, doc id ascending.
inline bool result_before(const RankedResult& a, const RankedResult& b) {
  if (a.tier != b.tier) return a.tier > b.tier;
  if (a.score != b.score) return a.score > b.score;
  return a.doc_id < b.doc_id;
}

/// Everything retrieve() reads; all of it is treated as an immutable snapshot.
struct RetrievalContext {
  const KnowledgeBase& kb;
  const OntologyStore& ontology;
  const SynonymResource& synonyms;
  double mapping_threshold = kDefaultMappingThreshold;
  std::size_t enrich_count = kDefaultEnrichCount;
  std::size_t storyboard_size = kDefaultStoryboardSize;
  /// Mean normalized rating of the session so far (1 before any feedback).
  double feedback_performance = 1.0;
};

inline QueryResult retrieve(const RetrievalContext& ctx, const RawQuery& raw, const AvatarProfile& profile,
                            const StrategyWeights& weights) {
  weights.validate();
  ctx.ontology.require_domain(raw.domain);
  QueryResult out;
  out.enriched = enrich(raw, profile, ctx.ontology.lexicon(), ctx.enrich_count);
  out.mapping = map_concepts(out.enriched, ctx.ontology, raw.domain, ctx.synonyms, ctx.mapping_threshold);

  const auto all_docs = ctx.kb.documents();
  const TextIndex index(all_docs);
  const auto concept_ids = out.mapping.concept_ids();

  std::vector<KbDocument> candidates;
  if (!concept_ids.empty()) {
    candidates = ctx.kb.find_by_concepts(concept_ids, kSearchTiers);
  } else {
    for (auto& doc : ctx.kb.documents_in(kSearchTiers)) {
      if (index.cosine(out.enriched, doc.record) > 0.0) candidates.push_back(std::move(doc));
    }
  }

  double tau_max = 0.0;
  for (const auto& d : candidates) tau_max = std::max(tau_max, d.tau);
  if (!(tau_max > 0.0)) tau_max = 1.0;

  const PreferenceVector& prefs = profile.prefs_for(raw.domain);
  std::vector<RankedResult> ranked;
  ranked.reserve(candidates.size());
  for (const auto& doc : candidates) {
    RankedResult r;
    r.doc_id = doc.id();
    r.title = doc.record.title;
    r.tier = doc.tier;
    r.tau = doc.tau;
    r.breakdown = score(doc, out.mapping, out.enriched, prefs, weights, tau_max, index);
    r.score = r.breakdown.total();
    ranked.push_back(std::move(r));
  }
  std::sort(ranked.begin(), ranked.end(), result_before);
  if (ranked.size() > raw.k) ranked.resize(raw.k);
  for (auto& r : ranked) {
    if (auto doc = std::find_if(candidates.begin(), candidates.end(), [&](const KbDocument& d) { return d.id() == r.doc_id; });
        doc != candidates.end()) {
      r.storyboard = summarize(doc->record, ctx.storyboard_size);
    }
  }
  out.results = std::move(ranked);

  const std::size_t total_terms = out.enriched.terms.size();
  const double p_map = total_terms == 0 ? 1.0
                                        : static_cast<double>(out.mapping.pairs.size()) / static_cast<double>(total_terms);
  const double p_retrieve =
      raw.k == 0 ? 1.0 : std::min(1.0, static_cast<double>(out.results.size()) / static_cast<double>(raw.k));
  out.performance = global_performance({{"enrich", 1.0},
                                        {"map", p_map},
                                        {"retrieve", p_retrieve},
                                        {"feedback", std::clamp(ctx.feedback_performance, 0.0, 1.0)}});
  return out;
}

// ---------------------------------------------------------------------------
// Wire format

inline void to_json(json& j, const PerformanceReport& r) {
  json stages = json::array();
  for (const auto& [name, p] : r.stages) stages.push_back({{"name", name}, {"p", p}});
  j = json{{"stages", stages}, {"n", r.n}, {"p_global", r.p}};
}

inline void to_json(json& j, const RankedResult& r) {
  const auto& b = r.breakdown;
  j = json{{"doc_id", r.doc_id},
           {"title", r.title},
           {"score", r.score},
           {"tier", r.tier},
           {"tau", r.tau},
           {"breakdown",
            {{"concept", b.weights.semantic * b.semantic},
             {"text", b.weights.text * b.text},
             {"pref", b.weights.pref * b.pref},
             {"pher", b.weights.pher * b.pher}}},
           {"storyboard", r.storyboard.keyframes}};
}

/// {results:[...], performance:{stages:[{name,p}], p_global}}
inline json serialize_query_result(const QueryResult& result) {
  json out;
  out["results"] = result.results;
  out["performance"] = result.performance;
  out["strategy"] = result.strategy;
  json mapped = json::array();
  for (const auto& m : result.mapping.pairs) {
    mapped.push_back({{"term", m.term}, {"concept", m.concept_id}, {"similarity", m.similarity}});
  }
  out["mapping"] = {{"pairs", mapped}, {"unmapped", result.mapping.unmapped}};
  return out;
}

}  // namespace vidagents
