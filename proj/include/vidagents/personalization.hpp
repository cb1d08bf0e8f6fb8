#pragma once

// Avatar, facet, strategist and community logic. Every user has exactly one
// avatar; avatars join geographic/linguistic/interest communities with a
// membership degree, and community profiles seed new avatars' preferences.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vidagents/error.hpp"
#include "vidagents/ingestion.hpp"
#include "vidagents/io.hpp"
#include "vidagents/ontology.hpp"
#include "vidagents/text.hpp"

namespace vidagents {

inline constexpr double kDefaultPreferenceRate = 0.1;
inline constexpr std::string_view kDefaultStrategy = "hybrid";

enum class Device { Desktop, Mobile, Tablet, Other };

NLOHMANN_JSON_SERIALIZE_ENUM(Device, {{Device::Desktop, "desktop"},
                                      {Device::Mobile, "mobile"},
                                      {Device::Tablet, "tablet"},
                                      {Device::Other, "other"}})

struct ContextTriplet {
  std::string location = "??";
  std::int64_t time = 0;
  Device device = Device::Other;
  bool operator==(const ContextTriplet&) const = default;
};

/// Concept id -> weight; L1-normalized or all zero.
using PreferenceVector = std::map<std::string, double>;

struct HistoryEntry {
  std::string query;
  std::uint64_t step = 0;
  bool operator==(const HistoryEntry&) const = default;
};

struct AvatarProfile {
  std::string user_id;
  std::string language;
  ContextTriplet context;
  std::map<std::string, PreferenceVector> prefs;
  std::map<std::string, double> memberships;
  std::map<std::string, std::vector<HistoryEntry>> history;

  const PreferenceVector& prefs_for(const std::string& domain) const {
    static const PreferenceVector kEmpty;
    auto it = prefs.find(domain);
    return it == prefs.end() ? kEmpty : it->second;
  }

  bool operator==(const AvatarProfile&) const = default;
};

enum class CommunityCriterion { Geographic, Linguistic, Interest };

NLOHMANN_JSON_SERIALIZE_ENUM(CommunityCriterion, {{CommunityCriterion::Geographic, "geographic"},
                                                  {CommunityCriterion::Linguistic, "linguistic"},
                                                  {CommunityCriterion::Interest, "interest"}})

struct Community {
  std::string id;
  CommunityCriterion criterion = CommunityCriterion::Interest;
  std::map<std::string, double> members;
  bool operator==(const Community&) const = default;
};

struct FacetState {
  std::string user_id;
  std::string domain;
  std::string strategy;
  std::map<std::string, std::uint64_t> usage;
  std::vector<HistoryEntry> history;
  bool operator==(const FacetState&) const = default;
};

struct FeedbackEvent {
  std::string user_id;
  std::string doc_id;
  int rating = 0;
  std::uint64_t step = 0;
};

enum class SuggestionSource { History, Predictive };

NLOHMANN_JSON_SERIALIZE_ENUM(SuggestionSource, {{SuggestionSource::History, "history"},
                                                {SuggestionSource::Predictive, "predictive"}})

struct Suggestion {
  std::string text;
  SuggestionSource source = SuggestionSource::History;
  bool operator==(const Suggestion&) const = default;
};

inline void to_json(json& j, const Suggestion& s) { j = json{{"text", s.text}, {"source", s.source}}; }

// ---------------------------------------------------------------------------
// JSON

inline void to_json(json& j, const ContextTriplet& c) {
  j = json{{"location", c.location}, {"time", c.time}, {"device", c.device}};
}
inline void from_json(const json& j, ContextTriplet& c) {
  j.at("location").get_to(c.location);
  j.at("time").get_to(c.time);
  j.at("device").get_to(c.device);
}
inline void to_json(json& j, const HistoryEntry& h) { j = json{{"query", h.query}, {"step", h.step}}; }
inline void from_json(const json& j, HistoryEntry& h) {
  j.at("query").get_to(h.query);
  j.at("step").get_to(h.step);
}
inline void to_json(json& j, const AvatarProfile& p) {
  j = json{{"user_id", p.user_id}, {"language", p.language}, {"context", p.context},
           {"prefs", p.prefs},     {"memberships", p.memberships}, {"history", p.history}};
}
inline void from_json(const json& j, AvatarProfile& p) {
  j.at("user_id").get_to(p.user_id);
  j.at("language").get_to(p.language);
  j.at("context").get_to(p.context);
  j.at("prefs").get_to(p.prefs);
  j.at("memberships").get_to(p.memberships);
  j.at("history").get_to(p.history);
}
inline void to_json(json& j, const Community& c) {
  j = json{{"id", c.id}, {"criterion", c.criterion}, {"members", c.members}};
}
inline void from_json(const json& j, Community& c) {
  j.at("id").get_to(c.id);
  j.at("criterion").get_to(c.criterion);
  j.at("members").get_to(c.members);
}
inline void to_json(json& j, const FacetState& f) {
  j = json{{"user_id", f.user_id}, {"domain", f.domain}, {"strategy", f.strategy},
           {"usage", f.usage},     {"history", f.history}};
}
inline void from_json(const json& j, FacetState& f) {
  j.at("user_id").get_to(f.user_id);
  j.at("domain").get_to(f.domain);
  j.at("strategy").get_to(f.strategy);
  j.at("usage").get_to(f.usage);
  j.at("history").get_to(f.history);
}

// ---------------------------------------------------------------------------

/// Rescales to L1 = 1; vectors with no positive mass become empty.
inline void l1_normalize(PreferenceVector& v) {
  double total = 0.0;
  for (const auto& [k, w] : v) total += w;
  if (!(total > 0.0)) {
    v.clear();
    return;
  }
  for (auto it = v.begin(); it != v.end();) {
    if (it->second <= 0.0) {
      it = v.erase(it);
    } else {
      it->second /= total;
      ++it;
    }
  }
}

/// Concepts sorted by weight descending, then id ascending; zero weights dropped.
inline std::vector<std::pair<std::string, double>> ranked_concepts(const PreferenceVector& v) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [id, w] : v) {
    if (w > 0.0) out.emplace_back(id, w);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return out;
}

inline std::string geo_community_id(std::string_view country) { return "geo:" + std::string(country); }
inline std::string lang_community_id(std::string_view language) { return "lang:" + std::string(language); }

class Personalization {
 public:
  explicit Personalization(double eta = kDefaultPreferenceRate) : eta_(eta) {}

  bool has_user(const std::string& user_id) const { return profiles_.contains(user_id); }

  const AvatarProfile& profile(const std::string& user_id) const {
    auto it = profiles_.find(user_id);
    if (it == profiles_.end()) throw Error(Errc::UnknownUser, "unknown user " + user_id);
    return it->second;
  }

  const Community& community(const std::string& id) const {
    auto it = communities_.find(id);
    if (it == communities_.end()) throw Error(Errc::UnknownCommunity, "unknown community " + id);
    return it->second;
  }

  const std::map<std::string, AvatarProfile>& profiles() const noexcept { return profiles_; }
  const std::map<std::string, Community>& communities() const noexcept { return communities_; }

  /// New avatar in geo:<country> and lang:<language>; its preferences start as
  /// the geographic community's profile for every domain that community knows.
  const AvatarProfile& create_avatar(const std::string& user_id, std::string country, const std::string& language,
                                     Device device = Device::Other) {
    if (user_id.empty()) throw Error(Errc::InvalidArgument, "user id must be non-empty");
    if (profiles_.contains(user_id)) throw Error(Errc::DuplicateUser, "user already exists: " + user_id);
    for (char& ch : country) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (country.empty()) country = "??";
    const bool valid_country = country == "??" || (country.size() == 2 && std::isalpha(static_cast<unsigned char>(country[0])) &&
                                                   std::isalpha(static_cast<unsigned char>(country[1])));
    if (!valid_country) throw Error(Errc::InvalidArgument, "location must be a 2-letter country code: " + country);

    AvatarProfile p;
    p.user_id = user_id;
    p.language = language;
    p.context = ContextTriplet{country, static_cast<std::int64_t>(step_), device};

    const std::string geo = geo_community_id(country);
    ensure_community(geo, CommunityCriterion::Geographic);
    for (const auto& domain : community_domains(geo)) {
      PreferenceVector base = community_profile(geo, domain);
      if (!base.empty()) p.prefs[domain] = std::move(base);
    }

    profiles_.emplace(user_id, std::move(p));
    join(user_id, geo, CommunityCriterion::Geographic, 1.0);
    if (!language.empty()) join(user_id, lang_community_id(language), CommunityCriterion::Linguistic, 1.0);
    return profiles_.at(user_id);
  }

  /// Adds (or updates) a membership; the community is created if absent.
  void join(const std::string& user_id, const std::string& community_id, CommunityCriterion criterion,
            double degree = 1.0) {
    if (!(degree > 0.0 && degree <= 1.0)) throw Error(Errc::InvalidArgument, "membership degree must lie in (0, 1]");
    auto& p = mutable_profile(user_id);
    ensure_community(community_id, criterion).members[user_id] = degree;
    p.memberships[community_id] = degree;
  }

  /// Degree-weighted mean of member preferences for `domain`, L1-normalized.
  PreferenceVector community_profile(const std::string& community_id, const std::string& domain) const {
    const Community& c = community(community_id);
    PreferenceVector acc;
    for (const auto& [user, degree] : c.members) {
      auto it = profiles_.find(user);
      if (it == profiles_.end()) continue;
      for (const auto& [concept_id, w] : it->second.prefs_for(domain)) acc[concept_id] += degree * w;
    }
    l1_normalize(acc);
    return acc;
  }

  /// Most-used strategy among peers (users sharing a community) for this
  /// domain; "hybrid" when nobody has usage; ties by name.
  std::string assign_strategy(const std::string& user_id, const std::string& domain) const {
    const AvatarProfile& p = profile(user_id);
    std::set<std::string> peers;
    for (const auto& [community_id, degree] : p.memberships) {
      auto it = communities_.find(community_id);
      if (it == communities_.end()) continue;
      for (const auto& [member, d] : it->second.members) {
        if (member != user_id) peers.insert(member);
      }
    }
    std::map<std::string, std::uint64_t> totals;
    for (const auto& peer : peers) {
      auto it = facets_.find({peer, domain});
      if (it == facets_.end()) continue;
      for (const auto& [strategy, count] : it->second.usage) totals[strategy] += count;
    }
    std::string best(kDefaultStrategy);
    std::uint64_t best_count = 0;
    for (const auto& [strategy, count] : totals) {  // map order gives the name tie-break
      if (count > best_count) {
        best = strategy;
        best_count = count;
      }
    }
    return best;
  }

  /// Facet for (user, domain), created with the strategist's choice.
  const FacetState& facet(const std::string& user_id, const std::string& domain) {
    profile(user_id);
    auto it = facets_.find({user_id, domain});
    if (it != facets_.end()) return it->second;
    FacetState f;
    f.user_id = user_id;
    f.domain = domain;
    f.strategy = assign_strategy(user_id, domain);
    return facets_.emplace(std::pair{user_id, domain}, std::move(f)).first->second;
  }

  const FacetState* find_facet(const std::string& user_id, const std::string& domain) const {
    auto it = facets_.find({user_id, domain});
    return it == facets_.end() ? nullptr : &it->second;
  }

  void set_strategy(const std::string& user_id, const std::string& domain, const std::string& strategy) {
    facet(user_id, domain);
    facets_.at({user_id, domain}).strategy = strategy;
  }

  /// Records a query in the avatar's and facet's history and counts the
  /// strategy used.
  void record_query(const std::string& user_id, const std::string& domain, const std::string& text,
                    const std::string& strategy) {
    auto& p = mutable_profile(user_id);
    facet(user_id, domain);
    auto& f = facets_.at({user_id, domain});
    const HistoryEntry entry{text, ++step_};
    p.history[domain].push_back(entry);
    p.context.time = static_cast<std::int64_t>(step_);
    f.history.push_back(entry);
    ++f.usage[strategy];
  }

  void set_usage(const std::string& user_id, const std::string& domain, const std::string& strategy,
                 std::uint64_t count) {
    facet(user_id, domain);
    facets_.at({user_id, domain}).usage[strategy] = count;
  }

  /// History suggestions (most frequent first, ties by recency) followed by
  /// predictive ones (top community concepts not covered by history terms).
  std::vector<Suggestion> suggest(const std::string& user_id, const std::string& domain, std::size_t k,
                                  const ConceptLexicon* lexicon = nullptr) const {
    const AvatarProfile& p = profile(user_id);
    std::vector<Suggestion> out;
    if (k == 0) return out;
    std::set<std::string> emitted;

    struct Tally {
      std::size_t count = 0;
      std::uint64_t last = 0;
    };
    std::map<std::string, Tally> tallies;
    std::set<std::string> covered_terms;
    if (auto it = p.history.find(domain); it != p.history.end()) {
      for (const auto& h : it->second) {
        auto& t = tallies[h.query];
        ++t.count;
        t.last = std::max(t.last, h.step);
        for (auto& term : tokenize(h.query)) covered_terms.insert(term);
      }
    }
    std::vector<std::pair<std::string, Tally>> ordered(tallies.begin(), tallies.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
      if (a.second.count != b.second.count) return a.second.count > b.second.count;
      if (a.second.last != b.second.last) return a.second.last > b.second.last;
      return a.first < b.first;
    });
    for (const auto& [query, tally] : ordered) {
      if (out.size() >= k) return out;
      if (emitted.insert(query).second) out.push_back({query, SuggestionSource::History});
    }

    PreferenceVector trend;
    for (const auto& [community_id, degree] : p.memberships) {
      if (!communities_.contains(community_id)) continue;
      for (const auto& [concept_id, w] : community_profile(community_id, domain)) trend[concept_id] += degree * w;
    }
    for (const auto& [concept_id, w] : ranked_concepts(trend)) {
      if (out.size() >= k) break;
      const std::string label = fold_case(lexicon ? lexicon->label_of(concept_id) : concept_id);
      if (covered_terms.contains(label)) continue;
      if (emitted.insert(label).second) out.push_back({label, SuggestionSource::Predictive});
    }
    return out;
  }

  /// prefs[domain(c)][c] += eta * rating/5 * conf for each document concept,
  /// then L1-renormalizes the touched domains. Returns the updated profile.
  const AvatarProfile& record_feedback(const FeedbackEvent& event, const std::vector<ConceptScore>& doc_concepts,
                                       const std::function<std::string(const std::string&)>& domain_of) {
    if (event.rating < 0 || event.rating > 5) {
      throw Error(Errc::InvalidRating, "rating must lie in 0..5, got " + std::to_string(event.rating));
    }
    auto& p = mutable_profile(event.user_id);
    ++step_;
    const double gain = eta_ * static_cast<double>(event.rating) / 5.0;
    if (gain <= 0.0) return p;
    std::set<std::string> touched;
    for (const auto& c : doc_concepts) {
      const std::string domain = domain_of(c.concept_id);
      p.prefs[domain][c.concept_id] += gain * c.confidence;
      touched.insert(domain);
    }
    for (const auto& domain : touched) {
      l1_normalize(p.prefs[domain]);
      if (p.prefs[domain].empty()) p.prefs.erase(domain);
    }
    return p;
  }

  double eta() const noexcept { return eta_; }

  // Persistence: profiles.jsonl, communities.json, facets.jsonl in `dir`.

  void save(const std::filesystem::path& dir) const {
    std::vector<json> profiles;
    for (const auto& [id, p] : profiles_) profiles.emplace_back(p);
    write_json_lines(dir / "profiles.jsonl", profiles);
    json communities = json::array();
    for (const auto& [id, c] : communities_) communities.push_back(c);
    write_json_file(dir / "communities.json", json{{"communities", communities}, {"step", step_}, {"eta", eta_}});
    std::vector<json> facets;
    for (const auto& [key, f] : facets_) facets.emplace_back(f);
    write_json_lines(dir / "facets.jsonl", facets);
  }

  static Personalization load(const std::filesystem::path& dir) {
    try {
      const json meta = read_json_file(dir / "communities.json");
      Personalization out(meta.at("eta").get<double>());
      out.step_ = meta.at("step").get<std::uint64_t>();
      for (const auto& row : meta.at("communities")) {
        auto c = row.get<Community>();
        out.communities_.emplace(c.id, std::move(c));
      }
      for (const auto& row : read_json_lines(dir / "profiles.jsonl")) {
        auto p = row.get<AvatarProfile>();
        out.profiles_.emplace(p.user_id, std::move(p));
      }
      for (const auto& row : read_json_lines(dir / "facets.jsonl")) {
        auto f = row.get<FacetState>();
        out.facets_.emplace(std::pair{f.user_id, f.domain}, std::move(f));
      }
      return out;
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptStore, dir.string() + ": " + e.what());
    }
  }

  bool operator==(const Personalization& other) const {
    return profiles_ == other.profiles_ && communities_ == other.communities_ && facets_ == other.facets_ &&
           step_ == other.step_ && eta_ == other.eta_;
  }

 private:
  AvatarProfile& mutable_profile(const std::string& user_id) {
    auto it = profiles_.find(user_id);
    if (it == profiles_.end()) throw Error(Errc::UnknownUser, "unknown user " + user_id);
    return it->second;
  }

  Community& ensure_community(const std::string& id, CommunityCriterion criterion) {
    auto it = communities_.find(id);
    if (it == communities_.end()) it = communities_.emplace(id, Community{id, criterion, {}}).first;
    return it->second;
  }

  std::set<std::string> community_domains(const std::string& community_id) const {
    std::set<std::string> domains;
    for (const auto& [user, degree] : community(community_id).members) {
      auto it = profiles_.find(user);
      if (it == profiles_.end()) continue;
      for (const auto& [domain, v] : it->second.prefs) domains.insert(domain);
    }
    return domains;
  }

  double eta_;
  std::uint64_t step_ = 0;
  std::map<std::string, AvatarProfile> profiles_;
  std::map<std::string, Community> communities_;
  std::map<std::pair<std::string, std::string>, FacetState> facets_;
};

}  // namespace vidagents
