#pragma once

// Synthetic corpus generator and simulated-user driver. Everything is a pure
// function of the seed: the same spec yields byte-identical corpus files and
// metrics.

#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vidagents/engine.hpp"
#include "vidagents/ingestion.hpp"
#include "vidagents/io.hpp"
#include "vidagents/ontology.hpp"
#include "vidagents/synonyms.hpp"

namespace vidagents::harness {

struct UserSpec {
  std::string id;
  std::string country;
  std::string language;
  std::string domain;
  std::string interest;  // leaf concept id
};

inline void to_json(json& j, const UserSpec& u) {
  j = json{{"id", u.id}, {"country", u.country}, {"language", u.language}, {"domain", u.domain}, {"interest", u.interest}};
}
inline void from_json(const json& j, UserSpec& u) {
  j.at("id").get_to(u.id);
  u.country = j.value("country", "");
  u.language = j.value("language", "");
  j.at("domain").get_to(u.domain);
  j.at("interest").get_to(u.interest);
}

inline std::vector<UserSpec> default_users() {
  return {
      {"u1", "FR", "fr", "sports", "football"},
      {"u2", "MA", "ar", "news", "politics"},
      {"u3", "US", "en", "art", "painting"},
      {"u4", "FR", "fr", "sports", "football"},
      {"u5", "MA", "fr", "news", "politics"},
  };
}

struct SyntheticSpec {
  std::uint64_t seed = 2024;
  std::vector<std::string> domains = {"news", "sports", "art"};
  std::size_t docs_per_domain = 20;
  std::vector<UserSpec> users = default_users();
  std::size_t rounds = 20;
  std::size_t k = 5;
  /// Ratings given to relevant / irrelevant results.
  int relevant_rating = 5;
  int irrelevant_rating = 0;

  void validate() const {
    if (docs_per_domain < 1) throw Error(Errc::InvalidArgument, "docs_per_domain must be >= 1");
    if (rounds < 1) throw Error(Errc::InvalidArgument, "rounds must be >= 1");
    if (domains.empty()) throw Error(Errc::InvalidArgument, "at least one domain is required");
  }
};

inline void to_json(json& j, const SyntheticSpec& s) {
  j = json{{"seed", s.seed},   {"domains", s.domains}, {"docs_per_domain", s.docs_per_domain},
           {"users", s.users}, {"rounds", s.rounds},   {"k", s.k},
           {"relevant_rating", s.relevant_rating}, {"irrelevant_rating", s.irrelevant_rating}};
}
inline void from_json(const json& j, SyntheticSpec& s) {
  s.seed = j.value("seed", s.seed);
  s.domains = j.value("domains", s.domains);
  s.docs_per_domain = j.value("docs_per_domain", s.docs_per_domain);
  if (j.contains("users")) s.users = j.at("users").get<std::vector<UserSpec>>();
  s.rounds = j.value("rounds", s.rounds);
  s.k = j.value("k", s.k);
  s.relevant_rating = j.value("relevant_rating", s.relevant_rating);
  s.irrelevant_rating = j.value("irrelevant_rating", s.irrelevant_rating);
}

struct Label {
  std::string doc_id;
  std::string concept_id;
  bool operator==(const Label&) const = default;
};

struct SyntheticCorpus {
  std::vector<VideoDescriptor> descriptors;
  std::vector<Label> labels;
  /// Planted shot boundaries (index of each shot's first frame, excluding 0).
  std::map<std::string, std::vector<std::size_t>> boundaries;
  OntologyStore ontology;
  StaticSynonymTable synonyms;
};

// ---------------------------------------------------------------------------
// Generation

namespace detail {

inline std::size_t pick(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

inline const std::map<std::string, std::vector<std::string>>& topic_words() {
  static const std::map<std::string, std::vector<std::string>> words = {
      {"politics", {"vote", "senate", "campaign", "policy", "debate", "ballot"}},
      {"economy", {"stocks", "trade", "budget", "banks", "growth", "jobs"}},
      {"weather", {"rain", "wind", "snow", "temperature", "sunny", "cloud"}},
      {"football", {"goal", "striker", "penalty", "pitch", "keeper", "stadium"}},
      {"tennis", {"serve", "volley", "court", "grandslam", "baseline", "ace"}},
      {"basketball", {"dunk", "rebound", "hoop", "nba", "guard", "threepointer"}},
      {"painting", {"brush", "oil", "portrait", "palette", "easel", "fresco"}},
      {"music", {"melody", "symphony", "guitar", "violin", "rhythm", "album"}},
      {"dance", {"tango", "waltz", "stage", "rehearsal", "dancer", "pirouette"}},
  };
  return words;
}

inline const std::vector<std::string>& noise_words() {
  static const std::vector<std::string> words = {"today", "people", "time",  "world", "story", "life",
                                                  "city",  "week",   "year",  "great", "watch", "live",
                                                  "later", "moment", "place", "thing"};
  return words;
}

inline std::vector<std::string> sorted_synonyms(const Concept& c) { return {c.synonyms.begin(), c.synonyms.end()}; }

/// Leaf concepts of a domain: children of the domain root, by id.
inline std::vector<const Concept*> topics(const OntologyStore& ontology, const std::string& domain) {
  std::vector<const Concept*> out;
  for (const Concept* c : ontology.concepts_for(domain)) {
    if (c->domain == domain && c->parent && *c->parent == domain) out.push_back(c);
  }
  return out;
}

}  // namespace detail

inline constexpr double kFrameStep = 0.5;
inline constexpr double kShotMass = 0.6;
inline constexpr double kSignatureMass = 0.1;
inline constexpr std::size_t kSignatureBins = 4;
inline constexpr std::size_t kShotBins = 12;

/// Piecewise-constant frames: 0.6 on a per-shot bin (never repeated by the
/// next shot) and 0.1 on each of four signature bins. Adjacent shots therefore
/// differ by exactly L1 = 1.2. Returns the frames and the planted boundaries.
inline std::pair<std::vector<FrameFeature>, std::vector<std::size_t>> planted_frames(
    std::mt19937_64& rng, const std::vector<std::size_t>& shot_lengths, std::size_t signature,
    std::size_t bins = kDefaultHistogramBins) {
  if (bins < kShotBins + kSignatureBins) throw Error(Errc::InvalidArgument, "too few histogram bins");
  const std::size_t signature_slots = (bins - kShotBins) / kSignatureBins;
  const std::size_t sig_base = (signature % signature_slots) * kSignatureBins;
  std::vector<FrameFeature> frames;
  std::vector<std::size_t> boundaries;
  std::size_t prev_bin = bins;
  for (std::size_t s = 0; s < shot_lengths.size(); ++s) {
    if (shot_lengths[s] == 0) throw Error(Errc::InvalidArgument, "shot length must be positive");
    std::size_t shot_bin = bins - kShotBins + detail::pick(rng, kShotBins);
    if (shot_bin == prev_bin) shot_bin = bins - kShotBins + (shot_bin - (bins - kShotBins) + 1) % kShotBins;
    prev_bin = shot_bin;
    std::vector<double> hist(bins, 0.0);
    hist[shot_bin] = kShotMass;
    for (std::size_t b = 0; b < kSignatureBins; ++b) hist[sig_base + b] = kSignatureMass;
    if (s > 0) boundaries.push_back(frames.size());
    for (std::size_t f = 0; f < shot_lengths[s]; ++f) {
      frames.push_back(FrameFeature{kFrameStep * static_cast<double>(frames.size()), hist});
    }
  }
  return {std::move(frames), std::move(boundaries)};
}

inline SyntheticCorpus generate_corpus(const SyntheticSpec& spec, OntologyStore ontology = bundled_ontology(),
                                       StaticSynonymTable synonyms = StaticSynonymTable::bundled()) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SyntheticCorpus corpus{{}, {}, {}, std::move(ontology), std::move(synonyms)};
  std::size_t signature = 0;
  std::map<std::string, std::size_t> signature_of;

  for (const auto& domain : spec.domains) {
    corpus.ontology.require_domain(domain);
    const auto leaves = detail::topics(corpus.ontology, domain);
    if (leaves.empty()) throw Error(Errc::InvalidOntology, "domain " + domain + " has no topic concepts");
    for (const Concept* leaf : leaves) signature_of.emplace(leaf->id, signature++);
    const auto generic = detail::sorted_synonyms(corpus.ontology.lexicon().at(domain));

    for (std::size_t j = 0; j < spec.docs_per_domain; ++j) {
      const Concept& leaf = *leaves[j % leaves.size()];
      std::vector<std::string> pool = detail::sorted_synonyms(leaf);
      if (auto it = detail::topic_words().find(leaf.id); it != detail::topic_words().end()) {
        pool.insert(pool.end(), it->second.begin(), it->second.end());
      }
      auto word = [&]() -> const std::string& {
        const std::size_t roll = detail::pick(rng, 10);
        if (roll < 5) return pool[detail::pick(rng, pool.size())];
        if (roll < 7) return generic[detail::pick(rng, generic.size())];
        return detail::noise_words()[detail::pick(rng, detail::noise_words().size())];
      };

      char id[64];
      std::snprintf(id, sizeof id, "%s-%03zu", domain.c_str(), j + 1);
      VideoDescriptor d;
      d.id = id;
      d.uri = std::string(id) + ".json";
      d.title = generic[detail::pick(rng, generic.size())] + " " + pool[detail::pick(rng, pool.size())] + " " +
                std::to_string(j + 1);

      std::vector<std::size_t> lengths(2 + detail::pick(rng, 4));
      for (auto& len : lengths) len = 3 + detail::pick(rng, 4);
      auto [frames, cuts] = planted_frames(rng, lengths, signature_of.at(leaf.id));
      d.frames = std::move(frames);
      d.duration_s = kFrameStep * static_cast<double>(d.frames.size());

      for (std::size_t s = 0; s < 3; ++s) {
        std::string text;
        for (std::size_t w = 0; w < 8; ++w) text += (w ? " " : "") + word();
        const double t0 = d.duration_s * static_cast<double>(s) / 3.0;
        d.transcript.push_back({t0, d.duration_s * static_cast<double>(s + 1) / 3.0, text});
      }
      d.meta["format"] = "synthetic";
      d.meta["domain"] = domain;

      corpus.boundaries.emplace(d.id, std::move(cuts));
      corpus.labels.push_back({d.id, leaf.id});
      corpus.descriptors.push_back(std::move(d));
    }
  }
  return corpus;
}

struct CorpusFiles {
  std::vector<std::filesystem::path> descriptors;
  std::filesystem::path labels;
  std::filesystem::path ontology;
  std::filesystem::path synonyms;
};

/// dir/videos/<id>.json, dir/labels.jsonl, dir/ontology.json, dir/synonyms.json
inline CorpusFiles write_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  CorpusFiles files;
  for (const auto& d : corpus.descriptors) {
    VideoDescriptor copy = d;
    const auto path = dir / "videos" / (d.id + ".json");
    copy.uri = "videos/" + d.id + ".json";
    write_json_file(path, json(copy));
    files.descriptors.push_back(path);
  }
  std::vector<json> rows;
  for (const auto& l : corpus.labels) rows.push_back(json{{"doc", l.doc_id}, {"concept", l.concept_id}});
  files.labels = dir / "labels.jsonl";
  write_json_lines(files.labels, rows);
  files.ontology = dir / "ontology.json";
  write_json_file(files.ontology, json(corpus.ontology));
  files.synonyms = dir / "synonyms.json";
  write_json_file(files.synonyms, corpus.synonyms.to_json());
  return files;
}

inline std::vector<Label> load_labels(const std::filesystem::path& path) {
  std::vector<Label> out;
  for (const auto& row : read_json_lines(path)) {
    try {
      out.push_back({row.at("doc").get<std::string>(), row.at("concept").get<std::string>()});
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptStore, path.string() + ": " + e.what());
    }
  }
  return out;
}

/// Pairs labels with the stored records they name; unknown docs are an error.
inline std::vector<LabeledExample> labeled_examples(const KnowledgeBase& kb, const std::vector<Label>& labels) {
  std::vector<LabeledExample> out;
  for (const auto& l : labels) {
    auto doc = kb.get(l.doc_id);
    if (!doc) throw Error(Errc::UnknownDocument, "label names unknown document " + l.doc_id);
    out.push_back({doc->record, l.concept_id});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

struct UserRound {
  std::string user;
  double precision = 0.0;
  bool undefined = false;  // nothing was returned
  double p_global = 0.0;
  std::size_t returned = 0;
};

struct RoundMetrics {
  std::size_t round = 0;
  std::vector<UserRound> users;
  double mean_precision = 0.0;
  double mean_p_global = 0.0;
  std::size_t active = 0;
  std::size_t usual = 0;
  std::size_t depreciated = 0;
};

/// Ingests the corpus, trains on its labels and attaches concepts.
inline void prepare(Engine& engine, const SyntheticCorpus& corpus) {
  const auto report = engine.ingest(corpus.descriptors);
  if (!report.failures.empty()) {
    throw Error(errc_from_string(report.failures.front().first).value_or(Errc::InvalidArgument),
                report.failures.front().second);
  }
  engine.train(labeled_examples(engine.kb(), corpus.labels));
  engine.classify_stored();
}

inline void register_users(Engine& engine, const SyntheticSpec& spec) {
  for (const auto& u : spec.users) engine.register_user(u.id, u.country, u.language);
}

/// Each round every user queries two generic terms of their domain, rates
/// every result against the planted ground truth, and the organizer
/// reorganizes per its feedback policy.
inline std::vector<RoundMetrics> run_rounds(Engine& engine, const SyntheticSpec& spec,
                                            const std::map<std::string, std::string>& truth) {
  spec.validate();
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<RoundMetrics> out;
  for (std::size_t round = 1; round <= spec.rounds; ++round) {
    RoundMetrics m;
    m.round = round;
    for (const auto& u : spec.users) {
      const Concept* root = engine.ontology().lexicon().find(u.domain);
      std::vector<std::string> generic = root ? detail::sorted_synonyms(*root) : std::vector<std::string>{u.domain};
      const std::size_t a = detail::pick(rng, generic.size());
      std::size_t b = a;
      if (generic.size() > 1) {
        b = detail::pick(rng, generic.size() - 1);
        if (b >= a) ++b;
      }
      const std::string text = generic[a] + " " + generic[b];
      const QueryResult result = engine.query(RawQuery{u.id, u.domain, text, spec.k});

      UserRound ur;
      ur.user = u.id;
      ur.p_global = result.performance.p;
      ur.returned = result.results.size();
      std::size_t relevant = 0;
      for (const auto& r : result.results) {
        auto it = truth.find(r.doc_id);
        const bool hit = it != truth.end() && it->second == u.interest;
        relevant += hit ? 1 : 0;
        engine.feedback(u.id, r.doc_id, hit ? spec.relevant_rating : spec.irrelevant_rating);
      }
      if (ur.returned == 0) {
        ur.undefined = true;
      } else {
        ur.precision = static_cast<double>(relevant) / static_cast<double>(ur.returned);
      }
      m.users.push_back(ur);
    }
    double sp = 0.0;
    double sg = 0.0;
    for (const auto& ur : m.users) {
      sp += ur.precision;
      sg += ur.p_global;
    }
    if (!m.users.empty()) {
      m.mean_precision = sp / static_cast<double>(m.users.size());
      m.mean_p_global = sg / static_cast<double>(m.users.size());
    }
    const KbStats stats = engine.stats();
    m.active = stats.active;
    m.usual = stats.usual;
    m.depreciated = stats.depreciated;
    out.push_back(std::move(m));
  }
  return out;
}

inline std::map<std::string, std::string> ground_truth(const SyntheticCorpus& corpus) {
  std::map<std::string, std::string> truth;
  for (const auto& l : corpus.labels) truth[l.doc_id] = l.concept_id;
  return truth;
}

/// Full loop on a fresh engine: generate, ingest, train, register, simulate.
inline std::vector<RoundMetrics> simulate(const SyntheticSpec& spec, EngineConfig config = {}) {
  SyntheticCorpus corpus = generate_corpus(spec);
  const auto truth = ground_truth(corpus);
  Engine engine(std::move(config), corpus.ontology, std::make_unique<StaticSynonymTable>(corpus.synonyms));
  prepare(engine, corpus);
  register_users(engine, spec);
  return run_rounds(engine, spec, truth);
}

inline constexpr std::string_view kMetricsHeader = "round,user,precision_at_k,p_global,active,usual,depreciated";

/// One row per user and round plus a "mean" row closing each round.
inline std::string metrics_csv(const std::vector<RoundMetrics>& rounds) {
  std::ostringstream out;
  out << kMetricsHeader << '\n';
  auto row = [&](std::size_t round, const std::string& user, double p, double g, const RoundMetrics& m) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu,%s,%.6f,%.6f,%zu,%zu,%zu\n", round, user.c_str(), p, g, m.active, m.usual,
                  m.depreciated);
    out << buf;
  };
  for (const auto& m : rounds) {
    for (const auto& u : m.users) row(m.round, u.user, u.precision, u.p_global, m);
    row(m.round, "mean", m.mean_precision, m.mean_p_global, m);
  }
  return out.str();
}

/// Mean of the per-round mean precision over rounds [first, last] (1-based).
inline double window_precision(const std::vector<RoundMetrics>& rounds, std::size_t first, std::size_t last) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& m : rounds) {
    if (m.round >= first && m.round <= last) {
      sum += m.mean_precision;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace vidagents::harness
