#pragma once

// Data access layer and organizer logic. Each stored document carries a
// pheromone level: user ratings deposit onto it, evaporation decays it, and
// reorganization moves documents between the active, usual and depreciated
// bases according to two thresholds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "vidagents/error.hpp"
#include "vidagents/ingestion.hpp"
#include "vidagents/io.hpp"

namespace vidagents {

/// Ordered Active > Usual > Depreciated.
enum class Tier { Depreciated = 0, Usual = 1, Active = 2 };

NLOHMANN_JSON_SERIALIZE_ENUM(Tier, {{Tier::Depreciated, "depreciated"},
                                    {Tier::Usual, "usual"},
                                    {Tier::Active, "active"}})

inline std::string_view to_string(Tier tier) {
  switch (tier) {
    case Tier::Active: return "active";
    case Tier::Usual: return "usual";
    case Tier::Depreciated: return "depreciated";
  }
  return "?";
}

inline constexpr std::array<Tier, 2> kSearchTiers = {Tier::Active, Tier::Usual};

struct PheromoneParams {
  double tau0 = 1.0;
  double rho = 0.1;
  double theta_active = 2.0;
  double theta_depr = 0.2;
  double q = 1.0;

  void validate() const {
    if (!(rho > 0.0 && rho < 1.0)) throw Error(Errc::InvalidArgument, "rho must lie in (0, 1)");
    if (!(0.0 < theta_depr && theta_depr < tau0 && tau0 < theta_active)) {
      throw Error(Errc::InvalidArgument, "pheromone thresholds must satisfy 0 < theta_depr < tau0 < theta_active");
    }
    if (!(q >= 0.0)) throw Error(Errc::InvalidArgument, "deposit scale must be non-negative");
  }

  bool operator==(const PheromoneParams&) const = default;
};

inline void to_json(json& j, const PheromoneParams& p) {
  j = json{{"tau0", p.tau0}, {"rho", p.rho}, {"theta_active", p.theta_active}, {"theta_depr", p.theta_depr}, {"q", p.q}};
}
inline void from_json(const json& j, PheromoneParams& p) {
  p.tau0 = j.value("tau0", p.tau0);
  p.rho = j.value("rho", p.rho);
  p.theta_active = j.value("theta_active", p.theta_active);
  p.theta_depr = j.value("theta_depr", p.theta_depr);
  p.q = j.value("q", p.q);
}

/// Tier as a pure function of pheromone level.
inline Tier tier_for(double tau, const PheromoneParams& params) {
  if (tau >= params.theta_active) return Tier::Active;
  if (tau < params.theta_depr) return Tier::Depreciated;
  return Tier::Usual;
}

struct KbDocument {
  MetadataRecord record;
  double tau = 1.0;
  Tier tier = Tier::Usual;
  std::uint64_t request_count = 0;
  std::int64_t last_feedback_step = -1;

  const std::string& id() const noexcept { return record.doc_id; }
  bool operator==(const KbDocument&) const = default;
};

inline void to_json(json& j, const KbDocument& d) {
  j = json{{"record", d.record},
           {"tau", d.tau},
           {"tier", d.tier},
           {"request_count", d.request_count},
           {"last_feedback_step", d.last_feedback_step}};
}
inline void from_json(const json& j, KbDocument& d) {
  j.at("record").get_to(d.record);
  j.at("tau").get_to(d.tau);
  j.at("tier").get_to(d.tier);
  j.at("request_count").get_to(d.request_count);
  j.at("last_feedback_step").get_to(d.last_feedback_step);
}

struct Migration {
  std::string doc_id;
  Tier from = Tier::Usual;
  Tier to = Tier::Usual;
  bool operator==(const Migration&) const = default;
};

inline void to_json(json& j, const Migration& m) { j = json{{"doc_id", m.doc_id}, {"from", m.from}, {"to", m.to}}; }

struct KbStats {
  std::size_t active = 0;
  std::size_t usual = 0;
  std::size_t depreciated = 0;
  std::size_t total = 0;
  double mean_tau_active = 0.0;
  double mean_tau_usual = 0.0;
  double mean_tau_depreciated = 0.0;
};

inline void to_json(json& j, const KbStats& s) {
  j = json{{"active", s.active},
           {"usual", s.usual},
           {"depreciated", s.depreciated},
           {"total", s.total},
           {"mean_tau", {{"active", s.mean_tau_active}, {"usual", s.mean_tau_usual}, {"depreciated", s.mean_tau_depreciated}}}};
}

inline constexpr std::string_view kStoreSchemaVersion = "1";

/// Single-writer document store. All operations are internally serialized;
/// reads return copies so callers always see a consistent snapshot.
class KnowledgeBase {
 public:
  explicit KnowledgeBase(PheromoneParams params = {}) : params_(params) { params_.validate(); }

  KnowledgeBase(const KnowledgeBase& other) {
    std::shared_lock lock(other.mu_);
    copy_from(other);
  }
  KnowledgeBase& operator=(const KnowledgeBase& other) {
    if (this != &other) {
      std::scoped_lock lock(mu_, other.mu_);
      copy_from(other);
    }
    return *this;
  }

  const PheromoneParams& params() const noexcept { return params_; }

  void set_params(const PheromoneParams& params) {
    params.validate();
    std::unique_lock lock(mu_);
    params_ = params;
  }

  /// New documents start in the usual base at tau0.
  std::string insert(MetadataRecord record) {
    if (record.doc_id.empty()) throw Error(Errc::InvalidArgument, "document id must be non-empty");
    for (const auto& c : record.concepts) {
      if (!(c.confidence >= 0.0 && c.confidence <= 1.0)) {
        throw Error(Errc::InvalidArgument, "concept confidence outside [0,1] in " + record.doc_id);
      }
    }
    std::unique_lock lock(mu_);
    if (docs_.contains(record.doc_id)) throw Error(Errc::DuplicateDocument, "document already stored: " + record.doc_id);
    std::string id = record.doc_id;
    KbDocument doc;
    doc.record = std::move(record);
    doc.tau = params_.tau0;
    doc.tier = Tier::Usual;
    docs_.emplace(id, std::move(doc));
    return id;
  }

  /// Replaces the attached concepts (after a model is retrained). Pheromone
  /// and tier are untouched.
  void set_concepts(const std::string& doc_id, std::vector<ConceptScore> concepts) {
    std::unique_lock lock(mu_);
    auto it = docs_.find(doc_id);
    if (it == docs_.end()) throw Error(Errc::UnknownDocument, "unknown document " + doc_id);
    it->second.record.concepts = std::move(concepts);
  }

  /// tau += q * rating / 5. Returns the new level.
  double deposit(const std::string& doc_id, int rating) {
    if (rating < 0 || rating > 5) throw Error(Errc::InvalidRating, "rating must lie in 0..5, got " + std::to_string(rating));
    std::unique_lock lock(mu_);
    auto it = docs_.find(doc_id);
    if (it == docs_.end()) throw Error(Errc::UnknownDocument, "unknown document " + doc_id);
    auto& doc = it->second;
    doc.tau += params_.q * static_cast<double>(rating) / 5.0;
    ++doc.request_count;
    doc.last_feedback_step = static_cast<std::int64_t>(++step_);
    return doc.tau;
  }

  std::size_t evaporate() { return evaporate(params_.rho); }

  /// tau <- (1 - rho) * tau for every document.
  std::size_t evaporate(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw Error(Errc::InvalidArgument, "rho must lie in (0, 1)");
    std::unique_lock lock(mu_);
    for (auto& [id, doc] : docs_) doc.tau *= (1.0 - rho);
    return docs_.size();
  }

  std::vector<Migration> reorganize() { return reorganize(params_); }

  /// Re-derives every tier from tau; reports only the documents that moved.
  std::vector<Migration> reorganize(const PheromoneParams& params) {
    params.validate();
    std::unique_lock lock(mu_);
    std::vector<Migration> moved;
    for (auto& [id, doc] : docs_) {
      const Tier next = tier_for(doc.tau, params);
      if (next != doc.tier) {
        moved.push_back({id, doc.tier, next});
        doc.tier = next;
      }
    }
    return moved;
  }

  /// Documents carrying any of `concept_ids`, grouped by `tier_order`, by
  /// ascending id within a tier.
  std::vector<KbDocument> find_by_concepts(std::span<const std::string> concept_ids,
                                           std::span<const Tier> tier_order) const {
    validate_tier_order(tier_order);
    const std::set<std::string> wanted(concept_ids.begin(), concept_ids.end());
    std::shared_lock lock(mu_);
    std::vector<KbDocument> out;
    for (Tier tier : tier_order) {
      for (const auto& [id, doc] : docs_) {
        if (doc.tier != tier) continue;
        const bool hit = std::any_of(doc.record.concepts.begin(), doc.record.concepts.end(),
                                     [&](const ConceptScore& c) { return wanted.contains(c.concept_id); });
        if (hit) out.push_back(doc);
      }
    }
    return out;
  }

  std::vector<KbDocument> documents_in(std::span<const Tier> tier_order) const {
    validate_tier_order(tier_order);
    std::shared_lock lock(mu_);
    std::vector<KbDocument> out;
    for (Tier tier : tier_order) {
      for (const auto& [id, doc] : docs_) {
        if (doc.tier == tier) out.push_back(doc);
      }
    }
    return out;
  }

  std::vector<KbDocument> documents() const {
    std::shared_lock lock(mu_);
    std::vector<KbDocument> out;
    out.reserve(docs_.size());
    for (const auto& [id, doc] : docs_) out.push_back(doc);
    return out;
  }

  std::optional<KbDocument> get(const std::string& doc_id) const {
    std::shared_lock lock(mu_);
    auto it = docs_.find(doc_id);
    if (it == docs_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& doc_id) const {
    std::shared_lock lock(mu_);
    return docs_.contains(doc_id);
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return docs_.size();
  }

  KbStats stats() const {
    std::shared_lock lock(mu_);
    KbStats s;
    double sum_a = 0, sum_u = 0, sum_d = 0;
    for (const auto& [id, doc] : docs_) {
      switch (doc.tier) {
        case Tier::Active: ++s.active, sum_a += doc.tau; break;
        case Tier::Usual: ++s.usual, sum_u += doc.tau; break;
        case Tier::Depreciated: ++s.depreciated, sum_d += doc.tau; break;
      }
    }
    s.total = docs_.size();
    if (s.active) s.mean_tau_active = sum_a / static_cast<double>(s.active);
    if (s.usual) s.mean_tau_usual = sum_u / static_cast<double>(s.usual);
    if (s.depreciated) s.mean_tau_depreciated = sum_d / static_cast<double>(s.depreciated);
    return s;
  }

  std::uint64_t feedback_count() const {
    std::shared_lock lock(mu_);
    return feedback_count_;
  }

  /// Counts one feedback event for the reorganization policy; returns the total.
  std::uint64_t note_feedback() {
    std::unique_lock lock(mu_);
    return ++feedback_count_;
  }

  // Persistence: `path` holds one KbDocument per line; `path`.manifest.json
  // holds schema version, params, counters and the document count.

  static std::filesystem::path manifest_path(const std::filesystem::path& path) {
    return std::filesystem::path(path.string() + ".manifest.json");
  }

  void save(const std::filesystem::path& path) const {
    std::shared_lock lock(mu_);
    std::vector<json> rows;
    rows.reserve(docs_.size());
    for (const auto& [id, doc] : docs_) rows.emplace_back(doc);
    write_json_lines(path, rows);
    write_json_file(manifest_path(path), json{{"schema_version", kStoreSchemaVersion},
                                              {"params", params_},
                                              {"step", step_},
                                              {"feedback_count", feedback_count_},
                                              {"document_count", docs_.size()}});
  }

  static KnowledgeBase load(const std::filesystem::path& path) {
    const std::string body = read_text_file(path);
    const std::filesystem::path manifest_file = manifest_path(path);
    std::error_code ec;
    if (!std::filesystem::exists(manifest_file, ec)) {
      throw Error(Errc::CorruptStore, "missing manifest " + manifest_file.string());
    }
    const json manifest = read_json_file(manifest_file);
    KnowledgeBase kb;
    try {
      if (manifest.at("schema_version").get<std::string>() != kStoreSchemaVersion) {
        throw Error(Errc::CorruptStore, "unsupported schema version in " + manifest_file.string());
      }
      kb.params_ = manifest.at("params").get<PheromoneParams>();
      kb.params_.validate();
      kb.step_ = manifest.at("step").get<std::uint64_t>();
      kb.feedback_count_ = manifest.at("feedback_count").get<std::uint64_t>();
      const auto expected = manifest.at("document_count").get<std::size_t>();
      const auto rows = parse_json_lines(body, path.string());
      if (rows.size() != expected) {
        throw Error(Errc::CorruptStore, path.string() + ": expected " + std::to_string(expected) +
                                            " documents, found " + std::to_string(rows.size()));
      }
      for (const auto& row : rows) {
        auto doc = row.get<KbDocument>();
        if (!(doc.tau >= 0.0)) throw Error(Errc::CorruptStore, "negative pheromone in " + doc.id());
        if (!kb.docs_.emplace(doc.id(), doc).second) throw Error(Errc::CorruptStore, "duplicate document " + doc.id());
      }
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptStore, path.string() + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == Errc::CorruptStore) throw;
      throw Error(Errc::CorruptStore, e.what());
    }
    return kb;
  }

  bool operator==(const KnowledgeBase& other) const {
    std::shared_lock a(mu_, std::defer_lock);
    std::shared_lock b(other.mu_, std::defer_lock);
    if (this == &other) return true;
    std::lock(a, b);
    return params_ == other.params_ && docs_ == other.docs_ && step_ == other.step_ &&
           feedback_count_ == other.feedback_count_;
  }

 private:
  static void validate_tier_order(std::span<const Tier> tier_order) {
    if (tier_order.empty()) throw Error(Errc::InvalidArgument, "tier order must be non-empty");
    std::set<Tier> seen(tier_order.begin(), tier_order.end());
    if (seen.size() != tier_order.size()) throw Error(Errc::InvalidArgument, "tier order has duplicates");
  }

  void copy_from(const KnowledgeBase& other) {
    params_ = other.params_;
    docs_ = other.docs_;
    step_ = other.step_;
    feedback_count_ = other.feedback_count_;
  }

  mutable std::shared_mutex mu_;
  PheromoneParams params_;
  std::map<std::string, KbDocument> docs_;
  std::uint64_t step_ = 0;
  std::uint64_t feedback_count_ = 0;
};

}  // namespace vidagents
