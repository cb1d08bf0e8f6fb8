#pragma once

// The agent society. Every state change flows through the runtime as a typed
// message to the agent owning that state:
//
//   crawler     links DB              CrawlRequest, LinkStatusChanged
//   extractor   (stateless)           LinkDiscovered -> DocumentExtracted
//   classifier  trained model         TrainRequest, DocumentExtracted -> DocumentClassified
//   organizer   knowledge base        DocumentClassified, DepositPheromone, ReorganizeTick
//   avatar      profiles, facets,     UserRegistered, QueryRequest -> QueryResponse,
//               communities           FeedbackRecorded -> DepositPheromone
//   gateway     reply sink            *Response, DocumentStored, FeedbackApplied, Failure
//
// Engine is the synchronous facade: post a message, run to idle, collect the
// reply (or rethrow the Failure) from the gateway sink.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vidagents/classification.hpp"
#include "vidagents/error.hpp"
#include "vidagents/ingestion.hpp"
#include "vidagents/io.hpp"
#include "vidagents/knowledge_base.hpp"
#include "vidagents/ontology.hpp"
#include "vidagents/personalization.hpp"
#include "vidagents/query_pipeline.hpp"
#include "vidagents/runtime.hpp"
#include "vidagents/synonyms.hpp"

namespace vidagents {

// ---------------------------------------------------------------------------
// Message vocabulary. Payload alternatives are declared in Kind order.

enum class MessageKind {
  CrawlRequest,
  LinkDiscovered,
  LinkStatusChanged,
  DocumentExtracted,
  DocumentClassified,
  DocumentStored,
  TrainRequest,
  ModelInstalled,
  UserRegistered,
  FeedbackRecorded,
  DepositPheromone,
  FeedbackApplied,
  ReorganizeTick,
  Reorganized,
  QueryRequest,
  QueryResponse,
  Failure,
};

inline constexpr std::array<std::string_view, 17> kMessageKindNames = {
    "CrawlRequest",    "LinkDiscovered",   "LinkStatusChanged", "DocumentExtracted", "DocumentClassified",
    "DocumentStored",  "TrainRequest",     "ModelInstalled",    "UserRegistered",    "FeedbackRecorded",
    "DepositPheromone", "FeedbackApplied", "ReorganizeTick",    "Reorganized",       "QueryRequest",
    "QueryResponse",   "Failure",
};

enum class AgentKind { Avatar, Facet, Strategist, Community, Crawler, Extractor, Classifier, Organizer, Gateway };

namespace msg {

struct CrawlRequest {
  std::vector<std::string> seeds;
  int depth_limit = 2;
  std::string link_pattern = "*.json";
};
struct LinkDiscovered {
  std::string uri;
  std::optional<VideoDescriptor> inline_descriptor;
};
struct LinkStatusChanged {
  std::string uri;
  LinkStatus status = LinkStatus::Pending;
};
struct DocumentExtracted {
  MetadataRecord record;
  bool already_stored = false;
};
struct DocumentClassified {
  MetadataRecord record;
  bool already_stored = false;
};
struct DocumentStored {
  std::string doc_id;
};
struct TrainRequest {
  std::vector<LabeledExample> examples;
  TrainingHyper hyper;
};
struct ModelInstalled {
  std::size_t concepts = 0;
  double training_accuracy = 0.0;
};
struct UserRegistered {
  std::string user_id;
  std::string country;
  std::string language;
  Device device = Device::Other;
};
struct FeedbackRecorded {
  FeedbackEvent event;
};
struct DepositPheromone {
  std::string doc_id;
  int rating = 0;
};
struct FeedbackApplied {
  std::string doc_id;
  double tau = 0.0;
};
struct ReorganizeTick {};
struct Reorganized {
  std::vector<Migration> migrations;
};
struct QueryRequest {
  RawQuery query;
  std::optional<std::string> strategy;
};
struct QueryResponse {
  QueryResult result;
};
struct Failure {
  Errc code = Errc::InvalidArgument;
  std::string message;
};

}  // namespace msg

struct VideoMessageTraits {
  using Kind = MessageKind;
  using AgentKind = vidagents::AgentKind;
  using Payload = std::variant<msg::CrawlRequest, msg::LinkDiscovered, msg::LinkStatusChanged, msg::DocumentExtracted,
                               msg::DocumentClassified, msg::DocumentStored, msg::TrainRequest, msg::ModelInstalled,
                               msg::UserRegistered, msg::FeedbackRecorded, msg::DepositPheromone,
                               msg::FeedbackApplied, msg::ReorganizeTick, msg::Reorganized, msg::QueryRequest,
                               msg::QueryResponse, msg::Failure>;

  static std::string_view kind_name(Kind kind) { return kMessageKindNames[static_cast<std::size_t>(kind)]; }
  static bool payload_matches(Kind kind, const Payload& payload) {
    return payload.index() == static_cast<std::size_t>(kind);
  }
};

static_assert(std::variant_size_v<VideoMessageTraits::Payload> == kMessageKindNames.size());

using VideoRuntime = Runtime<VideoMessageTraits>;
using VideoMessage = Message<VideoMessageTraits>;

// ---------------------------------------------------------------------------
// Configuration

struct EngineConfig {
  PheromoneParams pheromone;
  double shot_threshold = kDefaultShotThreshold;
  double attach_threshold = kDefaultAttachThreshold;
  double mapping_threshold = kDefaultMappingThreshold;
  std::size_t enrich_count = kDefaultEnrichCount;
  std::size_t storyboard_size = kDefaultStoryboardSize;
  double preference_rate = kDefaultPreferenceRate;
  /// Evaporate + reorganize after every this many feedback events (0 = never).
  std::size_t reorganize_every = 10;
  TrainingHyper training;
  StrategyCatalog strategies = default_strategy_catalog();
  std::string default_strategy = std::string(kDefaultStrategy);
  RuntimeConfig runtime;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string cors_origin = "*";
  std::string state_dir = "vidagents-state";
  std::string ontology_path;
  std::string synonyms_path;
};

inline constexpr const char* kConfigEnvVar = "VIDAGENTS_CONFIG";

inline EngineConfig parse_config(const json& j) {
  EngineConfig c;
  try {
    if (j.contains("pheromone")) c.pheromone = j.at("pheromone").get<PheromoneParams>();
    c.shot_threshold = j.value("shot_threshold", c.shot_threshold);
    c.attach_threshold = j.value("attach_threshold", c.attach_threshold);
    c.mapping_threshold = j.value("mapping_threshold", c.mapping_threshold);
    c.enrich_count = j.value("enrich_count", c.enrich_count);
    c.storyboard_size = j.value("storyboard_size", c.storyboard_size);
    c.preference_rate = j.value("preference_rate", c.preference_rate);
    c.reorganize_every = j.value("reorganize_every", c.reorganize_every);
    if (j.contains("training")) {
      const auto& t = j.at("training");
      c.training.lambda = t.value("lambda", c.training.lambda);
      c.training.epochs = t.value("epochs", c.training.epochs);
      c.training.seed = t.value("seed", c.training.seed);
    }
    if (j.contains("strategies")) {
      for (const auto& [name, w] : j.at("strategies").items()) c.strategies[name] = w.get<StrategyWeights>();
    }
    c.default_strategy = j.value("default_strategy", c.default_strategy);
    if (j.contains("runtime")) {
      const auto& r = j.at("runtime");
      c.runtime.seed = r.value("seed", c.runtime.seed);
      c.runtime.max_steps = r.value("max_steps", c.runtime.max_steps);
      c.runtime.deterministic = r.value("deterministic", c.runtime.deterministic);
    }
    c.host = j.value("host", c.host);
    c.port = j.value("port", c.port);
    c.cors_origin = j.value("cors_origin", c.cors_origin);
    c.state_dir = j.value("state_dir", c.state_dir);
    c.ontology_path = j.value("ontology", c.ontology_path);
    c.synonyms_path = j.value("synonyms", c.synonyms_path);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("invalid configuration: ") + e.what());
  }
  c.pheromone.validate();
  for (const auto& [name, w] : c.strategies) w.validate();
  if (!c.strategies.contains(c.default_strategy)) {
    throw Error(Errc::UnknownStrategy, "default strategy not in catalog: " + c.default_strategy);
  }
  return c;
}

/// Explicit path, else $VIDAGENTS_CONFIG, else defaults.
inline EngineConfig load_config(const std::optional<std::filesystem::path>& path = std::nullopt) {
  std::optional<std::filesystem::path> chosen = path;
  if (!chosen) {
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') chosen = env;
  }
  if (!chosen) return EngineConfig{};
  json doc;
  try {
    doc = json::parse(read_text_file(*chosen));
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidArgument, chosen->string() + ": " + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------------------
// Agents

namespace agents {

using Agent = VideoRuntime::Agent;
using Context = VideoRuntime::Context;

inline const AgentId kCrawler{"crawler"};
inline const AgentId kExtractor{"extractor"};
inline const AgentId kClassifier{"classifier"};
inline const AgentId kOrganizer{"organizer"};
inline const AgentId kAvatar{"avatar"};
inline const AgentId kGateway{"gateway"};

inline void fail(Context& ctx, const Error& e) {
  ctx.send(kGateway, MessageKind::Failure, msg::Failure{e.code(), e.what()});
}

class CrawlerAgent final : public Agent {
 public:
  explicit CrawlerAgent(PageFetcher fetch) : fetch_(std::move(fetch)) {}

  void receive(const VideoMessage& m, Context& ctx) override {
    try {
      if (const auto* req = std::get_if<msg::CrawlRequest>(&m.payload)) {
        for (auto& link : crawl(req->seeds, req->depth_limit, req->link_pattern, fetch_)) {
          if (links_.add(link)) last_discovered_.push_back(link);
        }
      } else if (const auto* st = std::get_if<msg::LinkStatusChanged>(&m.payload)) {
        links_.set_status(st->uri, st->status);
      }
    } catch (const Error& e) {
      fail(ctx, e);
    }
  }

  const LinkStore& links() const noexcept { return links_; }
  void restore(LinkStore links) { links_ = std::move(links); }
  std::vector<LinkRecord> take_discovered() { return std::exchange(last_discovered_, {}); }

 private:
  PageFetcher fetch_;
  LinkStore links_;
  std::vector<LinkRecord> last_discovered_;
};

class ExtractorAgent final : public Agent {
 public:
  ExtractorAgent(double theta, PageFetcher fetch) : theta_(theta), fetch_(std::move(fetch)) {}

  void receive(const VideoMessage& m, Context& ctx) override {
    const auto* link = std::get_if<msg::LinkDiscovered>(&m.payload);
    if (link == nullptr) return;
    try {
      VideoDescriptor d = link->inline_descriptor ? *link->inline_descriptor : fetch_descriptor(link->uri);
      if (d.uri.empty()) d.uri = link->uri;
      MetadataRecord record = extract(d, theta_);
      ctx.send(kCrawler, MessageKind::LinkStatusChanged, msg::LinkStatusChanged{link->uri, LinkStatus::Extracted});
      ctx.send(kClassifier, MessageKind::DocumentExtracted, msg::DocumentExtracted{std::move(record)});
    } catch (const Error& e) {
      ctx.send(kCrawler, MessageKind::LinkStatusChanged, msg::LinkStatusChanged{link->uri, LinkStatus::Failed});
      fail(ctx, e);
    }
  }

 private:
  VideoDescriptor fetch_descriptor(const std::string& uri) const {
    const auto body = fetch_(uri);
    if (!body) throw Error(Errc::FetchFailed, "could not fetch " + uri);
    json doc = json::parse(*body, nullptr, false);
    if (doc.is_discarded()) throw Error(Errc::InvalidDescriptor, uri + ": not valid JSON");
    return parse_descriptor(doc);
  }

  double theta_;
  PageFetcher fetch_;
};

class ClassifierAgent final : public Agent {
 public:
  ClassifierAgent(const OntologyStore& ontology, double attach_threshold)
      : ontology_(ontology), attach_threshold_(attach_threshold) {}

  void receive(const VideoMessage& m, Context& ctx) override {
    try {
      if (const auto* req = std::get_if<msg::TrainRequest>(&m.payload)) {
        model_ = train(req->examples, ontology_.lexicon(), req->hyper);
        const double acc = evaluate(*model_, req->examples);
        ctx.send(kGateway, MessageKind::ModelInstalled, msg::ModelInstalled{model_->concepts.size(), acc});
      } else if (const auto* doc = std::get_if<msg::DocumentExtracted>(&m.payload)) {
        MetadataRecord record = doc->record;
        if (model_) {
          record.concepts = select_concepts(classify(*model_, record), attach_threshold_, ontology_.lexicon());
        }
        ctx.send(kOrganizer, MessageKind::DocumentClassified,
                 msg::DocumentClassified{std::move(record), doc->already_stored});
      }
    } catch (const Error& e) {
      fail(ctx, e);
    }
  }

  const std::optional<ClassifierModel>& model() const noexcept { return model_; }
  void restore(std::optional<ClassifierModel> model) { model_ = std::move(model); }

 private:
  const OntologyStore& ontology_;
  double attach_threshold_;
  std::optional<ClassifierModel> model_;
};

/// Data-access authority: owns the knowledge base and runs the ant-colony
/// reorganization on ReorganizeTick.
class OrganizerAgent final : public Agent {
 public:
  OrganizerAgent(PheromoneParams params, std::size_t reorganize_every)
      : kb_(params), reorganize_every_(reorganize_every) {}

  void receive(const VideoMessage& m, Context& ctx) override {
    try {
      if (const auto* doc = std::get_if<msg::DocumentClassified>(&m.payload)) {
        if (doc->already_stored) {
          kb_.set_concepts(doc->record.doc_id, doc->record.concepts);
        } else {
          kb_.insert(doc->record);
        }
        ctx.send(kGateway, MessageKind::DocumentStored, msg::DocumentStored{doc->record.doc_id});
      } else if (const auto* dep = std::get_if<msg::DepositPheromone>(&m.payload)) {
        const double tau = kb_.deposit(dep->doc_id, dep->rating);
        ctx.send(kGateway, MessageKind::FeedbackApplied, msg::FeedbackApplied{dep->doc_id, tau});
        const std::uint64_t count = kb_.note_feedback();
        if (reorganize_every_ > 0 && count % reorganize_every_ == 0) {
          ctx.send(ctx.self(), MessageKind::ReorganizeTick, msg::ReorganizeTick{});
        }
      } else if (std::holds_alternative<msg::ReorganizeTick>(m.payload)) {
        kb_.evaporate();
        auto moved = kb_.reorganize();
        ++ticks_;
        ctx.send(kGateway, MessageKind::Reorganized, msg::Reorganized{std::move(moved)});
      }
    } catch (const Error& e) {
      fail(ctx, e);
    }
  }

  const KnowledgeBase& kb() const noexcept { return kb_; }
  void restore(KnowledgeBase kb) { kb_ = std::move(kb); }
  std::uint64_t ticks() const noexcept { return ticks_; }

 private:
  KnowledgeBase kb_;
  std::size_t reorganize_every_;
  std::uint64_t ticks_ = 0;
};

/// Hosts every user's avatar together with the facet, strategist and
/// community roles. All user interaction passes through here.
class AvatarAgent final : public Agent {
 public:
  AvatarAgent(const EngineConfig& config, const OntologyStore& ontology, const SynonymResource& synonyms,
              const KnowledgeBase& kb)
      : config_(config), ontology_(ontology), synonyms_(synonyms), kb_(kb), people_(config.preference_rate) {}

  void receive(const VideoMessage& m, Context& ctx) override {
    try {
      if (const auto* reg = std::get_if<msg::UserRegistered>(&m.payload)) {
        people_.create_avatar(reg->user_id, reg->country, reg->language, reg->device);
      } else if (const auto* fb = std::get_if<msg::FeedbackRecorded>(&m.payload)) {
        on_feedback(fb->event, ctx);
      } else if (const auto* q = std::get_if<msg::QueryRequest>(&m.payload)) {
        on_query(*q, ctx);
      }
    } catch (const Error& e) {
      fail(ctx, e);
    }
  }

  const Personalization& people() const noexcept { return people_; }
  void restore(Personalization people) { people_ = std::move(people); }

  /// user -> (sum of rating/5, number of ratings)
  using RatingTally = std::map<std::string, std::pair<double, std::size_t>>;
  const RatingTally& ratings() const noexcept { return ratings_; }
  void restore_ratings(RatingTally ratings) { ratings_ = std::move(ratings); }

  double feedback_performance(const std::string& user_id) const {
    auto it = ratings_.find(user_id);
    if (it == ratings_.end() || it->second.second == 0) return 1.0;
    return it->second.first / static_cast<double>(it->second.second);
  }

 private:
  void on_query(const msg::QueryRequest& req, Context& ctx) {
    const RawQuery& raw = req.query;
    people_.profile(raw.user_id);
    ontology_.require_domain(raw.domain);
    std::string strategy = req.strategy ? *req.strategy : people_.facet(raw.user_id, raw.domain).strategy;
    auto weights = config_.strategies.find(strategy);
    if (weights == config_.strategies.end()) throw Error(Errc::UnknownStrategy, "unknown strategy " + strategy);

    RetrievalContext rctx{kb_, ontology_, synonyms_};
    rctx.mapping_threshold = config_.mapping_threshold;
    rctx.enrich_count = config_.enrich_count;
    rctx.storyboard_size = config_.storyboard_size;
    rctx.feedback_performance = feedback_performance(raw.user_id);
    QueryResult result = retrieve(rctx, raw, people_.profile(raw.user_id), weights->second);
    result.strategy = strategy;
    people_.record_query(raw.user_id, raw.domain, raw.text, strategy);
    ctx.send(kGateway, MessageKind::QueryResponse, msg::QueryResponse{std::move(result)});
  }

  void on_feedback(const FeedbackEvent& event, Context& ctx) {
    people_.profile(event.user_id);
    if (event.rating < 0 || event.rating > 5) {
      throw Error(Errc::InvalidRating, "rating must lie in 0..5, got " + std::to_string(event.rating));
    }
    const auto doc = kb_.get(event.doc_id);
    if (!doc) throw Error(Errc::UnknownDocument, "unknown document " + event.doc_id);
    people_.record_feedback(event, doc->record.concepts,
                            [&](const std::string& id) { return ontology_.lexicon().domain_of(id); });
    auto& [sum, count] = ratings_[event.user_id];
    sum += static_cast<double>(event.rating) / 5.0;
    ++count;
    ctx.send(kOrganizer, MessageKind::DepositPheromone, msg::DepositPheromone{event.doc_id, event.rating});
  }

  const EngineConfig& config_;
  const OntologyStore& ontology_;
  const SynonymResource& synonyms_;
  const KnowledgeBase& kb_;
  Personalization people_;
  RatingTally ratings_;
};

/// Collects replies for the synchronous facade.
class GatewayAgent final : public Agent {
 public:
  void receive(const VideoMessage& m, Context&) override { inbox_.push_back(m.payload); }

  std::vector<VideoMessageTraits::Payload> drain() { return std::exchange(inbox_, {}); }

 private:
  std::vector<VideoMessageTraits::Payload> inbox_;
};

}  // namespace agents

// ---------------------------------------------------------------------------
// Facade

struct IngestReport {
  std::vector<std::string> stored;
  std::vector<std::pair<std::string, std::string>> failures;  // code, message
};

struct TrainReport {
  std::size_t concepts = 0;
  double training_accuracy = 0.0;
};

class Engine {
 public:
  explicit Engine(EngineConfig config = {}, PageFetcher fetch = fetch_local_file)
      : config_(std::move(config)),
        ontology_(config_.ontology_path.empty() ? bundled_ontology() : load_ontology(config_.ontology_path)),
        synonyms_(std::make_unique<StaticSynonymTable>(config_.synonyms_path.empty()
                                                           ? StaticSynonymTable::bundled()
                                                           : StaticSynonymTable::load(config_.synonyms_path))) {
    config_.pheromone.validate();
    spawn_agents(std::move(fetch));
  }

  Engine(EngineConfig config, OntologyStore ontology, std::unique_ptr<SynonymResource> synonyms,
         PageFetcher fetch = fetch_local_file)
      : config_(std::move(config)), ontology_(std::move(ontology)), synonyms_(std::move(synonyms)) {
    config_.pheromone.validate();
    spawn_agents(std::move(fetch));
  }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const EngineConfig& config() const noexcept { return config_; }
  const OntologyStore& ontology() const noexcept { return ontology_; }
  const SynonymResource& synonyms() const noexcept { return *synonyms_; }
  VideoRuntime& runtime() noexcept { return runtime_; }

  const KnowledgeBase& kb() const { return runtime_.agent<agents::OrganizerAgent>(agents::kOrganizer).kb(); }
  const Personalization& people() const { return runtime_.agent<agents::AvatarAgent>(agents::kAvatar).people(); }
  const LinkStore& links() const { return runtime_.agent<agents::CrawlerAgent>(agents::kCrawler).links(); }
  const std::optional<ClassifierModel>& model() const {
    return runtime_.agent<agents::ClassifierAgent>(agents::kClassifier).model();
  }

  std::vector<LinkRecord> crawl(std::vector<std::string> seeds, int depth_limit, std::string pattern) {
    post(agents::kCrawler, MessageKind::CrawlRequest, msg::CrawlRequest{std::move(seeds), depth_limit, std::move(pattern)});
    settle_or_throw();
    return runtime_.agent<agents::CrawlerAgent>(agents::kCrawler).take_discovered();
  }

  /// Feeds descriptors through extractor -> classifier -> organizer. Per-item
  /// failures are collected, not thrown.
  IngestReport ingest_files(const std::vector<std::string>& uris) {
    for (const auto& uri : uris) post(agents::kExtractor, MessageKind::LinkDiscovered, msg::LinkDiscovered{uri, std::nullopt});
    return collect_ingest();
  }

  IngestReport ingest(const std::vector<VideoDescriptor>& descriptors) {
    for (const auto& d : descriptors) {
      post(agents::kExtractor, MessageKind::LinkDiscovered,
           msg::LinkDiscovered{d.uri.empty() ? d.id : d.uri, d});
    }
    return collect_ingest();
  }

  IngestReport ingest_pending_links() {
    std::vector<std::string> uris;
    for (const auto& l : links().with_status(LinkStatus::Pending)) uris.push_back(l.uri);
    return ingest_files(uris);
  }

  /// Re-runs the installed model over every stored document.
  IngestReport classify_stored() {
    for (auto& doc : kb().documents()) {
      post(agents::kClassifier, MessageKind::DocumentExtracted, msg::DocumentExtracted{std::move(doc.record), true});
    }
    return collect_ingest();
  }

  TrainReport train(std::vector<LabeledExample> examples) {
    post(agents::kClassifier, MessageKind::TrainRequest, msg::TrainRequest{std::move(examples), config_.training});
    TrainReport report;
    for (auto& p : settle_or_throw()) {
      if (auto* m = std::get_if<msg::ModelInstalled>(&p)) report = {m->concepts, m->training_accuracy};
    }
    return report;
  }

  void register_user(const std::string& user_id, const std::string& country, const std::string& language,
                     Device device = Device::Other) {
    post(agents::kAvatar, MessageKind::UserRegistered, msg::UserRegistered{user_id, country, language, device});
    settle_or_throw();
  }

  QueryResult query(const RawQuery& raw, std::optional<std::string> strategy = std::nullopt) {
    post(agents::kAvatar, MessageKind::QueryRequest, msg::QueryRequest{raw, std::move(strategy)});
    for (auto& p : settle_or_throw()) {
      if (auto* r = std::get_if<msg::QueryResponse>(&p)) {
        last_performance_ = r->result.performance;
        return std::move(r->result);
      }
    }
    throw Error(Errc::InvalidArgument, "query produced no response");
  }

  /// Records a rating; returns the document's pheromone right after deposit.
  double feedback(const std::string& user_id, const std::string& doc_id, int rating) {
    post(agents::kAvatar, MessageKind::FeedbackRecorded,
         msg::FeedbackRecorded{FeedbackEvent{user_id, doc_id, rating, 0}});
    std::optional<double> tau;
    for (auto& p : settle_or_throw()) {
      if (auto* f = std::get_if<msg::FeedbackApplied>(&p)) tau = f->tau;
    }
    if (!tau) throw Error(Errc::InvalidArgument, "feedback was not applied");
    return *tau;
  }

  /// One evaporation + reorganization cycle.
  std::vector<Migration> reorganize() {
    post(agents::kOrganizer, MessageKind::ReorganizeTick, msg::ReorganizeTick{});
    std::vector<Migration> moved;
    for (auto& p : settle_or_throw()) {
      if (auto* r = std::get_if<msg::Reorganized>(&p)) moved.insert(moved.end(), r->migrations.begin(), r->migrations.end());
    }
    return moved;
  }

  std::vector<Suggestion> suggest(const std::string& user_id, const std::string& domain, std::size_t k) const {
    ontology_.require_domain(domain);
    return people().suggest(user_id, domain, k, &ontology_.lexicon());
  }

  KbStats stats() const { return kb().stats(); }
  const std::optional<PerformanceReport>& last_performance() const noexcept { return last_performance_; }

  std::optional<KbDocument> document(const std::string& doc_id) const { return kb().get(doc_id); }

  // State directory layout: kb.jsonl (+ manifest), profiles.jsonl,
  // communities.json, facets.jsonl, ratings.json, links.jsonl, model.json.

  void save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    kb().save(dir / "kb.jsonl");
    people().save(dir);
    json tally = json::object();
    for (const auto& [user, t] : runtime_.agent<agents::AvatarAgent>(agents::kAvatar).ratings()) {
      tally[user] = json{{"sum", t.first}, {"count", t.second}};
    }
    write_json_file(dir / "ratings.json", tally);
    links().save(dir / "links.jsonl");
    if (model()) save_model(*model(), dir / "model.json");
  }

  void load(const std::filesystem::path& dir) {
    auto exists = [&](const char* name) {
      std::error_code ec;
      return std::filesystem::exists(dir / name, ec);
    };
    if (exists("kb.jsonl")) {
      KnowledgeBase kb = KnowledgeBase::load(dir / "kb.jsonl");
      kb.set_params(config_.pheromone);
      runtime_.agent<agents::OrganizerAgent>(agents::kOrganizer).restore(std::move(kb));
    }
    auto& avatar = runtime_.agent<agents::AvatarAgent>(agents::kAvatar);
    if (exists("communities.json")) avatar.restore(Personalization::load(dir));
    if (exists("ratings.json")) {
      agents::AvatarAgent::RatingTally tally;
      try {
        const json doc = read_json_file(dir / "ratings.json");
        for (const auto& [user, t] : doc.items()) {
          tally[user] = {t.at("sum").get<double>(), t.at("count").get<std::size_t>()};
        }
      } catch (const json::exception& e) {
        throw Error(Errc::CorruptStore, "ratings.json: " + std::string(e.what()));
      }
      avatar.restore_ratings(std::move(tally));
    }
    if (exists("links.jsonl")) runtime_.agent<agents::CrawlerAgent>(agents::kCrawler).restore(LinkStore::load(dir / "links.jsonl"));
    if (exists("model.json")) runtime_.agent<agents::ClassifierAgent>(agents::kClassifier).restore(load_model(dir / "model.json"));
  }

 private:
  void spawn_agents(PageFetcher fetch) {
    using namespace agents;
    runtime_.spawn(AgentKind::Crawler, kCrawler.name(), std::make_unique<CrawlerAgent>(fetch));
    runtime_.spawn(AgentKind::Extractor, kExtractor.name(),
                   std::make_unique<ExtractorAgent>(config_.shot_threshold, std::move(fetch)));
    runtime_.spawn(AgentKind::Classifier, kClassifier.name(),
                   std::make_unique<ClassifierAgent>(ontology_, config_.attach_threshold));
    auto organizer = std::make_unique<OrganizerAgent>(config_.pheromone, config_.reorganize_every);
    const KnowledgeBase& kb = organizer->kb();
    runtime_.spawn(AgentKind::Organizer, kOrganizer.name(), std::move(organizer));
    runtime_.spawn(AgentKind::Avatar, kAvatar.name(), std::make_unique<AvatarAgent>(config_, ontology_, *synonyms_, kb));
    runtime_.spawn(AgentKind::Gateway, kGateway.name(), std::make_unique<GatewayAgent>());
  }

  void post(const AgentId& to, MessageKind kind, VideoMessageTraits::Payload payload) {
    runtime_.send(VideoMessage{agents::kGateway, to, kind, std::move(payload)});
  }

  std::vector<VideoMessageTraits::Payload> settle() {
    runtime_.run_until_idle(config_.runtime);
    return runtime_.agent<agents::GatewayAgent>(agents::kGateway).drain();
  }

  std::vector<VideoMessageTraits::Payload> settle_or_throw() {
    auto replies = settle();
    for (const auto& p : replies) {
      if (const auto* f = std::get_if<msg::Failure>(&p)) throw Error(f->code, f->message);
    }
    return replies;
  }

  IngestReport collect_ingest() {
    IngestReport report;
    for (auto& p : settle()) {
      if (auto* s = std::get_if<msg::DocumentStored>(&p)) report.stored.push_back(s->doc_id);
      if (auto* f = std::get_if<msg::Failure>(&p)) report.failures.emplace_back(std::string(to_string(f->code)), f->message);
    }
    return report;
  }

  EngineConfig config_;
  OntologyStore ontology_;
  std::unique_ptr<SynonymResource> synonyms_;
  VideoRuntime runtime_;
  std::optional<PerformanceReport> last_performance_;
};

}  // namespace vidagents
