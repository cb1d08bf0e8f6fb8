// Classifier, knowledge base (pheromone organizer) and personalization.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "vidagents/classification.hpp"
#include "vidagents/harness.hpp"
#include "vidagents/knowledge_base.hpp"
#include "vidagents/ontology.hpp"
#include "vidagents/personalization.hpp"

using namespace vidagents;
using testing_support::record;
using testing_support::TempDir;

namespace {

template <class F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::InvalidArgument;
}

ConceptLexicon toy_lexicon() {
  ConceptLexicon lex;
  for (const char* id : {"alpha", "beta", "gamma"}) {
    Concept c;
    c.id = id;
    c.label = id;
    c.domain = "toy";
    lex.add(c);
  }
  return lex;
}

/// Two classes, each a disjoint one-hot text feature.
std::vector<LabeledExample> one_hot_set() {
  std::vector<LabeledExample> out;
  for (int i = 0; i < 5; ++i) {
    out.push_back({record("a" + std::to_string(i), {{"apple", 1 + i}}), "alpha"});
    out.push_back({record("b" + std::to_string(i), {{"banana", 1 + i}}), "beta"});
  }
  return out;
}

std::vector<LabeledExample> examples_of(const harness::SyntheticCorpus& corpus) {
  std::map<std::string, std::string> truth = harness::ground_truth(corpus);
  std::vector<LabeledExample> out;
  for (const auto& d : corpus.descriptors) out.push_back({extract(d), truth.at(d.id)});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Features

TEST_CASE("build_features blocks", "[classification]") {
  const std::vector<MetadataRecord> corpus = {record("x", {{"goal", 2}, {"pitch", 1}}), record("y", {{"goal", 1}})};
  const auto [vocab, idf] = build_vocabulary(corpus);
  REQUIRE(vocab.size() == 2);
  REQUIRE(idf[vocab.at("goal")] == Catch::Approx(std::log(3.0 / 3.0) + 1.0));
  REQUIRE(idf[vocab.at("pitch")] == Catch::Approx(std::log(3.0 / 2.0) + 1.0));

  SECTION("no text and uniform histogram") {
    MetadataRecord r = record("z");
    const auto f = build_features(r, vocab, idf, 8);
    REQUIRE(f.size() == 10);
    REQUIRE(f[0] == 0.0);
    REQUIRE(f[1] == 0.0);
    for (std::size_t i = 2; i < 10; ++i) REQUIRE(f[i] == Catch::Approx(1.0 / 8));
  }
  SECTION("a single repeated term is a unit direction") {
    const auto f = build_features(record("z", {{"pitch", 7}}), vocab, idf, 8);
    REQUIRE(f[vocab.at("pitch")] == Catch::Approx(1.0));
    REQUIRE(f[vocab.at("goal")] == 0.0);
  }
  SECTION("same terms, different histograms") {
    MetadataRecord a = record("a", {{"goal", 1}, {"pitch", 3}});
    MetadataRecord b = a;
    b.shots[0].keyframe_hist = testing_support::one_hot(8, 3);
    const auto fa = build_features(a, vocab, idf, 8);
    const auto fb = build_features(b, vocab, idf, 8);
    REQUIRE(std::equal(fa.begin(), fa.begin() + 2, fb.begin()));
    REQUIRE_FALSE(std::equal(fa.begin() + 2, fa.end(), fb.begin() + 2));
  }
}

// ---------------------------------------------------------------------------
// Training and classification

TEST_CASE("train on a separable one-hot set", "[classification]") {
  const auto lex = toy_lexicon();
  const auto examples = one_hot_set();
  const ClassifierModel model = train(examples, lex);
  REQUIRE(model.concepts == std::vector<std::string>{"alpha", "beta"});
  REQUIRE(evaluate(model, examples) == 1.0);
  REQUIRE(classify(model, examples.front().record).front().concept_id == "alpha");

  SECTION("determinism") { REQUIRE(train(examples, lex) == model); }

  SECTION("all labels wrong scores zero") {
    std::vector<LabeledExample> flipped;
    for (int i = 0; i < 2; ++i) {
      flipped.push_back({examples[2 * i].record, "beta"});
      flipped.push_back({examples[2 * i + 1].record, "alpha"});
    }
    REQUIRE(evaluate(model, flipped) == 0.0);
  }

  SECTION("zero features rank by bias") {
    MetadataRecord empty;
    empty.doc_id = "e";
    const auto scores = classify(model, empty);
    REQUIRE(scores.size() == 2);
    for (const auto& s : scores) {
      const std::size_t c = s.concept_id == "alpha" ? 0 : 1;
      REQUIRE(s.confidence == squash(model.bias[c]));
    }
    REQUIRE(classify(model, empty) == scores);
  }
}

TEST_CASE("training preconditions", "[classification]") {
  const auto lex = toy_lexicon();
  REQUIRE(code_of([&] { train(std::vector<LabeledExample>{}, lex); }) == Errc::EmptyTrainingSet);
  std::vector<LabeledExample> one = {{record("a", {{"x", 1}}), "alpha"}, {record("b", {{"y", 1}}), "alpha"}};
  REQUIRE(code_of([&] { train(one, lex); }) == Errc::InsufficientClasses);
  one[1].concept_id = "omega";
  REQUIRE(code_of([&] { train(one, lex); }) == Errc::UnknownConcept);
  REQUIRE(code_of([&] { evaluate(train(one_hot_set(), lex), std::vector<LabeledExample>{}); }) ==
          Errc::EmptyEvaluationSet);
  REQUIRE(code_of([&] { classify(ClassifierModel{}, record("a")); }) == Errc::ModelNotTrained);
}

TEST_CASE("classifier properties on the synthetic corpus", "[classification][property]") {
  harness::SyntheticSpec spec;
  spec.domains = {"news", "sports"};
  spec.docs_per_domain = 12;
  const auto corpus = harness::generate_corpus(spec);
  const auto examples = examples_of(corpus);
  const auto lex = corpus.ontology.lexicon();
  const ClassifierModel model = train(examples, lex);
  REQUIRE(evaluate(model, examples) == 1.0);

  ClassifierModel scaled = model;
  for (double c : {0.25, 3.0}) {
    for (auto& w : scaled.weights) {
      for (auto& x : w) x = x * c;
    }
    for (auto& b : scaled.bias) b *= c;
    for (const auto& ex : examples) {
      const auto a = classify(model, ex.record);
      const auto s = classify(scaled, ex.record);
      REQUIRE(a.front().concept_id == s.front().concept_id);
      for (std::size_t i = 1; i < a.size(); ++i) {
        REQUIRE(a[i - 1].confidence >= a[i].confidence);
        REQUIRE(a[i].confidence > 0.0);
        REQUIRE(a[i].confidence < 1.0);
      }
    }
    scaled = model;
  }
}

TEST_CASE("squash stays in the open unit interval", "[classification]") {
  for (double m : {-1e6, -50.0, 0.0, 50.0, 1e6}) {
    REQUIRE(squash(m) > 0.0);
    REQUIRE(squash(m) < 1.0);
  }
  REQUIRE(squash(0.0) == 0.5);
}

TEST_CASE("select_concepts keeps confident concepts and their ancestors", "[classification]") {
  const auto lex = bundled_ontology().lexicon();
  const std::vector<ConceptScore> ranked = {{"football", 0.9}, {"tennis", 0.7}, {"basketball", 0.2}};
  const auto chosen = select_concepts(ranked, 0.6, lex);
  std::map<std::string, double> got;
  for (const auto& c : chosen) got[c.concept_id] = c.confidence;
  REQUIRE(got == std::map<std::string, double>{{"football", 0.9}, {"sports", 0.9}, {"tennis", 0.7}, {"video", 0.9}});
}

TEST_CASE("model persistence", "[classification][persistence]") {
  const ClassifierModel model = train(one_hot_set(), toy_lexicon());
  TempDir dir("model");
  save_model(model, dir / "model.json");
  REQUIRE(load_model(dir / "model.json") == model);
  write_text_file(dir / "bad.json", R"({"vocab": ["a"], "idf": []})");
  REQUIRE(code_of([&] { load_model(dir / "bad.json"); }) == Errc::CorruptStore);
}

// ---------------------------------------------------------------------------
// Knowledge base

TEST_CASE("insert and deposit", "[kb]") {
  KnowledgeBase kb;
  kb.insert(record("d1"));
  const auto d = kb.get("d1");
  REQUIRE(d->tier == Tier::Usual);
  REQUIRE(d->tau == 1.0);
  REQUIRE(code_of([&] { kb.insert(record("d1")); }) == Errc::DuplicateDocument);
  kb.insert(record("d2"));
  kb.insert(record("d3"));
  const KbStats s = kb.stats();
  REQUIRE(s.usual == 3);
  REQUIRE(s.active == 0);
  REQUIRE(s.depreciated == 0);

  REQUIRE(kb.deposit("d1", 5) == 2.0);
  REQUIRE(kb.deposit("d2", 0) == 1.0);
  REQUIRE(kb.get("d2")->request_count == 1);
  REQUIRE(code_of([&] { kb.deposit("d1", 7); }) == Errc::InvalidRating);
  REQUIRE(code_of([&] { kb.deposit("ghost", 3); }) == Errc::UnknownDocument);
}

TEST_CASE("evaporation arithmetic", "[kb]") {
  KnowledgeBase empty;
  REQUIRE(empty.evaporate(0.1) == 0);

  KnowledgeBase kb;
  kb.insert(record("a"));
  kb.insert(record("b"));
  kb.deposit("a", 5);
  kb.evaporate(0.1);
  REQUIRE(kb.get("a")->tau == Catch::Approx(1.8).epsilon(1e-12));
  kb.evaporate(0.1);
  REQUIRE(kb.get("b")->tau == Catch::Approx(0.81).epsilon(1e-12));
}

TEST_CASE("tiers follow thresholds", "[kb]") {
  const PheromoneParams p;
  REQUIRE(tier_for(2.5, p) == Tier::Active);
  REQUIRE(tier_for(0.1, p) == Tier::Depreciated);
  REQUIRE(tier_for(1.0, p) == Tier::Usual);
  REQUIRE(tier_for(2.0, p) == Tier::Active);
  REQUIRE(tier_for(0.2, p) == Tier::Usual);

  KnowledgeBase kb;
  kb.insert(record("u"));
  REQUIRE(kb.reorganize().empty());
  kb.deposit("u", 5);
  kb.deposit("u", 5);
  const auto moved = kb.reorganize();
  REQUIRE(moved == std::vector<Migration>{{"u", Tier::Usual, Tier::Active}});

  PheromoneParams bad;
  bad.theta_depr = 1.5;
  REQUIRE(code_of([&] { bad.validate(); }) == Errc::InvalidArgument);
}

TEST_CASE("pheromone bounds", "[kb][property]") {
  // zero deposits: depreciated after exactly ceil(log(0.2)/log(0.9)) cycles
  const int bound = static_cast<int>(std::ceil(std::log(0.2 / 1.0) / std::log(0.9)));
  REQUIRE(bound == oracle::cycles_until_below(1.0, 0.1, 0.2));
  KnowledgeBase kb;
  kb.insert(record("idle"));
  kb.insert(record("busy"));
  double last = 1.0;
  int reached = -1;
  for (int cycle = 1; cycle <= 40; ++cycle) {
    kb.evaporate();
    kb.deposit("busy", 5);
    kb.reorganize();
    const double tau = kb.get("idle")->tau;
    REQUIRE(tau <= last);
    last = tau;
    if (reached < 0 && kb.get("idle")->tier == Tier::Depreciated) reached = cycle;
    if (cycle >= 2) REQUIRE(kb.get("busy")->tier == Tier::Active);
  }
  REQUIRE(reached == bound);
}

TEST_CASE("find_by_concepts grouping", "[kb]") {
  KnowledgeBase kb;
  kb.insert(record("b", {}, {{"football", 0.9}}));
  kb.insert(record("a", {}, {{"football", 0.8}}));
  kb.insert(record("c", {}, {{"tennis", 0.8}}));
  const std::vector<std::string> football = {"football"};
  REQUIRE(kb.find_by_concepts(std::vector<std::string>{"rowing"}, kSearchTiers).empty());

  auto ids = [](const std::vector<KbDocument>& docs) {
    std::vector<std::string> out;
    for (const auto& d : docs) out.push_back(d.id());
    return out;
  };
  REQUIRE(ids(kb.find_by_concepts(football, kSearchTiers)) == std::vector<std::string>{"a", "b"});
  kb.deposit("b", 5);
  kb.deposit("b", 5);
  kb.reorganize();
  REQUIRE(ids(kb.find_by_concepts(football, kSearchTiers)) == std::vector<std::string>{"b", "a"});
}

TEST_CASE("knowledge base persistence", "[kb][persistence]") {
  KnowledgeBase kb;
  kb.insert(record("a", {{"goal", 2}}, {{"football", 0.9}}));
  kb.insert(record("b"));
  kb.insert(record("c"));
  kb.deposit("a", 4);
  kb.evaporate();
  kb.note_feedback();
  TempDir dir("kb");
  kb.save(dir / "kb.jsonl");
  const KnowledgeBase back = KnowledgeBase::load(dir / "kb.jsonl");
  REQUIRE(back == kb);
  REQUIRE(back.get("a")->tau == kb.get("a")->tau);

  SECTION("empty file") {
    write_text_file(dir / "kb.jsonl", "");
    REQUIRE(code_of([&] { KnowledgeBase::load(dir / "kb.jsonl"); }) == Errc::CorruptStore);
  }
  SECTION("truncated file") {
    const std::string full = read_text_file(dir / "kb.jsonl");
    write_text_file(dir / "kb.jsonl", full.substr(0, full.size() / 2));
    REQUIRE(code_of([&] { KnowledgeBase::load(dir / "kb.jsonl"); }) == Errc::CorruptStore);
  }
  SECTION("missing manifest") {
    std::filesystem::remove(KnowledgeBase::manifest_path(dir / "kb.jsonl"));
    REQUIRE(code_of([&] { KnowledgeBase::load(dir / "kb.jsonl"); }) == Errc::CorruptStore);
  }
}

TEST_CASE("reorganize is idempotent and tiers are a function of tau", "[kb][property]") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    KnowledgeBase kb;
    const int n = 1 + static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i) kb.insert(record("d" + std::to_string(i)));
    for (int step = 0; step < 30; ++step) {
      if (rng() % 3 == 0) {
        kb.evaporate(0.05 + 0.5 * unit(rng));
      } else {
        kb.deposit("d" + std::to_string(rng() % n), static_cast<int>(rng() % 6));
      }
    }
    kb.reorganize();
    REQUIRE(kb.reorganize().empty());
    for (const auto& d : kb.documents()) REQUIRE(d.tier == tier_for(d.tau, kb.params()));
  }
}

// ---------------------------------------------------------------------------
// Personalization

TEST_CASE("create_avatar", "[personalization]") {
  Personalization people;
  const auto& p = people.create_avatar("u1", "FR", "fr");
  REQUIRE(p.memberships == std::map<std::string, double>{{"geo:FR", 1.0}, {"lang:fr", 1.0}});
  REQUIRE(p.prefs.empty());
  REQUIRE(code_of([&] { people.create_avatar("u1", "FR", "fr"); }) == Errc::DuplicateUser);
  REQUIRE(code_of([&] { people.create_avatar("u2", "France", "fr"); }) == Errc::InvalidArgument);
  REQUIRE(code_of([&] { people.profile("ghost"); }) == Errc::UnknownUser);
}

TEST_CASE("new avatars copy the geographic community profile", "[personalization]") {
  Personalization people;
  people.create_avatar("m1", "MA", "ar");
  people.record_feedback({"m1", "d", 5, 0}, {{"football", 1.0}}, [](const std::string&) { return "sports"; });
  REQUIRE(people.profile("m1").prefs_for("sports") == PreferenceVector{{"football", 1.0}});
  const auto& fresh = people.create_avatar("m2", "MA", "fr");
  REQUIRE(fresh.prefs_for("sports") == PreferenceVector{{"football", 1.0}});
}

TEST_CASE("community_profile averages members", "[personalization]") {
  Personalization people;
  auto same_domain = [](const std::string&) { return std::string("d"); };
  people.create_avatar("a", "FR", "");
  people.create_avatar("b", "US", "");
  people.record_feedback({"a", "x", 5, 0}, {{"x", 1.0}}, same_domain);
  people.record_feedback({"b", "y", 5, 0}, {{"y", 1.0}}, same_domain);

  people.join("a", "club", CommunityCriterion::Interest, 1.0);
  REQUIRE(people.community_profile("club", "d") == PreferenceVector{{"x", 1.0}});
  people.join("b", "club", CommunityCriterion::Interest, 1.0);
  const auto avg = people.community_profile("club", "d");
  REQUIRE(avg.at("x") == Catch::Approx(0.5));
  REQUIRE(avg.at("y") == Catch::Approx(0.5));

  people.join("a", "empty-club", CommunityCriterion::Interest, 1.0);
  REQUIRE(people.community_profile("empty-club", "nothing").empty());
  REQUIRE(code_of([&] { people.community_profile("nope", "d"); }) == Errc::UnknownCommunity);
}

TEST_CASE("community_profile is invariant under degree scaling", "[personalization][property]") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    Personalization people;
    auto dom = [](const std::string&) { return std::string("d"); };
    std::vector<std::pair<double, std::map<std::string, double>>> members;
    const int n = 1 + static_cast<int>(rng() % 5);
    std::vector<double> degrees;
    for (int i = 0; i < n; ++i) {
      const std::string u = "u" + std::to_string(i);
      people.create_avatar(u, "FR", "");
      people.record_feedback({u, "doc", 5, 0}, {{"c" + std::to_string(rng() % 4), unit(rng)}, {"c9", unit(rng)}}, dom);
      degrees.push_back(unit(rng) * 0.5);
    }
    for (int i = 0; i < n; ++i) people.join("u" + std::to_string(i), "g", CommunityCriterion::Interest, degrees[i]);
    const auto base = people.community_profile("g", "d");
    for (int i = 0; i < n; ++i) {
      members.push_back({degrees[i], people.profile("u" + std::to_string(i)).prefs_for("d")});
      people.join("u" + std::to_string(i), "g", CommunityCriterion::Interest, degrees[i] * 2.0);
    }
    const auto scaled = people.community_profile("g", "d");
    const auto expect = oracle::weighted_average(members);
    REQUIRE(base.size() == scaled.size());
    for (const auto& [k, v] : base) {
      REQUIRE(scaled.at(k) == Catch::Approx(v).epsilon(1e-12));
      REQUIRE(expect.at(k) == Catch::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("assign_strategy follows peer usage", "[personalization]") {
  Personalization people;
  REQUIRE(people.create_avatar("u", "FR", "fr").user_id == "u");
  REQUIRE(people.assign_strategy("u", "sports") == "hybrid");

  people.create_avatar("p1", "FR", "fr");
  people.create_avatar("p2", "FR", "en");
  people.set_usage("p1", "sports", "concept-first", 2);
  people.set_usage("p2", "sports", "concept-first", 1);
  people.set_usage("p2", "sports", "text-first", 1);
  REQUIRE(people.assign_strategy("u", "sports") == "concept-first");
  REQUIRE(people.assign_strategy("u", "sports") == "concept-first");

  Personalization tie;
  tie.create_avatar("u", "US", "");
  tie.create_avatar("p", "US", "");
  tie.set_usage("p", "art", "b-strat", 2);
  tie.set_usage("p", "art", "a-strat", 2);
  REQUIRE(tie.assign_strategy("u", "art") == "a-strat");
  REQUIRE(code_of([&] { tie.assign_strategy("ghost", "art"); }) == Errc::UnknownUser);
}

TEST_CASE("suggestions", "[personalization]") {
  Personalization people;
  people.create_avatar("u", "FR", "fr");
  REQUIRE(people.suggest("u", "sports", 5).empty());
  for (const char* q : {"final", "final", "derby"}) people.record_query("u", "sports", q, "hybrid");
  const auto s = people.suggest("u", "sports", 2);
  REQUIRE(s == std::vector<Suggestion>{{"final", SuggestionSource::History}, {"derby", SuggestionSource::History}});

  Personalization fresh;
  fresh.create_avatar("fan", "MA", "ar");
  fresh.record_feedback({"fan", "d", 5, 0}, {{"football", 1.0}}, [](const std::string&) { return "sports"; });
  fresh.create_avatar("newbie", "MA", "ar");
  const auto lex = bundled_ontology().lexicon();
  const auto p = fresh.suggest("newbie", "sports", 3, &lex);
  REQUIRE(p == std::vector<Suggestion>{{"football", SuggestionSource::Predictive}});
  REQUIRE(code_of([&] { fresh.suggest("ghost", "sports", 3); }) == Errc::UnknownUser);
}

TEST_CASE("suggest respects k and never duplicates", "[personalization][property]") {
  std::mt19937_64 rng(8);
  const std::vector<std::string> words = {"final", "derby", "goal", "cup", "football"};
  for (int trial = 0; trial < 50; ++trial) {
    Personalization people;
    people.create_avatar("u", "FR", "fr");
    people.create_avatar("v", "FR", "fr");
    for (int i = 0; i < 10; ++i) people.record_query("u", "sports", words[rng() % words.size()], "hybrid");
    people.record_feedback({"v", "d", 5, 0}, {{"football", 0.7}, {"tennis", 0.4}},
                           [](const std::string&) { return "sports"; });
    const std::size_t k = rng() % 7;
    const auto s = people.suggest("u", "sports", k);
    REQUIRE(s.size() <= k);
    std::set<std::string> seen;
    for (const auto& x : s) REQUIRE(seen.insert(x.text).second);
  }
}

TEST_CASE("record_feedback updates preferences", "[personalization]") {
  auto dom = [](const std::string&) { return std::string("sports"); };
  Personalization people;
  people.create_avatar("u", "FR", "fr");
  people.record_feedback({"u", "d", 0, 0}, {{"football", 1.0}}, dom);
  REQUIRE(people.profile("u").prefs.empty());
  people.record_feedback({"u", "d", 5, 0}, {{"football", 1.0}}, dom);
  REQUIRE(people.profile("u").prefs_for("sports") == PreferenceVector{{"football", 1.0}});

  SECTION("shifting mass toward the rated concept") {
    Personalization two;
    two.create_avatar("v", "FR", "fr");
    two.record_feedback({"v", "d", 5, 0}, {{"football", 0.5}, {"news", 0.5}}, dom);
    REQUIRE(two.profile("v").prefs_for("sports").at("football") == Catch::Approx(0.5));
    two.record_feedback({"v", "d", 5, 0}, {{"football", 1.0}}, dom);
    const auto& v = two.profile("v").prefs_for("sports");
    REQUIRE(v.at("football") == Catch::Approx(0.6 / 1.1));
    REQUIRE(v.at("news") == Catch::Approx(0.5 / 1.1));
  }
  REQUIRE(code_of([&] { people.record_feedback({"u", "d", 6, 0}, {}, dom); }) == Errc::InvalidRating);
  REQUIRE(code_of([&] { people.record_feedback({"ghost", "d", 3, 0}, {}, dom); }) == Errc::UnknownUser);
}

TEST_CASE("preference vectors stay L1-normalized", "[personalization][property]") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto lex = bundled_ontology().lexicon();
  std::vector<std::string> ids;
  for (const auto& [id, c] : lex.concepts()) ids.push_back(id);
  Personalization people;
  people.create_avatar("u", "FR", "fr");
  for (int step = 0; step < 300; ++step) {
    std::vector<ConceptScore> concepts;
    const int m = static_cast<int>(rng() % 4);
    for (int i = 0; i < m; ++i) concepts.push_back({ids[rng() % ids.size()], unit(rng)});
    people.record_feedback({"u", "d", static_cast<int>(rng() % 6), 0}, concepts,
                           [&](const std::string& id) { return lex.domain_of(id); });
    for (const auto& [domain, v] : people.profile("u").prefs) {
      double sum = 0;
      for (const auto& [k, w] : v) {
        REQUIRE(w > 0.0);
        sum += w;
      }
      REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("personalization persistence", "[personalization][persistence]") {
  Personalization people(0.2);
  people.create_avatar("u1", "FR", "fr", Device::Mobile);
  people.create_avatar("u2", "MA", "ar");
  people.record_query("u1", "sports", "final", "hybrid");
  people.record_feedback({"u1", "d", 4, 0}, {{"football", 0.8}}, [](const std::string&) { return "sports"; });
  people.join("u2", "club", CommunityCriterion::Interest, 0.5);
  TempDir dir("people");
  people.save(dir.path());
  REQUIRE(Personalization::load(dir.path()) == people);
  write_text_file(dir / "communities.json", "{}");
  REQUIRE(code_of([&] { Personalization::load(dir.path()); }) == Errc::CorruptStore);
}
