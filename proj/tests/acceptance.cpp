// Acceptance gate: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"
#include "vidagents/vidagents.hpp"

using namespace vidagents;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

/// Collects failures inside one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    pass_ = pass_ && ok;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome done() const {
    std::string d = notes_;
    for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + ("failed: " + f);
    return {pass_, d};
  }

 private:
  bool pass_ = true;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string fmt(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome performance_formula() {
  Check c;
  const double p = global_performance({{"a", 0.9}, {"b", 0.8}}).p;
  c.expect(std::fabs(p - 0.72) <= 1e-12, "[0.9, 0.8] -> " + fmt(p, 17));
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> ps(1 + rng() % 8);
    std::vector<std::pair<std::string, double>> stages;
    for (auto& x : ps) {
      x = unit(rng);
      stages.push_back({"s" + std::to_string(stages.size()), x});
    }
    const double P = global_performance(stages).p;
    c.expect(std::fabs(P - oracle::product(ps)) <= 1e-12, "product mismatch at trial " + std::to_string(trial));
    c.expect(P <= *std::min_element(ps.begin(), ps.end()), "P above min at trial " + std::to_string(trial));
    std::reverse(stages.begin(), stages.end());
    std::shuffle(stages.begin(), stages.end(), rng);
    c.expect(std::fabs(global_performance(stages).p - P) <= 1e-12, "order dependence at trial " + std::to_string(trial));
  }
  c.note("0.9*0.8 = " + fmt(p, 2) + ", 200 random vectors");
  return c.done();
}

Outcome shot_detection() {
  Check c;
  std::mt19937_64 rng(7);
  std::size_t planted_total = 0;
  std::size_t tp = 0;
  std::size_t detected_total = 0;
  for (int seq = 0; seq < 100; ++seq) {
    std::vector<std::size_t> lengths(1 + rng() % 8);
    for (auto& len : lengths) len = 1 + rng() % 9;
    const auto [frames, planted] = harness::planted_frames(rng, lengths, rng() % 8);
    std::vector<std::vector<double>> hists;
    for (const auto& f : frames) hists.push_back(f.hist);
    c.expect(oracle::boundaries(hists, 0.4) == planted, "generator plants " + std::to_string(seq));
    const auto shots = detect_shots(frames, 0.4);
    std::vector<std::size_t> found;
    for (std::size_t i = 1; i < shots.size(); ++i) found.push_back(shots[i].start_idx);
    c.expect(found == planted, "sequence " + std::to_string(seq));
    planted_total += planted.size();
    detected_total += found.size();
    for (std::size_t b : found) tp += std::count(planted.begin(), planted.end(), b);
  }
  const double precision = detected_total ? double(tp) / double(detected_total) : 1.0;
  const double recall = planted_total ? double(tp) / double(planted_total) : 1.0;
  c.expect(precision == 1.0 && recall == 1.0, "precision/recall");
  c.note("100 sequences, " + std::to_string(planted_total) + " planted boundaries, precision " + fmt(precision, 3) +
         ", recall " + fmt(recall, 3));
  return c.done();
}

Outcome pheromone_dynamics() {
  Check c;
  KnowledgeBase kb;  // tau0 1.0, rho 0.1, thresholds 2.0 / 0.2
  kb.insert(testing_support::record("busy"));
  kb.insert(testing_support::record("idle"));
  const auto expected = oracle::pheromone_trajectory(1.0, 0.1, 1.0, 40);
  c.expect(std::fabs(expected[0] - 1.9) < 1e-12 && std::fabs(expected[1] - 2.71) < 1e-12, "oracle 1.9, 2.71");
  int crossed = -1;
  int depreciated = -1;
  for (int cycle = 1; cycle <= 40; ++cycle) {
    kb.evaporate();
    kb.deposit("busy", 5);  // q * 5/5 = 1.0
    kb.reorganize();
    const double tau = kb.get("busy")->tau;
    c.expect(std::fabs(tau - expected[cycle - 1]) < 1e-12, "busy tau at cycle " + std::to_string(cycle));
    if (crossed < 0 && kb.get("busy")->tier == Tier::Active) crossed = cycle;
    if (depreciated < 0 && kb.get("idle")->tier == Tier::Depreciated) depreciated = cycle;
  }
  const int bound = static_cast<int>(std::ceil(std::log(0.2 / 1.0) / std::log(0.9)));
  c.expect(crossed == 2, "active crossing at cycle " + std::to_string(crossed));
  c.expect(bound == 16, "bound " + std::to_string(bound));
  c.expect(depreciated == bound, "depreciated at cycle " + std::to_string(depreciated));
  c.note("Active at cycle " + std::to_string(crossed) + ", Depreciated at cycle " + std::to_string(depreciated));
  return c.done();
}

Outcome organizer_idempotence() {
  Check c;
  std::mt19937_64 rng(500);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t moved_first = 0;
  for (int trial = 0; trial < 500; ++trial) {
    KnowledgeBase kb;
    const std::size_t n = 1 + rng() % 20;
    for (std::size_t i = 0; i < n; ++i) kb.insert(testing_support::record("d" + std::to_string(i)));
    const int steps = static_cast<int>(rng() % 60);
    for (int s = 0; s < steps; ++s) {
      if (rng() % 4 == 0) {
        kb.evaporate(0.01 + 0.9 * unit(rng));
      } else {
        kb.deposit("d" + std::to_string(rng() % n), static_cast<int>(rng() % 6));
      }
      if (rng() % 7 == 0) kb.reorganize();
    }
    moved_first += kb.reorganize().size();
    c.expect(kb.reorganize().empty(), "second reorganize moved documents in case " + std::to_string(trial));
  }
  c.note("500 randomized stores, " + std::to_string(moved_first) + " migrations on first call, 0 on second");
  return c.done();
}

std::vector<LabeledExample> classifier_set(std::uint64_t seed) {
  harness::SyntheticSpec spec;
  spec.seed = seed;
  spec.domains = {"news", "sports"};
  spec.docs_per_domain = 30;  // 3 topics per domain -> 10 examples per concept
  const auto corpus = harness::generate_corpus(spec);
  const auto truth = harness::ground_truth(corpus);
  std::vector<LabeledExample> out;
  for (const auto& d : corpus.descriptors) out.push_back({extract(d), truth.at(d.id)});
  return out;
}

Outcome classifier() {
  Check c;
  const auto lex = bundled_ontology().lexicon();
  const auto train_set = classifier_set(harness::SyntheticSpec{}.seed);
  const auto held_out = classifier_set(harness::SyntheticSpec{}.seed + 1);
  std::map<std::string, int> per_concept;
  for (const auto& ex : train_set) ++per_concept[ex.concept_id];
  c.expect(per_concept.size() == 6, "6 concepts");
  for (const auto& [id, n] : per_concept) c.expect(n == 10, id + " has " + std::to_string(n) + " examples");

  const auto model = train(train_set, lex);
  const double acc = evaluate(model, train_set);
  const double held = evaluate(model, held_out);
  c.expect(acc == 1.0, "training accuracy " + fmt(acc, 3));
  c.expect(held >= 0.9, "held-out accuracy " + fmt(held, 3));
  c.expect(train(train_set, lex) == model, "two trainings differ");
  c.note("training " + fmt(acc, 3) + ", held-out " + fmt(held, 3) + ", identical retrain");
  return c.done();
}

Outcome concept_mapping() {
  Check c;
  const auto ontology = bundled_ontology();
  const auto synonyms = StaticSynonymTable::bundled();
  EnrichedQuery q;
  q.terms = {{"football", 1.0, false}, {"soccer", 1.0, false}, {"zzqx", 1.0, false}};
  const auto m = map_concepts(q, ontology, "sports", synonyms, 0.3);
  const double jac = oracle::jaccard({"soccer", "football"}, {"football", "footy"});
  c.expect(m.pairs.size() == 2, "two mapped terms");
  if (m.pairs.size() == 2) {
    c.expect(m.pairs[0].concept_id == "football" && m.pairs[0].similarity == 1.0, "exact label at 1.0");
    c.expect(m.pairs[1].term == "soccer" && m.pairs[1].concept_id == "football", "soccer -> football");
    c.expect(std::fabs(m.pairs[1].similarity - 1.0 / 3.0) < 1e-12 && m.pairs[1].similarity == jac, "Jaccard 1/3");
  }
  c.expect(m.unmapped == std::vector<std::string>{"zzqx"}, "zzqx unmapped");

  std::vector<std::string> words;
  for (const auto& [term, set] : synonyms.entries()) words.push_back(term);
  for (const auto& [id, concept_] : ontology.lexicon().concepts()) {
    words.insert(words.end(), concept_.synonyms.begin(), concept_.synonyms.end());
  }
  std::mt19937_64 rng(11);
  int unknown_checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::string domain = std::vector<std::string>{"news", "sports", "art"}[rng() % 3];
    EnrichedQuery lower;
    EnrichedQuery mixed;
    for (int i = 0; i < 3; ++i) {
      std::string w = rng() % 5 == 0 ? "xq" + std::to_string(rng() % 1000) + "zz" : words[rng() % words.size()];
      lower.terms.push_back({w, 1.0, false});
      for (auto& ch : w) {
        if (rng() % 2) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      }
      mixed.terms.push_back({w, 1.0, false});
    }
    const auto a = map_concepts(lower, ontology, domain, synonyms);
    const auto b = map_concepts(mixed, ontology, domain, synonyms);
    c.expect(a.pairs == b.pairs && a.unmapped == b.unmapped, "case sensitivity in trial " + std::to_string(trial));
    for (const auto& t : lower.terms) {
      if (t.term.starts_with("xq")) {
        ++unknown_checked;
        c.expect(std::find(a.unmapped.begin(), a.unmapped.end(), t.term) != a.unmapped.end(), "unknown term mapped");
      }
    }
  }
  c.note("soccer->football at " + fmt(jac, 4) + ", 500 case-folding trials, " + std::to_string(unknown_checked) +
         " unknown terms unmapped");
  return c.done();
}

Outcome ranking_invariances() {
  Check c;
  harness::SyntheticSpec spec;
  const auto corpus = harness::generate_corpus(spec);
  Engine engine;
  harness::prepare(engine, corpus);
  harness::register_users(engine, spec);
  std::mt19937_64 rng(99);
  const auto& docs = corpus.descriptors;
  for (int i = 0; i < 400; ++i) {
    const auto& user = spec.users[rng() % spec.users.size()];
    engine.feedback(user.id, docs[rng() % 20].id, static_cast<int>(rng() % 6));  // favour the first domain
  }
  for (int i = 0; i < 5; ++i) engine.reorganize();
  const KbStats stats = engine.stats();
  c.expect(stats.active > 0 && stats.depreciated > 0, "store covers all tiers");

  std::vector<std::string> words;
  for (const auto& [term, set] : engine.ontology().lexicon().concepts()) {
    words.insert(words.end(), set.synonyms.begin(), set.synonyms.end());
  }
  for (const auto& d : engine.kb().documents()) {
    for (const auto& [term, n] : d.record.text_terms) words.push_back(term);
  }
  const RetrievalContext ctx{engine.kb(), engine.ontology(), engine.synonyms()};
  const auto catalog = default_strategy_catalog();
  std::size_t returned = 0;
  for (int trial = 0; trial < 100; ++trial) {
    RawQuery q;
    q.user_id = spec.users[rng() % spec.users.size()].id;
    q.domain = spec.domains[rng() % spec.domains.size()];
    for (int i = 0, n = 1 + static_cast<int>(rng() % 3); i < n; ++i) q.text += words[rng() % words.size()] + " ";
    q.k = 1 + rng() % 20;
    auto it = catalog.begin();
    std::advance(it, rng() % catalog.size());
    const AvatarProfile& profile = engine.people().profile(q.user_id);
    const auto base = retrieve(ctx, q, profile, it->second);
    returned += base.results.size();
    std::vector<std::string> order;
    for (std::size_t i = 0; i < base.results.size(); ++i) {
      const auto& r = base.results[i];
      order.push_back(r.doc_id);
      c.expect(r.tier != Tier::Depreciated, "depreciated result " + r.doc_id);
      if (i > 0) c.expect(!(r.tier > base.results[i - 1].tier), "usual above active in trial " + std::to_string(trial));
    }
    for (double k : {0.5, 2.0, 10.0}) {
      const auto scaled = retrieve(ctx, q, profile, it->second.scaled(k));
      std::vector<std::string> other;
      for (const auto& r : scaled.results) other.push_back(r.doc_id);
      c.expect(other == order, "order changed under c=" + fmt(k, 1) + " in trial " + std::to_string(trial));
    }
  }
  c.note("100 queries, " + std::to_string(returned) + " results, tiers " + std::to_string(stats.active) + "/" +
         std::to_string(stats.usual) + "/" + std::to_string(stats.depreciated));
  return c.done();
}

Outcome persistence() {
  Check c;
  harness::SyntheticSpec spec;
  spec.docs_per_domain = 10;
  const auto corpus = harness::generate_corpus(spec);
  Engine engine;
  harness::prepare(engine, corpus);
  harness::register_users(engine, spec);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 37; ++i) {
    const auto& user = spec.users[rng() % spec.users.size()];
    engine.query({user.id, user.domain, user.interest, 5});
    engine.feedback(user.id, corpus.descriptors[rng() % corpus.descriptors.size()].id, static_cast<int>(rng() % 6));
  }
  testing_support::TempDir dir("acceptance");
  engine.save(dir.path());
  Engine back;
  back.load(dir.path());
  c.expect(back.kb() == engine.kb(), "knowledge base");
  c.expect(back.people() == engine.people(), "profiles");
  c.expect(back.model() == engine.model(), "model");
  std::size_t exact_tau = 0;
  for (const auto& d : engine.kb().documents()) exact_tau += back.kb().get(d.id())->tau == d.tau ? 1 : 0;
  c.expect(exact_tau == engine.kb().size(), "tau values");

  const KnowledgeBase kb = KnowledgeBase::load(dir / "kb.jsonl");
  c.expect(kb == engine.kb(), "direct KB load");
  c.expect(Personalization::load(dir.path()) == engine.people(), "direct profile load");
  c.expect(load_model(dir / "model.json") == *engine.model(), "direct model load");
  c.note(std::to_string(engine.kb().size()) + " documents, " + std::to_string(engine.people().profiles().size()) +
         " profiles, " + std::to_string(exact_tau) + " exact tau values");
  return c.done();
}

std::string baseline_path() { return std::string(VIDAGENTS_TEST_DATA) + "/harness_baseline.csv"; }

Outcome end_to_end(std::string& csv_out) {
  Check c;
  const harness::SyntheticSpec spec;
  c.expect(spec.docs_per_domain * spec.domains.size() == 60 && spec.users.size() == 5 && spec.rounds == 20,
           "default spec shape");
  const auto rounds = harness::simulate(spec);
  csv_out = harness::metrics_csv(rounds);
  const double early = harness::window_precision(rounds, 1, 5);
  const double late = harness::window_precision(rounds, 16, 20);
  c.expect(late > early, "late " + fmt(late, 4) + " not above early " + fmt(early, 4));
  c.expect(rounds.size() == 20 && rounds.back().active > 0, "Active tier empty at round 20");
  std::string baseline;
  try {
    baseline = read_text_file(baseline_path());
  } catch (const Error&) {
  }
  c.expect(!baseline.empty(), "baseline missing at " + baseline_path());
  c.expect(baseline.empty() || baseline == csv_out, "trajectory differs from recorded baseline");
  c.note("precision@5 rounds 1-5 " + fmt(early, 4) + ", rounds 16-20 " + fmt(late, 4) + ", active " +
         std::to_string(rounds.back().active) + " at round 20");
  return c.done();
}

Outcome determinism(const std::string& first) {
  Check c;
  const std::string second = harness::metrics_csv(harness::simulate(harness::SyntheticSpec{}));
  c.expect(!first.empty() && first == second, "CSV differs between runs");
  std::size_t lines = std::count(second.begin(), second.end(), '\n');
  c.note("two runs, " + std::to_string(lines) + " CSV lines, empty diff");
  return c.done();
}

}  // namespace

int main(int argc, char** argv) {
  // --write-baseline records the harness trajectory instead of checking it.
  if (argc > 1 && std::string(argv[1]) == "--write-baseline") {
    write_text_file(baseline_path(), harness::metrics_csv(harness::simulate(harness::SyntheticSpec{})));
    std::cout << "wrote " << baseline_path() << '\n';
    return 0;
  }

  struct Criterion {
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
  };
  std::string csv;
  const std::vector<Criterion> criteria = {
      {"performance-formula", 1.0, performance_formula},
      {"shot-detection", 5.0, shot_detection},
      {"pheromone-dynamics", 1.0, pheromone_dynamics},
      {"organizer-idempotence", 5.0, organizer_idempotence},
      {"classifier", 10.0, classifier},
      {"concept-mapping", 1.0, concept_mapping},
      {"ranking-invariances", 10.0, ranking_invariances},
      {"persistence", 10.0, persistence},
      {"end-to-end-feedback", 60.0, [&] { return end_to_end(csv); }},
      {"determinism", 60.0, [&] { return determinism(csv); }},
  };

  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= cr.budget_s) {
      o.pass = false;
      o.detail += "; over time budget " + fmt(cr.budget_s, 0) + " s";
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << cr.name << " (" << fmt(secs, 3) << " s): " << o.detail << '\n';
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
