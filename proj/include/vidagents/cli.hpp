#pragma once

// Command-line front end. cli_dispatch() takes the arguments after the
// program name and returns the exit code: 0 success, 1 domain error, 2 usage.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vidagents/engine.hpp"
#include "vidagents/gateway.hpp"
#include "vidagents/harness.hpp"
#include "vidagents/net.hpp"

namespace vidagents {

namespace detail {

inline void print_json(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

/// Directories expand to their *.json files, sorted.
inline std::vector<std::string> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<std::string> out;
  for (const auto& in : inputs) {
    std::error_code ec;
    if (std::filesystem::is_directory(in, ec)) {
      std::vector<std::string> found;
      for (const auto& entry : std::filesystem::recursive_directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") found.push_back(entry.path().string());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(in);
    }
  }
  return out;
}

inline json ingest_report_json(const IngestReport& r) {
  json failures = json::array();
  for (const auto& [code, message] : r.failures) failures.push_back(json{{"error", code}, {"message", message}});
  return json{{"stored", r.stored}, {"failures", failures}};
}

}  // namespace detail

inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-agent video indexing and retrieval engine", "vidagents"};
  app.require_subcommand(1);

  std::string config_path;
  std::string state_dir;
  app.add_option("--config", config_path, "JSON configuration file (default: $VIDAGENTS_CONFIG)");
  app.add_option("--state", state_dir, "State directory (overrides the configuration)");

  std::vector<std::string> seeds;
  int depth = 2;
  std::string pattern = "*.json";
  bool crawl_ingest = false;
  auto* crawl_cmd = app.add_subcommand("crawl", "Discover descriptor links from seed pages");
  crawl_cmd->add_option("--seed", seeds, "Seed page or descriptor URI")->required();
  crawl_cmd->add_option("--depth", depth, "Maximum link depth")->check(CLI::NonNegativeNumber);
  crawl_cmd->add_option("--pattern", pattern, "Link pattern (glob, or re:<regex>)");
  crawl_cmd->add_flag("--ingest", crawl_ingest, "Ingest pending links afterwards");

  std::vector<std::string> inputs;
  bool pending = false;
  auto* ingest_cmd = app.add_subcommand("ingest", "Extract, classify and store video descriptors");
  ingest_cmd->add_option("inputs", inputs, "Descriptor files or directories");
  ingest_cmd->add_flag("--pending", pending, "Ingest the crawler's pending links");

  std::string labels_path;
  auto* train_cmd = app.add_subcommand("train", "Train the concept classifier on stored documents");
  train_cmd->add_option("--labels", labels_path, "JSONL file of {doc, concept} labels")->required();

  auto* classify_cmd = app.add_subcommand("classify", "Re-attach concepts to every stored document");

  std::string user;
  std::string domain;
  std::string text;
  std::size_t k = 5;
  std::string strategy;
  auto* query_cmd = app.add_subcommand("query", "Run a personalized query");
  query_cmd->add_option("--user", user)->required();
  query_cmd->add_option("--domain", domain)->required();
  query_cmd->add_option("--text", text)->required();
  query_cmd->add_option("--k", k, "Number of results");
  query_cmd->add_option("--strategy", strategy, "Override the facet's strategy");

  std::string doc_id;
  int rating = 0;
  auto* feedback_cmd = app.add_subcommand("feedback", "Rate a document (0-5)");
  feedback_cmd->add_option("--user", user)->required();
  feedback_cmd->add_option("--doc", doc_id)->required();
  feedback_cmd->add_option("--rating", rating)->required();

  auto* suggest_cmd = app.add_subcommand("suggest", "Query suggestions for a user");
  suggest_cmd->add_option("--user", user)->required();
  suggest_cmd->add_option("--domain", domain)->required();
  suggest_cmd->add_option("--k", k);

  std::size_t cycles = 1;
  auto* reorganize_cmd = app.add_subcommand("reorganize", "Evaporate pheromone and migrate documents between tiers");
  reorganize_cmd->add_option("--cycles", cycles)->check(CLI::PositiveNumber);

  auto* stats_cmd = app.add_subcommand("stats", "Knowledge-base statistics");

  auto* doc_cmd = app.add_subcommand("doc", "Show a stored document with its storyboard");
  doc_cmd->add_option("--id", doc_id)->required();

  std::string country;
  std::string language;
  std::string device = "other";
  auto* user_cmd = app.add_subcommand("user", "Register a user");
  user_cmd->add_option("--id", user)->required();
  user_cmd->add_option("--country", country, "Two-letter country code");
  user_cmd->add_option("--language", language);
  user_cmd->add_option("--device", device)->check(CLI::IsMember({"desktop", "mobile", "tablet", "other"}));

  std::optional<std::string> host;
  std::optional<int> port;
  auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port);

  std::string spec_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic corpus");
  generate_cmd->add_option("--spec", spec_path, "Synthetic spec JSON");
  generate_cmd->add_option("--seed", seed);
  generate_cmd->add_option("--out", out_path, "Output directory")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "Run the simulated-user loop and emit metrics CSV");
  simulate_cmd->add_option("--spec", spec_path, "Synthetic spec JSON");
  simulate_cmd->add_option("--seed", seed);
  simulate_cmd->add_option("--out", out_path, "CSV output file (default stdout)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    EngineConfig config =
        load_config(config_path.empty() ? std::nullopt : std::optional<std::filesystem::path>(config_path));
    if (!state_dir.empty()) config.state_dir = state_dir;
    const std::filesystem::path dir = config.state_dir;

    auto load_spec = [&] {
      harness::SyntheticSpec spec;
      if (!spec_path.empty()) spec = read_json_file(spec_path).get<harness::SyntheticSpec>();
      if (seed) spec.seed = *seed;
      return spec;
    };

    if (generate_cmd->parsed()) {
      const auto files = harness::write_corpus(harness::generate_corpus(load_spec()), out_path);
      detail::print_json(out, json{{"descriptors", files.descriptors.size()},
                                   {"labels", files.labels.string()},
                                   {"ontology", files.ontology.string()},
                                   {"synonyms", files.synonyms.string()}});
      return 0;
    }
    if (simulate_cmd->parsed()) {
      const auto rounds = harness::simulate(load_spec(), config);
      const std::string csv = harness::metrics_csv(rounds);
      if (out_path.empty()) {
        out << csv;
      } else {
        write_text_file(out_path, csv);
        detail::print_json(out, json{{"rounds", rounds.size()},
                                     {"first_rounds_precision", harness::window_precision(rounds, 1, 5)},
                                     {"last_rounds_precision", harness::window_precision(rounds, rounds.size() - 4, rounds.size())}});
      }
      return 0;
    }

    Engine engine(config, fetch_http_or_file);
    engine.load(dir);

    if (crawl_cmd->parsed()) {
      json links = engine.crawl(seeds, depth, pattern);
      json result{{"links", links}};
      if (crawl_ingest) result["ingest"] = detail::ingest_report_json(engine.ingest_pending_links());
      engine.save(dir);
      detail::print_json(out, result);
    } else if (ingest_cmd->parsed()) {
      if (inputs.empty() && !pending) throw Error(Errc::InvalidArgument, "nothing to ingest: give files or --pending");
      IngestReport report = pending ? engine.ingest_pending_links() : IngestReport{};
      const IngestReport more = engine.ingest_files(detail::expand_inputs(inputs));
      report.stored.insert(report.stored.end(), more.stored.begin(), more.stored.end());
      report.failures.insert(report.failures.end(), more.failures.begin(), more.failures.end());
      engine.save(dir);
      detail::print_json(out, detail::ingest_report_json(report));
      if (!report.failures.empty()) {
        err << "error: " << report.failures.front().first << ": " << report.failures.front().second << '\n';
        return 1;
      }
    } else if (train_cmd->parsed()) {
      const auto examples = harness::labeled_examples(engine.kb(), harness::load_labels(labels_path));
      const TrainReport report = engine.train(examples);
      const IngestReport classified = engine.classify_stored();
      engine.save(dir);
      detail::print_json(out, json{{"concepts", report.concepts},
                                   {"training_accuracy", report.training_accuracy},
                                   {"classified", classified.stored.size()}});
    } else if (classify_cmd->parsed()) {
      if (!engine.model()) throw Error(Errc::ModelNotTrained, "no trained model in " + dir.string());
      const IngestReport classified = engine.classify_stored();
      engine.save(dir);
      detail::print_json(out, json{{"classified", classified.stored.size()}});
    } else if (query_cmd->parsed()) {
      const QueryResult result =
          engine.query(RawQuery{user, domain, text, k}, strategy.empty() ? std::nullopt : std::optional(strategy));
      engine.save(dir);
      detail::print_json(out, serialize_query_result(result));
    } else if (feedback_cmd->parsed()) {
      const double tau = engine.feedback(user, doc_id, rating);
      engine.save(dir);
      detail::print_json(out, json{{"tau", tau}});
    } else if (suggest_cmd->parsed()) {
      json list = json::array();
      for (const auto& s : engine.suggest(user, domain, k)) list.push_back(s);
      detail::print_json(out, list);
    } else if (reorganize_cmd->parsed()) {
      json moved = json::array();
      for (std::size_t i = 0; i < cycles; ++i) {
        for (const auto& m : engine.reorganize()) moved.push_back(m);
      }
      engine.save(dir);
      detail::print_json(out, json{{"migrations", moved}, {"stats", engine.stats()}});
    } else if (stats_cmd->parsed()) {
      detail::print_json(out, engine.stats());
    } else if (doc_cmd->parsed()) {
      auto doc = engine.document(doc_id);
      if (!doc) throw Error(Errc::UnknownDocument, "unknown document " + doc_id);
      detail::print_json(out, document_view(*doc, config.storyboard_size));
    } else if (user_cmd->parsed()) {
      engine.register_user(user, country, language, json(device).get<Device>());
      engine.save(dir);
      detail::print_json(out, engine.people().profile(user));
    } else if (serve_cmd->parsed()) {
      Service service(engine, dir);
      const std::string h = host.value_or(config.host);
      const int p = port.value_or(config.port);
      const bool ok = serve(service, h, p, config.cors_origin, [&](httplib::Server&) {
        err << "listening on http://" << h << ':' << p << '\n';
        err.flush();
      });
      if (!ok) throw Error(Errc::IoFailure, "could not bind " + h + ":" + std::to_string(p));
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.code_name() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace vidagents
