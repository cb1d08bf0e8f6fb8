#pragma once

// Classifier agent core: one-vs-rest linear SVMs over textual (TF-IDF) and
// visual (mean keyframe histogram) features, trained by hinge-loss
// stochastic subgradient descent with step size 1/(lambda*t).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vidagents/error.hpp"
#include "vidagents/ingestion.hpp"
#include "vidagents/io.hpp"
#include "vidagents/ontology.hpp"

namespace vidagents {

inline constexpr double kDefaultAttachThreshold = 0.6;

struct TrainingHyper {
  double lambda = 1e-4;
  std::size_t epochs = 10;
  std::uint64_t seed = 42;
  bool operator==(const TrainingHyper&) const = default;
};

struct LabeledExample {
  MetadataRecord record;
  std::string concept_id;
};

using TermIndex = std::map<std::string, std::size_t>;

struct ClassifierModel {
  TermIndex vocab;
  std::vector<double> idf;
  std::size_t visual_dim = kDefaultHistogramBins;
  std::vector<std::string> concepts;
  std::vector<std::vector<double>> weights;
  std::vector<double> bias;
  TrainingHyper hyper;

  std::size_t dimension() const noexcept { return vocab.size() + visual_dim; }
  bool operator==(const ClassifierModel&) const = default;
};

/// Smoothed inverse document frequency.
inline double smoothed_idf(std::size_t doc_count, std::size_t doc_freq) {
  return std::log((static_cast<double>(doc_count) + 1.0) / (static_cast<double>(doc_freq) + 1.0)) + 1.0;
}

/// Vocabulary in lexicographic order with per-term idf.
inline std::pair<TermIndex, std::vector<double>> build_vocabulary(std::span<const MetadataRecord> records) {
  std::map<std::string, std::size_t> doc_freq;
  for (const auto& r : records) {
    for (const auto& [term, count] : r.text_terms) {
      if (count > 0) ++doc_freq[term];
    }
  }
  TermIndex vocab;
  std::vector<double> idf;
  idf.reserve(doc_freq.size());
  for (const auto& [term, df] : doc_freq) {
    vocab.emplace(term, vocab.size());
    idf.push_back(smoothed_idf(records.size(), df));
  }
  return {std::move(vocab), std::move(idf)};
}

/// Mean of the keyframe histograms, padded or truncated to `dims`.
inline std::vector<double> mean_keyframe_histogram(const MetadataRecord& record, std::size_t dims) {
  std::vector<double> mean(dims, 0.0);
  if (record.shots.empty()) return mean;
  for (const auto& s : record.shots) {
    for (std::size_t i = 0; i < dims && i < s.keyframe_hist.size(); ++i) mean[i] += s.keyframe_hist[i];
  }
  const double n = static_cast<double>(record.shots.size());
  for (double& v : mean) v /= n;
  return mean;
}

/// [ L2-normalized TF-IDF over in-vocabulary terms | mean keyframe histogram ]
inline std::vector<double> build_features(const MetadataRecord& record, const TermIndex& vocab,
                                          std::span<const double> idf,
                                          std::size_t visual_dim = kDefaultHistogramBins) {
  if (vocab.empty()) throw Error(Errc::InvalidArgument, "feature vocabulary must be non-empty");
  std::vector<double> features(vocab.size() + visual_dim, 0.0);
  double norm2 = 0.0;
  for (const auto& [term, count] : record.text_terms) {
    auto it = vocab.find(term);
    if (it == vocab.end()) continue;
    const double v = static_cast<double>(count) * idf[it->second];
    features[it->second] = v;
    norm2 += v * v;
  }
  if (norm2 > 0.0) {
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t i = 0; i < vocab.size(); ++i) features[i] *= inv;
  }
  const auto visual = mean_keyframe_histogram(record, visual_dim);
  std::copy(visual.begin(), visual.end(), features.begin() + static_cast<std::ptrdiff_t>(vocab.size()));
  return features;
}

inline std::vector<double> build_features(const MetadataRecord& record, const ClassifierModel& model) {
  return build_features(record, model.vocab, model.idf, model.visual_dim);
}

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Fisher-Yates with raw engine output, so the permutation depends only on the
// (standardised) mt19937_64 sequence.
inline void seeded_shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

inline std::size_t histogram_dims(std::span<const LabeledExample> examples) {
  for (const auto& ex : examples) {
    for (const auto& s : ex.record.shots) {
      if (!s.keyframe_hist.empty()) return s.keyframe_hist.size();
    }
  }
  return kDefaultHistogramBins;
}

}  // namespace detail

inline ClassifierModel train(std::span<const LabeledExample> examples, const ConceptLexicon& lexicon,
                             const TrainingHyper& hyper = {}) {
  if (examples.empty()) throw Error(Errc::EmptyTrainingSet, "no training examples");
  if (!(hyper.lambda > 0.0) || hyper.epochs == 0) {
    throw Error(Errc::InvalidArgument, "lambda must be positive and epochs non-zero");
  }
  std::set<std::string> labels;
  for (const auto& ex : examples) {
    if (!lexicon.contains(ex.concept_id)) throw Error(Errc::UnknownConcept, "unknown concept " + ex.concept_id);
    labels.insert(ex.concept_id);
  }
  if (labels.size() < 2) throw Error(Errc::InsufficientClasses, "need at least two distinct concepts");

  ClassifierModel model;
  model.hyper = hyper;
  model.visual_dim = detail::histogram_dims(examples);
  model.concepts.assign(labels.begin(), labels.end());
  {
    std::vector<MetadataRecord> records;
    records.reserve(examples.size());
    for (const auto& ex : examples) records.push_back(ex.record);
    auto [vocab, idf] = build_vocabulary(records);
    if (vocab.empty()) {
      // Text-free corpus: keep one inert slot so the vocabulary is never empty.
      vocab.emplace("", 0);
      idf.push_back(0.0);
    }
    model.vocab = std::move(vocab);
    model.idf = std::move(idf);
  }

  std::vector<std::vector<double>> xs;
  xs.reserve(examples.size());
  for (const auto& ex : examples) xs.push_back(build_features(ex.record, model));

  const std::size_t dim = model.dimension();
  const std::size_t classes = model.concepts.size();
  model.weights.assign(classes, std::vector<double>(dim, 0.0));
  model.bias.assign(classes, 0.0);

  std::vector<std::size_t> label_index(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    label_index[i] = static_cast<std::size_t>(
        std::lower_bound(model.concepts.begin(), model.concepts.end(), examples[i].concept_id) -
        model.concepts.begin());
  }

  std::mt19937_64 rng(hyper.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const double radius = 1.0 / std::sqrt(hyper.lambda);
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    detail::seeded_shuffle(order, rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (hyper.lambda * static_cast<double>(t));
      const double shrink = 1.0 - eta * hyper.lambda;
      const auto& x = xs[i];
      for (std::size_t c = 0; c < classes; ++c) {
        auto& w = model.weights[c];
        double& b = model.bias[c];
        const double y = label_index[i] == c ? 1.0 : -1.0;
        const double margin = y * (detail::dot(w, x) + b);
        for (double& wk : w) wk *= shrink;
        b *= shrink;
        if (margin < 1.0) {
          for (std::size_t k = 0; k < dim; ++k) w[k] += eta * y * x[k];
          b += eta * y;
        }
        // Project onto the ball of radius 1/sqrt(lambda).
        const double norm = std::sqrt(detail::dot(w, w) + b * b);
        if (norm > radius) {
          const double s = radius / norm;
          for (double& wk : w) wk *= s;
          b *= s;
        }
      }
    }
  }
  return model;
}

/// Logistic squash of a raw margin, kept strictly inside (0, 1).
inline double squash(double margin) {
  const double p = 1.0 / (1.0 + std::exp(-margin));
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

inline std::vector<double> margins(const ClassifierModel& model, std::span<const double> features) {
  std::vector<double> out(model.concepts.size());
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = detail::dot(model.weights[c], features) + model.bias[c];
  return out;
}

/// Every concept with its confidence, descending; ties by concept id.
inline std::vector<ConceptScore> classify_features(const ClassifierModel& model, std::span<const double> features) {
  if (model.concepts.empty()) throw Error(Errc::ModelNotTrained, "classifier has no concepts");
  const auto raw = margins(model, features);
  std::vector<ConceptScore> scores;
  scores.reserve(raw.size());
  for (std::size_t c = 0; c < raw.size(); ++c) scores.push_back({model.concepts[c], squash(raw[c])});
  std::sort(scores.begin(), scores.end(), [](const ConceptScore& a, const ConceptScore& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.concept_id < b.concept_id;
  });
  return scores;
}

inline std::vector<ConceptScore> classify(const ClassifierModel& model, const MetadataRecord& record) {
  if (model.concepts.empty()) throw Error(Errc::ModelNotTrained, "classifier has no concepts");
  return classify_features(model, build_features(record, model));
}

/// Fraction of examples whose top-ranked concept is the true label.
inline double evaluate(const ClassifierModel& model, std::span<const LabeledExample> examples) {
  if (examples.empty()) throw Error(Errc::EmptyEvaluationSet, "no evaluation examples");
  std::size_t hits = 0;
  for (const auto& ex : examples) {
    if (classify(model, ex.record).front().concept_id == ex.concept_id) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

/// Concepts at or above `threshold`, each followed by its is-a ancestors
/// (which inherit the highest confidence of their descendants).
inline std::vector<ConceptScore> select_concepts(std::span<const ConceptScore> ranked, double threshold,
                                                 const ConceptLexicon& lexicon) {
  std::map<std::string, double> chosen;
  for (const auto& s : ranked) {
    if (s.confidence < threshold) continue;
    auto bump = [&](const std::string& id) {
      auto [it, inserted] = chosen.emplace(id, s.confidence);
      if (!inserted) it->second = std::max(it->second, s.confidence);
    };
    bump(s.concept_id);
    if (lexicon.contains(s.concept_id)) {
      for (const auto& ancestor : lexicon.ancestors(s.concept_id)) bump(ancestor);
    }
  }
  std::vector<ConceptScore> out;
  for (const auto& [id, conf] : chosen) out.push_back({id, conf});
  std::sort(out.begin(), out.end(), [](const ConceptScore& a, const ConceptScore& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.concept_id < b.concept_id;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

inline void to_json(json& j, const ClassifierModel& m) {
  std::vector<std::string> terms(m.vocab.size());
  for (const auto& [term, idx] : m.vocab) terms[idx] = term;
  j = json{{"vocab", terms},
           {"idf", m.idf},
           {"visual_dim", m.visual_dim},
           {"concepts", m.concepts},
           {"weights", m.weights},
           {"biases", m.bias},
           {"hyper", {{"lambda", m.hyper.lambda}, {"epochs", m.hyper.epochs}, {"seed", m.hyper.seed}}}};
}

inline void from_json(const json& j, ClassifierModel& m) {
  const auto terms = j.at("vocab").get<std::vector<std::string>>();
  m.vocab.clear();
  for (std::size_t i = 0; i < terms.size(); ++i) m.vocab.emplace(terms[i], i);
  j.at("idf").get_to(m.idf);
  j.at("visual_dim").get_to(m.visual_dim);
  j.at("concepts").get_to(m.concepts);
  j.at("weights").get_to(m.weights);
  j.at("biases").get_to(m.bias);
  const auto& h = j.at("hyper");
  h.at("lambda").get_to(m.hyper.lambda);
  h.at("epochs").get_to(m.hyper.epochs);
  h.at("seed").get_to(m.hyper.seed);
}

inline void validate_model(const ClassifierModel& m) {
  const bool ok = m.vocab.size() == m.idf.size() && m.weights.size() == m.concepts.size() &&
                  m.bias.size() == m.concepts.size() &&
                  std::all_of(m.weights.begin(), m.weights.end(),
                              [&](const auto& w) { return w.size() == m.dimension(); });
  if (!ok) throw Error(Errc::CorruptStore, "classifier model dimensions are inconsistent");
}

inline void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  write_json_file(path, json(model));
}

inline ClassifierModel load_model(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  ClassifierModel model;
  try {
    doc.get_to(model);
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptStore, path.string() + ": " + e.what());
  }
  validate_model(model);
  return model;
}

}  // namespace vidagents
