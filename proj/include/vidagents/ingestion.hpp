#pragma once

// Crawler and extractor: link discovery over local/HTTP pages, shot
// segmentation by histogram discontinuity, keyframe selection, text-term
// extraction and storyboard summarization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vidagents/error.hpp"
#include "vidagents/io.hpp"
#include "vidagents/text.hpp"

namespace vidagents {

inline constexpr std::size_t kDefaultHistogramBins = 48;
inline constexpr double kDefaultShotThreshold = 0.4;
inline constexpr double kHistogramSumTolerance = 1e-9;

struct FrameFeature {
  double t = 0.0;
  std::vector<double> hist;
  bool operator==(const FrameFeature&) const = default;
};

struct TranscriptSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  std::string text;
  bool operator==(const TranscriptSegment&) const = default;
};

/// Stand-in for a raw video: precomputed per-frame histograms plus text.
struct VideoDescriptor {
  std::string id;
  std::string uri;
  std::string title;
  double duration_s = 0.0;
  std::vector<FrameFeature> frames;
  std::vector<TranscriptSegment> transcript;
  std::vector<std::string> captions;
  std::vector<std::string> tags;
  std::map<std::string, std::string> meta;
  bool operator==(const VideoDescriptor&) const = default;
};

/// Inclusive frame range with its representative frame.
struct Shot {
  std::size_t start_idx = 0;
  std::size_t end_idx = 0;
  std::size_t keyframe_idx = 0;
  bool operator==(const Shot&) const = default;
};

struct ShotRecord {
  Shot shot;
  std::vector<double> keyframe_hist;
  bool operator==(const ShotRecord&) const = default;
};

struct MediaInfo {
  double duration_s = 0.0;
  std::string format;
  bool operator==(const MediaInfo&) const = default;
};

struct ConceptScore {
  std::string concept_id;
  double confidence = 0.0;
  bool operator==(const ConceptScore&) const = default;
};

/// MPEG-7-inspired description of one video.
struct MetadataRecord {
  std::string doc_id;
  std::string uri;
  std::string title;
  MediaInfo media;
  std::vector<ShotRecord> shots;
  std::map<std::string, int> text_terms;
  std::map<std::string, std::string> meta;
  std::vector<ConceptScore> concepts;

  std::optional<double> concept_confidence(std::string_view id) const {
    for (const auto& c : concepts) {
      if (c.concept_id == id) return c.confidence;
    }
    return std::nullopt;
  }

  bool operator==(const MetadataRecord&) const = default;
};

struct StoryboardFrame {
  std::size_t shot = 0;
  std::size_t frame = 0;
  std::vector<double> hist;
  bool operator==(const StoryboardFrame&) const = default;
};

struct Storyboard {
  std::string doc_id;
  std::vector<StoryboardFrame> keyframes;
  bool operator==(const Storyboard&) const = default;
};

enum class LinkStatus { Pending, Extracted, Failed };

NLOHMANN_JSON_SERIALIZE_ENUM(LinkStatus, {{LinkStatus::Pending, "pending"},
                                          {LinkStatus::Extracted, "extracted"},
                                          {LinkStatus::Failed, "failed"}})

struct LinkRecord {
  std::string uri;
  std::uint64_t discovered_at = 0;
  LinkStatus status = LinkStatus::Pending;
  bool operator==(const LinkRecord&) const = default;
};

// ---------------------------------------------------------------------------
// JSON encodings

inline void to_json(json& j, const FrameFeature& f) { j = json{{"t", f.t}, {"hist", f.hist}}; }
inline void from_json(const json& j, FrameFeature& f) {
  j.at("t").get_to(f.t);
  j.at("hist").get_to(f.hist);
}

inline void to_json(json& j, const TranscriptSegment& s) {
  j = json{{"t0", s.t0}, {"t1", s.t1}, {"text", s.text}};
}
inline void from_json(const json& j, TranscriptSegment& s) {
  j.at("t0").get_to(s.t0);
  j.at("t1").get_to(s.t1);
  j.at("text").get_to(s.text);
}

inline void to_json(json& j, const VideoDescriptor& d) {
  j = json{{"id", d.id},         {"uri", d.uri},
           {"title", d.title},   {"duration_s", d.duration_s},
           {"frames", d.frames}, {"transcript", d.transcript},
           {"captions", d.captions}, {"tags", d.tags},
           {"meta", d.meta}};
}

inline void from_json(const json& j, VideoDescriptor& d) {
  j.at("id").get_to(d.id);
  d.uri = j.value("uri", std::string{});
  d.title = j.value("title", std::string{});
  j.at("duration_s").get_to(d.duration_s);
  j.at("frames").get_to(d.frames);
  d.transcript = j.value("transcript", std::vector<TranscriptSegment>{});
  d.captions = j.value("captions", std::vector<std::string>{});
  d.tags = j.value("tags", std::vector<std::string>{});
  d.meta.clear();
  if (auto it = j.find("meta"); it != j.end() && it->is_object()) {
    for (const auto& [key, value] : it->items()) {
      d.meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
    }
  }
}

inline void to_json(json& j, const Shot& s) {
  j = json{{"start_idx", s.start_idx}, {"end_idx", s.end_idx}, {"keyframe_idx", s.keyframe_idx}};
}
inline void from_json(const json& j, Shot& s) {
  j.at("start_idx").get_to(s.start_idx);
  j.at("end_idx").get_to(s.end_idx);
  j.at("keyframe_idx").get_to(s.keyframe_idx);
}

inline void to_json(json& j, const ShotRecord& s) {
  j = s.shot;
  j["keyframe_hist"] = s.keyframe_hist;
}
inline void from_json(const json& j, ShotRecord& s) {
  j.get_to(s.shot);
  j.at("keyframe_hist").get_to(s.keyframe_hist);
}

inline void to_json(json& j, const ConceptScore& c) {
  j = json{{"id", c.concept_id}, {"confidence", c.confidence}};
}
inline void from_json(const json& j, ConceptScore& c) {
  j.at("id").get_to(c.concept_id);
  j.at("confidence").get_to(c.confidence);
}

inline void to_json(json& j, const MetadataRecord& r) {
  j = json{{"doc_id", r.doc_id},
           {"uri", r.uri},
           {"title", r.title},
           {"media_info", {{"duration_s", r.media.duration_s}, {"format", r.media.format}}},
           {"shots", r.shots},
           {"text_terms", r.text_terms},
           {"meta", r.meta},
           {"concepts", r.concepts}};
}
inline void from_json(const json& j, MetadataRecord& r) {
  j.at("doc_id").get_to(r.doc_id);
  r.uri = j.value("uri", std::string{});
  j.at("title").get_to(r.title);
  const auto& media = j.at("media_info");
  media.at("duration_s").get_to(r.media.duration_s);
  media.at("format").get_to(r.media.format);
  j.at("shots").get_to(r.shots);
  j.at("text_terms").get_to(r.text_terms);
  j.at("meta").get_to(r.meta);
  j.at("concepts").get_to(r.concepts);
}

inline void to_json(json& j, const StoryboardFrame& f) {
  j = json{{"shot", f.shot}, {"frame", f.frame}, {"hist", f.hist}};
}
inline void from_json(const json& j, StoryboardFrame& f) {
  j.at("shot").get_to(f.shot);
  j.at("frame").get_to(f.frame);
  j.at("hist").get_to(f.hist);
}

inline void to_json(json& j, const Storyboard& s) {
  j = json{{"doc_id", s.doc_id}, {"keyframes", s.keyframes}};
}

inline void to_json(json& j, const LinkRecord& l) {
  j = json{{"uri", l.uri}, {"discovered_at", l.discovered_at}, {"status", l.status}};
}
inline void from_json(const json& j, LinkRecord& l) {
  j.at("uri").get_to(l.uri);
  j.at("discovered_at").get_to(l.discovered_at);
  j.at("status").get_to(l.status);
}

// ---------------------------------------------------------------------------
// Descriptors

inline void validate_descriptor(const VideoDescriptor& d) {
  auto fail = [&](const std::string& why) {
    throw Error(Errc::InvalidDescriptor, "descriptor '" + d.id + "': " + why);
  };
  if (d.id.empty()) fail("empty id");
  const std::size_t dims = d.frames.empty() ? 0 : d.frames.front().hist.size();
  for (std::size_t i = 0; i < d.frames.size(); ++i) {
    const auto& frame = d.frames[i];
    if (!std::isfinite(frame.t)) fail("non-finite frame time");
    if (i > 0 && frame.t < d.frames[i - 1].t) fail("frames not ordered by time at index " + std::to_string(i));
    if (frame.hist.empty() || frame.hist.size() != dims) fail("histogram dimension mismatch at frame " + std::to_string(i));
    double sum = 0.0;
    for (double v : frame.hist) {
      if (!(v >= 0.0) || !std::isfinite(v)) fail("negative histogram entry at frame " + std::to_string(i));
      sum += v;
    }
    if (std::abs(sum - 1.0) > kHistogramSumTolerance) {
      fail("histogram at frame " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
  if (!d.frames.empty() && d.duration_s < d.frames.back().t) fail("duration shorter than last frame time");
}

inline VideoDescriptor parse_descriptor(const json& doc) {
  VideoDescriptor d;
  try {
    doc.get_to(d);
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidDescriptor, std::string("malformed descriptor: ") + e.what());
  }
  validate_descriptor(d);
  return d;
}

inline VideoDescriptor load_descriptor(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidDescriptor, path.string() + ": " + e.what());
  }
  VideoDescriptor d = parse_descriptor(doc);
  if (d.uri.empty()) d.uri = path.string();
  return d;
}

// ---------------------------------------------------------------------------
// Shot segmentation and summarization

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::max(a.size(), b.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = i < a.size() ? a[i] : 0.0;
    const double y = i < b.size() ? b[i] : 0.0;
    total += std::abs(x - y);
  }
  return total;
}

/// A boundary is placed before frame i whenever L1(hist[i-1], hist[i]) > theta.
inline std::vector<Shot> detect_shots(std::span<const FrameFeature> frames,
                                      double theta = kDefaultShotThreshold) {
  if (frames.empty()) throw Error(Errc::EmptyFrames, "cannot segment an empty frame sequence");
  if (!(theta > 0.0 && theta <= 2.0)) {
    throw Error(Errc::InvalidArgument, "shot threshold must lie in (0, 2]");
  }
  std::vector<Shot> shots;
  std::size_t start = 0;
  auto close = [&](std::size_t end) { shots.push_back(Shot{start, end, (start + end) / 2}); };
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (l1_distance(frames[i - 1].hist, frames[i].hist) > theta) {
      close(i - 1);
      start = i;
    }
  }
  close(frames.size() - 1);
  return shots;
}

inline MetadataRecord extract(const VideoDescriptor& descriptor,
                              double theta = kDefaultShotThreshold) {
  validate_descriptor(descriptor);
  MetadataRecord record;
  record.doc_id = descriptor.id;
  record.uri = descriptor.uri;
  record.title = descriptor.title;
  record.media.duration_s = descriptor.duration_s;
  if (auto it = descriptor.meta.find("format"); it != descriptor.meta.end()) record.media.format = it->second;
  record.meta = descriptor.meta;

  if (!descriptor.frames.empty()) {
    for (const Shot& shot : detect_shots(descriptor.frames, theta)) {
      record.shots.push_back(ShotRecord{shot, descriptor.frames[shot.keyframe_idx].hist});
    }
  }

  add_terms(record.text_terms, descriptor.title);
  for (const auto& seg : descriptor.transcript) add_terms(record.text_terms, seg.text);
  for (const auto& caption : descriptor.captions) add_terms(record.text_terms, caption);
  for (const auto& tag : descriptor.tags) add_terms(record.text_terms, tag);
  return record;
}

/// Keyframes in order of appearance; at most n, uniformly subsampled.
inline Storyboard summarize(const MetadataRecord& record, std::size_t n) {
  if (n < 1) throw Error(Errc::InvalidArgument, "storyboard size must be at least 1");
  Storyboard board{record.doc_id, {}};
  const std::size_t k = record.shots.size();
  auto take = [&](std::size_t shot_index) {
    const auto& s = record.shots[shot_index];
    board.keyframes.push_back(StoryboardFrame{shot_index, s.shot.keyframe_idx, s.keyframe_hist});
  };
  if (k == 0) return board;
  if (n >= k) {
    for (std::size_t i = 0; i < k; ++i) take(i);
  } else if (n == 1) {
    take(0);
  } else {
    for (std::size_t i = 0; i < n; ++i) take(i * (k - 1) / (n - 1));
  }
  return board;
}

// ---------------------------------------------------------------------------
// Crawling

/// Returns page content, or nullopt when the page cannot be fetched.
using PageFetcher = std::function<std::optional<std::string>(const std::string& uri)>;

inline bool is_remote_uri(std::string_view uri) {
  return uri.starts_with("http://") || uri.starts_with("https://");
}

inline std::optional<std::string> fetch_local_file(const std::string& uri) {
  std::string path = uri;
  if (path.starts_with("file://")) path = path.substr(7);
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return std::nullopt;
  try {
    return read_text_file(path);
  } catch (const Error&) {
    return std::nullopt;
  }
}

namespace detail {

inline std::string strip_fragment(std::string uri) {
  if (auto pos = uri.find('#'); pos != std::string::npos) uri.erase(pos);
  return uri;
}

inline std::string normalize_remote_path(const std::string& uri) {
  const auto scheme_end = uri.find("://");
  const auto path_start = uri.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return uri + "/";
  std::string query;
  std::string path = uri.substr(path_start);
  if (auto q = path.find('?'); q != std::string::npos) {
    query = path.substr(q);
    path.erase(q);
  }
  std::vector<std::string> parts;
  std::size_t start = 1;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string::npos) end = path.size();
    std::string part = path.substr(start, end - start);
    if (part == "..") {
      if (!parts.empty()) parts.pop_back();
    } else if (part != "." && !(part.empty() && end != path.size())) {
      parts.push_back(part);
    }
    start = end + 1;
  }
  std::string out = uri.substr(0, path_start);
  for (const auto& p : parts) out += "/" + p;
  if (parts.empty()) out += "/";
  return out + query;
}

}  // namespace detail

/// Canonical form of `href` as seen from the page at `base` (empty base means
/// the current working directory).
inline std::string canonical_uri(const std::string& href, const std::string& base = {}) {
  std::string target = detail::strip_fragment(href);
  if (is_remote_uri(target)) return detail::normalize_remote_path(target);
  if (target.starts_with("file://")) target = target.substr(7);
  if (is_remote_uri(base)) {
    const auto scheme_end = base.find("://");
    const auto path_start = base.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? base : base.substr(0, path_start);
    if (target.starts_with("/")) return detail::normalize_remote_path(origin + target);
    const std::string dir = path_start == std::string::npos ? origin + "/" : base.substr(0, base.rfind('/') + 1);
    return detail::normalize_remote_path(dir + target);
  }
  std::filesystem::path p(target);
  if (p.is_relative()) {
    std::string local_base = base.starts_with("file://") ? base.substr(7) : base;
    p = local_base.empty() ? std::filesystem::current_path() / p
                           : std::filesystem::path(local_base).parent_path() / p;
  }
  return std::filesystem::absolute(p).lexically_normal().string();
}

inline std::vector<std::string> extract_hrefs(std::string_view html) {
  static const std::regex href_re(R"(href\s*=\s*["']([^"']+)["'])", std::regex::icase);
  std::vector<std::string> hrefs;
  const std::string text(html);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), href_re); it != std::sregex_iterator(); ++it) {
    std::string href = (*it)[1].str();
    if (href.starts_with("#") || href.starts_with("mailto:") || href.starts_with("javascript:")) continue;
    hrefs.push_back(std::move(href));
  }
  return hrefs;
}

/// Matcher for descriptor links. "re:<expr>" is a regular expression over the
/// full uri; anything else is a glob (* and ?) matched against the file name,
/// or against the full uri when the pattern contains '/'.
class LinkPattern {
 public:
  explicit LinkPattern(std::string_view pattern) {
    if (pattern.starts_with("re:")) {
      full_uri_ = true;
      re_ = std::regex(std::string(pattern.substr(3)));
      return;
    }
    full_uri_ = pattern.find('/') != std::string_view::npos;
    std::string expr;
    for (char c : pattern) {
      switch (c) {
        case '*': expr += full_uri_ ? ".*" : "[^/]*"; break;
        case '?': expr += "[^/]"; break;
        case '.': case '+': case '(': case ')': case '[': case ']': case '{': case '}':
        case '^': case '$': case '|': case '\\':
          expr += '\\';
          expr += c;
          break;
        default: expr += c;
      }
    }
    re_ = std::regex(expr);
  }

  bool matches(const std::string& uri) const {
    std::string subject = uri;
    if (auto q = subject.find('?'); q != std::string::npos) subject.erase(q);
    if (!full_uri_) {
      if (auto slash = subject.rfind('/'); slash != std::string::npos) subject = subject.substr(slash + 1);
    }
    return std::regex_match(subject, re_);
  }

 private:
  std::regex re_;
  bool full_uri_ = false;
};

/// Breadth-first link discovery. Pages up to `depth_limit` hops from a seed
/// are fetched at most once each; links matching `link_pattern` are returned
/// as pending records in discovery order. Pages that cannot be fetched are
/// reported with status failed.
inline std::vector<LinkRecord> crawl(const std::vector<std::string>& seeds, int depth_limit,
                                     std::string_view link_pattern,
                                     const PageFetcher& fetch = fetch_local_file) {
  if (depth_limit < 0) throw Error(Errc::InvalidArgument, "depth_limit must be >= 0");
  const LinkPattern pattern(link_pattern);
  std::vector<LinkRecord> records;
  std::set<std::string> recorded;
  std::set<std::string> visited;
  std::deque<std::pair<std::string, int>> frontier;
  std::uint64_t clock = 0;

  auto emit = [&](const std::string& uri, LinkStatus status) {
    if (recorded.insert(uri).second) records.push_back(LinkRecord{uri, clock++, status});
  };

  for (const auto& seed : seeds) {
    const std::string uri = canonical_uri(seed);
    if (pattern.matches(uri)) {
      emit(uri, LinkStatus::Pending);
    } else if (visited.insert(uri).second) {
      frontier.emplace_back(uri, 0);
    }
  }

  while (!frontier.empty()) {
    auto [page, depth] = frontier.front();
    frontier.pop_front();
    const auto content = fetch(page);
    if (!content) {
      emit(page, LinkStatus::Failed);
      continue;
    }
    for (const auto& href : extract_hrefs(*content)) {
      const std::string uri = canonical_uri(href, page);
      if (pattern.matches(uri)) {
        emit(uri, LinkStatus::Pending);
      } else if (depth + 1 <= depth_limit && visited.insert(uri).second) {
        frontier.emplace_back(uri, depth + 1);
      }
    }
  }
  return records;
}

/// Links DB owned by the crawler agent: unique uris, append-only order.
class LinkStore {
 public:
  /// Returns false when the uri is already known.
  bool add(LinkRecord record) {
    if (index_.contains(record.uri)) return false;
    index_.emplace(record.uri, links_.size());
    links_.push_back(std::move(record));
    return true;
  }

  void set_status(const std::string& uri, LinkStatus status) {
    auto it = index_.find(uri);
    if (it == index_.end()) {
      add(LinkRecord{uri, links_.size(), status});
      return;
    }
    links_[it->second].status = status;
  }

  std::optional<LinkRecord> find(const std::string& uri) const {
    auto it = index_.find(uri);
    if (it == index_.end()) return std::nullopt;
    return links_[it->second];
  }

  std::vector<LinkRecord> with_status(LinkStatus status) const {
    std::vector<LinkRecord> out;
    for (const auto& l : links_) {
      if (l.status == status) out.push_back(l);
    }
    return out;
  }

  const std::vector<LinkRecord>& all() const noexcept { return links_; }
  std::size_t size() const noexcept { return links_.size(); }

  void save(const std::filesystem::path& path) const {
    std::vector<json> rows(links_.begin(), links_.end());
    write_json_lines(path, rows);
  }

  static LinkStore load(const std::filesystem::path& path) {
    LinkStore store;
    for (const auto& row : read_json_lines(path)) {
      try {
        store.add(row.get<LinkRecord>());
      } catch (const json::exception& e) {
        throw Error(Errc::CorruptStore, path.string() + ": " + e.what());
      }
    }
    return store;
  }

  bool operator==(const LinkStore& other) const { return links_ == other.links_; }

 private:
  std::vector<LinkRecord> links_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace vidagents
