#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "vidagents/ingestion.hpp"

namespace testing_support {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("vidagents-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> one_hot(std::size_t dims, std::size_t at, double mass = 1.0) {
  std::vector<double> h(dims, 0.0);
  h[at] = mass;
  return h;
}

inline std::vector<double> uniform(std::size_t dims) { return std::vector<double>(dims, 1.0 / static_cast<double>(dims)); }

/// Metadata record with the given terms and concepts and one shot.
inline vidagents::MetadataRecord record(const std::string& id, std::map<std::string, int> terms = {},
                                        std::vector<vidagents::ConceptScore> concepts = {}) {
  vidagents::MetadataRecord r;
  r.doc_id = id;
  r.uri = id + ".json";
  r.title = id;
  r.text_terms = std::move(terms);
  r.concepts = std::move(concepts);
  r.shots.push_back({{0, 0, 0}, uniform(8)});
  return r;
}

}  // namespace testing_support
