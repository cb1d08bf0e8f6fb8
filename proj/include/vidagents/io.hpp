#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vidagents/error.hpp"

namespace vidagents {

using json = nlohmann::json;

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(Errc::IoFailure, "read failed: " + path.string());
  return buffer.str();
}

inline void write_text_file(const std::filesystem::path& path,
                            std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed: " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptStore, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

/// Parses a JSON-lines document; blank lines are skipped.
inline std::vector<json> parse_json_lines(std::string_view text,
                                          const std::string& origin) {
  std::vector<json> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptStore, origin + ":" + std::to_string(line_no) +
                                          ": " + e.what());
    }
  }
  return rows;
}

inline std::vector<json> read_json_lines(const std::filesystem::path& path) {
  return parse_json_lines(read_text_file(path), path.string());
}

inline void write_json_lines(const std::filesystem::path& path,
                             const std::vector<json>& rows) {
  std::string text;
  for (const auto& row : rows) {
    text += row.dump();
    text += '\n';
  }
  write_text_file(path, text);
}

}  // namespace vidagents
