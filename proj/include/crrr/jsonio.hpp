#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

// JSON artifacts keep their keys in insertion order and carry a format
// version, so reruns diff cleanly and downstream readers can detect layout
// changes.

namespace crrr {

using ordered_json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

inline void write_json_file(const std::filesystem::path& path, const ordered_json& doc) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("json: cannot open for writing: " + path.string());
  os << doc.dump(2) << '\n';
  os.flush();
  if (!os) throw std::runtime_error("json: write failed: " + path.string());
}

inline ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("json: cannot open: " + path.string());
  return ordered_json::parse(is);
}

}  // namespace crrr
