#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "vlt/vlt.hpp"

namespace support {

inline std::filesystem::path source_path(const std::string& rel) { return std::filesystem::path(VLT_SOURCE_DIR) / rel; }

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline vlt::json read_json(const std::filesystem::path& p) { return vlt::json::parse(read_file(p)); }

struct SamplePair {
  std::string name, a, b;
  vlt::json script, goal;
};

inline SamplePair load_pair(const std::string& name) {
  const auto dir = source_path("samples") / name;
  return {name, read_file(dir / "a.svg"), read_file(dir / "b.svg"), read_json(dir / "script.json"),
          read_json(dir / "goal.json")};
}

/// Empty when `d` matches the goal exactly, otherwise the first difference.
inline std::string goal_mismatch(const vlt::Design& d, const vlt::json& goal) {
  if (d.canvas_width != goal.at("width").get<double>() || d.canvas_height != goal.at("height").get<double>())
    return "canvas";
  const auto& want = goal.at("elements");
  if (want.size() != d.elements.size()) return "element count";
  for (const auto& g : want) {
    const auto id = g.at("id").get<std::string>();
    const vlt::Element* e = d.find(id);
    if (e == nullptr) return "missing " + id;
    const vlt::ElementGeometry expect{g.at("x").get<double>(), g.at("y").get<double>(), g.at("z").get<int>(),
                                      g.at("w").get<double>(), g.at("h").get<double>()};
    if (!(e->geometry == expect)) return id + " is " + vlt::wire::to_json(e->geometry).dump();
  }
  return {};
}

/// Temporary directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / (tag + "-" + vlt::new_session_id());
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace support
