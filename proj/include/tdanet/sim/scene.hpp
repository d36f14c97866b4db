#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace tdanet::sim {

inline constexpr double kCellMeters = 0.25;
inline constexpr int kSceneFormatVersion = 1;

enum class Split { train, test };

inline std::string_view split_name(Split s) { return s == Split::train ? "train" : "test"; }

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown scene split '" + std::string(s) + "'");
}

struct Cell {
  int i = 0;
  int j = 0;
  bool operator==(const Cell&) const = default;
};

struct ObjectInstance {
  std::string cls;
  double x = 0.0;  // world position in metres
  double y = 0.0;
  double z = 0.0;  // height of the object centre
  double size = 0.0;
  bool is_parent = false;

  bool operator==(const ObjectInstance&) const = default;
};

// Grid room. Cell (i, j) spans [i, i+1) x [j, j+1) cells; i runs along +x and
// j along +y.
struct Scene {
  std::string id;
  int width = 0;
  int height = 0;
  double cell_m = kCellMeters;
  std::vector<std::uint8_t> blocked;  // row-major, index j * width + i
  std::vector<ObjectInstance> objects;
  Split split = Split::train;

  bool in_bounds(int i, int j) const { return i >= 0 && j >= 0 && i < width && j < height; }
  bool is_free(int i, int j) const { return in_bounds(i, j) && blocked[static_cast<std::size_t>(j * width + i)] == 0; }
  void set_blocked(int i, int j, bool b) { blocked.at(static_cast<std::size_t>(j * width + i)) = b ? 1 : 0; }

  std::pair<double, double> cell_center(int i, int j) const { return {(i + 0.5) * cell_m, (j + 0.5) * cell_m}; }

  std::vector<Cell> free_cells() const {
    std::vector<Cell> out;
    for (int j = 0; j < height; ++j) {
      for (int i = 0; i < width; ++i) {
        if (is_free(i, j)) out.push_back({i, j});
      }
    }
    return out;
  }

  std::vector<std::size_t> instances_of(std::string_view cls) const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < objects.size(); ++k) {
      if (objects[k].cls == cls) out.push_back(k);
    }
    return out;
  }

  bool has_class(std::string_view cls) const {
    for (const auto& o : objects) {
      if (o.cls == cls) return true;
    }
    return false;
  }

  std::vector<std::string> child_classes() const {
    std::vector<std::string> out;
    for (const auto& o : objects) {
      if (o.is_parent) continue;
      bool dup = false;
      for (const auto& c : out) dup = dup || c == o.cls;
      if (!dup) out.push_back(o.cls);
    }
    return out;
  }

  void validate() const {
    if (width <= 0 || height <= 0) throw std::invalid_argument("Scene " + id + ": empty grid");
    if (blocked.size() != static_cast<std::size_t>(width * height)) {
      throw std::invalid_argument("Scene " + id + ": blocked mask size does not match grid");
    }
    if (free_cells().empty()) throw std::invalid_argument("Scene " + id + ": no free cell");
    const double w = width * cell_m;
    const double h = height * cell_m;
    for (const auto& o : objects) {
      if (!(o.x >= 0.0 && o.x <= w && o.y >= 0.0 && o.y <= h)) {
        throw std::invalid_argument("Scene " + id + ": object '" + o.cls + "' lies outside the grid");
      }
      if (!(o.size > 0.0)) throw std::invalid_argument("Scene " + id + ": object '" + o.cls + "' has non-positive size");
    }
  }

  bool operator==(const Scene&) const = default;
};

// Scene file: JSON, canonical key order, floats with 9 significant digits.
inline std::string scene_to_text(const Scene& s) {
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return std::string(buf);
  };
  auto quote = [](const std::string& str) { return nlohmann::json(str).dump(); };
  std::ostringstream out;
  out << "{\n";
  out << "  \"version\": " << kSceneFormatVersion << ",\n";
  out << "  \"id\": " << quote(s.id) << ",\n";
  out << "  \"grid\": {\"w\": " << s.width << ", \"h\": " << s.height << ", \"cell_m\": " << num(s.cell_m) << "},\n";
  out << "  \"blocked\": [";
  bool first = true;
  for (int j = 0; j < s.height; ++j) {
    for (int i = 0; i < s.width; ++i) {
      if (s.is_free(i, j)) continue;
      out << (first ? "" : ", ") << "[" << i << ", " << j << "]";
      first = false;
    }
  }
  out << "],\n";
  out << "  \"objects\": [";
  for (std::size_t k = 0; k < s.objects.size(); ++k) {
    const auto& o = s.objects[k];
    out << (k == 0 ? "\n" : ",\n") << "    {\"class\": " << quote(o.cls) << ", \"x_w\": " << num(o.x)
        << ", \"y_w\": " << num(o.y) << ", \"z_w\": " << num(o.z) << ", \"s\": " << num(o.size)
        << ", \"is_parent\": " << (o.is_parent ? "true" : "false") << "}";
  }
  out << (s.objects.empty() ? "" : "\n  ") << "],\n";
  out << "  \"split\": \"" << split_name(s.split) << "\"\n";
  out << "}\n";
  return out.str();
}

inline Scene scene_from_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("scene file: ") + e.what());
  }
  try {
    const int version = j.at("version").get<int>();
    if (version != kSceneFormatVersion) {
      throw std::runtime_error("scene file: unsupported version " + std::to_string(version));
    }
    Scene s;
    s.id = j.at("id").get<std::string>();
    s.width = j.at("grid").at("w").get<int>();
    s.height = j.at("grid").at("h").get<int>();
    s.cell_m = j.at("grid").at("cell_m").get<double>();
    if (s.width <= 0 || s.height <= 0) throw std::runtime_error("scene file: empty grid");
    s.blocked.assign(static_cast<std::size_t>(s.width * s.height), 0);
    for (const auto& b : j.at("blocked")) {
      const int i = b.at(0).get<int>();
      const int jj = b.at(1).get<int>();
      if (!s.in_bounds(i, jj)) throw std::runtime_error("scene file: blocked cell out of bounds");
      s.set_blocked(i, jj, true);
    }
    for (const auto& o : j.at("objects")) {
      s.objects.push_back({o.at("class").get<std::string>(), o.at("x_w").get<double>(), o.at("y_w").get<double>(),
                           o.at("z_w").get<double>(), o.at("s").get<double>(), o.at("is_parent").get<bool>()});
    }
    s.split = parse_split(j.at("split").get<std::string>());
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("scene file: ") + e.what());
  }
}

inline void save_scene(const Scene& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scene file " + path.string());
  out << scene_to_text(s);
  if (!out) throw std::runtime_error("failed writing scene file " + path.string());
}

inline Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read scene file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return scene_from_text(buf.str());
}

}  // namespace tdanet::sim
