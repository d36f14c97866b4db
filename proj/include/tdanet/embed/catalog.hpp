#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tdanet::embed {

struct ClassInfo {
  std::string name;
  int prototype = 0;       // semantic cluster id
  double size_m = 0.2;     // physical extent used for projected box area
  double height_m = 0.5;   // height of the object centre above the floor
  bool is_parent = false;
  std::string parent;      // children: designated parent class for placement
  std::optional<double> cooccur;  // children: overrides the generator's co-occurrence prior
};

class ClassCatalog {
 public:
  ClassCatalog() = default;
  explicit ClassCatalog(std::vector<ClassInfo> classes) : classes_(std::move(classes)) { validate(); }

  const std::vector<ClassInfo>& classes() const { return classes_; }
  std::size_t size() const { return classes_.size(); }

  const ClassInfo* find(std::string_view name) const {
    for (const auto& c : classes_) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  const ClassInfo& at(std::string_view name) const {
    if (const auto* c = find(name)) return *c;
    throw std::out_of_range("ClassCatalog: unknown class '" + std::string(name) + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : classes_) out.push_back(c.name);
    return out;
  }

  std::vector<std::string> child_names() const {
    std::vector<std::string> out;
    for (const auto& c : classes_) {
      if (!c.is_parent) out.push_back(c.name);
    }
    return out;
  }

  std::vector<std::string> parent_names() const {
    std::vector<std::string> out;
    for (const auto& c : classes_) {
      if (c.is_parent) out.push_back(c.name);
    }
    return out;
  }

  std::vector<int> prototype_ids() const {
    std::set<int> ids;
    for (const auto& c : classes_) ids.insert(c.prototype);
    return {ids.begin(), ids.end()};
  }

 private:
  void validate() const {
    std::set<std::string> seen;
    double max_child = 0.0;
    for (const auto& c : classes_) {
      if (c.name.empty()) throw std::invalid_argument("ClassCatalog: empty class name");
      if (!seen.insert(c.name).second) throw std::invalid_argument("ClassCatalog: duplicate class '" + c.name + "'");
      if (!(c.size_m > 0.0)) throw std::invalid_argument("ClassCatalog: class '" + c.name + "' needs a positive size");
      if (!(c.height_m >= 0.0)) throw std::invalid_argument("ClassCatalog: class '" + c.name + "' has negative height");
      if (c.cooccur && !(*c.cooccur >= 0.0 && *c.cooccur <= 1.0)) {
        throw std::invalid_argument("ClassCatalog: co-occurrence prior of '" + c.name + "' outside [0, 1]");
      }
      if (!c.is_parent) max_child = std::max(max_child, c.size_m);
    }
    for (const auto& c : classes_) {
      if (c.is_parent) {
        if (c.size_m < max_child) {
          throw std::invalid_argument("ClassCatalog: parent '" + c.name + "' is smaller than a child class");
        }
        continue;
      }
      if (c.parent.empty()) continue;
      const ClassInfo* p = find(c.parent);
      if (p == nullptr || !p->is_parent) {
        throw std::invalid_argument("ClassCatalog: child '" + c.name + "' names '" + c.parent + "' which is not a parent class");
      }
    }
  }

  std::vector<ClassInfo> classes_;
};

// Four parent classes and twelve targets in four semantic clusters. Members
// of a cluster share a parent and have similar physical dimensions.
inline ClassCatalog default_catalog() {
  std::vector<ClassInfo> c;
  c.push_back({"table", 4, 1.0, 0.40, true, "", std::nullopt});
  c.push_back({"sofa", 5, 1.6, 0.45, true, "", std::nullopt});
  c.push_back({"counter", 6, 1.4, 0.50, true, "", std::nullopt});
  c.push_back({"bed", 7, 1.8, 0.35, true, "", std::nullopt});

  c.push_back({"cup", 0, 0.12, 0.80, false, "table", std::nullopt});
  c.push_back({"remote control", 1, 0.20, 0.50, false, "sofa", std::nullopt});
  c.push_back({"apple", 2, 0.10, 0.95, false, "counter", std::nullopt});
  c.push_back({"pillow", 3, 0.45, 0.60, false, "bed", std::nullopt});

  c.push_back({"mug", 0, 0.14, 0.80, false, "table", std::nullopt});
  c.push_back({"laptop", 1, 0.35, 0.55, false, "sofa", std::nullopt});
  c.push_back({"bread", 2, 0.30, 0.95, false, "counter", std::nullopt});
  c.push_back({"teddy bear", 3, 0.35, 0.60, false, "bed", std::nullopt});

  c.push_back({"bowl", 0, 0.18, 0.80, false, "table", std::nullopt});
  c.push_back({"book", 1, 0.25, 0.50, false, "sofa", std::nullopt});
  c.push_back({"tomato", 2, 0.10, 0.95, false, "counter", std::nullopt});
  c.push_back({"alarm clock", 3, 0.15, 0.60, false, "bed", std::nullopt});
  return ClassCatalog(std::move(c));
}

}  // namespace tdanet::embed
