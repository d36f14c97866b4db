#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdanet/embed/catalog.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::sim {

struct GenConfig {
  int min_width = 10;
  int max_width = 14;
  int min_height = 10;
  int max_height = 14;
  int min_parents = 2;
  int max_parents = 4;
  int min_children = 4;
  int max_children = 8;
  double obstacle_fraction = 0.04;
  double parent_min_separation_m = 0.75;
  double child_radius_m = 0.5;
  double cooccur_prob = 0.9;  // default chance a child is placed next to its parent
  std::vector<std::string> child_classes;  // empty: every child class in the catalog
  int max_attempts = 2000;

  void validate() const {
    if (min_width < 1 || max_width < min_width || min_height < 1 || max_height < min_height) {
      throw std::invalid_argument("GenConfig: invalid grid size range");
    }
    if (min_parents < 0 || max_parents < min_parents || min_children < 0 || max_children < min_children) {
      throw std::invalid_argument("GenConfig: invalid object count range");
    }
    if (!(obstacle_fraction >= 0.0 && obstacle_fraction < 1.0)) throw std::invalid_argument("GenConfig: obstacle_fraction outside [0, 1)");
    if (!(cooccur_prob >= 0.0 && cooccur_prob <= 1.0)) throw std::invalid_argument("GenConfig: cooccur_prob outside [0, 1]");
    if (!(child_radius_m > 0.0)) throw std::invalid_argument("GenConfig: child_radius_m must be positive");
  }
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {
// Positions are stored at 0.1 mm resolution so the 9-digit scene format
// reproduces them exactly.
inline double quantize(double v) { return std::round(v * 1e4) / 1e4; }
}  // namespace detail

inline Scene generate_scene(const embed::ClassCatalog& catalog, const GenConfig& cfg, std::uint64_t seed,
                            std::string id = "scene") {
  cfg.validate();
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Scene s;
  s.id = std::move(id);
  s.width = uniform_int(cfg.min_width, cfg.max_width);
  s.height = uniform_int(cfg.min_height, cfg.max_height);
  s.cell_m = kCellMeters;
  s.blocked.assign(static_cast<std::size_t>(s.width * s.height), 0);

  const int cells = s.width * s.height;
  const int obstacles = static_cast<int>(std::lround(cfg.obstacle_fraction * cells));
  {
    std::vector<int> order(static_cast<std::size_t>(cells));
    for (int k = 0; k < cells; ++k) order[static_cast<std::size_t>(k)] = k;
    std::shuffle(order.begin(), order.end(), rng);
    for (int k = 0; k < obstacles; ++k) s.blocked[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = 1;
  }

  auto random_free_cell = [&]() -> Cell {
    const auto free = s.free_cells();
    if (free.empty()) throw GenerationError("generate_scene: grid has no free cell left");
    return free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
  };

  std::vector<std::string> parent_classes = catalog.parent_names();
  std::shuffle(parent_classes.begin(), parent_classes.end(), rng);
  const int n_parents = uniform_int(cfg.min_parents, cfg.max_parents);
  if (n_parents > 0 && parent_classes.empty()) throw GenerationError("generate_scene: catalog has no parent classes");
  for (int k = 0; k < n_parents; ++k) {
    const auto& info = catalog.at(parent_classes[static_cast<std::size_t>(k) % parent_classes.size()]);
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
      const Cell c = random_free_cell();
      const auto [x, y] = s.cell_center(c.i, c.j);
      bool ok = true;
      for (const auto& o : s.objects) {
        if (o.is_parent && std::hypot(o.x - x, o.y - y) < cfg.parent_min_separation_m) ok = false;
      }
      if (!ok) continue;
      s.objects.push_back({info.name, detail::quantize(x), detail::quantize(y), info.height_m, info.size_m, true});
      s.set_blocked(c.i, c.j, true);
      placed = true;
    }
    if (!placed) throw GenerationError("generate_scene: cannot place " + std::to_string(n_parents) + " parents in a " +
                                       std::to_string(s.width) + "x" + std::to_string(s.height) + " grid");
  }
  if (s.free_cells().empty()) throw GenerationError("generate_scene: objects leave no free cell");

  std::vector<const embed::ClassInfo*> eligible;
  for (const auto& c : catalog.classes()) {
    if (c.is_parent) continue;
    if (!cfg.child_classes.empty() &&
        std::find(cfg.child_classes.begin(), cfg.child_classes.end(), c.name) == cfg.child_classes.end()) {
      continue;
    }
    if (!c.parent.empty() && !s.has_class(c.parent)) continue;
    eligible.push_back(&c);
  }
  const int n_children = uniform_int(cfg.min_children, cfg.max_children);
  if (n_children > 0 && eligible.empty()) throw GenerationError("generate_scene: no child class has its parent in the scene");

  const double w_m = s.width * s.cell_m;
  const double h_m = s.height * s.cell_m;
  for (int k = 0; k < n_children; ++k) {
    const embed::ClassInfo& info = *eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)];
    const double prior = info.cooccur.value_or(cfg.cooccur_prob);
    double x = 0.0, y = 0.0;
    bool placed = false;
    if (!info.parent.empty() && unit(rng) < prior) {
      const auto anchors = s.instances_of(info.parent);
      const ObjectInstance& anchor = s.objects[anchors[std::uniform_int_distribution<std::size_t>(0, anchors.size() - 1)(rng)]];
      for (int attempt = 0; attempt < cfg.max_attempts && !placed; ++attempt) {
        const double r = cfg.child_radius_m * std::sqrt(unit(rng));
        const double a = 2.0 * std::numbers::pi * unit(rng);
        x = detail::quantize(anchor.x + r * std::cos(a));
        y = detail::quantize(anchor.y + r * std::sin(a));
        if (!(x > 0.0 && x < w_m && y > 0.0 && y < h_m)) continue;
        if (std::hypot(x - anchor.x, y - anchor.y) > cfg.child_radius_m) continue;
        const int ci = static_cast<int>(x / s.cell_m);
        const int cj = static_cast<int>(y / s.cell_m);
        // Children may rest on a parent's cell but not inside an obstacle.
        bool on_parent = false;
        for (const auto& o : s.objects) {
          if (o.is_parent && static_cast<int>(o.x / s.cell_m) == ci && static_cast<int>(o.y / s.cell_m) == cj) on_parent = true;
        }
        if (!s.is_free(ci, cj) && !on_parent) continue;
        placed = true;
      }
    }
    if (!placed) {
      const Cell c = random_free_cell();
      x = detail::quantize((c.i + 0.05 + 0.9 * unit(rng)) * s.cell_m);
      y = detail::quantize((c.j + 0.05 + 0.9 * unit(rng)) * s.cell_m);
    }
    s.objects.push_back({info.name, x, y, info.height_m, info.size_m, false});
  }
  s.validate();
  return s;
}

}  // namespace tdanet::sim
