#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdanet/embed/catalog.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::sim {

inline constexpr double kParentDistanceFloor = 0.05;

// Pr(t | p): chance of finding target class t near parent class p.
class ParentProbTable {
 public:
  using Row = std::vector<std::pair<std::string, double>>;

  ParentProbTable() = default;
  explicit ParentProbTable(std::map<std::string, Row> rows) : rows_(std::move(rows)) {
    for (const auto& [target, row] : rows_) {
      double total = 0.0;
      for (const auto& [parent, pr] : row) {
        if (!(pr >= 0.0 && pr <= 1.0)) throw std::invalid_argument("ParentProbTable: probability outside [0, 1] for " + target);
        total += pr;
      }
      if (!row.empty() && std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("ParentProbTable: probabilities for '" + target + "' do not sum to 1");
      }
    }
  }

  double prob(std::string_view target, std::string_view parent) const {
    const auto it = rows_.find(std::string(target));
    if (it == rows_.end()) return 0.0;
    for (const auto& [p, pr] : it->second) {
      if (p == parent) return pr;
    }
    return 0.0;
  }

  const Row* row(std::string_view target) const {
    const auto it = rows_.find(std::string(target));
    return it == rows_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, Row>& rows() const { return rows_; }

 private:
  std::map<std::string, Row> rows_;
};

// For each target class present in the training scenes: mean over scenes of
// the closest target/parent instance pair distance, scored 1 / (d + 0.05 m)
// and normalised over the parent classes that co-occur with the target.
inline ParentProbTable parent_prob_table(const std::vector<Scene>& scenes, const embed::ClassCatalog& catalog) {
  std::map<std::string, std::map<std::string, std::pair<double, int>>> sums;  // target -> parent -> (sum, count)
  std::vector<std::string> targets_seen;
  for (const Scene& s : scenes) {
    for (const std::string& t : s.child_classes()) {
      if (const auto* info = catalog.find(t); info != nullptr && info->is_parent) continue;
      bool known = false;
      for (const auto& k : targets_seen) known = known || k == t;
      if (!known) targets_seen.push_back(t);
      auto& per_parent = sums[t];
      for (const std::string& p : catalog.parent_names()) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& a : s.objects) {
          if (a.cls != t || a.is_parent) continue;
          for (const auto& b : s.objects) {
            if (b.cls != p || !b.is_parent) continue;
            best = std::min(best, std::hypot(a.x - b.x, a.y - b.y));
          }
        }
        if (!std::isfinite(best)) continue;
        auto& acc = per_parent[p];
        acc.first += best;
        acc.second += 1;
      }
    }
  }

  std::map<std::string, ParentProbTable::Row> rows;
  for (const auto& t : targets_seen) {
    const auto& per_parent = sums[t];
    if (per_parent.empty()) throw std::invalid_argument("parent_prob_table: target '" + t + "' never co-occurs with a parent");
    double total = 0.0;
    ParentProbTable::Row row;
    for (const auto& [p, acc] : per_parent) {
      const double mean = acc.first / acc.second;
      const double score = 1.0 / (mean + kParentDistanceFloor);
      row.emplace_back(p, score);
      total += score;
    }
    for (auto& [p, v] : row) v /= total;
    rows.emplace(t, std::move(row));
  }
  return ParentProbTable(std::move(rows));
}

}  // namespace tdanet::sim
