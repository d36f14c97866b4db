#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdanet/embed/catalog.hpp"
#include "tdanet/rl/rollout.hpp"

namespace tdanet::eval {

struct SplitSpec {
  std::vector<std::string> seen;
  std::vector<std::string> unseen;
  std::vector<std::string> train_scenes;
  std::vector<std::string> test_scenes;

  void validate() const {
    const std::set<std::string> s(seen.begin(), seen.end());
    for (const auto& u : unseen) {
      if (s.count(u) != 0) throw std::invalid_argument("SplitSpec: class '" + u + "' is both seen and unseen");
    }
    const std::set<std::string> tr(train_scenes.begin(), train_scenes.end());
    for (const auto& t : test_scenes) {
      if (tr.count(t) != 0) throw std::invalid_argument("SplitSpec: scene '" + t + "' is in both train and test");
    }
  }

  // Training-time filter that removes unseen-class detections.
  rl::DetectionMask mask() const { return rl::DetectionMask{{unseen.begin(), unseen.end()}}; }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["seen"] = seen;
    j["unseen"] = unseen;
    j["train_scenes"] = train_scenes;
    j["test_scenes"] = test_scenes;
    return j;
  }

  static SplitSpec from_json(const nlohmann::json& j) {
    SplitSpec s;
    s.seen = j.at("seen").get<std::vector<std::string>>();
    s.unseen = j.at("unseen").get<std::vector<std::string>>();
    s.train_scenes = j.value("train_scenes", std::vector<std::string>{});
    s.test_scenes = j.value("test_scenes", std::vector<std::string>{});
    s.validate();
    return s;
  }
};

// Picks n_unseen target classes at random such that every unseen class keeps
// at least one seen class with the same prototype, then n_seen seen classes
// (sharers of the unseen prototypes first). Scene lists are left empty.
inline SplitSpec zero_shot_split(const embed::ClassCatalog& catalog, std::size_t n_seen, std::size_t n_unseen,
                                 std::uint64_t seed) {
  std::vector<std::string> children = catalog.child_names();
  if (n_seen + n_unseen > children.size()) {
    throw std::invalid_argument("zero_shot_split: " + std::to_string(n_seen) + "/" + std::to_string(n_unseen) +
                                " needs more than the " + std::to_string(children.size()) + " target classes");
  }
  if (n_seen == 0) throw std::invalid_argument("zero_shot_split: at least one seen class is required");
  std::mt19937_64 rng(seed);
  std::shuffle(children.begin(), children.end(), rng);

  std::map<int, std::size_t> group_size, group_unseen;
  for (const auto& c : children) ++group_size[catalog.at(c).prototype];
  SplitSpec out;
  std::set<std::string> taken;
  for (const auto& c : children) {
    if (out.unseen.size() == n_unseen) break;
    const int p = catalog.at(c).prototype;
    if (group_unseen[p] + 1 >= group_size[p]) continue;
    ++group_unseen[p];
    out.unseen.push_back(c);
    taken.insert(c);
  }
  if (out.unseen.size() < n_unseen) {
    throw std::invalid_argument("zero_shot_split: cannot pick " + std::to_string(n_unseen) +
                                " unseen classes that each share a prototype with a seen class");
  }
  std::set<int> need;
  for (const auto& u : out.unseen) need.insert(catalog.at(u).prototype);
  for (const auto& c : children) {
    if (out.seen.size() == n_seen) break;
    const int p = catalog.at(c).prototype;
    if (taken.count(c) == 0 && need.count(p) != 0) {
      out.seen.push_back(c);
      taken.insert(c);
      need.erase(p);
    }
  }
  if (!need.empty()) {
    throw std::invalid_argument("zero_shot_split: " + std::to_string(n_seen) +
                                " seen classes cannot cover every unseen prototype");
  }
  for (const auto& c : children) {
    if (out.seen.size() == n_seen) break;
    if (taken.insert(c).second) out.seen.push_back(c);
  }
  std::sort(out.seen.begin(), out.seen.end());
  std::sort(out.unseen.begin(), out.unseen.end());
  return out;
}

}  // namespace tdanet::eval
