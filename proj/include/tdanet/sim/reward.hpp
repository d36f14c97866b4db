#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>

#include "tdanet/detection.hpp"
#include "tdanet/sim/agent.hpp"
#include "tdanet/sim/parents.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::sim {

struct RewardConfig {
  double target_reward = 5.0;
  double parent_scale = 0.1;
  double step_penalty = -0.01;
};

struct EpisodeState {
  const Scene* scene = nullptr;
  AgentPose pose;
  std::string target;
  int steps = 0;
  std::set<std::size_t> rewarded_parents;  // instance indices already paid
  bool done = false;
  bool success = false;
};

// Step reward. `visible` lists the instances visible after the action.
// Newly visible parents of the target pay R_t * Pr(t|p) * k once per
// instance; Done with the target visible pays R_t and ends in success; Done
// otherwise ends in failure; the step penalty applies when nothing was paid.
inline double reward(EpisodeState& state, Action action, std::span<const std::size_t> visible,
                     const ParentProbTable& parents, const RewardConfig& cfg = {}) {
  const Scene& scene = *state.scene;
  double r = 0.0;
  bool paid = false;
  for (std::size_t idx : visible) {
    const ObjectInstance& o = scene.objects.at(idx);
    if (!o.is_parent) continue;
    const double pr = parents.prob(state.target, o.cls);
    if (!(pr > 0.0)) continue;
    if (!state.rewarded_parents.insert(idx).second) continue;
    r += cfg.target_reward * pr * cfg.parent_scale;
    paid = true;
  }
  if (action == Action::Done) {
    state.done = true;
    bool target_seen = false;
    for (std::size_t idx : visible) target_seen = target_seen || scene.objects.at(idx).cls == state.target;
    if (target_seen) {
      r += cfg.target_reward;
      paid = true;
      state.success = true;
    }
  }
  return paid ? r : cfg.step_penalty;
}

}  // namespace tdanet::sim
