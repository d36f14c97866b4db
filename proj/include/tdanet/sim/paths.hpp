#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "tdanet/detection.hpp"
#include "tdanet/sim/agent.hpp"
#include "tdanet/sim/camera.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::sim {

inline constexpr Action kMotionActions[] = {Action::MoveAhead, Action::RotateLeft, Action::RotateRight, Action::LookUp,
                                            Action::LookDown};

// Fewest motion actions from `start` to any pose that sees an instance of
// `target` (the final Done is not counted). nullopt when no such pose is
// reachable.
inline std::optional<int> optimal_path_length(const Scene& scene, const AgentPose& start, std::string_view target,
                                              const CameraConfig& cam = {}) {
  const auto targets = scene.instances_of(target);
  if (targets.empty()) return std::nullopt;
  auto goal = [&](const AgentPose& p) {
    for (std::size_t k : targets) {
      if (is_visible(scene, p, k, cam)) return true;
    }
    return false;
  };
  if (goal(start)) return 0;

  std::vector<int> dist(pose_count(scene), -1);
  std::deque<AgentPose> queue;
  dist[pose_index(start, scene.width)] = 0;
  queue.push_back(start);
  while (!queue.empty()) {
    const AgentPose cur = queue.front();
    queue.pop_front();
    const int d = dist[pose_index(cur, scene.width)];
    for (Action a : kMotionActions) {
      const AgentPose next = step_dynamics(scene, cur, a).pose;
      int& slot = dist[pose_index(next, scene.width)];
      if (slot >= 0) continue;
      slot = d + 1;
      if (goal(next)) return d + 1;
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

}  // namespace tdanet::sim
