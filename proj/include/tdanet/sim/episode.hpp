#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdanet/detection.hpp"
#include "tdanet/sim/agent.hpp"
#include "tdanet/sim/camera.hpp"
#include "tdanet/sim/parents.hpp"
#include "tdanet/sim/reward.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::sim {

// Everything about the world besides the scene itself.
struct Environment {
  CameraConfig camera;
  RewardConfig reward;
  const ParentProbTable* parents = nullptr;
};

struct StepOutcome {
  double reward = 0.0;
  bool collided = false;
  bool done = false;
  bool success = false;
};

class Episode {
 public:
  Episode(const Scene& scene, const Environment& env, std::string target, AgentPose start)
      : env_(env) {
    if (env_.parents == nullptr) throw std::invalid_argument("Episode: environment has no parent table");
    start.validate();
    if (!scene.is_free(start.i, start.j)) throw std::invalid_argument("Episode: start cell is blocked or out of bounds");
    state_.scene = &scene;
    state_.pose = start;
    state_.target = std::move(target);
  }

  std::vector<Detection> observe() const { return detect(*state_.scene, state_.pose, env_.camera); }

  std::vector<Detection> observe(std::mt19937_64& noise_rng) const {
    auto dets = observe();
    apply_detection_noise(dets, env_.camera, noise_rng);
    return dets;
  }

  StepOutcome step(Action action) {
    if (state_.done) throw std::logic_error("Episode::step: episode already finished");
    const StepResult moved = step_dynamics(*state_.scene, state_.pose, action);
    const double dist = std::hypot(moved.pose.i - state_.pose.i, moved.pose.j - state_.pose.j) * state_.scene->cell_m;
    state_.pose = moved.pose;
    traveled_m_ += dist;
    const auto visible = visible_instances(*state_.scene, state_.pose, env_.camera);
    StepOutcome out;
    out.reward = reward(state_, action, visible, *env_.parents, env_.reward);
    out.collided = moved.collided;
    state_.steps += 1;
    out.done = state_.done;
    out.success = state_.success;
    return out;
  }

  bool target_visible() const { return class_visible(*state_.scene, state_.pose, state_.target, env_.camera); }

  const EpisodeState& state() const { return state_; }
  double traveled_m() const { return traveled_m_; }

 private:
  Environment env_;
  EpisodeState state_;
  double traveled_m_ = 0.0;
};

struct PolicyDecision {
  int action = 0;
  std::optional<AttentionStep> attention;
};

using Policy = std::function<PolicyDecision(std::span<const Detection>)>;

struct TrajectoryStep {
  AgentPose pose;  // before the action
  std::vector<Detection> detections;
  Action action = Action::Done;
  double reward = 0.0;
  std::optional<AttentionStep> attention;
};

struct EpisodeResult {
  bool success = false;
  int actions = 0;          // e_i: every action taken, Done included
  double traveled_m = 0.0;  // metres moved
  std::optional<int> optimal;  // L_i when known
  std::string target;
};

struct EpisodeRun {
  EpisodeResult result;
  std::vector<TrajectoryStep> trajectory;
  AgentPose final_pose;
  double total_reward = 0.0;
};

inline EpisodeRun run_episode(const Scene& scene, const AgentPose& start, const std::string& target,
                              const Policy& policy, int max_steps, const Environment& env,
                              std::mt19937_64* noise_rng = nullptr) {
  if (max_steps < 1) throw std::invalid_argument("run_episode: max_steps must be at least 1");
  Episode ep(scene, env, target, start);
  EpisodeRun run;
  run.result.target = target;
  for (int t = 0; t < max_steps; ++t) {
    std::vector<Detection> dets = noise_rng != nullptr ? ep.observe(*noise_rng) : ep.observe();
    PolicyDecision decision = policy(dets);
    const Action action = action_from_index(decision.action);
    TrajectoryStep rec{ep.state().pose, std::move(dets), action, 0.0, std::move(decision.attention)};
    const StepOutcome out = ep.step(action);
    rec.reward = out.reward;
    run.total_reward += out.reward;
    run.trajectory.push_back(std::move(rec));
    if (out.done) break;
  }
  run.result.success = ep.state().success;
  run.result.actions = ep.state().steps;
  run.result.traveled_m = ep.traveled_m();
  run.final_pose = ep.state().pose;
  return run;
}

}  // namespace tdanet::sim
