#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "tdanet/detection.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::sim {

inline constexpr int kHeadingStep = 45;
inline constexpr int kPitchStep = 30;
inline constexpr int kPitchMin = -30;
inline constexpr int kPitchMax = 30;
inline constexpr int kHeadingCount = 360 / kHeadingStep;
inline constexpr int kPitchCount = (kPitchMax - kPitchMin) / kPitchStep + 1;
inline constexpr double kCameraHeight = 1.5;

// Heading 0 faces +x; RotateRight adds 45 degrees (towards +y). Positive pitch
// looks up.
struct AgentPose {
  int i = 0;
  int j = 0;
  int heading = 0;
  int pitch = 0;

  bool operator==(const AgentPose&) const = default;

  void validate() const {
    if (heading < 0 || heading >= 360 || heading % kHeadingStep != 0) {
      throw std::invalid_argument("AgentPose: heading " + std::to_string(heading) + " is not a multiple of 45 in [0, 360)");
    }
    if (pitch < kPitchMin || pitch > kPitchMax || pitch % kPitchStep != 0) {
      throw std::invalid_argument("AgentPose: pitch " + std::to_string(pitch) + " outside {-30, 0, 30}");
    }
  }
};

// Dense index over (cell, heading, pitch) for a scene of the given width.
inline std::size_t pose_index(const AgentPose& p, int width) {
  const std::size_t cell = static_cast<std::size_t>(p.j * width + p.i);
  return (cell * kHeadingCount + static_cast<std::size_t>(p.heading / kHeadingStep)) * kPitchCount +
         static_cast<std::size_t>((p.pitch - kPitchMin) / kPitchStep);
}

inline std::size_t pose_count(const Scene& s) {
  return static_cast<std::size_t>(s.width * s.height) * kHeadingCount * kPitchCount;
}

// Unit grid step for a heading; diagonals move one cell on both axes.
inline Cell heading_step(int heading) {
  switch (((heading % 360) + 360) % 360) {
    case 0: return {1, 0};
    case 45: return {1, 1};
    case 90: return {0, 1};
    case 135: return {-1, 1};
    case 180: return {-1, 0};
    case 225: return {-1, -1};
    case 270: return {0, -1};
    case 315: return {1, -1};
    default: throw std::invalid_argument("heading_step: heading must be a multiple of 45");
  }
}

struct StepResult {
  AgentPose pose;
  bool collided = false;
};

inline StepResult step_dynamics(const Scene& scene, const AgentPose& pose, Action action) {
  StepResult r{pose, false};
  switch (action) {
    case Action::MoveAhead: {
      const Cell d = heading_step(pose.heading);
      const int ni = pose.i + d.i;
      const int nj = pose.j + d.j;
      if (scene.is_free(ni, nj)) {
        r.pose.i = ni;
        r.pose.j = nj;
      } else {
        r.collided = true;
      }
      break;
    }
    case Action::RotateLeft: r.pose.heading = (pose.heading + 360 - kHeadingStep) % 360; break;
    case Action::RotateRight: r.pose.heading = (pose.heading + kHeadingStep) % 360; break;
    case Action::LookUp: r.pose.pitch = pose.pitch + kPitchStep > kPitchMax ? pose.pitch : pose.pitch + kPitchStep; break;
    case Action::LookDown: r.pose.pitch = pose.pitch - kPitchStep < kPitchMin ? pose.pitch : pose.pitch - kPitchStep; break;
    case Action::Done: break;
  }
  return r;
}

}  // namespace tdanet::sim
