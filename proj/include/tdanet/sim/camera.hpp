#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <vector>

#include "tdanet/detection.hpp"
#include "tdanet/sim/agent.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::sim {

inline constexpr double kVisibleDistance = 1.5;

struct CameraConfig {
  double hfov_deg = 90.0;
  double vfov_deg = 90.0;
  double max_range_m = 5.0;
  double height_m = kCameraHeight;
  // Optional observation noise; visibility is always judged noise-free.
  double drop_prob = 0.0;
  double jitter_sigma = 0.0;
};

struct Projection {
  bool in_view = false;
  double x = 0.0;
  double y = 0.0;
  double area = 0.0;
  double depth = 0.0;
};

// Pinhole projection of an object centre. Image y grows downwards.
inline Projection project(const Scene& scene, const AgentPose& pose, const ObjectInstance& obj, const CameraConfig& cam) {
  constexpr double deg = std::numbers::pi / 180.0;
  const auto [ax, ay] = scene.cell_center(pose.i, pose.j);
  const double th = pose.heading * deg;
  const double ph = pose.pitch * deg;
  const double rx = obj.x - ax;
  const double ry = obj.y - ay;
  const double rz = obj.z - cam.height_m;

  const double depth = rx * std::cos(ph) * std::cos(th) + ry * std::cos(ph) * std::sin(th) + rz * std::sin(ph);
  const double lateral = -rx * std::sin(th) + ry * std::cos(th);
  const double vertical = -rx * std::sin(ph) * std::cos(th) - ry * std::sin(ph) * std::sin(th) + rz * std::cos(ph);

  Projection p;
  p.depth = depth;
  if (!(depth > 0.0)) return p;
  if (std::sqrt(rx * rx + ry * ry + rz * rz) > cam.max_range_m) return p;
  const double hspan = 2.0 * std::tan(cam.hfov_deg * deg / 2.0);
  const double vspan = 2.0 * std::tan(cam.vfov_deg * deg / 2.0);
  p.x = 0.5 + (lateral / depth) / hspan;
  p.y = 0.5 - (vertical / depth) / vspan;
  if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) return p;
  const double side = obj.size / (depth * hspan);
  p.area = std::clamp(side * side, 0.0, 1.0);
  p.in_view = true;
  return p;
}

// Noise-free detections ordered by (depth, class name). No occlusion.
inline std::vector<Detection> detect(const Scene& scene, const AgentPose& pose, const CameraConfig& cam) {
  std::vector<Detection> out;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    const ObjectInstance& o = scene.objects[k];
    const Projection p = project(scene, pose, o, cam);
    if (!p.in_view) continue;
    out.push_back({o.cls, p.x, p.y, p.area, k, p.depth});
  }
  std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.cls < b.cls;
  });
  return out;
}

inline double ground_distance(const Scene& scene, const AgentPose& pose, const ObjectInstance& obj) {
  const auto [ax, ay] = scene.cell_center(pose.i, pose.j);
  return std::hypot(obj.x - ax, obj.y - ay);
}

// In the current view and within 1.5 m on the ground plane.
inline bool is_visible(const Scene& scene, const AgentPose& pose, std::size_t instance, const CameraConfig& cam) {
  const ObjectInstance& o = scene.objects.at(instance);
  return ground_distance(scene, pose, o) <= kVisibleDistance && project(scene, pose, o, cam).in_view;
}

inline std::vector<std::size_t> visible_instances(const Scene& scene, const AgentPose& pose, const CameraConfig& cam) {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    if (is_visible(scene, pose, k, cam)) out.push_back(k);
  }
  return out;
}

inline bool class_visible(const Scene& scene, const AgentPose& pose, std::string_view cls, const CameraConfig& cam) {
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    if (scene.objects[k].cls == cls && is_visible(scene, pose, k, cam)) return true;
  }
  return false;
}

// Detection dropout and box-centre jitter, clamped back into the image.
inline void apply_detection_noise(std::vector<Detection>& dets, const CameraConfig& cam, std::mt19937_64& rng) {
  if (cam.drop_prob <= 0.0 && cam.jitter_sigma <= 0.0) return;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Detection> kept;
  for (auto& d : dets) {
    if (cam.drop_prob > 0.0 && u(rng) < cam.drop_prob) continue;
    if (cam.jitter_sigma > 0.0) {
      d.x = std::clamp(d.x + cam.jitter_sigma * n(rng), 0.0, 1.0);
      d.y = std::clamp(d.y + cam.jitter_sigma * n(rng), 0.0, 1.0);
    }
    kept.push_back(std::move(d));
  }
  dets = std::move(kept);
}

}  // namespace tdanet::sim
