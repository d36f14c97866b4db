#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdanet/detection.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/eval/evaluate.hpp"
#include "tdanet/model/tdanet.hpp"
#include "tdanet/sim/camera.hpp"
#include "tdanet/sim/episode.hpp"
#include "tdanet/sim/paths.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::eval {

struct DumpDetection {
  Detection det;
  std::optional<double> v_corr;
  std::optional<double> v_att;
};

struct DumpStep {
  int step = 0;
  sim::AgentPose pose;
  Action action = Action::Done;
  double reward = 0.0;
  std::vector<DumpDetection> detections;
  double v_att_sum = 0.0;             // 0 when the variant has no attention
  std::optional<bool> target_top;     // target detected: does it hold the largest V_corr
};

struct AttentionDump {
  std::string scene_id;
  std::string target;
  model::Variant variant = model::Variant::full;
  sim::AgentPose start;
  std::optional<int> optimal;
  sim::EpisodeResult result;
  sim::AgentPose final_pose;
  std::vector<DumpStep> steps;

  // Fraction of steps with the target detected where it also had the largest
  // correspondence value; nullopt when no such step exists.
  std::optional<double> target_top_fraction() const {
    int n = 0;
    int top = 0;
    for (const auto& s : steps) {
      if (!s.target_top) continue;
      ++n;
      top += *s.target_top ? 1 : 0;
    }
    if (n == 0) return std::nullopt;
    return static_cast<double>(top) / n;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["scene"] = scene_id;
    j["target"] = target;
    j["variant"] = model::variant_name(variant);
    j["start"] = {start.i, start.j, start.heading, start.pitch};
    j["optimal"] = optimal ? nlohmann::ordered_json(*optimal) : nlohmann::ordered_json(nullptr);
    j["success"] = result.success;
    j["actions"] = result.actions;
    j["traveled_m"] = result.traveled_m;
    const auto frac = target_top_fraction();
    j["target_top_fraction"] = frac ? nlohmann::ordered_json(*frac) : nlohmann::ordered_json(nullptr);
    j["steps"] = nlohmann::ordered_json::array();
    for (const auto& s : steps) {
      nlohmann::ordered_json js;
      js["step"] = s.step;
      js["pose"] = {s.pose.i, s.pose.j, s.pose.heading, s.pose.pitch};
      js["action"] = action_name(s.action);
      js["reward"] = s.reward;
      js["v_att_sum"] = s.v_att_sum;
      js["detections"] = nlohmann::ordered_json::array();
      for (const auto& d : s.detections) {
        nlohmann::ordered_json jd;
        jd["class"] = d.det.cls;
        jd["x"] = d.det.x;
        jd["y"] = d.det.y;
        jd["area"] = d.det.area;
        jd["v_corr"] = d.v_corr ? nlohmann::ordered_json(*d.v_corr) : nlohmann::ordered_json(nullptr);
        jd["v_att"] = d.v_att ? nlohmann::ordered_json(*d.v_att) : nlohmann::ordered_json(nullptr);
        js["detections"].push_back(jd);
      }
      j["steps"].push_back(js);
    }
    return j;
  }
};

// Greedy eval-mode episode with per-step attention values.
inline AttentionDump attention_dump(const model::TdaNet& net, const grad::ParamSet& params,
                                    const embed::EmbeddingTable& table, const sim::Scene& scene,
                                    const sim::AgentPose& start, const std::string& target, int max_steps = 100,
                                    const sim::CameraConfig& camera = {}) {
  if (!scene.has_class(target)) throw std::invalid_argument("attention_dump: scene " + scene.id + " has no '" + target + "'");
  const sim::ParentProbTable no_parents;
  const sim::Environment env{camera, sim::RewardConfig{}, &no_parents};
  const sim::EpisodeRun run =
      sim::run_episode(scene, start, target, model_policy(net, params, table, true)(target, 0), max_steps, env);
  AttentionDump d;
  d.scene_id = scene.id;
  d.target = target;
  d.variant = net.config().variant;
  d.start = start;
  d.optimal = sim::optimal_path_length(scene, start, target, camera);
  d.result = run.result;
  d.result.optimal = d.optimal;
  d.final_pose = run.final_pose;
  for (std::size_t k = 0; k < run.trajectory.size(); ++k) {
    const auto& t = run.trajectory[k];
    DumpStep s;
    s.step = static_cast<int>(k);
    s.pose = t.pose;
    s.action = t.action;
    s.reward = t.reward;
    for (std::size_t r = 0; r < t.detections.size(); ++r) {
      DumpDetection dd{t.detections[r], std::nullopt, std::nullopt};
      if (t.attention && r < t.attention->v_att.size()) {
        dd.v_corr = t.attention->v_corr[r];
        dd.v_att = t.attention->v_att[r];
      }
      s.detections.push_back(std::move(dd));
    }
    if (t.attention) {
      for (double v : t.attention->v_att) s.v_att_sum += v;
      std::optional<std::size_t> best;
      bool has_target = false;
      for (std::size_t r = 0; r < s.detections.size(); ++r) {
        has_target = has_target || s.detections[r].det.cls == target;
        if (!best || *s.detections[r].v_corr > *s.detections[*best].v_corr) best = r;
      }
      if (has_target) s.target_top = s.detections[*best].det.cls == target;
    }
    d.steps.push_back(std::move(s));
  }
  return d;
}

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace detail

// Top-down SVG: room outline, blocked cells, objects, trajectory polyline, a
// field-of-view wedge every `fov_every` steps and at the end, target marker.
inline std::string render_svg(const sim::Scene& scene, const AttentionDump& dump, const sim::CameraConfig& camera = {},
                              int fov_every = 3) {
  using detail::fmt;
  const double px = 160.0;  // pixels per metre
  const double margin = 20.0;
  const double w = scene.width * scene.cell_m * px;
  const double h = scene.height * scene.cell_m * px;
  auto X = [&](double m) { return margin + m * px; };
  auto Y = [&](double m) { return margin + m * px; };
  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w + 2 * margin) + "\" height=\"" +
       fmt(h + 2 * margin) + "\" viewBox=\"0 0 " + fmt(w + 2 * margin) + " " + fmt(h + 2 * margin) + "\">\n";
  s += "<title>" + detail::xml_escape(scene.id + " / " + dump.target) + "</title>\n";
  s += "<rect x=\"" + fmt(margin) + "\" y=\"" + fmt(margin) + "\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
       "\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"/>\n";
  for (int j = 0; j < scene.height; ++j) {
    for (int i = 0; i < scene.width; ++i) {
      if (scene.is_free(i, j)) continue;
      s += "<rect x=\"" + fmt(X(i * scene.cell_m)) + "\" y=\"" + fmt(Y(j * scene.cell_m)) + "\" width=\"" +
           fmt(scene.cell_m * px) + "\" height=\"" + fmt(scene.cell_m * px) + "\" fill=\"#999\"/>\n";
    }
  }

  const double vis = sim::kVisibleDistance;
  const double half = camera.hfov_deg / 2.0 * std::numbers::pi / 180.0;
  auto wedge = [&](const sim::AgentPose& p) {
    const auto [cx, cy] = scene.cell_center(p.i, p.j);
    const double th = p.heading * std::numbers::pi / 180.0;
    std::string pts = fmt(X(cx)) + "," + fmt(Y(cy));
    for (int k = 0; k <= 8; ++k) {
      const double a = th - half + 2.0 * half * k / 8.0;
      pts += " " + fmt(X(cx + vis * std::cos(a))) + "," + fmt(Y(cy + vis * std::sin(a)));
    }
    s += "<polygon class=\"fov\" points=\"" + pts + "\" fill=\"#4a90d9\" fill-opacity=\"0.12\" stroke=\"#4a90d9\" stroke-width=\"0.5\"/>\n";
  };
  for (std::size_t k = 0; k < dump.steps.size(); k += static_cast<std::size_t>(std::max(1, fov_every))) {
    wedge(dump.steps[k].pose);
  }
  wedge(dump.final_pose);

  for (const auto& o : scene.objects) {
    const bool is_target = o.cls == dump.target;
    const double r = (o.is_parent ? 0.18 : 0.07) * px;
    const char* fill = is_target ? "#d62728" : (o.is_parent ? "#8c6d31" : "#2ca02c");
    s += "<circle cx=\"" + fmt(X(o.x)) + "\" cy=\"" + fmt(Y(o.y)) + "\" r=\"" + fmt(r) + "\" fill=\"" + fill +
         "\" fill-opacity=\"0.8\"/>\n";
    if (is_target) {
      s += "<circle class=\"target\" cx=\"" + fmt(X(o.x)) + "\" cy=\"" + fmt(Y(o.y)) + "\" r=\"" + fmt(r + 6) +
           "\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
    }
    s += "<text x=\"" + fmt(X(o.x) + r + 2) + "\" y=\"" + fmt(Y(o.y)) + "\" font-size=\"10\" font-family=\"sans-serif\">" +
         detail::xml_escape(o.cls) + "</text>\n";
  }

  std::string pts;
  auto add_point = [&](const sim::AgentPose& p) {
    const auto [cx, cy] = scene.cell_center(p.i, p.j);
    if (!pts.empty()) pts += " ";
    pts += fmt(X(cx)) + "," + fmt(Y(cy));
  };
  for (const auto& st : dump.steps) add_point(st.pose);
  add_point(dump.final_pose);
  s += "<polyline class=\"trajectory\" points=\"" + pts + "\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
  const auto [sx, sy] = scene.cell_center(dump.start.i, dump.start.j);
  s += "<rect class=\"start\" x=\"" + fmt(X(sx) - 5) + "\" y=\"" + fmt(Y(sy) - 5) +
       "\" width=\"10\" height=\"10\" fill=\"#1f77b4\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace tdanet::eval
