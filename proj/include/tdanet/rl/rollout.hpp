#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tdanet/detection.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/grad/graph.hpp"
#include "tdanet/grad/ops.hpp"
#include "tdanet/model/tdanet.hpp"
#include "tdanet/sim/episode.hpp"

namespace tdanet::rl {

// Classes whose detections never reach the network during training.
struct DetectionMask {
  std::set<std::string> hidden;

  bool empty() const { return hidden.empty(); }

  // Removes masked detections; returns how many were removed.
  std::size_t apply(std::vector<Detection>& dets) const {
    if (hidden.empty()) return 0;
    const std::size_t before = dets.size();
    std::erase_if(dets, [&](const Detection& d) { return hidden.count(d.cls) != 0; });
    return before - dets.size();
  }

  std::size_t count_masked(std::span<const Detection> dets) const {
    std::size_t n = 0;
    for (const auto& d : dets) n += hidden.count(d.cls);
    return n;
  }
};

struct MaskCounters {
  std::uint64_t removed = 0;  // detections filtered out before the network
  std::uint64_t leaked = 0;   // masked-class detections seen by the network
};

struct RolloutStep {
  std::vector<Detection> detections;
  int action = 0;
  double reward = 0.0;
  bool done = false;
  double log_prob = 0.0;
  double entropy = 0.0;
  double value = 0.0;
};

// One truncated-BPTT segment. The graph holds every forward pass of the
// segment so the loss can be differentiated without recomputation.
struct RolloutSegment {
  grad::Graph graph;
  std::string target;
  model::HiddenState initial_hidden;
  std::vector<RolloutStep> steps;
  std::vector<grad::Var> logits;
  std::vector<grad::Var> values;
  double bootstrap = 0.0;
  bool terminal = false;

  std::size_t size() const { return steps.size(); }

  std::vector<int> actions() const {
    std::vector<int> out;
    for (const auto& s : steps) out.push_back(s.action);
    return out;
  }

  std::vector<double> rewards() const {
    std::vector<double> out;
    for (const auto& s : steps) out.push_back(s.reward);
    return out;
  }
};

// Probabilities of a 1 x k logit row, max-subtracted.
inline std::vector<double> softmax_values(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

inline int sample_index(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

inline double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

struct RolloutOptions {
  int horizon = 30;
  int max_episode_steps = 100;
  grad::Mode mode = grad::Mode::train;
  const DetectionMask* mask = nullptr;
  MaskCounters* counters = nullptr;
};

// Runs up to `horizon` steps of `episode`, sampling from the policy. `hidden`
// carries the LSTM state in and out. Reaching the episode step cap counts as
// termination.
inline RolloutSegment collect_rollout(const model::TdaNet& net, const grad::ParamSet& params,
                                      const embed::EmbeddingTable& table, sim::Episode& episode,
                                      model::HiddenState& hidden, const RolloutOptions& opt, std::mt19937_64& rng) {
  if (opt.horizon < 1) throw std::invalid_argument("collect_rollout: horizon must be at least 1");
  if (episode.state().done) throw std::logic_error("collect_rollout: episode already finished");
  RolloutSegment seg;
  seg.target = episode.state().target;
  seg.initial_hidden = hidden;
  grad::Graph& g = seg.graph;
  model::HiddenVars h = net.hidden_constants(g, hidden);

  auto observe = [&]() {
    std::vector<Detection> dets = episode.observe(rng);
    if (opt.mask != nullptr) {
      const std::size_t removed = opt.mask->apply(dets);
      if (opt.counters != nullptr) {
        opt.counters->removed += removed;
        opt.counters->leaked += opt.mask->count_masked(dets);
      }
    }
    return dets;
  };

  for (int t = 0; t < opt.horizon; ++t) {
    RolloutStep step;
    step.detections = observe();
    const model::StepOutput out = net.forward(g, params, step.detections, seg.target, table, h, opt.mode, rng);
    const auto probs = softmax_values(g.value(out.logits).data());
    step.action = sample_index(probs, rng);
    step.log_prob = std::log(probs[static_cast<std::size_t>(step.action)]);
    step.entropy = entropy_of(probs);
    step.value = g.scalar(out.value);
    const sim::StepOutcome res = episode.step(action_from_index(step.action));
    step.reward = res.reward;
    step.done = res.done || episode.state().steps >= opt.max_episode_steps;
    seg.logits.push_back(out.logits);
    seg.values.push_back(out.value);
    h = out.hidden;
    const bool done = step.done;
    seg.steps.push_back(std::move(step));
    if (done) break;
  }
  hidden = {g.value(h.h), g.value(h.c)};
  seg.terminal = seg.steps.back().done;
  if (!seg.terminal) {
    std::vector<Detection> dets = episode.observe();
    if (opt.mask != nullptr) opt.mask->apply(dets);
    grad::Graph scratch;
    std::mt19937_64 r = rng;
    const model::StepOutput out =
        net.forward(scratch, params, dets, seg.target, table, net.hidden_constants(scratch, hidden), grad::Mode::eval, r);
    seg.bootstrap = scratch.scalar(out.value);
  }
  return seg;
}

// Re-runs the model over recorded observations and actions on a fresh graph.
inline void replay_segment(const model::TdaNet& net, const grad::ParamSet& params, const embed::EmbeddingTable& table,
                           const RolloutSegment& recorded, grad::Graph& g, std::vector<grad::Var>& logits,
                           std::vector<grad::Var>& values, grad::Mode mode, std::mt19937_64& rng) {
  logits.clear();
  values.clear();
  model::HiddenVars h = net.hidden_constants(g, recorded.initial_hidden);
  for (const auto& step : recorded.steps) {
    const model::StepOutput out = net.forward(g, params, step.detections, recorded.target, table, h, mode, rng);
    logits.push_back(out.logits);
    values.push_back(out.value);
    h = out.hidden;
  }
}

}  // namespace tdanet::rl
