#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdanet/detection.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/eval/metrics.hpp"
#include "tdanet/grad/graph.hpp"
#include "tdanet/model/tdanet.hpp"
#include "tdanet/rl/rollout.hpp"
#include "tdanet/sim/episode.hpp"
#include "tdanet/sim/parents.hpp"
#include "tdanet/sim/paths.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::eval {

inline constexpr int kBucketMinLengths[] = {1, 5};

struct EvalConfig {
  std::size_t episodes_per_bucket = 250;
  std::uint64_t seed = 0;
  int max_episode_steps = 100;
  bool greedy = true;  // argmax actions; false samples from the policy
  int workers = 1;
  std::size_t max_draws = 20000;  // start draws per bucket before giving up
  sim::CameraConfig camera;
  std::vector<std::string> targets;  // empty: every child class in the scenes

  void validate() const {
    if (episodes_per_bucket == 0) throw std::invalid_argument("eval: episodes_per_bucket must be positive");
    if (max_episode_steps < 1) throw std::invalid_argument("eval: max_episode_steps must be at least 1");
    if (workers < 1) throw std::invalid_argument("eval: workers must be at least 1");
    if (max_draws == 0) throw std::invalid_argument("eval: max_draws must be positive");
  }
};

struct EvalEpisode {
  std::size_t scene = 0;
  std::string scene_id;
  sim::AgentPose start;
  std::string target;
  int optimal = 0;
  sim::EpisodeResult result;
};

struct BucketReport {
  std::string name;
  int min_length = 1;
  bool empty = true;  // no eligible episode could be drawn
  SuccessMetrics metrics;
  std::vector<EvalEpisode> episodes;
};

struct ClassReport {
  std::string cls;
  SuccessMetrics metrics;
};

struct Provenance {
  std::string policy;
  std::string checkpoint_hash;
  std::string split;
  std::uint64_t seed = 0;
  std::vector<std::string> scenes;
};

struct EvalReport {
  std::vector<BucketReport> buckets;
  std::vector<ClassReport> per_class;  // over the L>=1 bucket
  Provenance provenance;

  const BucketReport& bucket(int min_length) const {
    for (const auto& b : buckets) {
      if (b.min_length == min_length) return b;
    }
    throw std::out_of_range("EvalReport: no bucket L>=" + std::to_string(min_length));
  }

  nlohmann::ordered_json to_json(bool with_episodes = true) const {
    nlohmann::ordered_json j;
    j["policy"] = provenance.policy;
    j["checkpoint_hash"] = provenance.checkpoint_hash;
    j["split"] = provenance.split;
    j["seed"] = provenance.seed;
    j["scenes"] = provenance.scenes;
    j["buckets"] = nlohmann::ordered_json::array();
    for (const auto& b : buckets) {
      nlohmann::ordered_json jb;
      jb["name"] = b.name;
      jb["min_length"] = b.min_length;
      jb["empty"] = b.empty;
      jb["episodes"] = b.metrics.count;
      jb["sr"] = b.metrics.sr;
      jb["spl"] = b.metrics.spl;
      if (with_episodes) {
        jb["results"] = nlohmann::ordered_json::array();
        for (const auto& e : b.episodes) {
          nlohmann::ordered_json je;
          je["scene"] = e.scene_id;
          je["start"] = {e.start.i, e.start.j, e.start.heading, e.start.pitch};
          je["target"] = e.target;
          je["optimal"] = e.optimal;
          je["actions"] = e.result.actions;
          je["success"] = e.result.success;
          je["traveled_m"] = e.result.traveled_m;
          jb["results"].push_back(je);
        }
      }
      j["buckets"].push_back(jb);
    }
    j["per_class"] = nlohmann::ordered_json::array();
    for (const auto& c : per_class) {
      j["per_class"].push_back({{"class", c.cls}, {"episodes", c.metrics.count}, {"sr", c.metrics.sr}, {"spl", c.metrics.spl}});
    }
    return j;
  }

  // Aligned SR / SPL table, one row per bucket.
  std::string summary() const {
    std::string out = "bucket      SR (%)   SPL (%)   episodes\n";
    char line[128];
    for (const auto& b : buckets) {
      if (b.empty) {
        std::snprintf(line, sizeof line, "%-8s  %8s  %8s  %9s\n", b.name.c_str(), "-", "-", "empty");
      } else {
        std::snprintf(line, sizeof line, "%-8s  %8.1f  %8.1f  %9zu\n", b.name.c_str(), b.metrics.sr, b.metrics.spl,
                      b.metrics.count);
      }
      out += line;
    }
    return out;
  }
};

// Builds a fresh stateful policy for one episode. Called concurrently from
// evaluation workers; each returned policy is used by one thread only.
using PolicyFactory = std::function<sim::Policy(const std::string& target, std::uint64_t episode_seed)>;

// Recurrent TDANet policy, eval mode, attention traces attached.
inline PolicyFactory model_policy(const model::TdaNet& net, const grad::ParamSet& params,
                                  const embed::EmbeddingTable& table, bool greedy) {
  return [&net, &params, &table, greedy](const std::string& target, std::uint64_t seed) -> sim::Policy {
    struct State {
      model::HiddenState hidden;
      std::mt19937_64 rng;
    };
    auto st = std::make_shared<State>(State{model::HiddenState::zeros(net.config().hidden_dim), std::mt19937_64(seed)});
    return [&net, &params, &table, greedy, target, st](std::span<const Detection> dets) {
      grad::Graph g;
      const model::StepOutput out = net.forward(g, params, dets, target, table, net.hidden_constants(g, st->hidden),
                                                grad::Mode::eval, st->rng);
      st->hidden = out.hidden_values(g);
      const auto logits = g.value(out.logits).data();
      sim::PolicyDecision d;
      if (greedy) {
        d.action = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
      } else {
        d.action = rl::sample_index(rl::softmax_values(logits), st->rng);
      }
      d.attention = out.trace;
      return d;
    };
  };
}

// Uniform over the six actions.
inline PolicyFactory random_policy() {
  return [](const std::string&, std::uint64_t seed) -> sim::Policy {
    auto rng = std::make_shared<std::mt19937_64>(seed);
    return [rng](std::span<const Detection>) {
      return sim::PolicyDecision{std::uniform_int_distribution<int>(0, kActionCount - 1)(*rng), std::nullopt};
    };
  };
}

namespace detail {

struct Candidate {
  std::size_t scene;
  std::string target;
  sim::AgentPose start;
  int optimal;
};

class EpisodeDrawer {
 public:
  EpisodeDrawer(const std::vector<sim::Scene>& scenes, const std::vector<std::string>& targets,
                const sim::CameraConfig& cam)
      : scenes_(scenes), cam_(cam) {
    for (std::size_t k = 0; k < scenes.size(); ++k) {
      Slot s{k, {}, scenes[k].free_cells()};
      for (const auto& t : targets) {
        if (scenes[k].has_class(t)) s.targets.push_back(t);
      }
      if (!s.targets.empty() && !s.free.empty()) slots_.push_back(std::move(s));
    }
  }

  bool any() const { return !slots_.empty(); }

  // One uniform draw; nullopt when the target cannot be reached or L < min.
  std::optional<Candidate> draw(std::mt19937_64& rng, int min_length) const {
    const Slot& s = slots_[std::uniform_int_distribution<std::size_t>(0, slots_.size() - 1)(rng)];
    const std::string& target = s.targets[std::uniform_int_distribution<std::size_t>(0, s.targets.size() - 1)(rng)];
    const sim::Cell c = s.free[std::uniform_int_distribution<std::size_t>(0, s.free.size() - 1)(rng)];
    const sim::AgentPose start{c.i, c.j, sim::kHeadingStep * std::uniform_int_distribution<int>(0, sim::kHeadingCount - 1)(rng), 0};
    const auto len = sim::optimal_path_length(scenes_[s.scene], start, target, cam_);
    if (!len || *len < min_length) return std::nullopt;
    return Candidate{s.scene, target, start, *len};
  }

 private:
  struct Slot {
    std::size_t scene;
    std::vector<std::string> targets;
    std::vector<sim::Cell> free;
  };
  const std::vector<sim::Scene>& scenes_;
  sim::CameraConfig cam_;
  std::vector<Slot> slots_;
};

inline std::uint64_t episode_seed(std::uint64_t seed, std::size_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0xe7a1u};
  std::mt19937_64 r(seq);
  return r();
}

}  // namespace detail

// Draws episodes per bucket (L>=1, L>=5) by rejection so each bucket holds
// episodes_per_bucket episodes when enough eligible starts exist. L>=1 draws
// with L>=5 are reused for the L>=5 bucket before drawing more.
inline EvalReport evaluate(const std::vector<sim::Scene>& scenes, const PolicyFactory& policy, const EvalConfig& cfg,
                           std::string policy_name = "model") {
  cfg.validate();
  std::vector<std::string> targets = cfg.targets;
  if (targets.empty()) {
    std::set<std::string> all;
    for (const auto& s : scenes) {
      for (const auto& c : s.child_classes()) all.insert(c);
    }
    targets.assign(all.begin(), all.end());
  }
  const detail::EpisodeDrawer drawer(scenes, targets, cfg.camera);
  std::mt19937_64 rng(cfg.seed);

  std::vector<detail::Candidate> pool;
  std::vector<std::vector<std::size_t>> members;
  for (int min_len : kBucketMinLengths) {
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < pool.size() && idx.size() < cfg.episodes_per_bucket; ++k) {
      if (pool[k].optimal >= min_len) idx.push_back(k);
    }
    for (std::size_t d = 0; drawer.any() && d < cfg.max_draws && idx.size() < cfg.episodes_per_bucket; ++d) {
      if (auto c = drawer.draw(rng, min_len)) {
        idx.push_back(pool.size());
        pool.push_back(std::move(*c));
      }
    }
    members.push_back(std::move(idx));
  }

  const sim::ParentProbTable no_parents;
  const sim::Environment env{cfg.camera, sim::RewardConfig{}, &no_parents};
  const bool noisy = cfg.camera.drop_prob > 0.0 || cfg.camera.jitter_sigma > 0.0;
  std::vector<sim::EpisodeResult> results(pool.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.workers));
  auto work = [&](int w) {
    try {
      for (std::size_t k = next.fetch_add(1); k < pool.size(); k = next.fetch_add(1)) {
        const auto& c = pool[k];
        const std::uint64_t es = detail::episode_seed(cfg.seed, k);
        std::mt19937_64 noise(es ^ 0x9e3779b97f4a7c15ULL);
        sim::EpisodeRun run = sim::run_episode(scenes[c.scene], c.start, c.target, policy(c.target, es),
                                               cfg.max_episode_steps, env, noisy ? &noise : nullptr);
        run.result.optimal = c.optimal;
        results[k] = std::move(run.result);
      }
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
      next.store(pool.size());
    }
  };
  if (cfg.workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < cfg.workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EvalReport rep;
  rep.provenance.policy = std::move(policy_name);
  rep.provenance.seed = cfg.seed;
  for (const auto& s : scenes) rep.provenance.scenes.push_back(s.id);
  for (std::size_t b = 0; b < members.size(); ++b) {
    BucketReport br;
    br.min_length = kBucketMinLengths[b];
    br.name = "L>=" + std::to_string(br.min_length);
    br.empty = members[b].empty();
    std::vector<sim::EpisodeResult> rs;
    for (std::size_t k : members[b]) {
      const auto& c = pool[k];
      br.episodes.push_back({c.scene, scenes[c.scene].id, c.start, c.target, c.optimal, results[k]});
      rs.push_back(results[k]);
    }
    br.metrics = success_metrics(rs);
    rep.buckets.push_back(std::move(br));
  }
  std::map<std::string, std::vector<sim::EpisodeResult>> by_class;
  for (const auto& e : rep.buckets.front().episodes) by_class[e.target].push_back(e.result);
  for (const auto& [cls, rs] : by_class) rep.per_class.push_back({cls, success_metrics(rs)});
  return rep;
}

inline EvalReport random_baseline(const std::vector<sim::Scene>& scenes, const EvalConfig& cfg) {
  return evaluate(scenes, random_policy(), cfg, "random");
}

}  // namespace tdanet::eval
