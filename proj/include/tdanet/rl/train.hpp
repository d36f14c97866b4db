#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tdanet/embed/catalog.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/grad/optim.hpp"
#include "tdanet/model/tdanet.hpp"
#include "tdanet/rl/a3c.hpp"
#include "tdanet/rl/checkpoint.hpp"
#include "tdanet/rl/metrics.hpp"
#include "tdanet/rl/rollout.hpp"
#include "tdanet/sim/episode.hpp"
#include "tdanet/sim/parents.hpp"
#include "tdanet/sim/paths.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::rl {

struct TrainConfig {
  LossConfig loss;
  grad::AdamConfig adam;
  int horizon = 30;
  int workers = 1;
  std::int64_t total_episodes = 1000;
  int max_episode_steps = 100;
  std::uint64_t seed = 1;
  std::int64_t log_every = 100;        // episodes per metrics line
  std::int64_t checkpoint_every = 0;   // episodes per checkpoint hook call, 0 = never
  sim::CameraConfig camera;
  sim::RewardConfig reward;

  void validate() const {
    loss.validate();
    if (horizon < 1) throw std::invalid_argument("train: horizon must be at least 1");
    if (workers < 1) throw std::invalid_argument("train: workers must be at least 1");
    if (total_episodes < 0) throw std::invalid_argument("train: total_episodes must be non-negative");
    if (max_episode_steps < 1) throw std::invalid_argument("train: max_episode_steps must be at least 1");
    if (log_every < 1) throw std::invalid_argument("train: log_every must be at least 1");
    if (checkpoint_every < 0) throw std::invalid_argument("train: checkpoint_every must be non-negative");
    if (!(adam.lr > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  }
};

struct EpisodeSpec {
  std::size_t scene = 0;
  sim::AgentPose start;
  std::string target;
  std::optional<int> optimal;
};

using EpisodeSampler = std::function<EpisodeSpec(std::mt19937_64&)>;

// Uniform over scenes, then over allowed targets present in the scene, free
// start cells and headings (pitch 0). Starts from which the target cannot be
// reached are redrawn.
inline EpisodeSampler uniform_sampler(const std::vector<sim::Scene>& scenes, std::vector<std::string> targets,
                                      sim::CameraConfig camera = {}) {
  struct Slot {
    std::size_t scene;
    std::vector<std::string> targets;
    std::vector<sim::Cell> free;
  };
  std::vector<Slot> slots;
  for (std::size_t k = 0; k < scenes.size(); ++k) {
    Slot s{k, {}, scenes[k].free_cells()};
    for (const auto& t : targets) {
      if (scenes[k].has_class(t)) s.targets.push_back(t);
    }
    if (!s.targets.empty()) slots.push_back(std::move(s));
  }
  if (slots.empty()) throw std::invalid_argument("uniform_sampler: no scene contains any allowed target");
  return [&scenes, slots = std::move(slots), camera](std::mt19937_64& rng) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Slot& s = slots[std::uniform_int_distribution<std::size_t>(0, slots.size() - 1)(rng)];
      EpisodeSpec spec;
      spec.scene = s.scene;
      spec.target = s.targets[std::uniform_int_distribution<std::size_t>(0, s.targets.size() - 1)(rng)];
      const sim::Cell c = s.free[std::uniform_int_distribution<std::size_t>(0, s.free.size() - 1)(rng)];
      spec.start = {c.i, c.j, sim::kHeadingStep * std::uniform_int_distribution<int>(0, sim::kHeadingCount - 1)(rng), 0};
      spec.optimal = sim::optimal_path_length(scenes[s.scene], spec.start, spec.target, camera);
      if (spec.optimal) return spec;
    }
    throw std::runtime_error("uniform_sampler: no reachable episode found in 1000 draws");
  };
}

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_log;
  std::function<void(const TrainState&)> on_checkpoint;
};

struct TrainOptions {
  std::vector<std::string> targets;  // empty: every child class present in the scenes
  DetectionMask mask;
  EpisodeSampler sampler;            // overrides the uniform sampler
  TrainHooks hooks;
  const TrainState* resume = nullptr;
};

struct TrainResult {
  TrainState state;
  std::vector<MetricsRecord> log;
  std::uint64_t updates = 0;
  std::uint64_t nan_skips = 0;
  MaskCounters mask_counters;
  std::vector<std::int64_t> worker_episodes;
};

// Shared parameters and optimizer state. Every mutation goes through apply()
// under one mutex; readers copy a snapshot.
class SharedModel {
 public:
  SharedModel(grad::ParamSet params, grad::AdamState adam) : params_(std::move(params)), adam_(std::move(adam)) {}

  // Copies the shared parameters into `local` unless it already holds the
  // current version.
  void snapshot(grad::ParamSet& local) const {
    std::lock_guard lock(mu_);
    if (local.size() == params_.size() && local.version() == params_.version()) return;
    local = params_;
  }

  grad::UpdateResult apply(grad::GradSet grads, const grad::AdamConfig& cfg) {
    std::lock_guard lock(mu_);
    return apply_locked(std::move(grads), cfg);
  }

  grad::UpdateResult apply_locked(grad::GradSet grads, const grad::AdamConfig& cfg) {
    ++attempts_;
    grad::UpdateResult r = grad::optimizer_step(params_, adam_, std::move(grads), cfg);
    if (!r.applied) ++nan_skips_;
    return r;
  }

  // A forward pass that produced a non-finite value counts as a rejected update.
  void record_skip_locked() {
    ++attempts_;
    ++nan_skips_;
  }

  std::mutex& mutex() const { return mu_; }
  const grad::ParamSet& params() const { return params_; }
  const grad::AdamState& adam() const { return adam_; }
  std::uint64_t attempts() const { return attempts_; }
  std::uint64_t nan_skips() const { return nan_skips_; }
  std::uint64_t version() const {
    std::lock_guard lock(mu_);
    return params_.version();
  }

 private:
  mutable std::mutex mu_;
  grad::ParamSet params_;
  grad::AdamState adam_;
  std::uint64_t attempts_ = 0;
  std::uint64_t nan_skips_ = 0;
};

// Applies one worker's gradients; returns the parameter version afterwards.
inline std::uint64_t apply_worker_update(SharedModel& shared, grad::GradSet grads, const grad::AdamConfig& cfg) {
  std::lock_guard lock(shared.mutex());
  shared.apply_locked(std::move(grads), cfg);
  return shared.params().version();
}

inline std::string rng_to_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

inline std::mt19937_64 rng_from_string(const std::string& s) {
  std::istringstream is(s);
  std::mt19937_64 rng;
  is >> rng;
  if (!is) throw std::invalid_argument("invalid serialized rng state");
  return rng;
}

inline std::mt19937_64 worker_rng(std::uint64_t seed, int worker) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(worker), 0x7da5u};
  return std::mt19937_64(seq);
}

inline TrainResult train(const TrainConfig& cfg, const model::ModelConfig& model_cfg, const std::vector<sim::Scene>& scenes,
                         const embed::ClassCatalog& catalog, const embed::EmbeddingTable& table, TrainOptions opt = {}) {
  cfg.validate();
  if (scenes.empty()) throw std::invalid_argument("train: no training scenes");
  if (table.dim() != model_cfg.embed_dim) {
    throw std::invalid_argument("train: embedding dimension " + std::to_string(table.dim()) + " does not match model " +
                                std::to_string(model_cfg.embed_dim));
  }
  for (const auto& s : scenes) {
    s.validate();
    for (const auto& o : s.objects) {
      if (!table.contains(o.cls)) throw std::invalid_argument("train: scene " + s.id + " has class '" + o.cls + "' without an embedding");
    }
  }
  if (opt.targets.empty()) {
    std::set<std::string> all;
    for (const auto& s : scenes) {
      for (const auto& c : s.child_classes()) all.insert(c);
    }
    opt.targets.assign(all.begin(), all.end());
  }
  for (const auto& t : opt.targets) {
    if (opt.mask.hidden.count(t) != 0) throw std::invalid_argument("train: target '" + t + "' is masked");
  }

  const sim::ParentProbTable parents = sim::parent_prob_table(scenes, catalog);
  const sim::Environment env{cfg.camera, cfg.reward, &parents};
  const model::TdaNet net(model_cfg);
  EpisodeSampler sampler = opt.sampler ? opt.sampler : uniform_sampler(scenes, opt.targets, cfg.camera);

  std::int64_t start_episodes = 0;
  grad::ParamSet init;
  grad::AdamState adam;
  std::vector<std::mt19937_64> rngs;
  if (opt.resume != nullptr) {
    net.check_params(opt.resume->params);
    init = opt.resume->params;
    adam = opt.resume->adam;
    start_episodes = opt.resume->episodes;
  } else {
    init = net.init_params(cfg.seed);
    adam = grad::AdamState::for_params(init);
  }
  for (int w = 0; w < cfg.workers; ++w) {
    if (opt.resume != nullptr && static_cast<std::size_t>(w) < opt.resume->rng_states.size()) {
      rngs.push_back(rng_from_string(opt.resume->rng_states[static_cast<std::size_t>(w)]));
    } else {
      rngs.push_back(worker_rng(cfg.seed + static_cast<std::uint64_t>(start_episodes), w));
    }
  }

  SharedModel shared(std::move(init), std::move(adam));
  const std::int64_t budget_end = start_episodes + cfg.total_episodes;
  std::atomic<std::int64_t> next_episode{start_episodes};

  TrainResult result;
  result.worker_episodes.assign(static_cast<std::size_t>(cfg.workers), 0);
  std::int64_t completed = start_episodes;
  MetricsWindow window;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.workers));
  std::mutex mask_mu;

  auto snapshot_state = [&]() {
    TrainState st;
    st.params = shared.params();
    st.adam = shared.adam();
    st.episodes = completed;
    for (const auto& r : rngs) st.rng_states.push_back(rng_to_string(r));
    return st;
  };

  auto worker = [&](int w) {
    try {
      std::mt19937_64 rng = rngs[static_cast<std::size_t>(w)];
      grad::ParamSet local;
      MaskCounters counters;
      RolloutOptions ro;
      ro.horizon = cfg.horizon;
      ro.max_episode_steps = cfg.max_episode_steps;
      ro.mask = opt.mask.empty() ? nullptr : &opt.mask;
      ro.counters = &counters;
      for (;;) {
        const std::int64_t claimed = next_episode.fetch_add(1);
        if (claimed >= budget_end) break;
        const EpisodeSpec spec = sampler(rng);
        sim::Episode ep(scenes.at(spec.scene), env, spec.target, spec.start);
        model::HiddenState hidden = model::HiddenState::zeros(model_cfg.hidden_dim);
        double ep_reward = 0.0;
        bool done = false;
        while (!done) {
          shared.snapshot(local);
          grad::GradSet grads;
          LossTerms terms;
          std::size_t steps = 0;
          bool numeric_failure = false;
          try {
            RolloutSegment seg = collect_rollout(net, local, table, ep, hidden, ro, rng);
            const auto actions = seg.actions();
            const auto rewards = seg.rewards();
            terms = a3c_loss(seg.graph, seg.logits, seg.values, actions, rewards, seg.bootstrap, cfg.loss);
            grads = seg.graph.backward(terms.total, local);
            for (double r : rewards) ep_reward += r;
            steps = seg.size();
            done = seg.terminal;
          } catch (const grad::NumericError&) {
            numeric_failure = true;
            done = true;
          }
          std::lock_guard lock(shared.mutex());
          if (numeric_failure) {
            shared.record_skip_locked();
          } else {
            shared.apply_locked(std::move(grads), cfg.adam);
            window.add_update(terms.policy, terms.value, terms.entropy, steps);
          }
          rngs[static_cast<std::size_t>(w)] = rng;
          if (!done) continue;
          ++completed;
          ++result.worker_episodes[static_cast<std::size_t>(w)];
          window.add_episode(ep_reward, ep.state().steps, ep.state().success);
          if ((completed - start_episodes) % cfg.log_every == 0 || completed == budget_end) {
            if (window.episodes() > 0) {
              MetricsRecord rec = window.flush(completed, shared.attempts(), shared.nan_skips());
              result.log.push_back(rec);
              if (opt.hooks.on_log) opt.hooks.on_log(rec);
            }
          }
          if (cfg.checkpoint_every > 0 && completed % cfg.checkpoint_every == 0 && opt.hooks.on_checkpoint) {
            opt.hooks.on_checkpoint(snapshot_state());
          }
        }
      }
      std::lock_guard lock(mask_mu);
      result.mask_counters.removed += counters.removed;
      result.mask_counters.leaked += counters.leaked;
    } catch (...) {
      errors[static_cast<std::size_t>(w)] = std::current_exception();
      next_episode.store(budget_end);
    }
  };

  if (cfg.workers == 1) {
    worker(0);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < cfg.workers; ++w) threads.emplace_back(worker, w);
    for (auto& t : threads) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  result.updates = shared.attempts();
  result.nan_skips = shared.nan_skips();
  result.state = snapshot_state();
  return result;
}

}  // namespace tdanet::rl
