#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdanet/embed/catalog.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/eval/ablation.hpp"
#include "tdanet/eval/evaluate.hpp"
#include "tdanet/eval/zero_shot.hpp"
#include "tdanet/model/tdanet.hpp"
#include "tdanet/rl/train.hpp"
#include "tdanet/sim/generate.hpp"
#include "tdanet/util/hash.hpp"

namespace tdanet::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EmbeddingSettings {
  std::string mode = "synthetic";  // synthetic | file
  std::size_t dim = 32;
  double sigma = 0.1;
  std::uint64_t seed = 1;
  std::string path;  // text vectors, mode == file
};

struct SceneSettings {
  sim::GenConfig gen;
  int count = 50;
  std::uint64_t seed = 1;
  double test_fraction = 0.2;
};

struct SplitSettings {
  std::string mode = "none";  // none | zero_shot
  std::size_t n_seen = 9;
  std::size_t n_unseen = 3;
  std::uint64_t seed = 0;
  std::vector<std::string> seen;    // explicit lists override the drawn split
  std::vector<std::string> unseen;
};

struct AblationSettings {
  std::vector<model::Variant> variants = eval::all_variants();
  std::vector<std::uint64_t> seeds{1, 2, 3};
};

struct RunConfig {
  std::string catalog_name = "default";
  std::vector<embed::ClassInfo> classes;  // inline catalog when non-empty
  EmbeddingSettings embedding;
  SceneSettings scenes;
  model::ModelConfig model;
  rl::TrainConfig train;
  std::vector<std::string> train_targets;
  eval::EvalConfig eval;
  SplitSettings split;
  AblationSettings ablation;
  std::string out = "runs/default";

  embed::ClassCatalog catalog() const {
    if (!classes.empty()) return embed::ClassCatalog(classes);
    if (catalog_name == "default") return embed::default_catalog();
    throw ConfigError("config: unknown catalog '" + catalog_name + "'");
  }

  embed::EmbeddingTable embeddings(const std::filesystem::path& base = {}) const {
    const embed::ClassCatalog cat = catalog();
    if (embedding.mode == "synthetic") return embed::synth_embeddings(cat, embedding.dim, embedding.sigma, embedding.seed);
    std::filesystem::path p = embedding.path;
    if (p.is_relative() && !base.empty()) p = base / p;
    embed::EmbeddingTable t = embed::load_text_embeddings(p, cat.names());
    if (t.dim() != embedding.dim) {
      throw ConfigError("config: embedding file " + p.string() + " has dimension " + std::to_string(t.dim()) +
                        ", embedding.dim is " + std::to_string(embedding.dim));
    }
    return t;
  }

  // Zero-shot split from the catalog when split.mode is zero_shot.
  std::optional<eval::SplitSpec> split_spec() const {
    if (split.mode != "zero_shot") return std::nullopt;
    eval::SplitSpec s;
    if (!split.seen.empty() || !split.unseen.empty()) {
      s.seen = split.seen;
      s.unseen = split.unseen;
    } else {
      s = eval::zero_shot_split(catalog(), split.n_seen, split.n_unseen, split.seed);
    }
    s.validate();
    return s;
  }

  void validate() const {
    const embed::ClassCatalog cat = catalog();
    if (embedding.mode != "synthetic" && embedding.mode != "file") {
      throw ConfigError("config: embedding.mode must be 'synthetic' or 'file', got '" + embedding.mode + "'");
    }
    if (embedding.mode == "file" && embedding.path.empty()) throw ConfigError("config: embedding.path is required in file mode");
    if (embedding.dim != model.embed_dim) {
      throw ConfigError("config: embedding.dim " + std::to_string(embedding.dim) + " differs from model.embed_dim " +
                        std::to_string(model.embed_dim));
    }
    if (scenes.count < 1) throw ConfigError("config: scenes.count must be at least 1");
    if (!(scenes.test_fraction >= 0.0 && scenes.test_fraction < 1.0)) {
      throw ConfigError("config: scenes.test_fraction must lie in [0, 1)");
    }
    if (split.mode != "none" && split.mode != "zero_shot") {
      throw ConfigError("config: split.mode must be 'none' or 'zero_shot', got '" + split.mode + "'");
    }
    if (ablation.seeds.empty()) throw ConfigError("config: ablation.seeds must not be empty");
    for (const auto& t : train_targets) {
      const embed::ClassInfo* c = cat.find(t);
      if (c == nullptr || c->is_parent) throw ConfigError("config: train.targets names unknown target class '" + t + "'");
    }
    for (const auto& t : eval.targets) {
      const embed::ClassInfo* c = cat.find(t);
      if (c == nullptr || c->is_parent) throw ConfigError("config: eval.targets names unknown target class '" + t + "'");
    }
    try {
      scenes.gen.validate();
      train.validate();
      eval.validate();
      model::TdaNet{model};
      if (auto s = split_spec()) {
        for (const auto& c : s->seen) cat.at(c);
        for (const auto& c : s->unseen) cat.at(c);
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  // Everything that decides parameter shapes and input encoding.
  nlohmann::ordered_json model_identity() const {
    nlohmann::ordered_json j;
    j["model"] = model_json();
    j["embedding"] = {{"mode", embedding.mode}, {"dim", embedding.dim}, {"sigma", embedding.sigma},
                      {"seed", embedding.seed}, {"path", embedding.path}};
    j["catalog"] = catalog_json();
    return j;
  }

  std::uint64_t model_hash() const { return util::fnv1a(model_identity().dump()); }

  nlohmann::ordered_json model_json() const {
    return {{"embed_dim", model.embed_dim}, {"att_dim", model.att_dim},       {"l1_dim", model.l1_dim},
            {"sa_dim", model.sa_dim},       {"ffn_dim", model.ffn_dim},       {"hidden_dim", model.hidden_dim},
            {"dropout", model.dropout},     {"variant", model::variant_name(model.variant)}};
  }

  nlohmann::ordered_json catalog_json() const {
    if (classes.empty()) return catalog_name;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : classes) {
      nlohmann::ordered_json jc{{"name", c.name},         {"prototype", c.prototype}, {"size_m", c.size_m},
                                {"height_m", c.height_m}, {"is_parent", c.is_parent}, {"parent", c.parent}};
      if (c.cooccur) jc["cooccur"] = *c.cooccur;
      arr.push_back(jc);
    }
    return arr;
  }

  // Resolved form: every field, defaults expanded.
  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["catalog"] = catalog_json();
    j["embedding"] = model_identity()["embedding"];
    const auto& g = scenes.gen;
    j["scenes"] = {{"count", scenes.count},
                   {"seed", scenes.seed},
                   {"test_fraction", scenes.test_fraction},
                   {"min_width", g.min_width},
                   {"max_width", g.max_width},
                   {"min_height", g.min_height},
                   {"max_height", g.max_height},
                   {"min_parents", g.min_parents},
                   {"max_parents", g.max_parents},
                   {"min_children", g.min_children},
                   {"max_children", g.max_children},
                   {"obstacle_fraction", g.obstacle_fraction},
                   {"parent_min_separation_m", g.parent_min_separation_m},
                   {"child_radius_m", g.child_radius_m},
                   {"cooccur_prob", g.cooccur_prob},
                   {"child_classes", g.child_classes},
                   {"max_attempts", g.max_attempts}};
    j["model"] = model_json();
    const auto& t = train;
    j["train"] = {{"gamma", t.loss.gamma},
                  {"entropy_beta", t.loss.entropy_beta},
                  {"value_weight", t.loss.value_weight},
                  {"lr", t.adam.lr},
                  {"beta1", t.adam.beta1},
                  {"beta2", t.adam.beta2},
                  {"adam_eps", t.adam.eps},
                  {"clip_norm", t.adam.clip_norm},
                  {"horizon", t.horizon},
                  {"workers", t.workers},
                  {"episodes", t.total_episodes},
                  {"max_episode_steps", t.max_episode_steps},
                  {"seed", t.seed},
                  {"log_every", t.log_every},
                  {"checkpoint_every", t.checkpoint_every},
                  {"targets", train_targets}};
    const auto& c = train.camera;
    j["camera"] = {{"hfov_deg", c.hfov_deg},       {"vfov_deg", c.vfov_deg},   {"max_range_m", c.max_range_m},
                   {"height_m", c.height_m},       {"drop_prob", c.drop_prob}, {"jitter_sigma", c.jitter_sigma}};
    const auto& r = train.reward;
    j["reward"] = {{"target_reward", r.target_reward}, {"parent_scale", r.parent_scale}, {"step_penalty", r.step_penalty}};
    j["eval"] = {{"episodes_per_bucket", eval.episodes_per_bucket},
                 {"seed", eval.seed},
                 {"max_episode_steps", eval.max_episode_steps},
                 {"greedy", eval.greedy},
                 {"workers", eval.workers},
                 {"max_draws", eval.max_draws},
                 {"targets", eval.targets}};
    j["split"] = {{"mode", split.mode},     {"n_seen", split.n_seen}, {"n_unseen", split.n_unseen},
                  {"seed", split.seed},     {"seen", split.seen},     {"unseen", split.unseen}};
    std::vector<std::string> vs;
    for (auto v : ablation.variants) vs.emplace_back(model::variant_name(v));
    j["ablation"] = {{"variants", vs}, {"seeds", ablation.seeds}};
    j["out"] = out;
    return j;
  }
};

namespace detail {

// Reads known keys of one JSON object and rejects the rest.
class Section {
 public:
  Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("config: '" + name() + "' must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    known_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config: '" + at(key) + "' has the wrong type (" + e.what() + ")");
    }
  }

  void section(const std::string& key, const std::function<void(Section&)>& fn) {
    known_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    Section s(*it, at(key));
    fn(s);
    s.finish();
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  const nlohmann::json& raw(const std::string& key) {
    known_.insert(key);
    return j_.at(key);
  }
  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string name() const { return path_.empty() ? "<root>" : path_; }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (known_.count(k) == 0) throw ConfigError("config: unknown key '" + at(k) + "'");
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> known_;
};

}  // namespace detail

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  detail::Section root(j, "");
  if (root.has("catalog")) {
    const auto& cat = root.raw("catalog");
    if (cat.is_string()) {
      c.catalog_name = cat.get<std::string>();
    } else if (cat.is_array()) {
      for (std::size_t k = 0; k < cat.size(); ++k) {
        detail::Section s(cat[k], "catalog[" + std::to_string(k) + "]");
        embed::ClassInfo info;
        s.get("name", info.name);
        s.get("prototype", info.prototype);
        s.get("size_m", info.size_m);
        s.get("height_m", info.height_m);
        s.get("is_parent", info.is_parent);
        s.get("parent", info.parent);
        double co = -1.0;
        s.get("cooccur", co);
        if (s.has("cooccur")) info.cooccur = co;
        s.finish();
        c.classes.push_back(std::move(info));
      }
    } else {
      throw ConfigError("config: 'catalog' must be a name or an array of classes");
    }
  }
  root.section("embedding", [&](detail::Section& s) {
    s.get("mode", c.embedding.mode);
    s.get("dim", c.embedding.dim);
    s.get("sigma", c.embedding.sigma);
    s.get("seed", c.embedding.seed);
    s.get("path", c.embedding.path);
  });
  root.section("scenes", [&](detail::Section& s) {
    auto& g = c.scenes.gen;
    s.get("count", c.scenes.count);
    s.get("seed", c.scenes.seed);
    s.get("test_fraction", c.scenes.test_fraction);
    s.get("min_width", g.min_width);
    s.get("max_width", g.max_width);
    s.get("min_height", g.min_height);
    s.get("max_height", g.max_height);
    s.get("min_parents", g.min_parents);
    s.get("max_parents", g.max_parents);
    s.get("min_children", g.min_children);
    s.get("max_children", g.max_children);
    s.get("obstacle_fraction", g.obstacle_fraction);
    s.get("parent_min_separation_m", g.parent_min_separation_m);
    s.get("child_radius_m", g.child_radius_m);
    s.get("cooccur_prob", g.cooccur_prob);
    s.get("child_classes", g.child_classes);
    s.get("max_attempts", g.max_attempts);
  });
  root.section("model", [&](detail::Section& s) {
    s.get("embed_dim", c.model.embed_dim);
    s.get("att_dim", c.model.att_dim);
    s.get("l1_dim", c.model.l1_dim);
    s.get("sa_dim", c.model.sa_dim);
    s.get("ffn_dim", c.model.ffn_dim);
    s.get("hidden_dim", c.model.hidden_dim);
    s.get("dropout", c.model.dropout);
    std::string variant(model::variant_name(c.model.variant));
    s.get("variant", variant);
    try {
      c.model.variant = model::parse_variant(variant);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: model.variant: ") + e.what());
    }
  });
  root.section("train", [&](detail::Section& s) {
    auto& t = c.train;
    s.get("gamma", t.loss.gamma);
    s.get("entropy_beta", t.loss.entropy_beta);
    s.get("value_weight", t.loss.value_weight);
    s.get("lr", t.adam.lr);
    s.get("beta1", t.adam.beta1);
    s.get("beta2", t.adam.beta2);
    s.get("adam_eps", t.adam.eps);
    s.get("clip_norm", t.adam.clip_norm);
    s.get("horizon", t.horizon);
    s.get("workers", t.workers);
    s.get("episodes", t.total_episodes);
    s.get("max_episode_steps", t.max_episode_steps);
    s.get("seed", t.seed);
    s.get("log_every", t.log_every);
    s.get("checkpoint_every", t.checkpoint_every);
    s.get("targets", c.train_targets);
  });
  root.section("camera", [&](detail::Section& s) {
    auto& cam = c.train.camera;
    s.get("hfov_deg", cam.hfov_deg);
    s.get("vfov_deg", cam.vfov_deg);
    s.get("max_range_m", cam.max_range_m);
    s.get("height_m", cam.height_m);
    s.get("drop_prob", cam.drop_prob);
    s.get("jitter_sigma", cam.jitter_sigma);
  });
  c.eval.camera = c.train.camera;
  root.section("reward", [&](detail::Section& s) {
    s.get("target_reward", c.train.reward.target_reward);
    s.get("parent_scale", c.train.reward.parent_scale);
    s.get("step_penalty", c.train.reward.step_penalty);
  });
  root.section("eval", [&](detail::Section& s) {
    s.get("episodes_per_bucket", c.eval.episodes_per_bucket);
    s.get("seed", c.eval.seed);
    s.get("max_episode_steps", c.eval.max_episode_steps);
    s.get("greedy", c.eval.greedy);
    s.get("workers", c.eval.workers);
    s.get("max_draws", c.eval.max_draws);
    s.get("targets", c.eval.targets);
  });
  root.section("split", [&](detail::Section& s) {
    s.get("mode", c.split.mode);
    s.get("n_seen", c.split.n_seen);
    s.get("n_unseen", c.split.n_unseen);
    s.get("seed", c.split.seed);
    s.get("seen", c.split.seen);
    s.get("unseen", c.split.unseen);
  });
  root.section("ablation", [&](detail::Section& s) {
    std::vector<std::string> names;
    s.get("variants", names);
    if (s.has("variants")) {
      c.ablation.variants.clear();
      for (const auto& n : names) {
        try {
          c.ablation.variants.push_back(model::parse_variant(n));
        } catch (const std::exception& e) {
          throw ConfigError(std::string("config: ablation.variants: ") + e.what());
        }
      }
    }
    s.get("seeds", c.ablation.seeds);
  });
  root.get("out", c.out);
  root.finish();
  c.validate();
  return c;
}

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

inline void save_resolved_config(const RunConfig& c, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << c.to_json().dump(2) << '\n';
}

}  // namespace tdanet::config
