#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tdanet/config/run_config.hpp"
#include "tdanet/eval/ablation.hpp"
#include "tdanet/eval/attention_dump.hpp"
#include "tdanet/eval/evaluate.hpp"
#include "tdanet/eval/zero_shot.hpp"
#include "tdanet/rl/checkpoint.hpp"
#include "tdanet/rl/metrics.hpp"
#include "tdanet/rl/train.hpp"
#include "tdanet/sim/generate.hpp"
#include "tdanet/sim/scene.hpp"
#include "tdanet/util/hash.hpp"

namespace tdanet::cli {

namespace fs = std::filesystem;

// Usage and configuration problems; mapped to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Layout {
  fs::path root;
  fs::path scenes() const { return root / "scenes"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path reports() const { return root / "reports"; }
  fs::path dumps() const { return root / "dumps"; }
  fs::path manifest() const { return scenes() / "manifest.json"; }
  fs::path final_checkpoint() const { return checkpoints() / "final.ckpt"; }
  fs::path metrics_log() const { return checkpoints() / "metrics.jsonl"; }
};

struct Manifest {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Manifest load_manifest(const Layout& l) {
  if (!fs::exists(l.manifest())) {
    throw std::runtime_error("no scene manifest at " + l.manifest().string() + "; run gen-scenes first");
  }
  const auto j = nlohmann::json::parse(read_text(l.manifest()));
  return {j.at("train").get<std::vector<std::string>>(), j.at("test").get<std::vector<std::string>>()};
}

inline std::vector<sim::Scene> load_scenes(const Layout& l, const std::vector<std::string>& ids) {
  std::vector<sim::Scene> out;
  for (const auto& id : ids) out.push_back(sim::load_scene(l.scenes() / (id + ".json")));
  return out;
}

struct Common {
  std::string config;
  std::string out;
};

inline config::RunConfig load_config(const Common& c) {
  config::RunConfig rc = c.config.empty() ? config::parse_run_config("{}") : config::load_run_config(c.config);
  if (!c.out.empty()) rc.out = c.out;
  return rc;
}

inline fs::path config_base(const Common& c) { return c.config.empty() ? fs::current_path() : fs::path(c.config).parent_path(); }

inline std::uint64_t scene_seed(std::uint64_t seed, int k) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(k),
                    0x5ce9u};
  std::mt19937_64 r(seq);
  return r();
}

// ---- gen-scenes ----

inline void cmd_gen_scenes(config::RunConfig rc, std::optional<int> count, std::optional<std::uint64_t> seed,
                           std::ostream& out) {
  if (count) rc.scenes.count = *count;
  if (seed) rc.scenes.seed = *seed;
  rc.validate();
  const Layout l{rc.out};
  const embed::ClassCatalog cat = rc.catalog();
  const int n = rc.scenes.count;
  const int n_test = static_cast<int>(std::lround(rc.scenes.test_fraction * n));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(rc.scenes.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::set<int> test(order.begin(), order.begin() + n_test);

  fs::create_directories(l.scenes());
  Manifest m;
  for (int k = 0; k < n; ++k) {
    char id[32];
    std::snprintf(id, sizeof id, "scene_%03d", k);
    sim::Scene s = sim::generate_scene(cat, rc.scenes.gen, scene_seed(rc.scenes.seed, k), id);
    s.split = test.count(k) ? sim::Split::test : sim::Split::train;
    sim::save_scene(s, l.scenes() / (std::string(id) + ".json"));
    (test.count(k) ? m.test : m.train).push_back(id);
  }
  nlohmann::ordered_json j;
  j["seed"] = rc.scenes.seed;
  j["count"] = n;
  j["train"] = m.train;
  j["test"] = m.test;
  write_text(l.manifest(), j.dump(2) + "\n");
  config::save_resolved_config(rc, l.scenes() / "config.json");
  out << "wrote " << n << " scenes (" << m.train.size() << " train, " << m.test.size() << " test) to "
      << l.scenes().string() << "\n";
}

// ---- train ----

struct TrainFlags {
  std::string resume;
  std::optional<int> workers;
  std::optional<std::int64_t> episodes;
  std::optional<std::uint64_t> seed;
};

inline rl::TrainOptions train_options(const config::RunConfig& rc, const std::vector<sim::Scene>& scenes) {
  rl::TrainOptions opt;
  opt.targets = rc.train_targets;
  if (auto split = rc.split_spec()) {
    opt.mask = split->mask();
    if (opt.targets.empty()) opt.targets = split->seen;
    for (const auto& t : opt.targets) {
      if (opt.mask.hidden.count(t)) throw UsageError("train target '" + t + "' is in the unseen split");
    }
  }
  // Only targets present in some training scene can be sampled.
  std::vector<std::string> present;
  for (const auto& t : opt.targets) {
    for (const auto& s : scenes) {
      if (s.has_class(t)) {
        present.push_back(t);
        break;
      }
    }
  }
  if (!opt.targets.empty() && present.empty()) throw std::runtime_error("no training scene contains any configured target");
  opt.targets = present;
  return opt;
}

inline void cmd_train(config::RunConfig rc, const TrainFlags& f, const fs::path& base, std::ostream& out) {
  if (f.workers) rc.train.workers = *f.workers;
  if (f.episodes) rc.train.total_episodes = *f.episodes;
  if (f.seed) rc.train.seed = *f.seed;
  rc.validate();
  const Layout l{rc.out};
  const Manifest m = load_manifest(l);
  const std::vector<sim::Scene> scenes = load_scenes(l, m.train);
  const embed::ClassCatalog cat = rc.catalog();
  const embed::EmbeddingTable table = rc.embeddings(base);
  const std::uint64_t hash = rc.model_hash();
  const std::string resolved = rc.to_json().dump();

  rl::TrainOptions opt = train_options(rc, scenes);
  std::optional<rl::Checkpoint> resumed;
  if (!f.resume.empty()) {
    resumed = rl::load_checkpoint(f.resume, hash);
    opt.resume = &resumed->state;
    out << "resuming from " << f.resume << " at episode " << resumed->state.episodes << "\n";
  }
  fs::create_directories(l.checkpoints());
  config::save_resolved_config(rc, l.checkpoints() / "config.json");
  if (auto split = rc.split_spec()) {
    eval::SplitSpec s = *split;
    s.train_scenes = m.train;
    s.test_scenes = m.test;
    write_text(l.checkpoints() / "split.json", s.to_json().dump(2) + "\n");
  }

  std::ofstream log(l.metrics_log(), resumed ? std::ios::app : std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + l.metrics_log().string());
  opt.hooks.on_log = [&](const rl::MetricsRecord& r) {
    log << r.to_line() << "\n";
    log.flush();
    out << r.to_line() << "\n";
  };
  opt.hooks.on_checkpoint = [&](const rl::TrainState& s) {
    char name[48];
    std::snprintf(name, sizeof name, "ckpt_%09lld.ckpt", static_cast<long long>(s.episodes));
    rl::save_checkpoint({rl::kCheckpointVersion, hash, resolved, s}, l.checkpoints() / name);
  };
  const rl::TrainResult r = rl::train(rc.train, rc.model, scenes, cat, table, opt);
  rl::save_checkpoint({rl::kCheckpointVersion, hash, resolved, r.state}, l.final_checkpoint());
  out << "trained " << r.state.episodes << " episodes, " << r.updates << " updates (" << r.nan_skips
      << " skipped); checkpoint " << l.final_checkpoint().string() << "\n";
  if (!opt.mask.empty()) {
    out << "masked detections removed " << r.mask_counters.removed << ", leaked " << r.mask_counters.leaked << "\n";
  }
}

// ---- eval ----

struct EvalFlags {
  std::string checkpoint;
  std::string split = "all";
  std::string baseline;
  std::optional<std::size_t> episodes;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

inline std::vector<std::string> split_targets(const config::RunConfig& rc, const std::string& split) {
  if (split == "all") return rc.eval.targets;
  const auto spec = rc.split_spec();
  if (!spec) throw UsageError("--split " + split + " needs split.mode = zero_shot in the config");
  return split == "seen" ? spec->seen : spec->unseen;
}

inline eval::EvalReport cmd_eval(config::RunConfig rc, const EvalFlags& f, const fs::path& base, std::ostream& out) {
  if (f.split != "all" && f.split != "seen" && f.split != "unseen") throw UsageError("--split must be seen, unseen or all");
  if (!f.baseline.empty() && f.baseline != "random") throw UsageError("--baseline supports only 'random'");
  if (f.episodes) rc.eval.episodes_per_bucket = *f.episodes;
  if (f.workers) rc.eval.workers = *f.workers;
  if (f.seed) rc.eval.seed = *f.seed;
  rc.eval.targets = split_targets(rc, f.split);
  rc.validate();
  const Layout l{rc.out};
  const std::vector<sim::Scene> scenes = load_scenes(l, load_manifest(l).test);

  eval::EvalReport rep;
  std::string name;
  if (f.baseline == "random") {
    rep = eval::random_baseline(scenes, rc.eval);
    name = "random_" + f.split;
  } else {
    const fs::path ck_path = f.checkpoint.empty() ? l.final_checkpoint() : fs::path(f.checkpoint);
    if (!fs::exists(ck_path)) throw std::runtime_error("checkpoint not found: " + ck_path.string());
    const rl::Checkpoint ck = rl::load_checkpoint(ck_path, rc.model_hash());
    const model::TdaNet net(rc.model);
    net.check_params(ck.state.params);
    const embed::EmbeddingTable table = rc.embeddings(base);
    rep = eval::evaluate(scenes, eval::model_policy(net, ck.state.params, table, rc.eval.greedy), rc.eval,
                         std::string(model::variant_name(rc.model.variant)));
    const auto bytes = read_text(ck_path);
    rep.provenance.checkpoint_hash = util::hex64(util::fnv1a(bytes));
    name = "model_" + f.split;
  }
  rep.provenance.split = f.split;
  fs::create_directories(l.reports());
  write_text(l.reports() / ("eval_" + name + ".json"), rep.to_json().dump(2) + "\n");
  write_text(l.reports() / ("eval_" + name + ".txt"), rep.summary());
  config::save_resolved_config(rc, l.reports() / ("eval_" + name + "_config.json"));
  out << rep.summary();
  return rep;
}

// ---- inspect ----

struct InspectFlags {
  std::string checkpoint;
  std::string scene;
  std::string target;
  std::vector<int> start;  // i j heading
  bool render = false;
  int max_steps = 0;
};

inline void cmd_inspect(config::RunConfig rc, const InspectFlags& f, const fs::path& base, std::ostream& out) {
  rc.validate();
  if (f.scene.empty()) throw UsageError("--scene is required");
  if (f.target.empty()) throw UsageError("--target is required");
  if (!f.start.empty() && f.start.size() != 3) throw UsageError("--start takes three integers: i j heading");
  const Layout l{rc.out};
  const sim::Scene scene = sim::load_scene(l.scenes() / (f.scene + ".json"));
  if (!scene.has_class(f.target)) throw std::runtime_error("scene " + f.scene + " has no '" + f.target + "'");
  const fs::path ck_path = f.checkpoint.empty() ? l.final_checkpoint() : fs::path(f.checkpoint);
  if (!fs::exists(ck_path)) throw std::runtime_error("checkpoint not found: " + ck_path.string());
  const rl::Checkpoint ck = rl::load_checkpoint(ck_path, rc.model_hash());
  const model::TdaNet net(rc.model);
  const embed::EmbeddingTable table = rc.embeddings(base);

  sim::AgentPose start;
  if (!f.start.empty()) {
    start = {f.start[0], f.start[1], f.start[2], 0};
    start.validate();
    if (!scene.is_free(start.i, start.j)) throw UsageError("--start cell is blocked or outside the scene");
  } else {
    // First free cell (row-major) with a reachable view of the target.
    bool found = false;
    for (const auto& c : scene.free_cells()) {
      const sim::AgentPose p{c.i, c.j, 0, 0};
      const auto len = sim::optimal_path_length(scene, p, f.target, rc.eval.camera);
      if (len && *len >= 1) {
        start = p;
        found = true;
        break;
      }
    }
    if (!found) throw std::runtime_error("no start in " + f.scene + " can reach a view of '" + f.target + "'");
  }
  const int steps = f.max_steps > 0 ? f.max_steps : rc.eval.max_episode_steps;
  const eval::AttentionDump d = eval::attention_dump(net, ck.state.params, table, scene, start, f.target, steps, rc.eval.camera);
  std::string stem = f.scene + "_" + f.target;
  std::replace(stem.begin(), stem.end(), ' ', '_');
  fs::create_directories(l.dumps());
  write_text(l.dumps() / (stem + ".json"), d.to_json().dump(2) + "\n");
  out << "dump " << (l.dumps() / (stem + ".json")).string() << "\n";
  if (f.render) {
    write_text(l.dumps() / (stem + ".svg"), eval::render_svg(scene, d, rc.eval.camera));
    out << "render " << (l.dumps() / (stem + ".svg")).string() << "\n";
  }
  out << (d.result.success ? "success" : "failure") << " after " << d.result.actions << " actions";
  if (d.optimal) out << " (optimal " << *d.optimal << ")";
  out << "\n";
}

// ---- ablation ----

inline eval::AblationTable cmd_ablation(config::RunConfig rc, std::optional<std::int64_t> episodes,
                                        const fs::path& base, std::ostream& out) {
  if (episodes) rc.train.total_episodes = *episodes;
  rc.validate();
  const Layout l{rc.out};
  const Manifest m = load_manifest(l);
  const std::vector<sim::Scene> train = load_scenes(l, m.train);
  const std::vector<sim::Scene> test = load_scenes(l, m.test);
  eval::AblationConfig ac;
  ac.train = rc.train;
  ac.model = rc.model;
  ac.eval = rc.eval;
  ac.variants = rc.ablation.variants;
  ac.seeds = rc.ablation.seeds;
  const rl::TrainOptions opt = train_options(rc, train);
  ac.train_targets = opt.targets;
  ac.mask = opt.mask;
  if (rc.split_spec() && ac.eval.targets.empty()) ac.eval.targets = rc.split_spec()->seen;
  const embed::EmbeddingTable table = rc.embeddings(base);
  const eval::AblationTable t = eval::run_ablation(ac, train, test, rc.catalog(), table, [&](const eval::AblationRun& r) {
    const auto& b = r.report.bucket(1).metrics;
    out << model::variant_name(r.variant) << " seed " << r.seed << ": L>=1 SR " << b.sr << " SPL " << b.spl << "\n";
  });
  fs::create_directories(l.reports());
  write_text(l.reports() / "ablation.txt", t.to_text());
  write_text(l.reports() / "ablation.json", t.to_json().dump(2) + "\n");
  config::save_resolved_config(rc, l.reports() / "ablation_config.json");
  out << t.to_text();
  return t;
}

// Exit codes: 0 success, 1 runtime error, 2 usage or configuration error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"TDANet object-goal navigation: scene generation, training, evaluation, inspection"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON run config")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "Output directory (overrides config 'out')");
  };

  auto* gen = app.add_subcommand("gen-scenes", "Generate scene files and a train/test manifest");
  add_common(gen);
  std::optional<int> count;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--count", count, "Number of scenes")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "Generator seed");

  auto* tr = app.add_subcommand("train", "Train with A3C on the manifest's train scenes");
  add_common(tr);
  TrainFlags tf;
  tr->add_option("--resume", tf.resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  tr->add_option("--workers", tf.workers, "Worker threads")->check(CLI::PositiveNumber);
  tr->add_option("--episodes", tf.episodes, "Episode budget for this run")->check(CLI::NonNegativeNumber);
  tr->add_option("--seed", tf.seed, "Training seed");

  auto* ev = app.add_subcommand("eval", "Evaluate SR/SPL on the manifest's test scenes");
  add_common(ev);
  EvalFlags ef;
  ev->add_option("--checkpoint", ef.checkpoint, "Checkpoint (default: <out>/checkpoints/final.ckpt)");
  ev->add_option("--split", ef.split, "Target classes: seen, unseen or all")->check(CLI::IsMember({"seen", "unseen", "all"}));
  ev->add_option("--baseline", ef.baseline, "Evaluate a baseline policy instead of a checkpoint")->check(CLI::IsMember({"random"}));
  ev->add_option("--episodes", ef.episodes, "Episodes per bucket")->check(CLI::PositiveNumber);
  ev->add_option("--workers", ef.workers, "Worker threads")->check(CLI::PositiveNumber);
  ev->add_option("--seed", ef.seed, "Evaluation seed");

  auto* in = app.add_subcommand("inspect", "Dump per-step attention for one episode");
  add_common(in);
  InspectFlags inf;
  in->add_option("--checkpoint", inf.checkpoint, "Checkpoint (default: <out>/checkpoints/final.ckpt)");
  in->add_option("--scene", inf.scene, "Scene id, e.g. scene_003")->required();
  in->add_option("--target", inf.target, "Target class")->required();
  in->add_option("--start", inf.start, "Start pose: i j heading")->expected(3);
  in->add_flag("--render", inf.render, "Also write a top-down SVG");
  in->add_option("--max-steps", inf.max_steps, "Step cap (default: eval.max_episode_steps)");

  auto* ab = app.add_subcommand("ablation", "Train and evaluate every configured variant and seed");
  add_common(ab);
  std::optional<std::int64_t> ab_episodes;
  ab->add_option("--episodes", ab_episodes, "Episode budget per run")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    const config::RunConfig rc = load_config(common);
    const fs::path base = config_base(common);
    if (gen->parsed()) cmd_gen_scenes(rc, count, gen_seed, out);
    if (tr->parsed()) cmd_train(rc, tf, base, out);
    if (ev->parsed()) cmd_eval(rc, ef, base, out);
    if (in->parsed()) cmd_inspect(rc, inf, base, out);
    if (ab->parsed()) cmd_ablation(rc, ab_episodes, base, out);
  } catch (const config::ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace tdanet::cli
