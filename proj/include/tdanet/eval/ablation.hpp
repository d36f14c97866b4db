#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdanet/embed/catalog.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/eval/evaluate.hpp"
#include "tdanet/model/tdanet.hpp"
#include "tdanet/rl/train.hpp"
#include "tdanet/sim/scene.hpp"

namespace tdanet::eval {

inline const std::vector<model::Variant>& all_variants() {
  static const std::vector<model::Variant> v{model::Variant::full, model::Variant::no_ta, model::Variant::no_sa,
                                             model::Variant::no_ta_no_sa};
  return v;
}

struct AblationConfig {
  rl::TrainConfig train;
  model::ModelConfig model;
  EvalConfig eval;
  std::vector<model::Variant> variants = all_variants();
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::string> train_targets;  // empty: every child class in the train scenes
  rl::DetectionMask mask;
};

struct AblationRun {
  model::Variant variant = model::Variant::full;
  std::uint64_t seed = 0;
  EvalReport report;
  grad::ParamSet params;
};

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
  }
  return m;
}

inline constexpr const char* kAblationColumns[] = {"L>=1 SR", "L>=1 SPL", "L>=5 SR", "L>=5 SPL"};

struct AblationRow {
  model::Variant variant = model::Variant::full;
  std::vector<std::array<double, 4>> per_seed;  // columns as kAblationColumns
  std::array<MeanStderr, 4> cells;
};

struct AblationTable {
  std::vector<std::uint64_t> seeds;
  std::vector<AblationRow> rows;

  const AblationRow& row(model::Variant v) const {
    for (const auto& r : rows) {
      if (r.variant == v) return r;
    }
    throw std::out_of_range("AblationTable: variant " + std::string(model::variant_name(v)) + " not run");
  }

  std::string to_text() const {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-12s", "variant");
    out += buf;
    for (const char* c : kAblationColumns) {
      std::snprintf(buf, sizeof buf, "  %15s", c);
      out += buf;
    }
    out += "\n";
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%-12s", std::string(model::variant_name(r.variant)).c_str());
      out += buf;
      for (const auto& c : r.cells) {
        std::snprintf(buf, sizeof buf, "  %7.1f +- %4.1f", c.mean, c.stderr_);
        out += buf;
      }
      out += "\n";
    }
    return out;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["seeds"] = seeds;
    j["columns"] = std::vector<std::string>(std::begin(kAblationColumns), std::end(kAblationColumns));
    j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json jr;
      jr["variant"] = model::variant_name(r.variant);
      jr["mean"] = nlohmann::ordered_json::array();
      jr["stderr"] = nlohmann::ordered_json::array();
      for (const auto& c : r.cells) {
        jr["mean"].push_back(c.mean);
        jr["stderr"].push_back(c.stderr_);
      }
      jr["per_seed"] = r.per_seed;
      j["rows"].push_back(jr);
    }
    return j;
  }
};

inline std::array<double, 4> ablation_cells(const EvalReport& rep) {
  const auto& a = rep.bucket(1).metrics;
  const auto& b = rep.bucket(5).metrics;
  return {a.sr, a.spl, b.sr, b.spl};
}

inline AblationTable tabulate(const std::vector<AblationRun>& runs, const std::vector<model::Variant>& variants,
                              const std::vector<std::uint64_t>& seeds) {
  AblationTable t;
  t.seeds = seeds;
  for (model::Variant v : variants) {
    AblationRow row;
    row.variant = v;
    for (const auto& r : runs) {
      if (r.variant == v) row.per_seed.push_back(ablation_cells(r.report));
    }
    for (std::size_t c = 0; c < 4; ++c) {
      std::vector<double> xs;
      for (const auto& s : row.per_seed) xs.push_back(s[c]);
      row.cells[c] = mean_stderr(xs);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

// Trains every variant for every seed and evaluates it on the test scenes with
// one shared evaluation seed, so all runs face the same episodes.
inline AblationTable run_ablation(const AblationConfig& cfg, const std::vector<sim::Scene>& train_scenes,
                                  const std::vector<sim::Scene>& test_scenes, const embed::ClassCatalog& catalog,
                                  const embed::EmbeddingTable& table,
                                  const std::function<void(const AblationRun&)>& on_run = {}) {
  if (cfg.seeds.empty()) throw std::invalid_argument("run_ablation: at least one seed is required");
  if (cfg.variants.empty()) throw std::invalid_argument("run_ablation: at least one variant is required");
  std::vector<AblationRun> runs;
  for (model::Variant v : cfg.variants) {
    for (std::uint64_t seed : cfg.seeds) {
      model::ModelConfig mc = cfg.model;
      mc.variant = v;
      rl::TrainConfig tc = cfg.train;
      tc.seed = seed;
      rl::TrainOptions opt;
      opt.targets = cfg.train_targets;
      opt.mask = cfg.mask;
      rl::TrainResult tr = rl::train(tc, mc, train_scenes, catalog, table, opt);
      const model::TdaNet net(mc);
      AblationRun run;
      run.variant = v;
      run.seed = seed;
      run.report = evaluate(test_scenes, model_policy(net, tr.state.params, table, cfg.eval.greedy), cfg.eval,
                            std::string(model::variant_name(v)));
      run.params = std::move(tr.state.params);
      if (on_run) on_run(run);
      runs.push_back(std::move(run));
    }
  }
  return tabulate(runs, cfg.variants, cfg.seeds);
}

}  // namespace tdanet::eval
