#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdanet/detection.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/grad/graph.hpp"
#include "tdanet/grad/layers.hpp"
#include "tdanet/grad/ops.hpp"
#include "tdanet/grad/params.hpp"
#include "tdanet/model/inputs.hpp"

namespace tdanet::model {

using grad::Graph;
using grad::Mode;
using grad::ParamSet;
using grad::Tensor;
using grad::Var;

enum class Variant { full, no_ta, no_sa, no_ta_no_sa };

inline std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_ta: return "no_ta";
    case Variant::no_sa: return "no_sa";
    case Variant::no_ta_no_sa: return "no_ta_no_sa";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "full") return Variant::full;
  if (s == "no_ta") return Variant::no_ta;
  if (s == "no_sa") return Variant::no_sa;
  if (s == "no_ta_no_sa") return Variant::no_ta_no_sa;
  throw std::invalid_argument("unknown model variant '" + std::string(s) + "'");
}

struct ModelConfig {
  std::size_t embed_dim = 32;
  std::size_t att_dim = 16;
  std::size_t l1_dim = 32;
  std::size_t sa_dim = 32;
  std::size_t ffn_dim = 64;
  std::size_t hidden_dim = 64;
  double dropout = 0.25;
  Variant variant = Variant::full;

  std::size_t input_dim() const { return 3 + embed_dim; }
  bool uses_ta() const { return variant == Variant::full || variant == Variant::no_sa; }
  bool uses_sa() const { return variant == Variant::full || variant == Variant::no_ta; }

  static ModelConfig desk() { return {}; }

  // Large widths for 300-d word vectors, about 2.9M parameters.
  static ModelConfig full_scale() {
    ModelConfig c;
    c.embed_dim = 300;
    c.att_dim = 512;
    c.l1_dim = 512;
    c.sa_dim = 512;
    c.ffn_dim = 512;
    c.hidden_dim = 512;
    return c;
  }
};

struct HiddenState {
  Tensor h;
  Tensor c;

  static HiddenState zeros(std::size_t hidden) { return {Tensor(1, hidden, 0.0), Tensor(1, hidden, 0.0)}; }
};

struct HiddenVars {
  Var h;
  Var c;
};

struct AttentionOutput {
  Var v_corr;  // 1 x n
  Var v_att;   // 1 x n
  Var v_l1;    // 1 x d_L1
  Var m_l1;    // n x d_L1
};

struct StepOutput {
  Var logits;  // 1 x 6, action order as in kActionNames
  Var value;   // 1 x 1
  HiddenVars hidden;
  Var representation;  // state representation fed to the FFN
  std::optional<AttentionStep> trace;

  HiddenState hidden_values(const Graph& g) const { return {g.value(hidden.h), g.value(hidden.c)}; }
};

class TdaNet {
 public:
  explicit TdaNet(ModelConfig cfg) : cfg_(cfg) {
    if (cfg_.embed_dim == 0 || cfg_.att_dim == 0 || cfg_.l1_dim == 0 || cfg_.sa_dim == 0 || cfg_.ffn_dim == 0 ||
        cfg_.hidden_dim == 0) {
      throw std::invalid_argument("ModelConfig: all dimensions must be positive");
    }
    if (!(cfg_.dropout >= 0.0 && cfg_.dropout < 1.0)) throw std::invalid_argument("ModelConfig: dropout must lie in [0, 1)");
  }

  const ModelConfig& config() const { return cfg_; }

  // Registration order: [ta], linear1, siamese, [fuse], ffn, lstm, actor, critic.
  // Weights are uniform with bound gain*sqrt(3/fan_in) (gain sqrt(2) ahead of a
  // ReLU), LSTM weights uniform +-1/sqrt(fan_in), biases zero.
  ParamSet init_params(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    ParamSet p;
    auto uniform = [&](std::size_t rows, std::size_t cols, double bound) {
      std::uniform_real_distribution<double> u(-bound, bound);
      Tensor t(rows, cols);
      for (double& v : t.data()) v = u(rng);
      return t;
    };
    auto add_linear = [&](const std::string& name, std::size_t in, std::size_t out, double gain) {
      p.add(name + ".weight", uniform(in, out, gain * std::sqrt(3.0 / static_cast<double>(in))));
      p.add(name + ".bias", Tensor(1, out, 0.0));
    };
    const double relu_gain = std::sqrt(2.0);
    const std::size_t in = cfg_.input_dim();
    if (cfg_.uses_ta()) add_linear("ta", in, cfg_.att_dim, 1.0);
    add_linear("linear1", in, cfg_.l1_dim, 1.0);
    add_linear("siamese", cfg_.l1_dim, cfg_.sa_dim, relu_gain);
    if (!cfg_.uses_sa()) add_linear("fuse", 2 * cfg_.sa_dim, cfg_.sa_dim, 1.0);
    add_linear("ffn", cfg_.sa_dim, cfg_.ffn_dim, relu_gain);
    const std::size_t h = cfg_.hidden_dim;
    p.add("lstm.weight_ih", uniform(cfg_.ffn_dim, 4 * h, 1.0 / std::sqrt(static_cast<double>(cfg_.ffn_dim))));
    p.add("lstm.weight_hh", uniform(h, 4 * h, 1.0 / std::sqrt(static_cast<double>(h))));
    p.add("lstm.bias", Tensor(1, 4 * h, 0.0));
    add_linear("actor", h, kActionCount, 1.0);
    add_linear("critic", h, 1, 1.0);
    return p;
  }

  // Throws unless params has exactly the names and shapes init_params produces.
  void check_params(const ParamSet& params) const {
    const ParamSet ref = init_params(0);
    if (ref.size() != params.size()) {
      throw std::invalid_argument("TdaNet: expected " + std::to_string(ref.size()) + " parameter tensors, got " +
                                  std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < ref.size(); ++i) {
      if (ref.name(i) != params.name(i) || ref.tensor(i).shape() != params.tensor(i).shape()) {
        throw std::invalid_argument("TdaNet: parameter " + std::to_string(i) + " is '" + params.name(i) + "' " +
                                    params.tensor(i).shape().to_string() + ", expected '" + ref.name(i) + "' " +
                                    ref.tensor(i).shape().to_string());
      }
    }
  }

  // Correspondence of every detection row with the target row through one
  // shared projection, softmax-normalised, then used to pool the Linear1
  // features of the rows.
  AttentionOutput target_attention(Graph& g, const ParamSet& params, Var md, Var vt) const {
    if (!cfg_.uses_ta()) throw std::logic_error("target_attention: variant has no attention parameters");
    require_width("target_attention (M_d vs V_t)", g.shape(md), g.shape(vt));
    const Var w = g.param(params, "ta.weight");
    const Var b = g.param(params, "ta.bias");
    const Var proj_t = grad::linear(g, vt, w, b);
    const Var proj_d = grad::linear(g, md, w, b);
    AttentionOutput out;
    out.v_corr = grad::matmul_nt(g, proj_t, proj_d);
    out.v_att = grad::softmax(g, out.v_corr);
    out.m_l1 = linear1(g, params, md);
    out.v_l1 = grad::matmul(g, out.v_att, out.m_l1);
    return out;
  }

  // Weight-shared branch applied to the pooled observation features and to
  // the target row projected through Linear1; the state code is the
  // elementwise absolute difference of the two branch outputs.
  Var siamese_diff(Graph& g, const ParamSet& params, Var v_l1, Var vt, Mode mode, std::mt19937_64& rng) const {
    const Var t_l1 = linear1(g, params, vt);
    return siamese_from_branches(g, params, v_l1, t_l1, mode, rng);
  }

  Var siamese_from_branches(Graph& g, const ParamSet& params, Var obs_in, Var tgt_in, Mode mode,
                            std::mt19937_64& rng) const {
    if (g.shape(obs_in) != g.shape(tgt_in)) throw grad::DimensionError("siamese_diff", g.shape(obs_in), g.shape(tgt_in));
    const Var obs = branch(g, params, obs_in);
    const Var tgt = branch(g, params, tgt_in);
    Var rep;
    if (cfg_.uses_sa()) {
      rep = grad::abs(g, grad::sub(g, obs, tgt));
    } else {
      rep = grad::linear(g, grad::concat_cols(g, obs, tgt), g.param(params, "fuse.weight"), g.param(params, "fuse.bias"));
    }
    return grad::dropout(g, rep, cfg_.dropout, mode, rng);
  }

  StepOutput forward(Graph& g, const ParamSet& params, const DetectedObjectMatrix& md, const TargetVector& vt,
                     const HiddenVars& hidden, Mode mode, std::mt19937_64& rng,
                     std::span<const Detection> detections = {}) const {
    if (md.width() != cfg_.input_dim()) {
      throw grad::DimensionError("forward (M_d width vs model input)", md.rows.shape(), grad::Shape{1, cfg_.input_dim()});
    }
    const Var md_v = g.constant(md.rows);
    const Var vt_v = g.constant(vt.row);
    require_width("forward (M_d vs V_t)", g.shape(md_v), g.shape(vt_v));

    StepOutput out;
    Var pooled;
    if (cfg_.uses_ta()) {
      const AttentionOutput att = target_attention(g, params, md_v, vt_v);
      pooled = att.v_l1;
      AttentionStep trace;
      trace.detections.assign(detections.begin(), detections.end());
      const auto corr = g.value(att.v_corr).data();
      const auto probs = g.value(att.v_att).data();
      trace.v_corr.assign(corr.begin(), corr.end());
      trace.v_att.assign(probs.begin(), probs.end());
      out.trace = std::move(trace);
    } else {
      pooled = grad::mean_rows(g, linear1(g, params, md_v));
    }
    out.representation = siamese_diff(g, params, pooled, vt_v, mode, rng);

    const Var ffn = grad::relu(g, grad::linear(g, out.representation, g.param(params, "ffn.weight"),
                                               g.param(params, "ffn.bias")));
    const grad::LstmWeights lw{g.param(params, "lstm.weight_ih"), g.param(params, "lstm.weight_hh"),
                               g.param(params, "lstm.bias")};
    const grad::LstmOutput cell = grad::lstm_step(g, ffn, hidden.h, hidden.c, lw);
    out.hidden = {cell.h, cell.c};
    out.logits = grad::linear(g, cell.h, g.param(params, "actor.weight"), g.param(params, "actor.bias"));
    out.value = grad::linear(g, cell.h, g.param(params, "critic.weight"), g.param(params, "critic.bias"));
    return out;
  }

  StepOutput forward(Graph& g, const ParamSet& params, std::span<const Detection> detections, std::string_view target,
                     const embed::EmbeddingTable& table, const HiddenVars& hidden, Mode mode,
                     std::mt19937_64& rng) const {
    return forward(g, params, build_detected_matrix(detections, table), build_target_vector(target, table), hidden,
                   mode, rng, detections);
  }

  HiddenVars hidden_constants(Graph& g, const HiddenState& s) const { return {g.constant(s.h), g.constant(s.c)}; }

 private:
  static void require_width(const char* op, grad::Shape a, grad::Shape b) {
    if (a.cols != b.cols || b.rows != 1) throw grad::DimensionError(op, a, b);
  }

  Var linear1(Graph& g, const ParamSet& params, Var x) const {
    return grad::linear(g, x, g.param(params, "linear1.weight"), g.param(params, "linear1.bias"));
  }

  Var branch(Graph& g, const ParamSet& params, Var x) const {
    return grad::relu(g, grad::linear(g, x, g.param(params, "siamese.weight"), g.param(params, "siamese.bias")));
  }

  ModelConfig cfg_;
};

}  // namespace tdanet::model
