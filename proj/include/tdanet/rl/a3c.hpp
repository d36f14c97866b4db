#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdanet/grad/graph.hpp"
#include "tdanet/grad/ops.hpp"

namespace tdanet::rl {

struct LossConfig {
  double gamma = 0.99;
  double entropy_beta = 0.01;
  double value_weight = 0.5;

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
    if (!(entropy_beta >= 0.0)) throw std::invalid_argument("entropy_beta must be non-negative");
    if (!(value_weight >= 0.0)) throw std::invalid_argument("value_weight must be non-negative");
  }
};

// R_t = r_t + gamma * R_{t+1}, seeded with the bootstrap value.
inline std::vector<double> n_step_returns(std::span<const double> rewards, double bootstrap, double gamma) {
  std::vector<double> out(rewards.size());
  double acc = bootstrap;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    acc = rewards[k] + gamma * acc;
    out[k] = acc;
  }
  return out;
}

struct LossTerms {
  grad::Var total;
  double policy = 0.0;   // sum of -log pi(a) * A
  double value = 0.0;    // sum of value_weight * (R - V)^2
  double entropy = 0.0;  // sum of H(pi), before the -beta factor
};

// Sum over steps of -log pi(a_t) * sg(A_t) + value_weight * (R_t - V_t)^2 -
// beta * H(pi_t). `frozen_advantages` replaces R_t - V_t in the policy term;
// without it the advantages are read from the current values.
inline LossTerms a3c_loss(grad::Graph& g, std::span<const grad::Var> logits, std::span<const grad::Var> values,
                          std::span<const int> actions, std::span<const double> rewards, double bootstrap,
                          const LossConfig& cfg,
                          std::optional<std::span<const double>> frozen_advantages = std::nullopt) {
  const std::size_t n = logits.size();
  if (n == 0) throw std::invalid_argument("a3c_loss: empty segment");
  if (values.size() != n || actions.size() != n || rewards.size() != n) {
    throw std::invalid_argument("a3c_loss: segment sequences differ in length");
  }
  if (frozen_advantages && frozen_advantages->size() != n) {
    throw std::invalid_argument("a3c_loss: advantage count differs from segment length");
  }
  const std::vector<double> returns = n_step_returns(rewards, bootstrap, cfg.gamma);
  LossTerms out;
  std::vector<grad::Var> terms;
  terms.reserve(3 * n);
  for (std::size_t t = 0; t < n; ++t) {
    const grad::Var logp = grad::log_softmax(g, logits[t]);
    const grad::Var probs = grad::softmax(g, logits[t]);
    const double v = g.scalar(values[t]);
    const double adv = frozen_advantages ? (*frozen_advantages)[t] : returns[t] - v;

    const grad::Var policy = grad::scale(g, grad::pick(g, logp, 0, static_cast<std::size_t>(actions[t])), -adv);
    const grad::Var diff = grad::sub(g, g.constant(grad::Tensor(1, 1, returns[t])), values[t]);
    const grad::Var value = grad::scale(g, grad::square(g, diff), cfg.value_weight);
    const grad::Var entropy = grad::neg(g, grad::sum(g, grad::mul(g, probs, logp)));

    out.policy += g.scalar(policy);
    out.value += g.scalar(value);
    out.entropy += g.scalar(entropy);
    terms.push_back(policy);
    terms.push_back(value);
    terms.push_back(grad::scale(g, entropy, -cfg.entropy_beta));
  }
  out.total = grad::add_n(g, terms);
  return out;
}

}  // namespace tdanet::rl
