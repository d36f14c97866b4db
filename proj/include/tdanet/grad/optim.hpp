#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdanet/grad/params.hpp"
#include "tdanet/grad/tensor.hpp"

namespace tdanet::grad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 40.0;  // <= 0 disables clipping
};

// First/second moment estimates. One instance is shared by every worker that
// updates the same ParamSet.
struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;

  static AdamState for_params(const ParamSet& params) {
    AdamState s;
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto sh = params.tensor(i).shape();
      s.m.emplace_back(sh.rows, sh.cols, 0.0);
      s.v.emplace_back(sh.rows, sh.cols, 0.0);
    }
    return s;
  }
};

struct UpdateResult {
  bool applied = false;
  double grad_norm = 0.0;     // before clipping
  double applied_norm = 0.0;  // after clipping
  std::string diagnostic;
};

// Scales grads in place so their global L2 norm is at most max_norm. Returns
// the norm before scaling.
inline double clip_global_norm(GradSet& grads, double max_norm) {
  const double norm = grads.global_norm();
  if (max_norm > 0.0 && norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

inline UpdateResult optimizer_step(ParamSet& params, AdamState& state, GradSet grads, const AdamConfig& cfg) {
  UpdateResult result;
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw std::invalid_argument("optimizer_step: gradient/state count does not match ParamSet");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads.tensors[i].shape() != params.tensor(i).shape()) {
      throw DimensionError("optimizer_step (" + params.name(i) + ")", params.tensor(i).shape(), grads.tensors[i].shape());
    }
    if (!all_finite(grads.tensors[i])) {
      result.diagnostic = "non-finite gradient in '" + params.name(i) + "'; update rejected";
      return result;
    }
  }
  result.grad_norm = clip_global_norm(grads, cfg.clip_norm);
  result.applied_norm = grads.global_norm();

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.tensor(i);
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    const Tensor& gr = grads.tensors[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * gr[k];
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * gr[k] * gr[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
  params.bump_version();
  result.applied = true;
  return result;
}

}  // namespace tdanet::grad
