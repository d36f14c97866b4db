#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdanet/grad/graph.hpp"
#include "tdanet/grad/params.hpp"

namespace tdanet::grad {

using LossClosure = std::function<Var(Graph&, const ParamSet&)>;

struct GradCheckOptions {
  double eps = 1e-6;
  std::size_t samples_per_tensor = 0;  // 0 checks every coordinate
  std::uint64_t seed = 0;
  // Denominator floor, so coordinates whose gradients are both ~0 compare
  // absolutely rather than relatively.
  double abs_floor = 1e-6;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

inline double evaluate_loss(const LossClosure& f, const ParamSet& params) {
  Graph g;
  return g.scalar(f(g, params));
}

// Central finite differences against reverse-mode gradients.
inline GradCheckReport grad_check(const LossClosure& f, const ParamSet& params, const GradCheckOptions& opt = {}) {
  if (!(opt.eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");

  GradSet analytic;
  double f0 = 0.0;
  {
    Graph g;
    const Var loss = f(g, params);
    f0 = g.scalar(loss);
    analytic = g.backward(loss, params);
  }
  const double f0_again = evaluate_loss(f, params);
  if (f0_again != f0) {
    throw std::logic_error("grad_check: closure is not deterministic (" + std::to_string(f0) + " vs " +
                           std::to_string(f0_again) + ")");
  }

  GradCheckReport report;
  ParamSet probe = params;
  std::mt19937_64 rng(opt.seed);
  for (std::size_t t = 0; t < probe.size(); ++t) {
    Tensor& p = probe.tensor(t);
    std::vector<std::size_t> coords(p.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (opt.samples_per_tensor > 0 && opt.samples_per_tensor < coords.size()) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opt.samples_per_tensor);
    }
    for (std::size_t k : coords) {
      const double orig = p[k];
      p[k] = orig + opt.eps;
      const double fp = evaluate_loss(f, probe);
      p[k] = orig - opt.eps;
      const double fm = evaluate_loss(f, probe);
      p[k] = orig;
      const double numeric = (fp - fm) / (2.0 * opt.eps);
      const double a = analytic.tensors[t][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), opt.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = probe.name(t);
        report.worst_index = k;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace tdanet::grad
