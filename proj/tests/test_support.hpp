#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "tdanet/grad/graph.hpp"
#include "tdanet/grad/params.hpp"
#include "tdanet/grad/tensor.hpp"

namespace tdanet::testing {

inline grad::Tensor random_tensor(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  grad::Tensor t(rows, cols);
  for (double& v : t.data()) v = n(rng);
  return t;
}

// Plain central-difference derivative of a scalar closure w.r.t. one
// parameter coordinate. Kept separate from grad::grad_check.
inline double central_difference(const std::function<grad::Var(grad::Graph&, const grad::ParamSet&)>& f,
                                 const grad::ParamSet& params, std::size_t tensor, std::size_t coord,
                                 double eps = 1e-6) {
  grad::ParamSet probe = params;
  probe.tensor(tensor)[coord] += eps;
  double fp = 0.0;
  {
    grad::Graph g;
    fp = g.scalar(f(g, probe));
  }
  probe.tensor(tensor)[coord] -= 2.0 * eps;
  double fm = 0.0;
  {
    grad::Graph g;
    fm = g.scalar(f(g, probe));
  }
  return (fp - fm) / (2.0 * eps);
}

inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Max relative error over every parameter coordinate.
inline double fd_max_rel_error(const std::function<grad::Var(grad::Graph&, const grad::ParamSet&)>& f,
                               const grad::ParamSet& params, double eps = 1e-6, double floor = 1e-6) {
  grad::Graph g;
  const grad::Var loss = f(g, params);
  const grad::GradSet analytic = g.backward(loss, params);
  double worst = 0.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t k = 0; k < params.tensor(t).size(); ++k) {
      const double num = central_difference(f, params, t, k, eps);
      worst = std::max(worst, rel_error(analytic.tensors[t][k], num, floor));
    }
  }
  return worst;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tdanet_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace tdanet::testing
