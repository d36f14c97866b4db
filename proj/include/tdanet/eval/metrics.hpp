#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

#include "tdanet/sim/episode.hpp"

namespace tdanet::eval {

struct SuccessMetrics {
  double sr = 0.0;   // percent
  double spl = 0.0;  // percent
  std::size_t count = 0;
};

// S_i * L_i / max(L_i, e_i). Throws when a successful episode is shorter than
// its optimal path, which would mean the path oracle and the runner disagree.
inline double spl_term(const sim::EpisodeResult& r) {
  if (!r.success) return 0.0;
  if (!r.optimal) throw std::invalid_argument("spl_term: successful episode without an optimal path length");
  const int l = *r.optimal;
  if (r.actions < l) {
    throw std::logic_error("spl_term: episode for '" + r.target + "' took " + std::to_string(r.actions) +
                           " actions, fewer than the optimal " + std::to_string(l));
  }
  const int denom = std::max(l, r.actions);
  return denom == 0 ? 1.0 : static_cast<double>(l) / static_cast<double>(denom);
}

inline SuccessMetrics success_metrics(std::span<const sim::EpisodeResult> results) {
  SuccessMetrics m;
  m.count = results.size();
  if (results.empty()) return m;
  double s = 0.0;
  double spl = 0.0;
  for (const auto& r : results) {
    s += r.success ? 1.0 : 0.0;
    spl += spl_term(r);
  }
  m.sr = 100.0 * s / static_cast<double>(results.size());
  m.spl = 100.0 * spl / static_cast<double>(results.size());
  return m;
}

}  // namespace tdanet::eval
