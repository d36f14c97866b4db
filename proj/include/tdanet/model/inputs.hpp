#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "tdanet/detection.hpp"
#include "tdanet/embed/embeddings.hpp"
#include "tdanet/grad/tensor.hpp"

namespace tdanet::model {

// Box centre and area of the desired view of the target: centred, a quarter
// of the image.
inline constexpr double kTargetX = 0.5;
inline constexpr double kTargetY = 0.5;
inline constexpr double kTargetArea = 0.25;

// n x (3 + E): one [x, y, S, w] row per detection. An empty observation is a
// single all-zero row.
struct DetectedObjectMatrix {
  grad::Tensor rows;

  std::size_t count() const { return rows.rows(); }
  std::size_t width() const { return rows.cols(); }
};

// 1 x (3 + E): [0.5, 0.5, 0.25, w_t].
struct TargetVector {
  grad::Tensor row;

  std::size_t width() const { return row.cols(); }
};

inline DetectedObjectMatrix build_detected_matrix(std::span<const Detection> detections,
                                                  const embed::EmbeddingTable& table) {
  const std::size_t e = table.dim();
  if (detections.empty()) return {grad::Tensor(1, 3 + e, 0.0)};
  grad::Tensor m(detections.size(), 3 + e);
  for (std::size_t r = 0; r < detections.size(); ++r) {
    const Detection& d = detections[r];
    const auto w = table.at(d.cls);
    m(r, 0) = d.x;
    m(r, 1) = d.y;
    m(r, 2) = d.area;
    for (std::size_t k = 0; k < e; ++k) m(r, 3 + k) = w[k];
  }
  return {std::move(m)};
}

inline TargetVector build_target_vector(std::string_view target, const embed::EmbeddingTable& table) {
  const auto w = table.at(target);
  grad::Tensor v(1, 3 + table.dim());
  v[0] = kTargetX;
  v[1] = kTargetY;
  v[2] = kTargetArea;
  for (std::size_t k = 0; k < w.size(); ++k) v[3 + k] = w[k];
  return {std::move(v)};
}

}  // namespace tdanet::model
