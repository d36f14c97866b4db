#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace tdanet {

// Normalised bounding-box observation of one object.
struct Detection {
  static constexpr std::size_t kNoInstance = std::numeric_limits<std::size_t>::max();

  std::string cls;
  double x = 0.0;     // box centre, image coordinates in [0, 1]
  double y = 0.0;
  double area = 0.0;  // box area as a fraction of the image
  std::size_t instance = kNoInstance;  // index into Scene::objects when produced by the simulator
  double depth = 0.0;                  // camera-axis depth in metres (0 when unknown)

  void validate() const {
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0 && area >= 0.0 && area <= 1.0)) {
      throw std::invalid_argument("Detection '" + cls + "': coordinates must lie in [0, 1]");
    }
  }
};

enum class Action : int { MoveAhead = 0, RotateLeft = 1, RotateRight = 2, LookUp = 3, LookDown = 4, Done = 5 };

inline constexpr std::size_t kActionCount = 6;

inline constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "MoveAhead", "RotateLeft", "RotateRight", "LookUp", "LookDown", "Done"};

inline std::string_view action_name(Action a) { return kActionNames.at(static_cast<std::size_t>(a)); }

inline Action action_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kActionCount)) {
    throw std::out_of_range("invalid action index " + std::to_string(index));
  }
  return static_cast<Action>(index);
}

// Attention over one observation, kept for inspection.
struct AttentionStep {
  std::vector<Detection> detections;
  std::vector<double> v_corr;
  std::vector<double> v_att;
};

}  // namespace tdanet
