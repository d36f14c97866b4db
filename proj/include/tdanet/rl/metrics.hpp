#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tdanet::rl {

// One training-log line. Keys and their order are fixed.
struct MetricsRecord {
  std::int64_t episodes = 0;
  std::uint64_t updates = 0;
  double mean_reward = 0.0;
  double mean_length = 0.0;
  double success_rate = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  std::uint64_t nan_skips = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["episodes"] = episodes;
    j["updates"] = updates;
    j["mean_reward"] = mean_reward;
    j["mean_length"] = mean_length;
    j["success_rate"] = success_rate;
    j["policy_loss"] = policy_loss;
    j["value_loss"] = value_loss;
    j["entropy"] = entropy;
    j["nan_skips"] = nan_skips;
    return j;
  }

  std::string to_line() const { return to_json().dump(); }

  static MetricsRecord from_json(const nlohmann::json& j) {
    MetricsRecord r;
    r.episodes = j.at("episodes").get<std::int64_t>();
    r.updates = j.at("updates").get<std::uint64_t>();
    r.mean_reward = j.at("mean_reward").get<double>();
    r.mean_length = j.at("mean_length").get<double>();
    r.success_rate = j.at("success_rate").get<double>();
    r.policy_loss = j.at("policy_loss").get<double>();
    r.value_loss = j.at("value_loss").get<double>();
    r.entropy = j.at("entropy").get<double>();
    r.nan_skips = j.at("nan_skips").get<std::uint64_t>();
    return r;
  }
};

inline void write_metrics_log(const std::vector<MetricsRecord>& log, std::ostream& out) {
  for (const auto& r : log) out << r.to_line() << '\n';
}

// Running sums between two log lines.
class MetricsWindow {
 public:
  void add_episode(double reward, int length, bool success) {
    reward_ += reward;
    length_ += length;
    success_ += success ? 1 : 0;
    ++episodes_;
  }

  void add_update(double policy, double value, double entropy, std::size_t steps) {
    policy_ += policy;
    value_ += value;
    entropy_ += entropy;
    steps_ += steps;
    ++updates_;
  }

  std::int64_t episodes() const { return episodes_; }

  // Losses are reported per step; rewards and lengths per episode.
  MetricsRecord flush(std::int64_t episode_counter, std::uint64_t update_counter, std::uint64_t nan_skips) {
    MetricsRecord r;
    r.episodes = episode_counter;
    r.updates = update_counter;
    if (episodes_ > 0) {
      r.mean_reward = reward_ / static_cast<double>(episodes_);
      r.mean_length = static_cast<double>(length_) / static_cast<double>(episodes_);
      r.success_rate = static_cast<double>(success_) / static_cast<double>(episodes_);
    }
    if (steps_ > 0) {
      r.policy_loss = policy_ / static_cast<double>(steps_);
      r.value_loss = value_ / static_cast<double>(steps_);
      r.entropy = entropy_ / static_cast<double>(steps_);
    }
    r.nan_skips = nan_skips;
    *this = MetricsWindow{};
    return r;
  }

 private:
  double reward_ = 0.0;
  std::int64_t length_ = 0;
  std::int64_t success_ = 0;
  std::int64_t episodes_ = 0;
  double policy_ = 0.0;
  double value_ = 0.0;
  double entropy_ = 0.0;
  std::size_t steps_ = 0;
  std::uint64_t updates_ = 0;
};

}  // namespace tdanet::rl
