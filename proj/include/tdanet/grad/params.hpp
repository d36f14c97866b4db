#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdanet/grad/tensor.hpp"

namespace tdanet::grad {

// Named trainable tensors in registration order. The version counter moves
// forward on every applied optimizer update.
class ParamSet {
 public:
  std::size_t add(std::string name, Tensor init) {
    for (const auto& n : names_) {
      if (n == name) throw std::invalid_argument("ParamSet: duplicate parameter name '" + name + "'");
    }
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(init));
    return tensors_.size() - 1;
  }

  std::size_t size() const { return tensors_.size(); }
  bool empty() const { return tensors_.empty(); }

  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const { return names_; }

  const Tensor& tensor(std::size_t i) const { return tensors_.at(i); }
  Tensor& tensor(std::size_t i) { return tensors_.at(i); }

  const Tensor& operator[](std::string_view name) const { return tensors_[index_of(name)]; }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    throw std::out_of_range("ParamSet: no parameter named '" + std::string(name) + "'");
  }

  bool contains(std::string_view name) const {
    for (const auto& n : names_) {
      if (n == name) return true;
    }
    return false;
  }

  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }
  void bump_version() { ++version_; }

  std::size_t scalar_count() const {
    std::size_t total = 0;
    for (const auto& t : tensors_) total += t.size();
    return total;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> tensors_;
  std::uint64_t version_ = 0;
};

// Gradients aligned index-for-index with a ParamSet.
struct GradSet {
  std::vector<Tensor> tensors;

  static GradSet zeros_like(const ParamSet& params) {
    GradSet g;
    g.tensors.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto s = params.tensor(i).shape();
      g.tensors.emplace_back(s.rows, s.cols, 0.0);
    }
    return g;
  }

  std::size_t size() const { return tensors.size(); }

  double global_norm() const {
    double s = 0.0;
    for (const auto& t : tensors) s += squared_norm(t);
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (const auto& t : tensors) {
      if (!grad::all_finite(t)) return false;
    }
    return true;
  }

  void scale(double k) {
    for (auto& t : tensors) {
      for (double& v : t.data()) v *= k;
    }
  }

  GradSet& operator+=(const GradSet& other) {
    if (other.tensors.size() != tensors.size()) {
      throw std::invalid_argument("GradSet::operator+=: tensor count mismatch");
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) tensors[i] += other.tensors[i];
    return *this;
  }
};

inline std::size_t count_params(const ParamSet& params) { return params.scalar_count(); }

}  // namespace tdanet::grad
