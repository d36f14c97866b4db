#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tdanet/grad/params.hpp"
#include "tdanet/grad/tensor.hpp"

namespace tdanet::grad {

class Graph;

// Handle to a node recorded on a Graph.
struct Var {
  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::size_t id = kNone;

  bool valid() const { return id != kNone; }
};

// Append-only tape. Nodes are recorded in evaluation order, so walking the
// tape backwards from the loss is a reverse topological traversal.
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t self)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  Var constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    ensure_finite(n.value, "constant");
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  // Leaf bound to params.tensor(index). Repeated calls return the same node,
  // so a parameter used several times accumulates its gradient in one place.
  // The ParamSet must outlive the graph and stay unmodified while it is used.
  Var param(const ParamSet& params, std::size_t index) {
    if (bound_ == nullptr) {
      bound_ = &params;
      param_nodes_.assign(params.size(), Var::kNone);
    } else if (bound_ != &params) {
      throw std::logic_error("Graph::param: graph already bound to a different ParamSet");
    }
    if (index >= params.size()) throw std::out_of_range("Graph::param: index out of range");
    if (param_nodes_[index] != Var::kNone) return Var{param_nodes_[index]};
    Node n;
    n.external = &params.tensor(index);
    n.param_index = index;
    nodes_.push_back(std::move(n));
    param_nodes_[index] = nodes_.size() - 1;
    return Var{nodes_.size() - 1};
  }

  Var param(const ParamSet& params, std::string_view name) { return param(params, params.index_of(name)); }

  const Tensor& value(Var v) const { return node(v.id).val(); }
  Shape shape(Var v) const { return value(v).shape(); }
  double scalar(Var v) const {
    const auto& t = value(v);
    if (t.size() != 1) throw DimensionError("Graph::scalar: node is not a scalar " + t.shape().to_string());
    return t[0];
  }

  std::size_t size() const { return nodes_.size(); }

  // Records an op output. `backward` reads this node's gradient and adds into
  // its inputs' gradients.
  Var record(Tensor value, BackwardFn backward, const char* op) {
    ensure_finite(value, op);
    Node n;
    n.value = std::move(value);
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  // Gradient buffer of a node, zero-initialised on first access.
  Tensor& grad(std::size_t id) {
    Node& n = node(id);
    if (n.grad.empty()) {
      const auto s = n.val().shape();
      n.grad = Tensor(s.rows, s.cols, 0.0);
    }
    return n.grad;
  }
  bool has_grad(std::size_t id) const { return !node(id).grad.empty(); }
  const Tensor& grad_value(std::size_t id) const { return node(id).grad; }

  // Reverse-mode sweep from a scalar loss. Parameters not reachable from the
  // loss get zero gradients. Gradient buffers are cleared first, so the call
  // may be repeated.
  GradSet backward(Var loss, const ParamSet& params) {
    if (value(loss).size() != 1) {
      throw DimensionError("backward: loss must be a scalar, got " + value(loss).shape().to_string());
    }
    if (bound_ != nullptr && bound_ != &params) {
      throw std::logic_error("backward: ParamSet differs from the one bound to this graph");
    }
    for (auto& n : nodes_) n.grad = Tensor();
    grad(loss.id)[0] = 1.0;
    for (std::size_t k = loss.id + 1; k-- > 0;) {
      Node& n = nodes_[k];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, k);
    }
    GradSet out = GradSet::zeros_like(params);
    for (std::size_t i = 0; i < param_nodes_.size(); ++i) {
      const std::size_t id = param_nodes_[i];
      if (id != Var::kNone && !nodes_[id].grad.empty()) out.tensors[i] = nodes_[id].grad;
    }
    return out;
  }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    Tensor grad;
    BackwardFn backward;
    std::optional<std::size_t> param_index;

    const Tensor& val() const { return external != nullptr ? *external : value; }
  };

  Node& node(std::size_t id) {
    if (id >= nodes_.size()) throw std::out_of_range("Graph: invalid node id");
    return nodes_[id];
  }
  const Node& node(std::size_t id) const {
    if (id >= nodes_.size()) throw std::out_of_range("Graph: invalid node id");
    return nodes_[id];
  }

  static void ensure_finite(const Tensor& t, const char* op) {
    if (!all_finite(t)) throw NumericError(std::string(op) + ": non-finite value produced");
  }

  std::deque<Node> nodes_;  // stable references across push_back
  const ParamSet* bound_ = nullptr;
  std::vector<std::size_t> param_nodes_;
};

}  // namespace tdanet::grad
