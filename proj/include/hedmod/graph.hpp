#pragma once

#include <deque>
#include <functional>
#include <initializer_list>
#include <unordered_map>
#include <vector>

#include "hedmod/parameters.hpp"
#include "hedmod/tensor.hpp"

namespace hedmod::ad {

class Graph;

/// Handle to a node of a Graph.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const { return graph != nullptr; }
};

/// Tape of operations for reverse-mode differentiation. Nodes are appended in
/// topological order; backward() walks them once in reverse. A graph is
/// confined to one thread. Gradients of parameter nodes accumulate straight
/// into Parameter::grad.
class Graph {
 public:
  using Backward = std::function<void(Graph&, std::size_t)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  /// One node per parameter per graph; repeated calls return the same node.
  Var param(Parameter& p);
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  const Tensor& value(std::size_t id) const;
  /// Gradient buffer of a node, zero-allocated on first access.
  Tensor& grad(std::size_t id);
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  bool needs_grad(Var v) const { return needs_grad(v.id); }

  /// Seeds d(root)/d(root) = 1 and propagates. Root must hold one element.
  void backward(Var root);

  /// With recording off no backward closures are kept (inference).
  void set_recording(bool on) { recording_ = on; }
  bool recording() const { return recording_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    const Tensor* external_value = nullptr;
    Tensor grad;
    Tensor* external_grad = nullptr;
    Backward backward;
    bool needs_grad = false;
    bool touched = false;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_ids_;
  bool recording_ = true;
};

}  // namespace hedmod::ad
