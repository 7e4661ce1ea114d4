#include "hedmod/graph.hpp"

#include "hedmod/error.hpp"

namespace hedmod::ad {

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Var Graph::param(Parameter& p) {
  auto it = param_ids_.find(&p);
  if (it != param_ids_.end()) return Var{this, it->second};
  Node node;
  node.external_value = &p.value;
  node.external_grad = &p.grad;
  node.needs_grad = recording_;
  nodes_.push_back(std::move(node));
  const std::size_t id = nodes_.size() - 1;
  param_ids_.emplace(&p, id);
  return Var{this, id};
}

Var Graph::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Graph::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
  Node node;
  node.value = std::move(value);
  if (recording_) {
    for (const Var& in : inputs) {
      if (in.graph != this) {
        throw Error(ErrorKind::kInvalidArgument, "operand belongs to another graph");
      }
      node.needs_grad = node.needs_grad || nodes_[in.id].needs_grad;
    }
    if (node.needs_grad) node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

const Tensor& Graph::value(std::size_t id) const {
  const Node& node = nodes_[id];
  return node.external_value ? *node.external_value : node.value;
}

Tensor& Graph::grad(std::size_t id) {
  Node& node = nodes_[id];
  if (node.external_grad) return *node.external_grad;
  if (!node.touched) {
    node.grad = Tensor(value(id).shape());
    node.touched = true;
  }
  return node.grad;
}

void Graph::backward(Var root) {
  if (root.graph != this) {
    throw Error(ErrorKind::kInvalidArgument, "backward root belongs to another graph");
  }
  if (value(root.id).size() != 1) {
    throw Error(ErrorKind::kShapeMismatch,
                "backward root must be scalar, got " + shape_str(value(root.id).shape()));
  }
  if (!nodes_[root.id].needs_grad) return;
  grad(root.id)[0] += 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.backward || !node.touched) continue;
    node.backward(*this, i);
  }
}

}  // namespace hedmod::ad
