#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "hedmod/tensor.hpp"

namespace hedmod {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

using Snapshot = std::map<std::string, Tensor>;

/// Named learnable tensors with stable addresses. Insertion order is the
/// canonical order for initialization, optimizer state and checkpoints.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;

  Parameter& add(const std::string& name, Shape shape);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> with_prefix(const std::string& prefix);

  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;

  /// Uniform(-scale, scale) over every parameter in canonical order.
  void init_uniform(double scale, std::uint64_t seed);
  void zero_grad();
  double grad_norm() const;
  void scale_grad(double factor);

  Snapshot snapshot() const;
  /// Requires identical names and shapes.
  void restore(const Snapshot& snapshot);

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> index_;
};

}  // namespace hedmod
