#pragma once

#include <cstdint>
#include <vector>

#include "hedmod/parameters.hpp"

namespace hedmod {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction over every parameter of a store, reading
/// Parameter::grad. Moments start at zero.
class Adam {
 public:
  Adam(ParameterStore& store, AdamConfig config);

  /// Throws Error(kNumeric) before touching any state if a gradient is not finite.
  void step();

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  const Tensor& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor& second_moment(std::size_t i) const { return v_[i]; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  AdamConfig config_;
  std::uint64_t steps_ = 0;
};

/// Rescales all gradients so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
double clip_grad_norm(ParameterStore& store, double max_norm);

}  // namespace hedmod
