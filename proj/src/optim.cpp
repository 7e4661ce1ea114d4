#include "hedmod/optim.hpp"

#include <cmath>

#include "hedmod/error.hpp"
#include "hedmod/kernels.hpp"

namespace hedmod {

Adam::Adam(ParameterStore& store, AdamConfig config) : params_(store.all()), config_(config) {
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::step() {
  for (Parameter* p : params_) {
    for (double g : p->grad.data()) {
      if (!std::isfinite(g)) {
        throw Error(ErrorKind::kNumeric, "adam: non-finite gradient in " + p->name);
      }
    }
  }
  ++steps_;
  const double bias1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bias2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter* p = params_[i];
    kernels::adam_update(p->value.size(), p->value.ptr(), p->grad.ptr(), m_[i].ptr(), v_[i].ptr(),
                         config_.lr, config_.beta1, config_.beta2, config_.eps, bias1, bias2);
  }
}

double clip_grad_norm(ParameterStore& store, double max_norm) {
  const double norm = store.grad_norm();
  if (max_norm > 0.0 && norm > max_norm) store.scale_grad(max_norm / norm);
  return norm;
}

}  // namespace hedmod
