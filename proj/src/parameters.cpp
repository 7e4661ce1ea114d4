#include "hedmod/parameters.hpp"

#include <cmath>

#include "hedmod/error.hpp"
#include "hedmod/kernels.hpp"
#include "hedmod/random.hpp"

namespace hedmod {

Parameter& ParameterStore::add(const std::string& name, Shape shape) {
  if (index_.count(name)) {
    throw Error(ErrorKind::kInvalidArgument, "duplicate parameter " + name);
  }
  Tensor value(shape);
  Tensor grad(std::move(shape));
  index_[name] = params_.size();
  params_.push_back(Parameter{name, std::move(value), std::move(grad)});
  return params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorKind::kInvalidArgument, "unknown parameter " + name);
  }
  return params_[it->second];
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) {
    throw Error(ErrorKind::kInvalidArgument, "unknown parameter " + name);
  }
  return params_[it->second];
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(&p);
  return out;
}

std::vector<Parameter*> ParameterStore::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_) {
    if (p.name.compare(0, prefix.size(), prefix) == 0) out.push_back(&p);
  }
  return out;
}

std::size_t ParameterStore::element_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::init_uniform(double scale, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params_) {
    for (double& x : p.value.data()) x = rng.uniform(-scale, scale);
  }
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

double ParameterStore::grad_norm() const {
  double total = 0.0;
  for (const auto& p : params_) total += kernels::sum_squares(p.grad.size(), p.grad.ptr());
  return std::sqrt(total);
}

void ParameterStore::scale_grad(double factor) {
  for (auto& p : params_) {
    for (double& g : p.grad.data()) g *= factor;
  }
}

Snapshot ParameterStore::snapshot() const {
  Snapshot out;
  for (const auto& p : params_) out.emplace(p.name, p.value);
  return out;
}

void ParameterStore::restore(const Snapshot& snapshot) {
  for (auto& p : params_) {
    auto it = snapshot.find(p.name);
    if (it == snapshot.end()) {
      throw Error(ErrorKind::kInvalidArgument, "snapshot lacks parameter " + p.name);
    }
    if (!it->second.same_shape(p.value)) {
      throw Error(ErrorKind::kShapeMismatch,
                  "parameter " + p.name + " has shape " + shape_str(p.value.shape()) +
                      " but snapshot holds " + shape_str(it->second.shape()));
    }
    p.value = it->second;
  }
}

}  // namespace hedmod
