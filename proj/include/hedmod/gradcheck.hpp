#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hedmod/graph.hpp"

namespace hedmod::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // "param[index]" of the largest disagreement
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Elements sampled per parameter; 0 checks every element.
  std::size_t max_per_param = 0;
  std::uint64_t seed = 0;
  /// Five-point central stencil; truncation error O(eps^4), which allows a
  /// larger eps and less rounding noise on large function values.
  bool fourth_order = false;
};

/// Compares reverse-mode gradients of the scalar built by `f` with central
/// finite differences. Relative error per element is
/// |a - n| / max(|a| + |n|, 1e-8). Throws Error(kNumeric) on non-finite values.
GradCheckResult grad_check(const std::function<Var(Graph&)>& f,
                           const std::vector<Parameter*>& params,
                           const GradCheckOptions& options = {});

}  // namespace hedmod::ad
