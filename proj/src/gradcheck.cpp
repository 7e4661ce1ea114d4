#include "hedmod/gradcheck.hpp"

#include <cmath>
#include <numeric>

#include "hedmod/error.hpp"
#include "hedmod/random.hpp"

namespace hedmod::ad {

namespace {

double evaluate(const std::function<Var(Graph&)>& f) {
  Graph g;
  g.set_recording(false);
  const Var out = f(g);
  const double v = out.value()[0];
  if (!std::isfinite(v)) throw Error(ErrorKind::kNumeric, "grad_check: non-finite function value");
  return v;
}

}  // namespace

GradCheckResult grad_check(const std::function<Var(Graph&)>& f,
                           const std::vector<Parameter*>& params,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) p->grad.fill(0.0);
  {
    Graph g;
    const Var out = f(g);
    if (out.value().size() != 1) {
      throw Error(ErrorKind::kShapeMismatch, "grad_check: function must return a scalar");
    }
    if (!std::isfinite(out.value()[0])) {
      throw Error(ErrorKind::kNumeric, "grad_check: non-finite function value");
    }
    g.backward(out);
  }

  GradCheckResult result;
  Rng rng(options.seed);
  const double eps = options.epsilon;
  for (Parameter* p : params) {
    std::vector<std::size_t> indices(p->value.size());
    std::iota(indices.begin(), indices.end(), 0);
    if (options.max_per_param > 0 && indices.size() > options.max_per_param) {
      rng.shuffle(indices);
      indices.resize(options.max_per_param);
    }
    for (std::size_t idx : indices) {
      const double analytic = p->grad[idx];
      if (!std::isfinite(analytic)) {
        throw Error(ErrorKind::kNumeric, "grad_check: non-finite gradient in " + p->name);
      }
      const double saved = p->value[idx];
      auto at = [&](double offset) {
        p->value[idx] = saved + offset;
        const double v = evaluate(f);
        p->value[idx] = saved;
        return v;
      };
      const double near = at(eps) - at(-eps);
      const double numeric = options.fourth_order
                                 ? (8.0 * near - (at(2 * eps) - at(-2 * eps))) / (12.0 * eps)
                                 : near / (2.0 * eps);
      const double rel = std::abs(analytic - numeric) /
                         std::max(std::abs(analytic) + std::abs(numeric), 1e-8);
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = p->name + "[" + std::to_string(idx) + "]";
        result.worst_analytic = analytic;
        result.worst_numeric = numeric;
      }
    }
  }
  return result;
}

}  // namespace hedmod::ad
