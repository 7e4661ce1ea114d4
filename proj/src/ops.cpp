#include "hedmod/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "hedmod/error.hpp"
#include "hedmod/kernels.hpp"

namespace hedmod::ad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorKind::kShapeMismatch,
              std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                  shape_str(b));
}

[[noreturn]] void bad_shape(const char* op, const Shape& a, const char* expected) {
  throw Error(ErrorKind::kShapeMismatch,
              std::string(op) + ": shape " + shape_str(a) + ", expected " + expected);
}

Graph& graph_of(Var a) {
  if (!a.valid()) throw Error(ErrorKind::kInvalidArgument, "operand is not attached to a graph");
  return *a.graph;
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 1 && t.rank() != 2) bad_shape(op, t.shape(), "rank 1 or 2");
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

void softmax_row(const double* x, double* y, std::size_t n) {
  double hi = kNegInf;
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, x[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = std::exp(x[i] - hi);
    total += y[i];
  }
  for (std::size_t i = 0; i < n; ++i) y[i] /= total;
}

}  // namespace

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("matmul", av);
  if (bv.rank() != 2) bad_shape("matmul", bv.shape(), "rank 2");
  const std::size_t m = av.rows(), k = av.cols(), n = bv.cols();
  if (bv.rows() != k) mismatch("matmul", av.shape(), bv.shape());
  Tensor out({m, n});
  kernels::gemm_nn(m, n, k, av.ptr(), bv.ptr(), out.ptr());
  return g.record(std::move(out), {a, b}, [a, b, m, n, k](Graph& g, std::size_t self) {
    const Tensor& dc = g.grad(self);
    if (g.needs_grad(a)) kernels::gemm_nt(m, k, n, dc.ptr(), b.value().ptr(), g.grad(a.id).ptr());
    if (g.needs_grad(b)) kernels::gemm_tn(k, n, m, a.value().ptr(), dc.ptr(), g.grad(b.id).ptr());
  });
}

Var linear(Var x, Var weight) { return linear(x, weight, Var{}); }

Var linear(Var x, Var weight, Var bias) {
  Graph& g = graph_of(x);
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require_matrix("linear", xv);
  if (wv.rank() != 2 || wv.cols() != xv.cols()) mismatch("linear", xv.shape(), wv.shape());
  const std::size_t rows = xv.rows(), in = xv.cols(), out_dim = wv.rows();
  Tensor out({rows, out_dim});
  if (bias.valid()) {
    const Tensor& bv = bias.value();
    if (bv.size() != out_dim) mismatch("linear(bias)", wv.shape(), bv.shape());
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(bv.ptr(), bv.ptr() + out_dim, out.ptr() + r * out_dim);
    }
  }
  kernels::gemm_nt(rows, out_dim, in, xv.ptr(), wv.ptr(), out.ptr());
  auto backward = [x, weight, bias, rows, in, out_dim](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    if (g.needs_grad(x)) {
      kernels::gemm_nn(rows, in, out_dim, dy.ptr(), weight.value().ptr(), g.grad(x.id).ptr());
    }
    if (g.needs_grad(weight)) {
      kernels::gemm_tn(out_dim, in, rows, dy.ptr(), x.value().ptr(), g.grad(weight.id).ptr());
    }
    if (bias.valid() && g.needs_grad(bias)) {
      double* db = g.grad(bias.id).ptr();
      for (std::size_t r = 0; r < rows; ++r) kernels::axpy(out_dim, 1.0, dy.ptr() + r * out_dim, db);
    }
  };
  if (bias.valid()) return g.record(std::move(out), {x, weight, bias}, backward);
  return g.record(std::move(out), {x, weight}, backward);
}

namespace {

// Shared shape logic for add/sub: same shape, or b a row broadcast over a.
bool broadcast_row(const char* op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return false;
  if (a.rank() == 2 && b.size() == a.cols() && (b.rank() == 1 || b.rows() == 1)) return true;
  mismatch(op, a.shape(), b.shape());
}

Var add_scaled(const char* op, Var a, Var b, double sign) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool bcast = broadcast_row(op, av, bv);
  Tensor out = av;
  const std::size_t cols = av.cols();
  if (bcast) {
    for (std::size_t r = 0; r < av.rows(); ++r) kernels::axpy(cols, sign, bv.ptr(), out.ptr() + r * cols);
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * bv[i];
  }
  const std::size_t rows = av.rows();
  return g.record(std::move(out), {a, b}, [a, b, sign, bcast, rows, cols](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    if (g.needs_grad(a)) kernels::axpy(dy.size(), 1.0, dy.ptr(), g.grad(a.id).ptr());
    if (g.needs_grad(b)) {
      double* db = g.grad(b.id).ptr();
      if (bcast) {
        for (std::size_t r = 0; r < rows; ++r) kernels::axpy(cols, sign, dy.ptr() + r * cols, db);
      } else {
        kernels::axpy(dy.size(), sign, dy.ptr(), db);
      }
    }
  });
}

}  // namespace

Var add(Var a, Var b) { return add_scaled("add", a, b, 1.0); }
Var sub(Var a, Var b) { return add_scaled("sub", a, b, -1.0); }

Var mul(Var a, Var b) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.same_shape(bv)) mismatch("mul", av.shape(), bv.shape());
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return g.record(std::move(out), {a, b}, [a, b](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    if (g.needs_grad(a)) {
      Tensor& da = g.grad(a.id);
      const Tensor& bv = b.value();
      for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * bv[i];
    }
    if (g.needs_grad(b)) {
      Tensor& db = g.grad(b.id);
      const Tensor& av = a.value();
      for (std::size_t i = 0; i < dy.size(); ++i) db[i] += dy[i] * av[i];
    }
  });
}

Var affine(Var a, double alpha, double beta) {
  Graph& g = graph_of(a);
  Tensor out = a.value();
  for (double& x : out.data()) x = alpha * x + beta;
  return g.record(std::move(out), {a}, [a, alpha](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    kernels::axpy(dy.size(), alpha, dy.ptr(), g.grad(a.id).ptr());
  });
}

Var scale(Var a, double alpha) { return affine(a, alpha, 0.0); }

Var sum(Var a) {
  Graph& g = graph_of(a);
  double total = 0.0;
  for (double x : a.value().data()) total += x;
  return g.record(Tensor({1}, {total}), {a}, [a](Graph& g, std::size_t self) {
    const double dy = g.grad(self)[0];
    for (double& x : g.grad(a.id).data()) x += dy;
  });
}

Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw Error(ErrorKind::kInvalidArgument, "concat: no operands");
  if (axis > 1) throw Error(ErrorKind::kInvalidArgument, "concat: axis must be 0 or 1");
  Graph& g = graph_of(parts.front());
  const Tensor& first = parts.front().value();
  require_matrix("concat", first);
  const std::size_t rows0 = first.rows(), cols0 = first.cols();
  std::vector<std::size_t> extents;
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    require_matrix("concat", t);
    if (axis == 1 && t.rows() != rows0) mismatch("concat", first.shape(), t.shape());
    if (axis == 0 && t.cols() != cols0) mismatch("concat", first.shape(), t.shape());
    extents.push_back(axis == 1 ? t.cols() : t.rows());
    total += extents.back();
  }
  const std::size_t rows = axis == 1 ? rows0 : total;
  const std::size_t cols = axis == 1 ? total : cols0;
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& t = parts[k].value();
    if (axis == 1) {
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy(t.ptr() + r * extents[k], t.ptr() + (r + 1) * extents[k],
                  out.ptr() + r * cols + offset);
      }
    } else {
      std::copy(t.ptr(), t.ptr() + t.size(), out.ptr() + offset * cols);
    }
    offset += extents[k];
  }
  return g.record(std::move(out), parts, [parts, extents, axis, rows, cols](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      if (g.needs_grad(parts[k])) {
        Tensor& dp = g.grad(parts[k].id);
        if (axis == 1) {
          for (std::size_t r = 0; r < rows; ++r) {
            kernels::axpy(extents[k], 1.0, dy.ptr() + r * cols + offset, dp.ptr() + r * extents[k]);
          }
        } else {
          kernels::axpy(dp.size(), 1.0, dy.ptr() + offset * cols, dp.ptr());
        }
      }
      offset += extents[k];
    }
  });
}

Var reshape(Var a, Shape shape) {
  Graph& g = graph_of(a);
  Tensor out = a.value();
  out.reshape(std::move(shape));
  return g.record(std::move(out), {a}, [a](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    kernels::axpy(dy.size(), 1.0, dy.ptr(), g.grad(a.id).ptr());
  });
}

Var sigmoid(Var a) {
  Graph& g = graph_of(a);
  Tensor out = a.value();
  for (double& x : out.data()) x = stable_sigmoid(x);
  return g.record(std::move(out), {a}, [a](Graph& g, std::size_t self) {
    const Tensor& y = g.value(self);
    const Tensor& dy = g.grad(self);
    Tensor& da = g.grad(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  Graph& g = graph_of(a);
  Tensor out = a.value();
  for (double& x : out.data()) x = std::tanh(x);
  return g.record(std::move(out), {a}, [a](Graph& g, std::size_t self) {
    const Tensor& y = g.value(self);
    const Tensor& dy = g.grad(self);
    Tensor& da = g.grad(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Var softmax(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  require_matrix("softmax", av);
  Tensor out(av.shape());
  const std::size_t rows = av.rows(), cols = av.cols();
  for (std::size_t r = 0; r < rows; ++r) softmax_row(av.ptr() + r * cols, out.ptr() + r * cols, cols);
  return g.record(std::move(out), {a}, [a, rows, cols](Graph& g, std::size_t self) {
    const Tensor& y = g.value(self);
    const Tensor& dy = g.grad(self);
    Tensor& da = g.grad(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* yr = y.ptr() + r * cols;
      const double* dyr = dy.ptr() + r * cols;
      const double inner = kernels::dot(cols, yr, dyr);
      for (std::size_t c = 0; c < cols; ++c) da[r * cols + c] += yr[c] * (dyr[c] - inner);
    }
  });
}

Var log_softmax(Var a) {
  Graph& g = graph_of(a);
  const Tensor& av = a.value();
  require_matrix("log_softmax", av);
  Tensor out(av.shape());
  const std::size_t rows = av.rows(), cols = av.cols();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.ptr() + r * cols;
    double hi = kNegInf;
    for (std::size_t c = 0; c < cols; ++c) hi = std::max(hi, x[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(x[c] - hi);
    const double lse = hi + std::log(total);
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[c] - lse;
  }
  return g.record(std::move(out), {a}, [a, rows, cols](Graph& g, std::size_t self) {
    const Tensor& y = g.value(self);
    const Tensor& dy = g.grad(self);
    Tensor& da = g.grad(a.id);
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (std::size_t c = 0; c < cols; ++c) total += dy[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) {
        da[r * cols + c] += dy[r * cols + c] - std::exp(y[r * cols + c]) * total;
      }
    }
  });
}

Var masked_softmax(Var scores, const Mask& mask) {
  Graph& g = graph_of(scores);
  const Tensor& sv = scores.value();
  if (sv.rank() != 2 || sv.rows() != mask.rows || sv.cols() != mask.cols) {
    mismatch("masked_softmax", sv.shape(), Shape{mask.rows, mask.cols});
  }
  const std::size_t rows = sv.rows(), cols = sv.cols();
  Tensor out(sv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    double hi = kNegInf;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask(r, c)) hi = std::max(hi, sv.at(r, c));
    }
    if (hi == kNegInf) {
      throw Error(ErrorKind::kInvalidArgument,
                  "masked_softmax: row " + std::to_string(r) + " has no valid entry");
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (mask(r, c)) {
        out.at(r, c) = std::exp(sv.at(r, c) - hi);
        total += out.at(r, c);
      }
    }
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) /= total;
  }
  return g.record(std::move(out), {scores}, [scores, rows, cols](Graph& g, std::size_t self) {
    const Tensor& y = g.value(self);
    const Tensor& dy = g.grad(self);
    Tensor& ds = g.grad(scores.id);
    for (std::size_t r = 0; r < rows; ++r) {
      const double inner = kernels::dot(cols, y.ptr() + r * cols, dy.ptr() + r * cols);
      for (std::size_t c = 0; c < cols; ++c) {
        ds.at(r, c) += y.at(r, c) * (dy.at(r, c) - inner);
      }
    }
  });
}

Var embedding(Var table, const std::vector<int>& ids) {
  Graph& g = graph_of(table);
  const Tensor& tv = table.value();
  if (tv.rank() != 2) bad_shape("embedding", tv.shape(), "rank 2");
  if (ids.empty()) throw Error(ErrorKind::kInvalidArgument, "embedding: empty id list");
  const std::size_t vocab = tv.rows(), dim = tv.cols();
  Tensor out({ids.size(), dim});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab) {
      throw Error(ErrorKind::kInvalidArgument,
                  "embedding: id " + std::to_string(ids[i]) + " outside table of " +
                      std::to_string(vocab) + " rows");
    }
    std::copy(tv.ptr() + ids[i] * dim, tv.ptr() + (ids[i] + 1) * dim, out.ptr() + i * dim);
  }
  return g.record(std::move(out), {table}, [table, ids, dim](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    Tensor& dt = g.grad(table.id);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      kernels::axpy(dim, 1.0, dy.ptr() + i * dim, dt.ptr() + ids[i] * dim);
    }
  });
}

Var cross_entropy(Var logits, const std::vector<int>& targets) {
  Graph& g = graph_of(logits);
  const Tensor& lv = logits.value();
  require_matrix("cross_entropy", lv);
  const std::size_t rows = lv.rows(), cols = lv.cols();
  if (targets.size() != rows) {
    mismatch("cross_entropy", lv.shape(), Shape{targets.size()});
  }
  auto probs = std::make_shared<Tensor>(lv.shape());
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (targets[r] < 0) continue;
    if (static_cast<std::size_t>(targets[r]) >= cols) {
      throw Error(ErrorKind::kInvalidArgument,
                  "cross_entropy: target " + std::to_string(targets[r]) + " outside " +
                      std::to_string(cols) + " classes");
    }
    const double* x = lv.ptr() + r * cols;
    double* p = probs->ptr() + r * cols;
    softmax_row(x, p, cols);
    double hi = kNegInf;
    for (std::size_t c = 0; c < cols; ++c) hi = std::max(hi, x[c]);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) total += std::exp(x[c] - hi);
    loss -= x[targets[r]] - (hi + std::log(total));
  }
  return g.record(Tensor({1}, {loss}), {logits},
                  [logits, targets, probs, rows, cols](Graph& g, std::size_t self) {
    const double dy = g.grad(self)[0];
    Tensor& dl = g.grad(logits.id);
    for (std::size_t r = 0; r < rows; ++r) {
      if (targets[r] < 0) continue;
      for (std::size_t c = 0; c < cols; ++c) dl.at(r, c) += dy * probs->at(r, c);
      dl.at(r, targets[r]) -= dy;
    }
  });
}

Var stack(const std::vector<Var>& steps) {
  if (steps.empty()) throw Error(ErrorKind::kInvalidArgument, "stack: no operands");
  Graph& g = graph_of(steps.front());
  const Tensor& first = steps.front().value();
  require_matrix("stack", first);
  const std::size_t batch = first.rows(), dim = first.cols(), len = steps.size();
  Tensor out({batch, len, dim});
  for (std::size_t i = 0; i < len; ++i) {
    const Tensor& t = steps[i].value();
    if (t.rows() != batch || t.cols() != dim) mismatch("stack", first.shape(), t.shape());
    for (std::size_t b = 0; b < batch; ++b) {
      std::copy(t.ptr() + b * dim, t.ptr() + (b + 1) * dim, out.ptr() + (b * len + i) * dim);
    }
  }
  return g.record(std::move(out), steps, [steps, batch, dim, len](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    for (std::size_t i = 0; i < len; ++i) {
      if (!g.needs_grad(steps[i])) continue;
      Tensor& ds = g.grad(steps[i].id);
      for (std::size_t b = 0; b < batch; ++b) {
        kernels::axpy(dim, 1.0, dy.ptr() + (b * len + i) * dim, ds.ptr() + b * dim);
      }
    }
  });
}

Var row_dot(Var memory, Var query) {
  Graph& g = graph_of(memory);
  const Tensor& mv = memory.value();
  const Tensor& qv = query.value();
  if (mv.rank() != 3) bad_shape("row_dot", mv.shape(), "rank 3");
  const std::size_t batch = mv.dim(0), len = mv.dim(1), dim = mv.dim(2);
  if (qv.rows() != batch || qv.cols() != dim) mismatch("row_dot", mv.shape(), qv.shape());
  Tensor out({batch, len});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < len; ++i) {
      out.at(b, i) = kernels::dot(dim, mv.ptr() + (b * len + i) * dim, qv.ptr() + b * dim);
    }
  }
  return g.record(std::move(out), {memory, query},
                  [memory, query, batch, len, dim](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    const Tensor& mv = memory.value();
    const Tensor& qv = query.value();
    if (g.needs_grad(memory)) {
      Tensor& dm = g.grad(memory.id);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < len; ++i) {
          kernels::axpy(dim, dy.at(b, i), qv.ptr() + b * dim, dm.ptr() + (b * len + i) * dim);
        }
      }
    }
    if (g.needs_grad(query)) {
      Tensor& dq = g.grad(query.id);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < len; ++i) {
          kernels::axpy(dim, dy.at(b, i), mv.ptr() + (b * len + i) * dim, dq.ptr() + b * dim);
        }
      }
    }
  });
}

Var weighted_sum(Var memory, Var weights) {
  Graph& g = graph_of(memory);
  const Tensor& mv = memory.value();
  const Tensor& wv = weights.value();
  if (mv.rank() != 3) bad_shape("weighted_sum", mv.shape(), "rank 3");
  const std::size_t batch = mv.dim(0), len = mv.dim(1), dim = mv.dim(2);
  if (wv.rank() != 2 || wv.rows() != batch || wv.cols() != len) {
    mismatch("weighted_sum", mv.shape(), wv.shape());
  }
  Tensor out({batch, dim});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < len; ++i) {
      kernels::axpy(dim, wv.at(b, i), mv.ptr() + (b * len + i) * dim, out.ptr() + b * dim);
    }
  }
  return g.record(std::move(out), {memory, weights},
                  [memory, weights, batch, len, dim](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    const Tensor& mv = memory.value();
    const Tensor& wv = weights.value();
    if (g.needs_grad(memory)) {
      Tensor& dm = g.grad(memory.id);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < len; ++i) {
          kernels::axpy(dim, wv.at(b, i), dy.ptr() + b * dim, dm.ptr() + (b * len + i) * dim);
        }
      }
    }
    if (g.needs_grad(weights)) {
      Tensor& dw = g.grad(weights.id);
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < len; ++i) {
          dw.at(b, i) += kernels::dot(dim, dy.ptr() + b * dim, mv.ptr() + (b * len + i) * dim);
        }
      }
    }
  });
}

Var gru_cell(Var x, Var h, Var w, Var u, Var b) {
  return gru_cell(x, h, w, u, b, {});
}

Var gru_cell(Var x, Var h, Var w, Var u, Var b, const std::vector<std::uint8_t>& row_mask) {
  Graph& g = graph_of(x);
  const Tensor& xv = x.value();
  const Tensor& hv = h.value();
  const Tensor& wv = w.value();
  const Tensor& uv = u.value();
  const Tensor& bv = b.value();
  require_matrix("gru_cell", xv);
  require_matrix("gru_cell", hv);
  const std::size_t batch = xv.rows(), in = xv.cols(), hid = hv.cols();
  if (hv.rows() != batch) mismatch("gru_cell(x,h)", xv.shape(), hv.shape());
  if (wv.rank() != 2 || wv.rows() != 3 * hid || wv.cols() != in) {
    mismatch("gru_cell(W)", wv.shape(), Shape{3 * hid, in});
  }
  if (uv.rank() != 2 || uv.rows() != 3 * hid || uv.cols() != hid) {
    mismatch("gru_cell(U)", uv.shape(), Shape{3 * hid, hid});
  }
  if (bv.size() != 3 * hid) mismatch("gru_cell(b)", bv.shape(), Shape{3 * hid});
  if (!row_mask.empty() && row_mask.size() != batch) {
    mismatch("gru_cell(mask)", xv.shape(), Shape{row_mask.size()});
  }

  struct Saved {
    Tensor z, r, n, rh;  // [B x hid]
  };
  auto saved = std::make_shared<Saved>();
  const std::size_t h3 = 3 * hid;

  // a = x W^T + b, split as [z | r | h] columns.
  Tensor a({batch, h3});
  for (std::size_t r = 0; r < batch; ++r) std::copy(bv.ptr(), bv.ptr() + h3, a.ptr() + r * h3);
  kernels::gemm_nt(batch, h3, in, xv.ptr(), wv.ptr(), a.ptr());
  // uh = h Uzr^T for the first 2*hid rows of U.
  Tensor uzr({batch, 2 * hid});
  kernels::gemm_nt(batch, 2 * hid, hid, hv.ptr(), uv.ptr(), uzr.ptr());

  saved->z = Tensor({batch, hid});
  saved->r = Tensor({batch, hid});
  saved->rh = Tensor({batch, hid});
  for (std::size_t row = 0; row < batch; ++row) {
    for (std::size_t k = 0; k < hid; ++k) {
      const double z = stable_sigmoid(a.at(row, k) + uzr.at(row, k));
      const double r = stable_sigmoid(a.at(row, hid + k) + uzr.at(row, hid + k));
      saved->z.at(row, k) = z;
      saved->r.at(row, k) = r;
      saved->rh.at(row, k) = r * hv.at(row, k);
    }
  }
  Tensor un({batch, hid});
  kernels::gemm_nt(batch, hid, hid, saved->rh.ptr(), uv.ptr() + 2 * hid * hid, un.ptr());
  saved->n = Tensor({batch, hid});
  Tensor out({batch, hid});
  for (std::size_t row = 0; row < batch; ++row) {
    const bool live = row_mask.empty() || row_mask[row];
    for (std::size_t k = 0; k < hid; ++k) {
      const double n = std::tanh(a.at(row, 2 * hid + k) + un.at(row, k));
      saved->n.at(row, k) = n;
      const double z = saved->z.at(row, k);
      out.at(row, k) = live ? (1.0 - z) * hv.at(row, k) + z * n : hv.at(row, k);
    }
  }

  return g.record(std::move(out), {x, h, w, u, b},
                  [x, h, w, u, b, row_mask, saved, batch, in, hid](Graph& g, std::size_t self) {
    const Tensor& dy = g.grad(self);
    const Tensor& hv = h.value();
    const std::size_t h3 = 3 * hid;
    // da holds pre-activation gradients [dz | dr | dn].
    Tensor da({batch, h3});
    Tensor dh_direct({batch, hid});
    for (std::size_t row = 0; row < batch; ++row) {
      const bool live = row_mask.empty() || row_mask[row];
      for (std::size_t k = 0; k < hid; ++k) {
        const double d = dy.at(row, k);
        if (!live) {
          dh_direct.at(row, k) = d;
          continue;
        }
        const double z = saved->z.at(row, k);
        const double n = saved->n.at(row, k);
        dh_direct.at(row, k) = d * (1.0 - z);
        da.at(row, k) = d * (n - hv.at(row, k)) * z * (1.0 - z);
        da.at(row, 2 * hid + k) = d * z * (1.0 - n * n);
      }
    }
    // d(rh) = dn_pre Uh
    Tensor drh({batch, hid});
    for (std::size_t row = 0; row < batch; ++row) {
      kernels::gemm_nn(1, hid, hid, da.ptr() + row * h3 + 2 * hid, u.value().ptr() + 2 * hid * hid,
                       drh.ptr() + row * hid);
    }
    for (std::size_t row = 0; row < batch; ++row) {
      for (std::size_t k = 0; k < hid; ++k) {
        const double r = saved->r.at(row, k);
        da.at(row, hid + k) = drh.at(row, k) * hv.at(row, k) * r * (1.0 - r);
        dh_direct.at(row, k) += drh.at(row, k) * r;
      }
    }
    if (g.needs_grad(h)) {
      Tensor& dh = g.grad(h.id);
      kernels::axpy(dh.size(), 1.0, dh_direct.ptr(), dh.ptr());
      // + [dz dr] Uzr
      for (std::size_t row = 0; row < batch; ++row) {
        kernels::gemm_nn(1, hid, 2 * hid, da.ptr() + row * h3, u.value().ptr(), dh.ptr() + row * hid);
      }
    }
    if (g.needs_grad(u)) {
      Tensor& du = g.grad(u.id);
      // dUzr += [dz dr]^T h ; dUh += dn^T (r*h)
      for (std::size_t row = 0; row < batch; ++row) {
        const double* dar = da.ptr() + row * h3;
        for (std::size_t j = 0; j < 2 * hid; ++j) {
          if (dar[j] != 0.0) kernels::axpy(hid, dar[j], hv.ptr() + row * hid, du.ptr() + j * hid);
        }
        for (std::size_t j = 0; j < hid; ++j) {
          const double d = dar[2 * hid + j];
          if (d != 0.0) {
            kernels::axpy(hid, d, saved->rh.ptr() + row * hid, du.ptr() + (2 * hid + j) * hid);
          }
        }
      }
    }
    if (g.needs_grad(w)) kernels::gemm_tn(h3, in, batch, da.ptr(), x.value().ptr(), g.grad(w.id).ptr());
    if (g.needs_grad(b)) {
      double* db = g.grad(b.id).ptr();
      for (std::size_t row = 0; row < batch; ++row) kernels::axpy(h3, 1.0, da.ptr() + row * h3, db);
    }
    if (g.needs_grad(x)) kernels::gemm_nn(batch, in, h3, da.ptr(), w.value().ptr(), g.grad(x.id).ptr());
  });
}

Var mixture_nll(Var gen_logits, Var copy_scores, Var switch_logit, const Mask& source_mask,
                const std::vector<MixtureTarget>& targets) {
  Graph& g = graph_of(gen_logits);
  const Tensor& gv = gen_logits.value();
  const Tensor& cv = copy_scores.value();
  const Tensor& sv = switch_logit.value();
  require_matrix("mixture_nll", gv);
  const std::size_t batch = gv.rows(), vocab = gv.cols();
  if (cv.rank() != 2 || cv.rows() != batch) mismatch("mixture_nll(copy)", gv.shape(), cv.shape());
  const std::size_t len = cv.cols();
  if (sv.size() != batch) mismatch("mixture_nll(switch)", gv.shape(), sv.shape());
  if (source_mask.rows != batch || source_mask.cols != len) {
    mismatch("mixture_nll(mask)", cv.shape(), Shape{source_mask.rows, source_mask.cols});
  }
  if (targets.size() != batch) mismatch("mixture_nll(targets)", gv.shape(), Shape{targets.size()});

  struct Saved {
    Tensor gen_probs, copy_probs;
    std::vector<double> w_gen, w_copy, copy_mass, q;
  };
  auto saved = std::make_shared<Saved>();
  saved->gen_probs = Tensor(gv.shape());
  saved->copy_probs = Tensor(cv.shape());
  saved->w_gen.assign(batch, 0.0);
  saved->w_copy.assign(batch, 0.0);
  saved->copy_mass.assign(batch, 0.0);
  saved->q.assign(batch, 0.0);

  double loss = 0.0;
  for (std::size_t row = 0; row < batch; ++row) {
    const MixtureTarget& t = targets[row];
    if (!t.active) continue;
    const double* logits = gv.ptr() + row * vocab;
    double* gp = saved->gen_probs.ptr() + row * vocab;
    softmax_row(logits, gp, vocab);
    double log_gen = kNegInf;
    if (t.gen_id >= 0) {
      if (static_cast<std::size_t>(t.gen_id) >= vocab) {
        throw Error(ErrorKind::kInvalidArgument,
                    "mixture_nll: generation target " + std::to_string(t.gen_id) + " outside " +
                        std::to_string(vocab) + " classes");
      }
      double hi = kNegInf;
      for (std::size_t c = 0; c < vocab; ++c) hi = std::max(hi, logits[c]);
      double total = 0.0;
      for (std::size_t c = 0; c < vocab; ++c) total += std::exp(logits[c] - hi);
      log_gen = logits[t.gen_id] - hi - std::log(total);
    }
    double log_copy = kNegInf;
    bool any_source = false;
    for (std::size_t i = 0; i < len; ++i) any_source = any_source || source_mask(row, i);
    if (any_source) {
      double hi = kNegInf;
      for (std::size_t i = 0; i < len; ++i) {
        if (source_mask(row, i)) hi = std::max(hi, cv.at(row, i));
      }
      double total = 0.0;
      double* cp = saved->copy_probs.ptr() + row * len;
      for (std::size_t i = 0; i < len; ++i) {
        if (source_mask(row, i)) {
          cp[i] = std::exp(cv.at(row, i) - hi);
          total += cp[i];
        }
      }
      for (std::size_t i = 0; i < len; ++i) cp[i] /= total;
      double mass = 0.0;
      for (std::size_t pos : t.copy_positions) {
        if (pos >= len || !source_mask(row, pos)) {
          throw Error(ErrorKind::kInvalidArgument,
                      "mixture_nll: copy position " + std::to_string(pos) + " is not a source slot");
        }
        mass += cp[pos];
      }
      saved->copy_mass[row] = mass;
      if (!t.copy_positions.empty() && mass > 0.0) log_copy = std::log(mass);
    }
    const double z = sv[row];
    const double lq = log_sigmoid(z);
    const double l1q = log_sigmoid(-z);
    const double a = lq + log_gen;
    const double c = l1q + log_copy;
    const double lp = log_add(a, c);
    if (lp == kNegInf || !std::isfinite(lp)) {
      throw Error(ErrorKind::kNumeric,
                  "mixture_nll: row " + std::to_string(row) + " has no probability mass on its target");
    }
    loss -= lp;
    saved->q[row] = stable_sigmoid(z);
    saved->w_gen[row] = a == kNegInf ? 0.0 : std::exp(a - lp);
    saved->w_copy[row] = c == kNegInf ? 0.0 : std::exp(c - lp);
  }

  return g.record(Tensor({1}, {loss}), {gen_logits, copy_scores, switch_logit},
                  [gen_logits, copy_scores, switch_logit, targets, saved, batch, vocab, len](
                      Graph& g, std::size_t self) {
    const double dy = g.grad(self)[0];
    for (std::size_t row = 0; row < batch; ++row) {
      const MixtureTarget& t = targets[row];
      if (!t.active) continue;
      const double wg = saved->w_gen[row];
      const double wc = saved->w_copy[row];
      if (g.needs_grad(gen_logits) && wg > 0.0) {
        Tensor& dg = g.grad(gen_logits.id);
        const double* gp = saved->gen_probs.ptr() + row * vocab;
        for (std::size_t c = 0; c < vocab; ++c) dg.at(row, c) += dy * wg * gp[c];
        dg.at(row, t.gen_id) -= dy * wg;
      }
      if (g.needs_grad(copy_scores) && wc > 0.0) {
        Tensor& dc = g.grad(copy_scores.id);
        const double* cp = saved->copy_probs.ptr() + row * len;
        for (std::size_t i = 0; i < len; ++i) dc.at(row, i) += dy * wc * cp[i];
        const double mass = saved->copy_mass[row];
        for (std::size_t pos : t.copy_positions) dc.at(row, pos) -= dy * wc * cp[pos] / mass;
      }
      if (g.needs_grad(switch_logit)) {
        g.grad(switch_logit.id)[row] += -dy * (wg - saved->q[row]);
      }
    }
  });
}

}  // namespace hedmod::ad
