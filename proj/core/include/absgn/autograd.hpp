// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "absgn/tensor.hpp"

namespace absgn {

// Reverse-mode autodiff over Tensor<T>. Every op builds a tape node holding
// the forward value plus a closure that scatters the node's gradient into its
// parents. Gradients are exact (no numeric shortcuts); the finite-difference
// harness in gradcheck.hpp validates each op against central differences.

inline thread_local int g_no_grad_depth = 0;

inline bool grad_enabled() { return g_no_grad_depth == 0; }

/// Scoped tape suppression for inference paths.
struct NoGradGuard {
  NoGradGuard() { ++g_no_grad_depth; }
  ~NoGradGuard() { --g_no_grad_depth; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backward;

  Tensor<T>& ensure_grad() {
    if (grad.empty()) grad = Tensor<T>(value.shape());
    return grad;
  }
};

/// Handle to a tape node; cheap to copy.
template <typename T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}
  explicit Var(Tensor<T> value, bool requires_grad = false) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const std::shared_ptr<Node<T>>& node() const { return node_; }

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& value() { return node_->value; }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  Tensor<T>& grad() { return node_->ensure_grad(); }
  void zero_grad() { node_->grad = Tensor<T>(); }

 private:
  std::shared_ptr<Node<T>> node_;
};

template <typename T>
Var<T> make_op(Tensor<T> value, std::initializer_list<Var<T>> inputs,
               std::function<void(Node<T>&)> backward) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  if (grad_enabled()) {
    bool any = false;
    for (const Var<T>& v : inputs) any = any || v.requires_grad();
    if (any) {
      n->requires_grad = true;
      for (const Var<T>& v : inputs) n->parents.push_back(v.node());
      n->backward = std::move(backward);
    }
  }
  return Var<T>(n);
}

/// Run reverse-mode accumulation from a scalar root.
template <typename T>
void backward(const Var<T>& root) {
  check(root.value().numel() == 1, "backward: root must be a scalar");
  if (!root.requires_grad()) return;

  struct Frame {
    Node<T>* n;
    size_t next;
  };
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<Frame> stack;
  stack.push_back({root.node().get(), 0});
  visited.insert(root.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node<T>* p = f.n->parents[f.next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad().fill(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

template <typename T>
double scalar_value(const Var<T>& v) {
  check(v.value().numel() == 1, "scalar_value: not a scalar");
  return static_cast<double>(v.value()[0]);
}

// ---- elementwise ops ----

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check(a.value().same_shape(b.value()), "add: shape mismatch");
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  auto an = a.node(), bn = b.node();
  return make_op<T>(std::move(out), {a, b}, [an, bn](Node<T>& self) {
    for (auto* p : {an.get(), bn.get()}) {
      if (!p->requires_grad) continue;
      Tensor<T>& g = p->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check(a.value().same_shape(b.value()), "sub: shape mismatch");
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  auto an = a.node(), bn = b.node();
  return make_op<T>(std::move(out), {a, b}, [an, bn](Node<T>& self) {
    if (an->requires_grad) {
      Tensor<T>& g = an->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      Tensor<T>& g = bn->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check(a.value().same_shape(b.value()), "mul: shape mismatch");
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  auto an = a.node(), bn = b.node();
  return make_op<T>(std::move(out), {a, b}, [an, bn](Node<T>& self) {
    if (an->requires_grad) {
      Tensor<T>& g = an->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      Tensor<T>& g = bn->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * an->value[i];
    }
  });
}

template <typename T>
Var<T> div(const Var<T>& a, const Var<T>& b) {
  check(a.value().same_shape(b.value()), "div: shape mismatch");
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] / b.value()[i];
  auto an = a.node(), bn = b.node();
  return make_op<T>(std::move(out), {a, b}, [an, bn](Node<T>& self) {
    if (an->requires_grad) {
      Tensor<T>& g = an->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] / bn->value[i];
    }
    if (bn->requires_grad) {
      Tensor<T>& g = bn->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) {
        T bv = bn->value[i];
        g[i] -= self.grad[i] * an->value[i] / (bv * bv);
      }
    }
  });
}

template <typename T>
Var<T> add_scalar(const Var<T>& a, T s) {
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + s;
  auto an = a.node();
  return make_op<T>(std::move(out), {a}, [an](Node<T>& self) {
    if (!an->requires_grad) return;
    Tensor<T>& g = an->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
Var<T> mul_scalar(const Var<T>& a, T s) {
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * s;
  auto an = a.node();
  return make_op<T>(std::move(out), {a}, [an, s](Node<T>& self) {
    if (!an->requires_grad) return;
    Tensor<T>& g = an->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += self.grad[i] * s;
  });
}

template <typename T>
Var<T> abs_val(const Var<T>& a) {
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = std::abs(a.value()[i]);
  auto an = a.node();
  return make_op<T>(std::move(out), {a}, [an](Node<T>& self) {
    if (!an->requires_grad) return;
    Tensor<T>& g = an->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) {
      T x = an->value[i];
      g[i] += x > T(0) ? self.grad[i] : (x < T(0) ? -self.grad[i] : T(0));
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] > T(0) ? a.value()[i] : T(0);
  auto an = a.node();
  return make_op<T>(std::move(out), {a}, [an](Node<T>& self) {
    if (!an->requires_grad) return;
    Tensor<T>& g = an->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i)
      if (an->value[i] > T(0)) g[i] += self.grad[i];
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& a) {
  Tensor<T> out(a.value().shape());
  for (int64_t i = 0; i < out.numel(); ++i) out[i] = T(1) / (T(1) + std::exp(-a.value()[i]));
  auto an = a.node();
  return make_op<T>(std::move(out), {a}, [an](Node<T>& self) {
    if (!an->requires_grad) return;
    Tensor<T>& g = an->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) {
      T y = self.value[i];
      g[i] += self.grad[i] * y * (T(1) - y);
    }
  });
}

// ---- reductions ----

template <typename T>
Var<T> sum_all(const Var<T>& a) {
  double acc = 0;
  for (int64_t i = 0; i < a.value().numel(); ++i) acc += double(a.value()[i]);
  auto an = a.node();
  return make_op<T>(Tensor<T>::scalar(static_cast<T>(acc)), {a}, [an](Node<T>& self) {
    if (!an->requires_grad) return;
    Tensor<T>& g = an->ensure_grad();
    T go = self.grad[0];
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += go;
  });
}

template <typename T>
Var<T> mean_all(const Var<T>& a) {
  double acc = 0;
  int64_t n = a.value().numel();
  for (int64_t i = 0; i < n; ++i) acc += double(a.value()[i]);
  auto an = a.node();
  return make_op<T>(Tensor<T>::scalar(static_cast<T>(acc / double(n))), {a}, [an, n](Node<T>& self) {
    if (!an->requires_grad) return;
    Tensor<T>& g = an->ensure_grad();
    T go = static_cast<T>(self.grad[0] / T(n));
    for (int64_t i = 0; i < g.numel(); ++i) g[i] += go;
  });
}

// ---- shape ops ----

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& xs) {
  check(!xs.empty(), "concat_channels: empty input list");
  const Tensor<T>& first = xs[0].value();
  check(first.rank() == 4, "concat_channels: expects 4-d inputs");
  int b = first.dim(0), h = first.dim(2), w = first.dim(3);
  int ctotal = 0;
  for (const auto& x : xs) {
    check(x.value().rank() == 4 && x.value().dim(0) == b && x.value().dim(2) == h && x.value().dim(3) == w,
          "concat_channels: incompatible shapes");
    ctotal += x.value().dim(1);
  }
  Tensor<T> out(Shape{b, ctotal, h, w});
  int64_t plane = int64_t(h) * w;
  for (int bi = 0; bi < b; ++bi) {
    int coff = 0;
    for (const auto& x : xs) {
      int cx = x.value().dim(1);
      const T* src = x.value().data() + int64_t(bi) * cx * plane;
      T* dst = out.data() + (int64_t(bi) * ctotal + coff) * plane;
      std::copy(src, src + int64_t(cx) * plane, dst);
      coff += cx;
    }
  }

  std::vector<std::shared_ptr<Node<T>>> nodes;
  for (const auto& x : xs) nodes.push_back(x.node());
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(out);
  if (grad_enabled()) {
    bool any = false;
    for (const auto& x : xs) any = any || x.requires_grad();
    if (any) {
      n->requires_grad = true;
      n->parents = nodes;
      n->backward = [nodes, b, ctotal, plane](Node<T>& self) {
        for (int bi = 0; bi < b; ++bi) {
          int coff = 0;
          for (const auto& p : nodes) {
            int cx = p->value.dim(1);
            if (p->requires_grad) {
              Tensor<T>& g = p->ensure_grad();
              const T* src = self.grad.data() + (int64_t(bi) * ctotal + coff) * plane;
              T* dst = g.data() + int64_t(bi) * cx * plane;
              for (int64_t i = 0; i < int64_t(cx) * plane; ++i) dst[i] += src[i];
            }
            coff += cx;
          }
        }
      };
    }
  }
  return Var<T>(n);
}

}  // namespace absgn
