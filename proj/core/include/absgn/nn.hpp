// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include <algorithm>

#include "absgn/autograd.hpp"

namespace absgn {

// Convolution and the other learnable-layer primitives. All spatial ops keep
// H and W unchanged (zero padding = dilation*(kernel-1)/2) except the "valid"
// blur used by the SSIM kernel. Single-threaded on purpose: results are
// bitwise reproducible regardless of the host's core count.

template <typename T>
void conv2d_forward_kernel(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                           int dil, int pad, Tensor<T>& out) {
  const int B = x.dim(0), IC = x.dim(1), H = x.dim(2), Wd = x.dim(3);
  const int OC = w.dim(0), K = w.dim(2);
  const int64_t plane = int64_t(H) * Wd;
  for (int bi = 0; bi < B; ++bi) {
    for (int oc = 0; oc < OC; ++oc) {
      T* op = out.data() + (int64_t(bi) * OC + oc) * plane;
      std::fill(op, op + plane, b[oc]);
      for (int ic = 0; ic < IC; ++ic) {
        const T* xp = x.data() + (int64_t(bi) * IC + ic) * plane;
        const T* wp = w.data() + (int64_t(oc) * IC + ic) * K * K;
        for (int kh = 0; kh < K; ++kh) {
          const int ih_off = kh * dil - pad;
          const int oh_lo = std::max(0, -ih_off);
          const int oh_hi = std::min(H, H - ih_off);
          for (int kw = 0; kw < K; ++kw) {
            const T wval = wp[kh * K + kw];
            const int iw_off = kw * dil - pad;
            const int ow_lo = std::max(0, -iw_off);
            const int ow_hi = std::min(Wd, Wd - iw_off);
            for (int oh = oh_lo; oh < oh_hi; ++oh) {
              T* orow = op + int64_t(oh) * Wd;
              const T* xrow = xp + int64_t(oh + ih_off) * Wd + iw_off;
              for (int ow = ow_lo; ow < ow_hi; ++ow) orow[ow] += wval * xrow[ow];
            }
          }
        }
      }
    }
  }
}

/// 2-d convolution with bias, odd square kernel, stride 1, zero padding
/// chosen to preserve the spatial size. Weight layout [OC, IC, K, K].
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& bias, int dilation = 1) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = w.value();
  check(xv.rank() == 4 && wv.rank() == 4, "conv2d: input and weight must be 4-d");
  const int B = xv.dim(0), IC = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  const int OC = wv.dim(0), K = wv.dim(2);
  check(wv.dim(1) == IC, "conv2d: expected " + std::to_string(wv.dim(1)) +
                             " input channels, got " + std::to_string(IC));
  check(wv.dim(3) == K && K % 2 == 1, "conv2d: kernel must be square with odd size");
  check(dilation >= 1, "conv2d: dilation must be positive");
  check(bias.value().rank() == 1 && bias.value().dim(0) == OC, "conv2d: bad bias shape");
  const int pad = dilation * (K - 1) / 2;

  Tensor<T> out(Shape{B, OC, H, W});
  conv2d_forward_kernel(xv, wv, bias.value(), dilation, pad, out);

  auto xn = x.node(), wn = w.node(), bn = bias.node();
  auto bw = [xn, wn, bn, dilation, pad](Node<T>& self) {
    const Tensor<T>& xv = xn->value;
    const Tensor<T>& wv = wn->value;
    const Tensor<T>& go = self.grad;
    const int B = xv.dim(0), IC = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
    const int OC = wv.dim(0), K = wv.dim(2);
    const int64_t plane = int64_t(H) * W;

    if (bn->requires_grad) {
      Tensor<T>& gb = bn->ensure_grad();
      for (int bi = 0; bi < B; ++bi)
        for (int oc = 0; oc < OC; ++oc) {
          const T* gop = go.data() + (int64_t(bi) * OC + oc) * plane;
          double acc = 0;
          for (int64_t i = 0; i < plane; ++i) acc += double(gop[i]);
          gb[oc] += static_cast<T>(acc);
        }
    }
    if (wn->requires_grad) {
      Tensor<T>& gw = wn->ensure_grad();
      for (int bi = 0; bi < B; ++bi)
        for (int oc = 0; oc < OC; ++oc) {
          const T* gop = go.data() + (int64_t(bi) * OC + oc) * plane;
          for (int ic = 0; ic < IC; ++ic) {
            const T* xp = xv.data() + (int64_t(bi) * IC + ic) * plane;
            T* gwp = gw.data() + (int64_t(oc) * IC + ic) * K * K;
            for (int kh = 0; kh < K; ++kh) {
              const int ih_off = kh * dilation - pad;
              const int oh_lo = std::max(0, -ih_off);
              const int oh_hi = std::min(H, H - ih_off);
              for (int kw = 0; kw < K; ++kw) {
                const int iw_off = kw * dilation - pad;
                const int ow_lo = std::max(0, -iw_off);
                const int ow_hi = std::min(W, W - iw_off);
                double acc = 0;
                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                  const T* gorow = gop + int64_t(oh) * W;
                  const T* xrow = xp + int64_t(oh + ih_off) * W + iw_off;
                  T rowacc = T(0);
                  for (int ow = ow_lo; ow < ow_hi; ++ow) rowacc += gorow[ow] * xrow[ow];
                  acc += double(rowacc);
                }
                gwp[kh * K + kw] += static_cast<T>(acc);
              }
            }
          }
        }
    }
    if (xn->requires_grad) {
      Tensor<T>& gx = xn->ensure_grad();
      for (int bi = 0; bi < B; ++bi)
        for (int oc = 0; oc < OC; ++oc) {
          const T* gop = go.data() + (int64_t(bi) * OC + oc) * plane;
          for (int ic = 0; ic < IC; ++ic) {
            T* gxp = gx.data() + (int64_t(bi) * IC + ic) * plane;
            const T* wp = wv.data() + (int64_t(oc) * IC + ic) * K * K;
            for (int kh = 0; kh < K; ++kh) {
              const int ih_off = kh * dilation - pad;
              const int oh_lo = std::max(0, -ih_off);
              const int oh_hi = std::min(H, H - ih_off);
              for (int kw = 0; kw < K; ++kw) {
                const T wval = wp[kh * K + kw];
                const int iw_off = kw * dilation - pad;
                const int ow_lo = std::max(0, -iw_off);
                const int ow_hi = std::min(W, W - iw_off);
                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                  const T* gorow = gop + int64_t(oh) * W;
                  T* gxrow = gxp + int64_t(oh + ih_off) * W + iw_off;
                  for (int ow = ow_lo; ow < ow_hi; ++ow) gxrow[ow] += wval * gorow[ow];
                }
              }
            }
          }
        }
    }
  };
  return make_op<T>(std::move(out), {x, w, bias}, std::move(bw));
}

/// PReLU with one learnable slope per channel.
template <typename T>
Var<T> prelu(const Var<T>& x, const Var<T>& slope) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "prelu: input must be 4-d");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  check(slope.value().rank() == 1 && slope.value().dim(0) == C, "prelu: slope per channel required");
  const int64_t plane = int64_t(H) * W;
  Tensor<T> out(xv.shape());
  for (int bi = 0; bi < B; ++bi)
    for (int c = 0; c < C; ++c) {
      const T a = slope.value()[c];
      const T* xp = xv.data() + (int64_t(bi) * C + c) * plane;
      T* op = out.data() + (int64_t(bi) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) op[i] = xp[i] > T(0) ? xp[i] : a * xp[i];
    }
  auto xn = x.node(), sn = slope.node();
  return make_op<T>(std::move(out), {x, slope}, [xn, sn, B, C, plane](Node<T>& self) {
    const Tensor<T>& xv = xn->value;
    if (xn->requires_grad) {
      Tensor<T>& gx = xn->ensure_grad();
      for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < C; ++c) {
          const T a = sn->value[c];
          const int64_t base = (int64_t(bi) * C + c) * plane;
          for (int64_t i = 0; i < plane; ++i)
            gx[base + i] += self.grad[base + i] * (xv[base + i] > T(0) ? T(1) : a);
        }
    }
    if (sn->requires_grad) {
      Tensor<T>& gs = sn->ensure_grad();
      for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < C; ++c) {
          const int64_t base = (int64_t(bi) * C + c) * plane;
          double acc = 0;
          for (int64_t i = 0; i < plane; ++i)
            if (xv[base + i] <= T(0)) acc += double(self.grad[base + i]) * double(xv[base + i]);
          gs[c] += static_cast<T>(acc);
        }
    }
  });
}

// ---- pooling ----

template <typename T>
Var<T> global_avg_pool(const Var<T>& x) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "global_avg_pool: input must be 4-d");
  const int B = xv.dim(0), C = xv.dim(1);
  const int64_t plane = int64_t(xv.dim(2)) * xv.dim(3);
  Tensor<T> out(Shape{B, C, 1, 1});
  for (int bi = 0; bi < B; ++bi)
    for (int c = 0; c < C; ++c) {
      const T* xp = xv.data() + (int64_t(bi) * C + c) * plane;
      double acc = 0;
      for (int64_t i = 0; i < plane; ++i) acc += double(xp[i]);
      out[int64_t(bi) * C + c] = static_cast<T>(acc / double(plane));
    }
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn, B, C, plane](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T>& gx = xn->ensure_grad();
    for (int bi = 0; bi < B; ++bi)
      for (int c = 0; c < C; ++c) {
        const T go = static_cast<T>(self.grad[int64_t(bi) * C + c] / T(plane));
        T* gp = gx.data() + (int64_t(bi) * C + c) * plane;
        for (int64_t i = 0; i < plane; ++i) gp[i] += go;
      }
  });
}

template <typename T>
Var<T> global_max_pool(const Var<T>& x) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "global_max_pool: input must be 4-d");
  const int B = xv.dim(0), C = xv.dim(1);
  const int64_t plane = int64_t(xv.dim(2)) * xv.dim(3);
  Tensor<T> out(Shape{B, C, 1, 1});
  std::vector<int64_t> argmax(static_cast<size_t>(B) * C);
  for (int bi = 0; bi < B; ++bi)
    for (int c = 0; c < C; ++c) {
      const T* xp = xv.data() + (int64_t(bi) * C + c) * plane;
      int64_t best = 0;
      for (int64_t i = 1; i < plane; ++i)
        if (xp[i] > xp[best]) best = i;
      out[int64_t(bi) * C + c] = xp[best];
      argmax[static_cast<size_t>(int64_t(bi) * C + c)] = best;
    }
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn, B, C, plane, argmax = std::move(argmax)](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T>& gx = xn->ensure_grad();
    for (int64_t bc = 0; bc < int64_t(B) * C; ++bc)
      gx[bc * plane + argmax[static_cast<size_t>(bc)]] += self.grad[bc];
  });
}

/// Per-pixel mean over channels: [B,C,H,W] -> [B,1,H,W].
template <typename T>
Var<T> channel_mean(const Var<T>& x) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "channel_mean: input must be 4-d");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  const int64_t plane = int64_t(H) * W;
  Tensor<T> out(Shape{B, 1, H, W});
  for (int bi = 0; bi < B; ++bi) {
    T* op = out.data() + int64_t(bi) * plane;
    for (int c = 0; c < C; ++c) {
      const T* xp = xv.data() + (int64_t(bi) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) op[i] += xp[i];
    }
    for (int64_t i = 0; i < plane; ++i) op[i] /= T(C);
  }
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn, B, C, plane](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T>& gx = xn->ensure_grad();
    for (int bi = 0; bi < B; ++bi) {
      const T* gop = self.grad.data() + int64_t(bi) * plane;
      for (int c = 0; c < C; ++c) {
        T* gp = gx.data() + (int64_t(bi) * C + c) * plane;
        for (int64_t i = 0; i < plane; ++i) gp[i] += gop[i] / T(C);
      }
    }
  });
}

/// Per-pixel max over channels: [B,C,H,W] -> [B,1,H,W]. Ties go to the
/// lowest channel index.
template <typename T>
Var<T> channel_max(const Var<T>& x) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "channel_max: input must be 4-d");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  const int64_t plane = int64_t(H) * W;
  Tensor<T> out(Shape{B, 1, H, W});
  std::vector<int> argmax(static_cast<size_t>(int64_t(B) * plane));
  for (int bi = 0; bi < B; ++bi) {
    const T* xp = xv.data() + int64_t(bi) * C * plane;
    T* op = out.data() + int64_t(bi) * plane;
    int* ap = argmax.data() + int64_t(bi) * plane;
    for (int64_t i = 0; i < plane; ++i) {
      T best = xp[i];
      int bc = 0;
      for (int c = 1; c < C; ++c) {
        T v = xp[int64_t(c) * plane + i];
        if (v > best) {
          best = v;
          bc = c;
        }
      }
      op[i] = best;
      ap[i] = bc;
    }
  }
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn, B, plane, argmax = std::move(argmax)](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T>& gx = xn->ensure_grad();
    const int C = xn->value.dim(1);
    for (int bi = 0; bi < B; ++bi) {
      const T* gop = self.grad.data() + int64_t(bi) * plane;
      const int* ap = argmax.data() + int64_t(bi) * plane;
      T* gp = gx.data() + int64_t(bi) * C * plane;
      for (int64_t i = 0; i < plane; ++i) gp[int64_t(ap[i]) * plane + i] += gop[i];
    }
  });
}

/// Replicate a [B,C,1,1] map to [B,C,H,W].
template <typename T>
Var<T> broadcast_hw(const Var<T>& x, int H, int W) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4 && xv.dim(2) == 1 && xv.dim(3) == 1, "broadcast_hw: input must be [B,C,1,1]");
  const int B = xv.dim(0), C = xv.dim(1);
  const int64_t plane = int64_t(H) * W;
  Tensor<T> out(Shape{B, C, H, W});
  for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
    T* op = out.data() + bc * plane;
    std::fill(op, op + plane, xv[bc]);
  }
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn, B, C, plane](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T>& gx = xn->ensure_grad();
    for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
      const T* gop = self.grad.data() + bc * plane;
      double acc = 0;
      for (int64_t i = 0; i < plane; ++i) acc += double(gop[i]);
      gx[bc] += static_cast<T>(acc);
    }
  });
}

/// x[B,C,H,W] * map[B,1,H,W], map broadcast over channels.
template <typename T>
Var<T> scale_by_map(const Var<T>& x, const Var<T>& map) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& mv = map.value();
  check(xv.rank() == 4 && mv.rank() == 4 && mv.dim(1) == 1 && mv.dim(0) == xv.dim(0) &&
            mv.dim(2) == xv.dim(2) && mv.dim(3) == xv.dim(3),
        "scale_by_map: map must be [B,1,H,W] matching x");
  const int B = xv.dim(0), C = xv.dim(1);
  const int64_t plane = int64_t(xv.dim(2)) * xv.dim(3);
  Tensor<T> out(xv.shape());
  for (int bi = 0; bi < B; ++bi) {
    const T* mp = mv.data() + int64_t(bi) * plane;
    for (int c = 0; c < C; ++c) {
      const T* xp = xv.data() + (int64_t(bi) * C + c) * plane;
      T* op = out.data() + (int64_t(bi) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) op[i] = xp[i] * mp[i];
    }
  }
  auto xn = x.node(), mn = map.node();
  return make_op<T>(std::move(out), {x, map}, [xn, mn, B, C, plane](Node<T>& self) {
    if (xn->requires_grad) {
      Tensor<T>& gx = xn->ensure_grad();
      for (int bi = 0; bi < B; ++bi) {
        const T* mp = mn->value.data() + int64_t(bi) * plane;
        for (int c = 0; c < C; ++c) {
          const int64_t base = (int64_t(bi) * C + c) * plane;
          for (int64_t i = 0; i < plane; ++i) gx[base + i] += self.grad[base + i] * mp[i];
        }
      }
    }
    if (mn->requires_grad) {
      Tensor<T>& gm = mn->ensure_grad();
      for (int bi = 0; bi < B; ++bi) {
        T* gmp = gm.data() + int64_t(bi) * plane;
        for (int c = 0; c < C; ++c) {
          const int64_t base = (int64_t(bi) * C + c) * plane;
          for (int64_t i = 0; i < plane; ++i) gmp[i] += self.grad[base + i] * xn->value[base + i];
        }
      }
    }
  });
}

/// x[B,C,H,W] * scale[B,C,1,1], scale broadcast over pixels.
template <typename T>
Var<T> scale_by_channel(const Var<T>& x, const Var<T>& scale) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& sv = scale.value();
  check(xv.rank() == 4 && sv.rank() == 4 && sv.dim(0) == xv.dim(0) && sv.dim(1) == xv.dim(1) &&
            sv.dim(2) == 1 && sv.dim(3) == 1,
        "scale_by_channel: scale must be [B,C,1,1] matching x");
  const int B = xv.dim(0), C = xv.dim(1);
  const int64_t plane = int64_t(xv.dim(2)) * xv.dim(3);
  Tensor<T> out(xv.shape());
  for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
    const T s = sv[bc];
    const T* xp = xv.data() + bc * plane;
    T* op = out.data() + bc * plane;
    for (int64_t i = 0; i < plane; ++i) op[i] = xp[i] * s;
  }
  auto xn = x.node(), sn = scale.node();
  return make_op<T>(std::move(out), {x, scale}, [xn, sn, B, C, plane](Node<T>& self) {
    if (xn->requires_grad) {
      Tensor<T>& gx = xn->ensure_grad();
      for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
        const T s = sn->value[bc];
        for (int64_t i = 0; i < plane; ++i) gx[bc * plane + i] += self.grad[bc * plane + i] * s;
      }
    }
    if (sn->requires_grad) {
      Tensor<T>& gs = sn->ensure_grad();
      for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
        double acc = 0;
        for (int64_t i = 0; i < plane; ++i)
          acc += double(self.grad[bc * plane + i]) * double(xn->value[bc * plane + i]);
        gs[bc] += static_cast<T>(acc);
      }
    }
  });
}

// ---- batch normalization ----

/// Batch norm over (B,H,W) per channel. In training mode batch statistics are
/// used and the running buffers updated in place (biased batch variance for
/// normalization, unbiased for the running estimate); in eval mode the
/// running buffers are constants of the graph.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  Tensor<T>& running_mean, Tensor<T>& running_var, bool training,
                  T momentum = T(0.1), T eps = T(1e-5)) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "batch_norm: input must be 4-d");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  check(gamma.value().dim(0) == C && beta.value().dim(0) == C, "batch_norm: affine size mismatch");
  const int64_t plane = int64_t(H) * W;
  const int64_t n = int64_t(B) * plane;

  Tensor<T> mean(Shape{C}), invstd(Shape{C});
  if (training) {
    for (int c = 0; c < C; ++c) {
      double acc = 0;
      for (int bi = 0; bi < B; ++bi) {
        const T* xp = xv.data() + (int64_t(bi) * C + c) * plane;
        for (int64_t i = 0; i < plane; ++i) acc += double(xp[i]);
      }
      double mu = acc / double(n);
      double vacc = 0;
      for (int bi = 0; bi < B; ++bi) {
        const T* xp = xv.data() + (int64_t(bi) * C + c) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          double d = double(xp[i]) - mu;
          vacc += d * d;
        }
      }
      double var = vacc / double(n);
      mean[c] = static_cast<T>(mu);
      invstd[c] = static_cast<T>(1.0 / std::sqrt(var + double(eps)));
      running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * static_cast<T>(mu);
      double unbiased = n > 1 ? var * double(n) / double(n - 1) : var;
      running_var[c] = (T(1) - momentum) * running_var[c] + momentum * static_cast<T>(unbiased);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = running_mean[c];
      invstd[c] = static_cast<T>(1.0 / std::sqrt(double(running_var[c]) + double(eps)));
    }
  }

  Tensor<T> xhat(xv.shape());
  Tensor<T> out(xv.shape());
  for (int bi = 0; bi < B; ++bi)
    for (int c = 0; c < C; ++c) {
      const T mu = mean[c], is = invstd[c];
      const T g = gamma.value()[c], bt = beta.value()[c];
      const int64_t base = (int64_t(bi) * C + c) * plane;
      for (int64_t i = 0; i < plane; ++i) {
        T xh = (xv[base + i] - mu) * is;
        xhat[base + i] = xh;
        out[base + i] = g * xh + bt;
      }
    }

  auto xn = x.node(), gn = gamma.node(), bn = beta.node();
  auto bw = [xn, gn, bn, B, C, plane, n, training, xhat = std::move(xhat),
             invstd = std::move(invstd)](Node<T>& self) {
    // per-channel reductions of go and go*xhat
    Tensor<T> sum_go(Shape{C}), sum_goxh(Shape{C});
    for (int c = 0; c < C; ++c) {
      double a = 0, b2 = 0;
      for (int bi = 0; bi < B; ++bi) {
        const int64_t base = (int64_t(bi) * C + c) * plane;
        for (int64_t i = 0; i < plane; ++i) {
          a += double(self.grad[base + i]);
          b2 += double(self.grad[base + i]) * double(xhat[base + i]);
        }
      }
      sum_go[c] = static_cast<T>(a);
      sum_goxh[c] = static_cast<T>(b2);
    }
    if (bn->requires_grad) {
      Tensor<T>& gb = bn->ensure_grad();
      for (int c = 0; c < C; ++c) gb[c] += sum_go[c];
    }
    if (gn->requires_grad) {
      Tensor<T>& gg = gn->ensure_grad();
      for (int c = 0; c < C; ++c) gg[c] += sum_goxh[c];
    }
    if (xn->requires_grad) {
      Tensor<T>& gx = xn->ensure_grad();
      for (int bi = 0; bi < B; ++bi)
        for (int c = 0; c < C; ++c) {
          const T k = gn->value[c] * invstd[c];
          const int64_t base = (int64_t(bi) * C + c) * plane;
          if (training) {
            const T mgo = sum_go[c] / T(n);
            const T mgoxh = sum_goxh[c] / T(n);
            for (int64_t i = 0; i < plane; ++i)
              gx[base + i] += k * (self.grad[base + i] - mgo - xhat[base + i] * mgoxh);
          } else {
            for (int64_t i = 0; i < plane; ++i) gx[base + i] += k * self.grad[base + i];
          }
        }
    }
  };
  return make_op<T>(std::move(out), {x, gamma, beta}, std::move(bw));
}

// ---- padding and cropping ----

inline int reflect_index(int i, int n) {
  if (i < 0) return -i;
  if (i >= n) return 2 * n - 2 - i;
  return i;
}

/// Mirror padding without edge repetition; pad must be < dim.
template <typename T>
Var<T> reflect_pad(const Var<T>& x, int top, int bottom, int left, int right) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "reflect_pad: input must be 4-d");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  check(top < H && bottom < H && left < W && right < W, "reflect_pad: pad must be smaller than dim");
  const int OH = H + top + bottom, OW = W + left + right;
  Tensor<T> out(Shape{B, C, OH, OW});
  for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
    const T* xp = xv.data() + bc * H * W;
    T* op = out.data() + bc * OH * OW;
    for (int oh = 0; oh < OH; ++oh) {
      const int ih = reflect_index(oh - top, H);
      for (int ow = 0; ow < OW; ++ow) op[int64_t(oh) * OW + ow] = xp[int64_t(ih) * W + reflect_index(ow - left, W)];
    }
  }
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn, B, C, H, W, OH, OW, top, left](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T>& gx = xn->ensure_grad();
    for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
      T* gp = gx.data() + bc * H * W;
      const T* gop = self.grad.data() + bc * OH * OW;
      for (int oh = 0; oh < OH; ++oh) {
        const int ih = reflect_index(oh - top, H);
        for (int ow = 0; ow < OW; ++ow) gp[int64_t(ih) * W + reflect_index(ow - left, W)] += gop[int64_t(oh) * OW + ow];
      }
    }
  });
}

template <typename T>
Var<T> crop(const Var<T>& x, int top, int left, int OH, int OW) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "crop: input must be 4-d");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  check(top >= 0 && left >= 0 && top + OH <= H && left + OW <= W, "crop: window out of range");
  Tensor<T> out(Shape{B, C, OH, OW});
  for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
    const T* xp = xv.data() + bc * H * W;
    T* op = out.data() + bc * OH * OW;
    for (int oh = 0; oh < OH; ++oh)
      std::copy(xp + int64_t(oh + top) * W + left, xp + int64_t(oh + top) * W + left + OW, op + int64_t(oh) * OW);
  }
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn, B, C, H, W, OH, OW, top, left](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T>& gx = xn->ensure_grad();
    for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
      T* gp = gx.data() + bc * H * W;
      const T* gop = self.grad.data() + bc * OH * OW;
      for (int oh = 0; oh < OH; ++oh)
        for (int ow = 0; ow < OW; ++ow) gp[int64_t(oh + top) * W + left + ow] += gop[int64_t(oh) * OW + ow];
    }
  });
}

/// Depthwise "valid" correlation with one fixed (non-learnable) 2-d kernel
/// applied to every channel; output is [B,C,H-K+1,W-K+1].
template <typename T>
Var<T> depthwise_blur_valid(const Var<T>& x, const Tensor<T>& kernel) {
  const Tensor<T>& xv = x.value();
  check(xv.rank() == 4, "depthwise_blur_valid: input must be 4-d");
  check(kernel.rank() == 2 && kernel.dim(0) == kernel.dim(1), "depthwise_blur_valid: square kernel required");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  const int K = kernel.dim(0);
  check(H >= K && W >= K, "depthwise_blur_valid: image smaller than kernel");
  const int OH = H - K + 1, OW = W - K + 1;
  Tensor<T> out(Shape{B, C, OH, OW});
  for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
    const T* xp = xv.data() + bc * H * W;
    T* op = out.data() + bc * OH * OW;
    for (int kh = 0; kh < K; ++kh)
      for (int kw = 0; kw < K; ++kw) {
        const T kv = kernel[int64_t(kh) * K + kw];
        for (int oh = 0; oh < OH; ++oh) {
          const T* xrow = xp + int64_t(oh + kh) * W + kw;
          T* orow = op + int64_t(oh) * OW;
          for (int ow = 0; ow < OW; ++ow) orow[ow] += kv * xrow[ow];
        }
      }
  }
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn, B, C, H, W, K, OH, OW, kernel](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T>& gx = xn->ensure_grad();
    for (int64_t bc = 0; bc < int64_t(B) * C; ++bc) {
      T* gp = gx.data() + bc * H * W;
      const T* gop = self.grad.data() + bc * OH * OW;
      for (int kh = 0; kh < K; ++kh)
        for (int kw = 0; kw < K; ++kw) {
          const T kv = kernel[int64_t(kh) * K + kw];
          for (int oh = 0; oh < OH; ++oh) {
            T* gxrow = gp + int64_t(oh + kh) * W + kw;
            const T* gorow = gop + int64_t(oh) * OW;
            for (int ow = 0; ow < OW; ++ow) gxrow[ow] += kv * gorow[ow];
          }
        }
    }
  });
}

template <typename T>
Tensor<T> clamp01(Tensor<T> t) {
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = std::min(T(1), std::max(T(0), t[i]));
  return t;
}

}  // namespace absgn
