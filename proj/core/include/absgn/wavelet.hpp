// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 ABSGN Project Contributors

#pragma once

#include "absgn/autograd.hpp"

namespace absgn {

// Single-level orthonormal 2-d Haar transform. A [B,C,H,W] map becomes
// [B,4C,H/2,W/2] with subband-grouped channels: C low-low channels first,
// then C low-high, C high-low, C high-high. Per 2x2 block [[a,b],[c,d]]:
//   LL=(a+b+c+d)/2  LH=(a+b-c-d)/2  HL=(a-b+c-d)/2  HH=(a-b-c+d)/2
// The 1/2 normalization makes the transform orthonormal, so it preserves
// energy and is its own adjoint pair with the inverse below.

template <typename T>
Tensor<T> dwt2_tensor(const Tensor<T>& x, bool validate = true) {
  check(x.rank() == 4, "dwt2: input must be 4-d");
  const int B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  check(H % 2 == 0 && W % 2 == 0, "dwt2: H and W must be even (pad first), got " + shape_str(x.shape()));
  if (validate) check(x.all_finite(), "dwt2: non-finite input");
  const int OH = H / 2, OW = W / 2;
  const int64_t in_plane = int64_t(H) * W;
  const int64_t out_plane = int64_t(OH) * OW;
  Tensor<T> out(Shape{B, 4 * C, OH, OW});
  for (int bi = 0; bi < B; ++bi)
    for (int c = 0; c < C; ++c) {
      const T* xp = x.data() + (int64_t(bi) * C + c) * in_plane;
      T* ll = out.data() + (int64_t(bi) * 4 * C + c) * out_plane;
      T* lh = out.data() + (int64_t(bi) * 4 * C + C + c) * out_plane;
      T* hl = out.data() + (int64_t(bi) * 4 * C + 2 * C + c) * out_plane;
      T* hh = out.data() + (int64_t(bi) * 4 * C + 3 * C + c) * out_plane;
      for (int oh = 0; oh < OH; ++oh) {
        const T* r0 = xp + int64_t(2 * oh) * W;
        const T* r1 = r0 + W;
        for (int ow = 0; ow < OW; ++ow) {
          const T a = r0[2 * ow], b = r0[2 * ow + 1];
          const T cc = r1[2 * ow], d = r1[2 * ow + 1];
          const int64_t i = int64_t(oh) * OW + ow;
          ll[i] = (a + b + cc + d) * T(0.5);
          lh[i] = (a + b - cc - d) * T(0.5);
          hl[i] = (a - b + cc - d) * T(0.5);
          hh[i] = (a - b - cc + d) * T(0.5);
        }
      }
    }
  return out;
}

template <typename T>
Tensor<T> idwt2_tensor(const Tensor<T>& s) {
  check(s.rank() == 4, "idwt2: input must be 4-d");
  const int B = s.dim(0), C4 = s.dim(1), H = s.dim(2), W = s.dim(3);
  check(C4 % 4 == 0, "idwt2: channel count must be divisible by 4, got " + std::to_string(C4));
  const int C = C4 / 4;
  const int OH = 2 * H, OW = 2 * W;
  const int64_t in_plane = int64_t(H) * W;
  const int64_t out_plane = int64_t(OH) * OW;
  Tensor<T> out(Shape{B, C, OH, OW});
  for (int bi = 0; bi < B; ++bi)
    for (int c = 0; c < C; ++c) {
      const T* ll = s.data() + (int64_t(bi) * C4 + c) * in_plane;
      const T* lh = s.data() + (int64_t(bi) * C4 + C + c) * in_plane;
      const T* hl = s.data() + (int64_t(bi) * C4 + 2 * C + c) * in_plane;
      const T* hh = s.data() + (int64_t(bi) * C4 + 3 * C + c) * in_plane;
      T* op = out.data() + (int64_t(bi) * C + c) * out_plane;
      for (int ih = 0; ih < H; ++ih) {
        T* r0 = op + int64_t(2 * ih) * OW;
        T* r1 = r0 + OW;
        for (int iw = 0; iw < W; ++iw) {
          const int64_t i = int64_t(ih) * W + iw;
          const T l0 = ll[i], l1 = lh[i], h0 = hl[i], h1 = hh[i];
          r0[2 * iw] = (l0 + l1 + h0 + h1) * T(0.5);
          r0[2 * iw + 1] = (l0 + l1 - h0 - h1) * T(0.5);
          r1[2 * iw] = (l0 - l1 + h0 - h1) * T(0.5);
          r1[2 * iw + 1] = (l0 - l1 - h0 + h1) * T(0.5);
        }
      }
    }
  return out;
}

// Orthonormality gives adjoint == inverse, so each transform's backward pass
// is simply the other transform applied to the gradient.

template <typename T>
Var<T> dwt2(const Var<T>& x) {
  Tensor<T> out = dwt2_tensor(x.value());
  auto xn = x.node();
  return make_op<T>(std::move(out), {x}, [xn](Node<T>& self) {
    if (!xn->requires_grad) return;
    Tensor<T> gin = idwt2_tensor(self.grad);
    Tensor<T>& gx = xn->ensure_grad();
    for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += gin[i];
  });
}

template <typename T>
Var<T> idwt2(const Var<T>& s) {
  Tensor<T> out = idwt2_tensor(s.value());
  auto sn = s.node();
  return make_op<T>(std::move(out), {s}, [sn](Node<T>& self) {
    if (!sn->requires_grad) return;
    Tensor<T> gin = dwt2_tensor(self.grad, /*validate=*/false);
    Tensor<T>& gs = sn->ensure_grad();
    for (int64_t i = 0; i < gs.numel(); ++i) gs[i] += gin[i];
  });
}

}  // namespace absgn
