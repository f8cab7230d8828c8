#pragma once

#include <span>
#include <utility>
#include <vector>

#include "sgsg/ops.hpp"

namespace sgsg {

enum class Act { relu, sigmoid, tanh };

template <typename Scalar>
Var<Scalar> activation(Var<Scalar> x, Act kind) {
  switch (kind) {
    case Act::relu:
      return relu(x);
    case Act::sigmoid:
      return sigmoid(x);
    case Act::tanh:
      return tanh(x);
  }
  throw ShapeError("unknown activation");
}

/// y = W x + b.
template <typename Scalar>
Var<Scalar> affine(Var<Scalar> x, Var<Scalar> w, Var<Scalar> b) {
  return add(matvec(w, x), b);
}

/// 2-D cross-correlation. x is {C,H,W}, w is {Co,C,k,k}, b is {Co};
/// output is {Co,H',W'} with H' = floor((H + 2 pad - k) / stride) + 1.
template <typename Scalar>
Var<Scalar> conv2d(Var<Scalar> x, Var<Scalar> w, Var<Scalar> b, int stride = 1, int pad = 0) {
  detail::check_same_tape(x, w);
  detail::check_same_tape(x, b);
  if (x.value().rank() != 3) throw ShapeError("conv2d: input must be {C,H,W}");
  if (w.value().rank() != 4) throw ShapeError("conv2d: kernel must be {Co,C,k,k}");
  const int C = x.value().dim(0), H = x.value().dim(1), W = x.value().dim(2);
  const int Co = w.value().dim(0), k = w.value().dim(2);
  if (w.value().dim(1) != C || w.value().dim(3) != k) {
    throw ShapeError("conv2d: kernel " + shape_str(w.value().shape) + " vs input " +
                     shape_str(x.value().shape));
  }
  if (b.value().numel() != Co) throw ShapeError("conv2d: bias size mismatch");
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: bad stride/pad");
  if (H + 2 * pad < k || W + 2 * pad < k) {
    throw ShapeError("conv2d: kernel larger than padded input");
  }
  const int Ho = (H + 2 * pad - k) / stride + 1;
  const int Wo = (W + 2 * pad - k) / stride + 1;

  Tensor<Scalar> out(Shape{Co, Ho, Wo});
  {
    const Scalar* xd = x.value().data.data();
    const Scalar* wd = w.value().data.data();
    const Scalar* bd = b.value().data.data();
    Scalar* od = out.data.data();
    for (int co = 0; co < Co; ++co)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          Scalar acc = bd[co];
          for (int c = 0; c < C; ++c)
            for (int ky = 0; ky < k; ++ky) {
              const int iy = oy * stride + ky - pad;
              if (iy < 0 || iy >= H) continue;
              for (int kx = 0; kx < k; ++kx) {
                const int ix = ox * stride + kx - pad;
                if (ix < 0 || ix >= W) continue;
                acc += xd[(c * H + iy) * W + ix] * wd[((co * C + c) * k + ky) * k + kx];
              }
            }
          od[(co * Ho + oy) * Wo + ox] = acc;
        }
  }

  const int ixid = x.id(), iwid = w.id(), ibid = b.id();
  int id = x.tape().push(
      std::move(out),
      [ixid, iwid, ibid, C, H, W, Co, k, Ho, Wo, stride, pad](Tape<Scalar>& t, int self) {
        const VecX<Scalar>& g = t.grad(self);
        const Scalar* xd = t.value(ixid).data.data();
        const Scalar* wd = t.value(iwid).data.data();
        Scalar* gx = t.grad(ixid).data();
        Scalar* gw = t.grad(iwid).data();
        Scalar* gb = t.grad(ibid).data();
        for (int co = 0; co < Co; ++co)
          for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox) {
              const Scalar go = g[(co * Ho + oy) * Wo + ox];
              gb[co] += go;
              for (int c = 0; c < C; ++c)
                for (int ky = 0; ky < k; ++ky) {
                  const int iy = oy * stride + ky - pad;
                  if (iy < 0 || iy >= H) continue;
                  for (int kx = 0; kx < k; ++kx) {
                    const int ix = ox * stride + kx - pad;
                    if (ix < 0 || ix >= W) continue;
                    gw[((co * C + c) * k + ky) * k + kx] += go * xd[(c * H + iy) * W + ix];
                    gx[(c * H + iy) * W + ix] += go * wd[((co * C + c) * k + ky) * k + kx];
                  }
                }
            }
      });
  return {&x.tape(), id};
}

/// Average pooling over full k x k windows; output {C,H',W'} with
/// H' = floor((H - k) / stride) + 1.
template <typename Scalar>
Var<Scalar> avg_pool2d(Var<Scalar> x, int k = 2, int stride = 2) {
  if (x.value().rank() != 3) throw ShapeError("avg_pool2d: input must be {C,H,W}");
  const int C = x.value().dim(0), H = x.value().dim(1), W = x.value().dim(2);
  if (k < 1 || stride < 1 || H < k || W < k) throw ShapeError("avg_pool2d: window too large");
  const int Ho = (H - k) / stride + 1;
  const int Wo = (W - k) / stride + 1;
  const Scalar inv = Scalar(1) / Scalar(k * k);

  Tensor<Scalar> out(Shape{C, Ho, Wo});
  {
    const Scalar* xd = x.value().data.data();
    Scalar* od = out.data.data();
    for (int c = 0; c < C; ++c)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          Scalar acc = Scalar(0);
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx)
              acc += xd[(c * H + oy * stride + ky) * W + ox * stride + kx];
          od[(c * Ho + oy) * Wo + ox] = acc * inv;
        }
  }

  const int ixid = x.id();
  int id = x.tape().push(std::move(out),
                         [ixid, C, H, W, k, Ho, Wo, stride, inv](Tape<Scalar>& t, int self) {
                           const VecX<Scalar>& g = t.grad(self);
                           Scalar* gx = t.grad(ixid).data();
                           for (int c = 0; c < C; ++c)
                             for (int oy = 0; oy < Ho; ++oy)
                               for (int ox = 0; ox < Wo; ++ox) {
                                 const Scalar go = g[(c * Ho + oy) * Wo + ox] * inv;
                                 for (int ky = 0; ky < k; ++ky)
                                   for (int kx = 0; kx < k; ++kx)
                                     gx[(c * H + oy * stride + ky) * W + ox * stride + kx] += go;
                               }
                         });
  return {&x.tape(), id};
}

/// One LSTM layer's weights. Gate layout along the 4H axis: input, forget,
/// cell candidate, output.
template <typename Scalar>
struct LstmVars {
  Var<Scalar> w_ih;  // {4H, d_in}
  Var<Scalar> w_hh;  // {4H, H}
  Var<Scalar> b;     // {4H}
};

template <typename Scalar>
struct LstmState {
  Var<Scalar> h;
  Var<Scalar> c;
};

template <typename Scalar>
int lstm_hidden_dim(const LstmVars<Scalar>& p) {
  return p.w_hh.value().dim(1);
}

template <typename Scalar>
LstmState<Scalar> lstm_zero_state(Tape<Scalar>& tape, int hidden) {
  return {make_zeros(tape, hidden), make_zeros(tape, hidden)};
}

/// Standard LSTM recurrence: c = f (.) c_prev + i (.) tanh-candidate,
/// h = o (.) tanh(c).
template <typename Scalar>
LstmState<Scalar> lstm_cell(Var<Scalar> x, LstmState<Scalar> prev, const LstmVars<Scalar>& p) {
  const int hidden = lstm_hidden_dim(p);
  if (p.w_ih.value().dim(0) != 4 * hidden || p.b.value().numel() != 4 * hidden) {
    throw ShapeError("lstm_cell: weight shapes disagree on hidden size");
  }
  if (prev.h.value().numel() != hidden || prev.c.value().numel() != hidden) {
    throw ShapeError("lstm_cell: state size mismatch");
  }
  Var<Scalar> pre = add(add(matvec(p.w_ih, x), matvec(p.w_hh, prev.h)), p.b);
  Var<Scalar> gate_i = sigmoid(slice(pre, 0, hidden));
  Var<Scalar> gate_f = sigmoid(slice(pre, hidden, hidden));
  Var<Scalar> cand = tanh(slice(pre, 2 * hidden, hidden));
  Var<Scalar> gate_o = sigmoid(slice(pre, 3 * hidden, hidden));
  Var<Scalar> c = add(mul(gate_f, prev.c), mul(gate_i, cand));
  Var<Scalar> h = mul(gate_o, tanh(c));
  return {h, c};
}

/// Runs the cell over a sequence from a zero state; returns the final hidden.
template <typename Scalar>
Var<Scalar> run_lstm(Tape<Scalar>& tape, const LstmVars<Scalar>& p,
                     std::span<const Var<Scalar>> inputs) {
  LstmState<Scalar> st = lstm_zero_state(tape, lstm_hidden_dim(p));
  for (const Var<Scalar>& x : inputs) st = lstm_cell(x, st, p);
  return st.h;
}

}  // namespace sgsg
