#pragma once

#include <cstddef>

#include "tdanet/grad/ops.hpp"

namespace tdanet::grad {

struct LstmWeights {
  Var weight_ih;  // i x 4H
  Var weight_hh;  // H x 4H
  Var bias;       // 1 x 4H
};

struct LstmOutput {
  Var h;
  Var c;
};

// One LSTM cell step. Gate blocks in the 4H axis are ordered input, forget,
// candidate, output.
inline LstmOutput lstm_step(Graph& g, Var x, Var h, Var c, const LstmWeights& w) {
  const Shape hs = g.shape(h);
  const Shape cs = g.shape(c);
  const Shape ws = g.shape(w.weight_hh);
  const std::size_t hidden = hs.cols;
  if (hs.rows != 1 || cs != hs) throw DimensionError("lstm_step (h vs c)", hs, cs);
  if (ws.rows != hidden || ws.cols != 4 * hidden) throw DimensionError("lstm_step (h vs W_hh)", hs, ws);
  if (g.shape(w.weight_ih).cols != 4 * hidden) throw DimensionError("lstm_step (W_ih vs W_hh)", g.shape(w.weight_ih), ws);

  const Var z = add(g, linear(g, x, w.weight_ih, w.bias), matmul(g, h, w.weight_hh));
  const Var in_gate = sigmoid(g, slice_cols(g, z, 0, hidden));
  const Var forget_gate = sigmoid(g, slice_cols(g, z, hidden, hidden));
  const Var candidate = tanh(g, slice_cols(g, z, 2 * hidden, hidden));
  const Var out_gate = sigmoid(g, slice_cols(g, z, 3 * hidden, hidden));

  const Var c_next = add(g, mul(g, forget_gate, c), mul(g, in_gate, candidate));
  const Var h_next = mul(g, out_gate, tanh(g, c_next));
  return {h_next, c_next};
}

}  // namespace tdanet::grad
