#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdanet/grad/graph.hpp"
#include "tdanet/grad/tensor.hpp"

// Differentiable primitives over Graph. Each op computes its forward value
// eagerly and records a closure that pushes gradients to its inputs.
namespace tdanet::grad {

enum class Mode { train, eval };

namespace detail {

// out[m x n] += a[m x k] * b[k x n]
inline void gemm_nn(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double* o = &out(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* br = &b(p, 0);
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
}

// out[m x n] += a[m x k] * b[n x k]^T
inline void gemm_nt(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const double* ar = &a(i, 0);
    for (std::size_t j = 0; j < n; ++j) {
      const double* br = &b(j, 0);
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      out(i, j) += s;
    }
  }
}

// out[k x n] += a[m x k]^T * b[m x n]
inline void gemm_tn(const Tensor& a, const Tensor& b, Tensor& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const double* br = &b(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      double* o = &out(p, 0);
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
}

inline void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw DimensionError(op, a.shape(), b.shape());
}

template <class Fwd, class Deriv>
Var unary(Graph& g, Var x, const char* op, Fwd fwd, Deriv deriv) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  const std::size_t xi = x.id;
  return g.record(std::move(out),
                  [xi, deriv](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    const Tensor& xv2 = gr.value(Var{xi});
                    const Tensor& yv = gr.value(Var{self});
                    Tensor& gx = gr.grad(xi);
                    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * deriv(xv2[i], yv[i]);
                  },
                  op);
}

}  // namespace detail

inline Var matmul(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.cols() != bv.rows()) throw DimensionError("matmul", av.shape(), bv.shape());
  Tensor out(av.rows(), bv.cols());
  detail::gemm_nn(av, bv, out);
  const std::size_t ai = a.id, bi = b.id;
  return g.record(std::move(out),
                  [ai, bi](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    detail::gemm_nt(gy, gr.value(Var{bi}), gr.grad(ai));
                    detail::gemm_tn(gr.value(Var{ai}), gy, gr.grad(bi));
                  },
                  "matmul");
}

// a * b^T, for row-by-row dot products.
inline Var matmul_nt(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.cols() != bv.cols()) throw DimensionError("matmul_nt", av.shape(), bv.shape());
  Tensor out(av.rows(), bv.rows());
  detail::gemm_nt(av, bv, out);
  const std::size_t ai = a.id, bi = b.id;
  return g.record(std::move(out),
                  [ai, bi](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    detail::gemm_nn(gy, gr.value(Var{bi}), gr.grad(ai));
                    detail::gemm_tn(gy, gr.value(Var{ai}), gr.grad(bi));
                  },
                  "matmul_nt");
}

// x[r x i] * W[i x o] + b[1 x o], bias broadcast over rows.
inline Var linear(Graph& g, Var x, Var w, Var b) {
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  const Tensor& bv = g.value(b);
  if (xv.cols() != wv.rows()) throw DimensionError("linear (x vs W)", xv.shape(), wv.shape());
  if (bv.rows() != 1 || bv.cols() != wv.cols()) throw DimensionError("linear (W vs b)", wv.shape(), bv.shape());
  Tensor out(xv.rows(), wv.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = bv[c];
  }
  detail::gemm_nn(xv, wv, out);
  const std::size_t xi = x.id, wi = w.id, bi = b.id;
  return g.record(std::move(out),
                  [xi, wi, bi](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    detail::gemm_nt(gy, gr.value(Var{wi}), gr.grad(xi));
                    detail::gemm_tn(gr.value(Var{xi}), gy, gr.grad(wi));
                    Tensor& gb = gr.grad(bi);
                    for (std::size_t r = 0; r < gy.rows(); ++r) {
                      for (std::size_t c = 0; c < gy.cols(); ++c) gb[c] += gy(r, c);
                    }
                  },
                  "linear");
}

inline Var add(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  detail::require_same("add", av, bv);
  Tensor out = av;
  out += bv;
  const std::size_t ai = a.id, bi = b.id;
  return g.record(std::move(out),
                  [ai, bi](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    gr.grad(ai) += gy;
                    gr.grad(bi) += gy;
                  },
                  "add");
}

inline Var sub(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  detail::require_same("sub", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return g.record(std::move(out),
                  [ai, bi](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    gr.grad(ai) += gy;
                    Tensor& gb = gr.grad(bi);
                    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] -= gy[i];
                  },
                  "sub");
}

inline Var mul(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  detail::require_same("mul", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return g.record(std::move(out),
                  [ai, bi](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    const Tensor& av2 = gr.value(Var{ai});
                    const Tensor& bv2 = gr.value(Var{bi});
                    Tensor& ga = gr.grad(ai);
                    for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * bv2[i];
                    Tensor& gb = gr.grad(bi);
                    for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * av2[i];
                  },
                  "mul");
}

inline Var scale(Graph& g, Var x, double k) {
  return detail::unary(
      g, x, "scale", [k](double v) { return k * v; }, [k](double, double) { return k; });
}

inline Var neg(Graph& g, Var x) { return scale(g, x, -1.0); }

inline Var square(Graph& g, Var x) {
  return detail::unary(
      g, x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

// d|x|/dx is taken as 0 at x == 0.
inline Var abs(Graph& g, Var x) {
  return detail::unary(
      g, x, "abs", [](double v) { return std::abs(v); },
      [](double v, double) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

inline Var relu(Graph& g, Var x) {
  return detail::unary(
      g, x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

inline Var sigmoid(Graph& g, Var x) {
  return detail::unary(
      g, x, "sigmoid",
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Var tanh(Graph& g, Var x) {
  return detail::unary(
      g, x, "tanh", [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

// Row-wise softmax with max subtraction.
inline Var softmax(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  if (xv.cols() == 0 || xv.rows() == 0) throw DimensionError("softmax: empty input " + xv.shape().to_string());
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto in = xv.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out(r, c) = std::exp(in[c] - mx);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < in.size(); ++c) out(r, c) /= z;
  }
  const std::size_t xi = x.id;
  return g.record(std::move(out),
                  [xi](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    const Tensor& y = gr.value(Var{self});
                    Tensor& gx = gr.grad(xi);
                    for (std::size_t r = 0; r < y.rows(); ++r) {
                      double dot = 0.0;
                      for (std::size_t c = 0; c < y.cols(); ++c) dot += gy(r, c) * y(r, c);
                      for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += y(r, c) * (gy(r, c) - dot);
                    }
                  },
                  "softmax");
}

inline Var log_softmax(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  if (xv.cols() == 0 || xv.rows() == 0) throw DimensionError("log_softmax: empty input " + xv.shape().to_string());
  Tensor out(xv.rows(), xv.cols());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto in = xv.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double v : in) z += std::exp(v - mx);
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < in.size(); ++c) out(r, c) = in[c] - lse;
  }
  const std::size_t xi = x.id;
  return g.record(std::move(out),
                  [xi](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    const Tensor& y = gr.value(Var{self});
                    Tensor& gx = gr.grad(xi);
                    for (std::size_t r = 0; r < y.rows(); ++r) {
                      double total = 0.0;
                      for (std::size_t c = 0; c < y.cols(); ++c) total += gy(r, c);
                      for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) += gy(r, c) - std::exp(y(r, c)) * total;
                    }
                  },
                  "log_softmax");
}

// n x d -> 1 x d column means.
inline Var mean_rows(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  if (xv.rows() == 0) throw DimensionError("mean_rows: no rows");
  Tensor out(1, xv.cols());
  const double inv = 1.0 / static_cast<double>(xv.rows());
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) out[c] += xv(r, c);
  }
  for (double& v : out.data()) v *= inv;
  const std::size_t xi = x.id;
  return g.record(std::move(out),
                  [xi, inv](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    Tensor& gx = gr.grad(xi);
                    for (std::size_t r = 0; r < gx.rows(); ++r) {
                      for (std::size_t c = 0; c < gx.cols(); ++c) gx(r, c) += gy[c] * inv;
                    }
                  },
                  "mean_rows");
}

inline Var concat_cols(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.rows() != bv.rows()) throw DimensionError("concat_cols", av.shape(), bv.shape());
  Tensor out(av.rows(), av.cols() + bv.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(r, c);
    for (std::size_t c = 0; c < bv.cols(); ++c) out(r, av.cols() + c) = bv(r, c);
  }
  const std::size_t ai = a.id, bi = b.id;
  const std::size_t split = av.cols();
  return g.record(std::move(out),
                  [ai, bi, split](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    Tensor& ga = gr.grad(ai);
                    Tensor& gb = gr.grad(bi);
                    for (std::size_t r = 0; r < gy.rows(); ++r) {
                      for (std::size_t c = 0; c < split; ++c) ga(r, c) += gy(r, c);
                      for (std::size_t c = split; c < gy.cols(); ++c) gb(r, c - split) += gy(r, c);
                    }
                  },
                  "concat_cols");
}

inline Var slice_cols(Graph& g, Var x, std::size_t begin, std::size_t count) {
  const Tensor& xv = g.value(x);
  if (begin + count > xv.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                         ") out of range for " + xv.shape().to_string());
  }
  Tensor out(xv.rows(), count);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = xv(r, begin + c);
  }
  const std::size_t xi = x.id;
  return g.record(std::move(out),
                  [xi, begin](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    Tensor& gx = gr.grad(xi);
                    for (std::size_t r = 0; r < gy.rows(); ++r) {
                      for (std::size_t c = 0; c < gy.cols(); ++c) gx(r, begin + c) += gy(r, c);
                    }
                  },
                  "slice_cols");
}

// Single element as a 1x1 node.
inline Var pick(Graph& g, Var x, std::size_t row, std::size_t col) {
  const Tensor& xv = g.value(x);
  if (row >= xv.rows() || col >= xv.cols()) throw DimensionError("pick: index out of range for " + xv.shape().to_string());
  Tensor out(1, 1, xv(row, col));
  const std::size_t xi = x.id;
  return g.record(std::move(out),
                  [xi, row, col](Graph& gr, std::size_t self) { gr.grad(xi)(row, col) += gr.grad_value(self)[0]; },
                  "pick");
}

inline Var sum(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  double s = 0.0;
  for (double v : xv.data()) s += v;
  const std::size_t xi = x.id;
  return g.record(Tensor(1, 1, s),
                  [xi](Graph& gr, std::size_t self) {
                    const double gy = gr.grad_value(self)[0];
                    for (double& v : gr.grad(xi).data()) v += gy;
                  },
                  "sum");
}

// Sum of several same-shaped nodes.
inline Var add_n(Graph& g, const std::vector<Var>& xs) {
  if (xs.empty()) throw std::invalid_argument("add_n: no inputs");
  Tensor out = g.value(xs.front());
  for (std::size_t k = 1; k < xs.size(); ++k) {
    detail::require_same("add_n", out, g.value(xs[k]));
    out += g.value(xs[k]);
  }
  std::vector<std::size_t> ids;
  ids.reserve(xs.size());
  for (Var v : xs) ids.push_back(v.id);
  return g.record(std::move(out),
                  [ids](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    for (std::size_t id : ids) gr.grad(id) += gy;
                  },
                  "add_n");
}

// Inverted dropout: eval mode and rate 0 return the input node itself.
inline Var dropout(Graph& g, Var x, double rate, Mode mode, std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout: rate must lie in [0, 1), got " + std::to_string(rate));
  if (mode == Mode::eval || rate == 0.0) return x;
  const Tensor& xv = g.value(x);
  std::vector<double> mask(xv.size());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& m : mask) m = u(rng) < rate ? 0.0 : keep_scale;
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t xi = x.id;
  return g.record(std::move(out),
                  [xi, mask = std::move(mask)](Graph& gr, std::size_t self) {
                    const Tensor& gy = gr.grad_value(self);
                    Tensor& gx = gr.grad(xi);
                    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * mask[i];
                  },
                  "dropout");
}

// Copy of the value with no gradient path.
inline Var detach(Graph& g, Var x) { return g.constant(g.value(x)); }

}  // namespace tdanet::grad
