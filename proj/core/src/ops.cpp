// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "disc/error.hpp"

namespace disc {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapC = Eigen::Map<const Mat<T>>;
template <typename T>
using MapM = Eigen::Map<Mat<T>>;

using detail::grad_of;
using detail::make_result;
using detail::Node;

template <typename T>
void require_same_shape(const char* op, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()) + " differ");
  }
}

template <typename T>
void require_rank(const char* op, const BasicTensor<T>& a, std::size_t rank) {
  if (a.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                         ", got " + shape_str(a.shape()));
  }
}

template <typename T>
bool wants_grad(const Node<T>& self, std::size_t i) {
  return self.inputs[i]->requires_grad;
}

// Unary elementwise op; `dfdx(x, y)` gives the local derivative.
template <typename T, typename F, typename D>
BasicTensor<T> unary(const char* op, const BasicTensor<T>& a, F f, D dfdx) {
  std::vector<T> out(a.numel());
  auto x = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i]);
  return make_result<T>(op, a.shape(), std::move(out), {a}, [dfdx](Node<T>& self) {
    auto& in = *self.inputs[0];
    auto& g = grad_of(in);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += self.grad[i] * dfdx(in.value[i], self.value[i]);
    }
  });
}

}  // namespace

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape("add", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result<T>("add", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!wants_grad(self, k)) continue;
      auto& g = grad_of(*self.inputs[k]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape("sub", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result<T>("sub", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    if (wants_grad(self, 0)) {
      auto& g = grad_of(*self.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = grad_of(*self.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape("mul", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result<T>("mul", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& av = self.inputs[0]->value;
    auto& bv = self.inputs[1]->value;
    if (wants_grad(self, 0)) {
      auto& g = grad_of(*self.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = grad_of(*self.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

template <typename T>
BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape("div", a, b);
  std::vector<T> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] / b[i];
  return make_result<T>("div", a.shape(), std::move(out), {a, b}, [](Node<T>& self) {
    auto& bv = self.inputs[1]->value;
    if (wants_grad(self, 0)) {
      auto& g = grad_of(*self.inputs[0]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] / bv[i];
    }
    if (wants_grad(self, 1)) {
      auto& g = grad_of(*self.inputs[1]);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i] * self.value[i] / bv[i];
    }
  });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, double factor) {
  const T f = static_cast<T>(factor);
  return unary<T>("scale", a, [f](T x) { return f * x; }, [f](T, T) { return f; });
}

template <typename T>
BasicTensor<T> add_scalar(const BasicTensor<T>& a, double offset) {
  const T c = static_cast<T>(offset);
  return unary<T>("add_scalar", a, [c](T x) { return x + c; }, [](T, T) { return T(1); });
}

template <typename T>
BasicTensor<T> exp(const BasicTensor<T>& a) {
  return unary<T>("exp", a, [](T x) { return std::exp(x); }, [](T, T y) { return y; });
}

template <typename T>
BasicTensor<T> log(const BasicTensor<T>& a) {
  for (T v : a.data()) {
    if (!(v > T(0))) throw DomainError("log of a non-positive value");
  }
  return unary<T>("log", a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}

template <typename T>
BasicTensor<T> abs(const BasicTensor<T>& a) {
  return unary<T>(
      "abs", a, [](T x) { return std::abs(x); },
      [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  return unary<T>(
      "relu", a, [](T x) { return x > T(0) ? x : T(0); },
      [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
BasicTensor<T> clamp(const BasicTensor<T>& a, double lo, double hi) {
  if (!(lo < hi)) throw ConfigError("clamp requires lo < hi");
  const T l = static_cast<T>(lo), h = static_cast<T>(hi);
  return unary<T>(
      "clamp", a, [l, h](T x) { return std::min(std::max(x, l), h); },
      [l, h](T x, T) { return (x > l && x < h) ? T(1) : T(0); });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  double acc = 0.0;
  for (T v : a.data()) acc += v;
  return make_result<T>("sum", {1}, {static_cast<T>(acc)}, {a}, [](Node<T>& self) {
    auto& g = grad_of(*self.inputs[0]);
    for (auto& v : g) v += self.grad[0];
  });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  double acc = 0.0;
  for (T v : a.data()) acc += v;
  const double n = static_cast<double>(a.numel());
  return make_result<T>("mean", {1}, {static_cast<T>(acc / n)}, {a}, [n](Node<T>& self) {
    auto& g = grad_of(*self.inputs[0]);
    const T d = static_cast<T>(self.grad[0] / n);
    for (auto& v : g) v += d;
  });
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  std::vector<T> out(a.data().begin(), a.data().end());
  return make_result<T>("reshape", std::move(shape), std::move(out), {a}, [](Node<T>& self) {
    auto& g = grad_of(*self.inputs[0]);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ: " + shape_str(a.shape()) + " * " +
                         shape_str(b.shape()));
  }
  std::vector<T> out(m * n);
  MapM<T>(out.data(), m, n).noalias() = MapC<T>(a.data().data(), m, k) * MapC<T>(b.data().data(), k, n);
  return make_result<T>("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node<T>& self) {
    MapC<T> dc(self.grad.data(), m, n);
    if (wants_grad(self, 0)) {
      auto& g = grad_of(*self.inputs[0]);
      MapM<T>(g.data(), m, k).noalias() += dc * MapC<T>(self.inputs[1]->value.data(), k, n).transpose();
    }
    if (wants_grad(self, 1)) {
      auto& g = grad_of(*self.inputs[1]);
      MapM<T>(g.data(), k, n).noalias() += MapC<T>(self.inputs[0]->value.data(), m, k).transpose() * dc;
    }
  });
}

namespace {

// Column-wise softmax of z [K x T] into y; stable via max subtraction.
template <typename T>
void softmax_columns(const T* z, T* y, std::size_t K, std::size_t frames) {
  for (std::size_t t = 0; t < frames; ++t) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, z[k * frames + t]);
    double denom = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const T e = std::exp(z[k * frames + t] - mx);
      y[k * frames + t] = e;
      denom += e;
    }
    for (std::size_t k = 0; k < K; ++k) y[k * frames + t] = static_cast<T>(y[k * frames + t] / denom);
  }
}

// dz = factor * y * (dy - sum_k y dy), per column.
template <typename T>
void softmax_columns_backward(const T* y, const T* dy, T* dz, std::size_t K, std::size_t frames,
                              T factor) {
  for (std::size_t t = 0; t < frames; ++t) {
    double dot = 0.0;
    for (std::size_t k = 0; k < K; ++k) dot += static_cast<double>(y[k * frames + t]) * dy[k * frames + t];
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t i = k * frames + t;
      dz[i] += factor * y[i] * static_cast<T>(dy[i] - dot);
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
  require_rank("softmax", logits, 2);
  const std::size_t K = logits.dim(0), frames = logits.dim(1);
  std::vector<T> out(logits.numel());
  softmax_columns(logits.data().data(), out.data(), K, frames);
  return make_result<T>("softmax", logits.shape(), std::move(out), {logits}, [K, frames](Node<T>& self) {
    auto& g = grad_of(*self.inputs[0]);
    softmax_columns_backward(self.value.data(), self.grad.data(), g.data(), K, frames, T(1));
  });
}

template <typename T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& parts) {
  if (parts.empty()) throw DimensionError("concat_channels: no inputs");
  const std::size_t frames = parts[0].rank() == 2 ? parts[0].dim(1) : 0;
  std::size_t channels = 0;
  for (const auto& p : parts) {
    require_rank("concat_channels", p, 2);
    if (p.dim(1) != frames) throw DimensionError("concat_channels: frame counts differ");
    channels += p.dim(0);
  }
  std::vector<T> out;
  out.reserve(channels * frames);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return make_result<T>("concat_channels", {channels, frames}, std::move(out), parts,
                        [](Node<T>& self) {
                          std::size_t offset = 0;
                          for (std::size_t k = 0; k < self.inputs.size(); ++k) {
                            const std::size_t n = self.inputs[k]->value.size();
                            if (wants_grad(self, k)) {
                              auto& g = grad_of(*self.inputs[k]);
                              for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
                            }
                            offset += n;
                          }
                        });
}

template <typename T>
BasicTensor<T> embedding(const BasicTensor<T>& table, std::size_t index) {
  require_rank("embedding", table, 2);
  if (index >= table.dim(0)) {
    throw DomainError("embedding index " + std::to_string(index) + " out of range " +
                      std::to_string(table.dim(0)));
  }
  const std::size_t D = table.dim(1);
  std::vector<T> out(table.data().begin() + index * D, table.data().begin() + (index + 1) * D);
  return make_result<T>("embedding", {D}, std::move(out), {table}, [index, D](Node<T>& self) {
    auto& g = grad_of(*self.inputs[0]);
    for (std::size_t d = 0; d < D; ++d) g[index * D + d] += self.grad[d];
  });
}

template <typename T>
BasicTensor<T> broadcast_frames(const BasicTensor<T>& v, std::size_t frames) {
  require_rank("broadcast_frames", v, 1);
  if (frames == 0) throw DimensionError("broadcast_frames: zero frames");
  const std::size_t D = v.dim(0);
  std::vector<T> out(D * frames);
  for (std::size_t d = 0; d < D; ++d) std::fill_n(out.begin() + d * frames, frames, v[d]);
  return make_result<T>("broadcast_frames", {D, frames}, std::move(out), {v}, [D, frames](Node<T>& self) {
    auto& g = grad_of(*self.inputs[0]);
    for (std::size_t d = 0; d < D; ++d) {
      double acc = 0.0;
      for (std::size_t t = 0; t < frames; ++t) acc += self.grad[d * frames + t];
      g[d] += static_cast<T>(acc);
    }
  });
}

template <typename T>
BasicTensor<T> add_channel_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias) {
  require_rank("add_channel_bias", x, 2);
  const std::size_t C = x.dim(0), frames = x.dim(1);
  if (bias.numel() != C) throw DimensionError("add_channel_bias: bias length != channels");
  std::vector<T> out(x.data().begin(), x.data().end());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < frames; ++t) out[c * frames + t] += bias[c];
  }
  return make_result<T>("add_channel_bias", x.shape(), std::move(out), {x, bias},
                        [C, frames](Node<T>& self) {
                          if (wants_grad(self, 0)) {
                            auto& g = grad_of(*self.inputs[0]);
                            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
                          }
                          if (wants_grad(self, 1)) {
                            auto& g = grad_of(*self.inputs[1]);
                            for (std::size_t c = 0; c < C; ++c) {
                              double acc = 0.0;
                              for (std::size_t t = 0; t < frames; ++t) acc += self.grad[c * frames + t];
                              g[c] += static_cast<T>(acc);
                            }
                          }
                        });
}

namespace {

// cols[(ci*K + k), t] = x[ci, t*stride + k - pad], zero outside.
template <typename T>
void im2col(const T* x, std::size_t cin, std::size_t frames, std::size_t K, std::size_t stride,
            std::size_t pad, std::size_t out_frames, T* cols) {
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t k = 0; k < K; ++k) {
      T* row = cols + (ci * K + k) * out_frames;
      for (std::size_t t = 0; t < out_frames; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(pad);
        row[t] = (src >= 0 && src < static_cast<std::ptrdiff_t>(frames)) ? x[ci * frames + src] : T(0);
      }
    }
  }
}

template <typename T>
void col2im_add(const T* cols, std::size_t cin, std::size_t frames, std::size_t K, std::size_t stride,
                std::size_t pad, std::size_t out_frames, T* dx) {
  for (std::size_t ci = 0; ci < cin; ++ci) {
    for (std::size_t k = 0; k < K; ++k) {
      const T* row = cols + (ci * K + k) * out_frames;
      for (std::size_t t = 0; t < out_frames; ++t) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t * stride + k) - static_cast<std::ptrdiff_t>(pad);
        if (src >= 0 && src < static_cast<std::ptrdiff_t>(frames)) dx[ci * frames + src] += row[t];
      }
    }
  }
}

}  // namespace

template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& x, const BasicTensor<T>& w, std::size_t stride,
                      std::size_t pad) {
  require_rank("conv1d", x, 2);
  require_rank("conv1d", w, 3);
  if (stride == 0) throw ConfigError("conv1d: stride must be positive");
  const std::size_t cin = x.dim(0), frames = x.dim(1);
  const std::size_t cout = w.dim(0), K = w.dim(2);
  if (w.dim(1) != cin) {
    throw DimensionError("conv1d: input has " + std::to_string(cin) + " channels, kernel expects " +
                         std::to_string(w.dim(1)));
  }
  const std::ptrdiff_t span = static_cast<std::ptrdiff_t>(frames + 2 * pad) - static_cast<std::ptrdiff_t>(K);
  if (span < 0) throw DimensionError("conv1d: output length < 1");
  const std::size_t out_frames = static_cast<std::size_t>(span) / stride + 1;
  const std::size_t rows = cin * K;

  std::vector<T> cols(rows * out_frames);
  im2col(x.data().data(), cin, frames, K, stride, pad, out_frames, cols.data());
  std::vector<T> out(cout * out_frames);
  MapM<T>(out.data(), cout, out_frames).noalias() =
      MapC<T>(w.data().data(), cout, rows) * MapC<T>(cols.data(), rows, out_frames);

  return make_result<T>(
      "conv1d", {cout, out_frames}, std::move(out), {x, w},
      [=](Node<T>& self) {
        MapC<T> dy(self.grad.data(), cout, out_frames);
        const auto& xv = self.inputs[0]->value;
        const auto& wv = self.inputs[1]->value;
        // Columns are recomputed rather than kept alive across the step.
        std::vector<T> buf(rows * out_frames);
        if (wants_grad(self, 1)) {
          im2col(xv.data(), cin, frames, K, stride, pad, out_frames, buf.data());
          auto& g = grad_of(*self.inputs[1]);
          MapM<T>(g.data(), cout, rows).noalias() += dy * MapC<T>(buf.data(), rows, out_frames).transpose();
        }
        if (wants_grad(self, 0)) {
          MapM<T>(buf.data(), rows, out_frames).noalias() = MapC<T>(wv.data(), cout, rows).transpose() * dy;
          col2im_add(buf.data(), cin, frames, K, stride, pad, out_frames, grad_of(*self.inputs[0]).data());
        }
      });
}

template <typename T>
BasicTensor<T> weight_norm(const BasicTensor<T>& v, const BasicTensor<T>& g) {
  const std::size_t rows = v.dim(0);
  if (g.numel() != rows) throw DimensionError("weight_norm: gain length != output channels");
  const std::size_t per = v.numel() / rows;
  std::vector<T> out(v.numel());
  std::vector<T> norms(rows);
  for (std::size_t o = 0; o < rows; ++o) {
    double ss = 0.0;
    for (std::size_t j = 0; j < per; ++j) ss += static_cast<double>(v[o * per + j]) * v[o * per + j];
    if (!(ss > 0.0)) throw NumericError("weight_norm: zero direction vector");
    norms[o] = static_cast<T>(std::sqrt(ss));
    const T f = g[o] / norms[o];
    for (std::size_t j = 0; j < per; ++j) out[o * per + j] = f * v[o * per + j];
  }
  return make_result<T>("weight_norm", v.shape(), std::move(out), {v, g},
                        [rows, per, norms = std::move(norms)](Node<T>& self) {
                          const auto& vv = self.inputs[0]->value;
                          const auto& gv = self.inputs[1]->value;
                          for (std::size_t o = 0; o < rows; ++o) {
                            double dot = 0.0;  // <dw, v>
                            for (std::size_t j = 0; j < per; ++j) {
                              dot += static_cast<double>(self.grad[o * per + j]) * vv[o * per + j];
                            }
                            const T n = norms[o];
                            if (wants_grad(self, 1)) grad_of(*self.inputs[1])[o] += static_cast<T>(dot / n);
                            if (wants_grad(self, 0)) {
                              auto& dv = grad_of(*self.inputs[0]);
                              const T a = gv[o] / n;
                              const T b = static_cast<T>(gv[o] * dot / (static_cast<double>(n) * n * n));
                              for (std::size_t j = 0; j < per; ++j) {
                                dv[o * per + j] += a * self.grad[o * per + j] - b * vv[o * per + j];
                              }
                            }
                          }
                        });
}

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                          const BasicTensor<T>& bias) {
  require_rank("layer_norm", x, 2);
  const std::size_t C = x.dim(0), frames = x.dim(1);
  if (gain.numel() != C || bias.numel() != C) {
    throw DimensionError("layer_norm: gain/bias length != channels");
  }
  std::vector<T> xhat(x.numel());
  std::vector<T> inv_std(frames);
  std::vector<T> out(x.numel());
  for (std::size_t t = 0; t < frames; ++t) {
    double m = 0.0;
    for (std::size_t c = 0; c < C; ++c) m += x[c * frames + t];
    m /= static_cast<double>(C);
    double var = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      const double d = x[c * frames + t] - m;
      var += d * d;
    }
    var /= static_cast<double>(C);
    const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_std[t] = static_cast<T>(inv);
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t i = c * frames + t;
      xhat[i] = static_cast<T>((x[i] - m) * inv);
      out[i] = gain[c] * xhat[i] + bias[c];
    }
  }
  return make_result<T>(
      "layer_norm", x.shape(), std::move(out), {x, gain, bias},
      [C, frames, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& self) {
        const auto& gv = self.inputs[1]->value;
        if (wants_grad(self, 1) || wants_grad(self, 2)) {
          for (std::size_t c = 0; c < C; ++c) {
            double dg = 0.0, db = 0.0;
            for (std::size_t t = 0; t < frames; ++t) {
              const std::size_t i = c * frames + t;
              dg += static_cast<double>(self.grad[i]) * xhat[i];
              db += self.grad[i];
            }
            if (wants_grad(self, 1)) grad_of(*self.inputs[1])[c] += static_cast<T>(dg);
            if (wants_grad(self, 2)) grad_of(*self.inputs[2])[c] += static_cast<T>(db);
          }
        }
        if (!wants_grad(self, 0)) return;
        auto& dx = grad_of(*self.inputs[0]);
        for (std::size_t t = 0; t < frames; ++t) {
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t i = c * frames + t;
            const double dxh = static_cast<double>(self.grad[i]) * gv[c];
            s1 += dxh;
            s2 += dxh * xhat[i];
          }
          const double invc = 1.0 / static_cast<double>(C);
          for (std::size_t c = 0; c < C; ++c) {
            const std::size_t i = c * frames + t;
            const double dxh = static_cast<double>(self.grad[i]) * gv[c];
            dx[i] += static_cast<T>(inv_std[t] * (dxh - s1 * invc - xhat[i] * s2 * invc));
          }
        }
      });
}

template <typename T>
BasicTensor<T> gumbel_softmax(const BasicTensor<T>& logits, double tau, Rng& rng) {
  if (!(tau > 0.0)) throw ConfigError("gumbel_softmax: temperature must be positive");
  require_rank("gumbel_softmax", logits, 2);
  const std::size_t K = logits.dim(0), frames = logits.dim(1);
  std::vector<T> z(logits.numel());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double u = rng.uniform(kGumbelEps, 1.0 - kGumbelEps);
    const double g = -std::log(-std::log(u));
    z[i] = static_cast<T>((logits[i] + g) / tau);
  }
  std::vector<T> out(z.size());
  softmax_columns(z.data(), out.data(), K, frames);
  const T inv_tau = static_cast<T>(1.0 / tau);
  return make_result<T>("gumbel_softmax", logits.shape(), std::move(out), {logits},
                        [K, frames, inv_tau](Node<T>& self) {
                          auto& g = grad_of(*self.inputs[0]);
                          softmax_columns_backward(self.value.data(), self.grad.data(), g.data(), K,
                                                   frames, inv_tau);
                        });
}

template <typename T>
BasicTensor<T> one_hot_argmax(const BasicTensor<T>& logits) {
  require_rank("one_hot_argmax", logits, 2);
  const std::size_t K = logits.dim(0), frames = logits.dim(1);
  std::vector<T> out(logits.numel(), T(0));
  for (std::size_t t = 0; t < frames; ++t) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < K; ++k) {
      if (logits[k * frames + t] > logits[best * frames + t]) best = k;
    }
    out[best * frames + t] = T(1);
  }
  return BasicTensor<T>::from(logits.shape(), std::move(out));
}

#define DISC_INSTANTIATE(T)                                                                   \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> div(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> scale(const BasicTensor<T>&, double);                              \
  template BasicTensor<T> add_scalar(const BasicTensor<T>&, double);                         \
  template BasicTensor<T> exp(const BasicTensor<T>&);                                        \
  template BasicTensor<T> log(const BasicTensor<T>&);                                        \
  template BasicTensor<T> abs(const BasicTensor<T>&);                                        \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                       \
  template BasicTensor<T> clamp(const BasicTensor<T>&, double, double);                      \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                        \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                       \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                             \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                    \
  template BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>&);               \
  template BasicTensor<T> embedding(const BasicTensor<T>&, std::size_t);                     \
  template BasicTensor<T> broadcast_frames(const BasicTensor<T>&, std::size_t);              \
  template BasicTensor<T> add_channel_bias(const BasicTensor<T>&, const BasicTensor<T>&);    \
  template BasicTensor<T> conv1d(const BasicTensor<T>&, const BasicTensor<T>&, std::size_t,  \
                                 std::size_t);                                               \
  template BasicTensor<T> weight_norm(const BasicTensor<T>&, const BasicTensor<T>&);         \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                     const BasicTensor<T>&);                                 \
  template BasicTensor<T> gumbel_softmax(const BasicTensor<T>&, double, Rng&);               \
  template BasicTensor<T> one_hot_argmax(const BasicTensor<T>&);

DISC_INSTANTIATE(float)
DISC_INSTANTIATE(double)

#undef DISC_INSTANTIATE

}  // namespace disc
