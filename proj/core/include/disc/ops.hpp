// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "disc/rng.hpp"
#include "disc/tensor.hpp"

namespace disc {

// Elementwise, same shape.
template <typename T> BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> scale(const BasicTensor<T>& a, double factor);
template <typename T> BasicTensor<T> add_scalar(const BasicTensor<T>& a, double offset);

template <typename T> BasicTensor<T> exp(const BasicTensor<T>& a);
/// Natural log; throws DomainError on non-positive entries.
template <typename T> BasicTensor<T> log(const BasicTensor<T>& a);
/// Subgradient 0 at the kink.
template <typename T> BasicTensor<T> abs(const BasicTensor<T>& a);
template <typename T> BasicTensor<T> relu(const BasicTensor<T>& a);
/// min(max(x, lo), hi); gradient passes only strictly inside (lo, hi).
template <typename T> BasicTensor<T> clamp(const BasicTensor<T>& a, double lo, double hi);

/// Reductions accumulate in 64 bits and return a shape-{1} tensor.
template <typename T> BasicTensor<T> sum(const BasicTensor<T>& a);
template <typename T> BasicTensor<T> mean(const BasicTensor<T>& a);

template <typename T> BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape);

/// [m x k] * [k x n].
template <typename T> BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Softmax over axis 0 of a [K x T] tensor (one distribution per column).
template <typename T> BasicTensor<T> softmax(const BasicTensor<T>& logits);

/// Stacks [C_i x T] tensors along the channel axis.
template <typename T>
BasicTensor<T> concat_channels(const std::vector<BasicTensor<T>>& parts);

/// Row `index` (0-based) of a [N x D] table, returned as shape {D}.
template <typename T>
BasicTensor<T> embedding(const BasicTensor<T>& table, std::size_t index);

/// Repeats a {D} vector over `frames` columns: [D x frames].
template <typename T>
BasicTensor<T> broadcast_frames(const BasicTensor<T>& v, std::size_t frames);

/// x [C x T] + b[c] on every column.
template <typename T>
BasicTensor<T> add_channel_bias(const BasicTensor<T>& x, const BasicTensor<T>& bias);

/// Cross-correlation along time. x [C_in x T], w [C_out x C_in x K].
/// Output [C_out x T'] with T' = floor((T + 2 pad - K) / stride) + 1.
template <typename T>
BasicTensor<T> conv1d(const BasicTensor<T>& x, const BasicTensor<T>& w,
                      std::size_t stride, std::size_t pad);

/// Per-output-channel reparameterization w = g * v / ||v||.
/// v [C_out x ...], g {C_out}.
template <typename T>
BasicTensor<T> weight_norm(const BasicTensor<T>& v, const BasicTensor<T>& g);

inline constexpr double kLayerNormEps = 1e-5;

/// Normalizes every column of x [C x T] over its C channels, then applies
/// per-channel gain and bias.
template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gain,
                          const BasicTensor<T>& bias);

inline constexpr double kGumbelEps = 1e-10;

/// Relaxed categorical sample per column of logits [K x T]:
/// softmax((logits + g) / tau), g ~ Gumbel(0, 1) drawn from `rng` in
/// row-major order.
template <typename T>
BasicTensor<T> gumbel_softmax(const BasicTensor<T>& logits, double tau, Rng& rng);

/// Hard one-hot at the argmax of every column; no gradient.
template <typename T>
BasicTensor<T> one_hot_argmax(const BasicTensor<T>& logits);

}  // namespace disc
