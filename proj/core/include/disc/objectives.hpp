// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Loss terms and the weighted training objective
//
//   L = eta * like + eta_p * (p + p0 + p1 + p2) + eta_t * (t + t1/2 + t2/2)
//
// with eta = 1/(F T), eta_p = 1/(4 T), eta_t = 1/(2 T_S).

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "disc/f0.hpp"
#include "disc/model.hpp"
#include "disc/rng.hpp"
#include "disc/types.hpp"

namespace disc {

/// Sum over entries of 0.5 ln(2 pi) + ln sigma + (x - mu)^2 / (2 sigma^2).
template <typename T>
BasicTensor<T> gaussian_nll(const BasicTensor<T>& x, const BasicTensor<T>& mu, const BasicTensor<T>& sigma);

/// Sum over frames of ln 2 + |target - pred| (unit-scale Laplace).
template <typename T>
BasicTensor<T> laplace_nll(const LogF0Pattern& target, const BasicTensor<T>& pred);

/// Sum over the T_S columns of -log softmax(logits[:, j])[speaker].
template <typename T>
BasicTensor<T> categorical_nll(SpeakerId speaker, const BasicTensor<T>& logits);

struct LossWeights {
  double like = 0.0;  // eta
  double p = 0.0;     // eta_p
  double t = 0.0;     // eta_t

  static LossWeights for_frames(const ModelConfig& config, std::size_t frames);
};

struct LossBreakdown {
  double like = 0.0, p = 0.0, p0 = 0.0, p1 = 0.0, p2 = 0.0, t = 0.0, t1 = 0.0, t2 = 0.0, total = 0.0;

  /// eta * like + eta_p * (p + p0 + p1 + p2) + eta_t * (t + t1/2 + t2/2).
  double recombine(const LossWeights& w) const;
  /// Name of the first non-finite term, or empty.
  std::string first_non_finite() const;
  std::vector<double> as_vector() const { return {like, p, p0, p1, p2, t, t1, t2, total}; }
  static const std::vector<std::string>& names();

  friend bool operator==(const LossBreakdown&, const LossBreakdown&) = default;
};

/// One (x, f0, s) tuple; x is the standardized F x T log-mel.
struct TrainingTuple {
  Matrix x;
  LogF0Pattern f0;
  SpeakerId speaker;
};

using Batch = std::vector<TrainingTuple>;

struct ObjectiveOptions {
  double tau = 1.0;
  /// Multipliers on eta_p and eta_t. Both 0 gives the reconstruction-only
  /// ablation; auxiliary networks are then not evaluated and their terms
  /// are reported as 0.
  double aux_p_scale = 1.0;
  double aux_t_scale = 1.0;

  bool aux_enabled() const { return aux_p_scale != 0.0 || aux_t_scale != 0.0; }
};

template <typename T>
struct LossGraph {
  BasicTensor<T> total;  // differentiable batch objective
  LossBreakdown values;  // per-term batch means, total recombined in 64-bit
  LossWeights weights;   // effective weights (scales applied)
};

/// Per tuple, in this order of random draws: Gumbel noise for the content
/// code, the F0 shift beta, the resampled speaker. One content sample is
/// shared by the reconstruction, resampled and zero-F0 decoder passes.
/// All tuples must share T.
template <typename T>
LossGraph<T> disc_losses(const Batch& batch, const BoundNetworks<T>& nets, const ObjectiveOptions& options, Rng& rng);

}  // namespace disc
