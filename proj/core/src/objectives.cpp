// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/objectives.hpp"

#include <cmath>
#include <numbers>

#include "disc/error.hpp"

namespace disc {

using detail::grad_of;
using detail::make_result;
using detail::Node;

namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

template <typename T>
BasicTensor<T> gaussian_nll(const BasicTensor<T>& x, const BasicTensor<T>& mu, const BasicTensor<T>& sigma) {
  if (x.shape() != mu.shape() || x.shape() != sigma.shape()) {
    throw DimensionError("gaussian_nll: x, mu, sigma shapes differ");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double s = sigma[i];
    if (!(s > 0.0)) throw DomainError("gaussian_nll: sigma must be positive");
    const double r = static_cast<double>(x[i]) - mu[i];
    acc += kHalfLog2Pi + std::log(s) + r * r / (2.0 * s * s);
  }
  return make_result<T>("gaussian_nll", {1}, {static_cast<T>(acc)}, {x, mu, sigma}, [](Node<T>& self) {
    const auto& xv = self.inputs[0]->value;
    const auto& mv = self.inputs[1]->value;
    const auto& sv = self.inputs[2]->value;
    const T g = self.grad[0];
    const std::size_t n = xv.size();
    std::vector<T>* gx = self.inputs[0]->requires_grad ? &grad_of(*self.inputs[0]) : nullptr;
    std::vector<T>* gm = self.inputs[1]->requires_grad ? &grad_of(*self.inputs[1]) : nullptr;
    std::vector<T>* gs = self.inputs[2]->requires_grad ? &grad_of(*self.inputs[2]) : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const T r = xv[i] - mv[i];
      const T inv = T(1) / sv[i];
      const T d = r * inv * inv;
      if (gx) (*gx)[i] += g * d;
      if (gm) (*gm)[i] -= g * d;
      if (gs) (*gs)[i] += g * (inv - r * r * inv * inv * inv);
    }
  });
}

template <typename T>
BasicTensor<T> laplace_nll(const LogF0Pattern& target, const BasicTensor<T>& pred) {
  if (pred.numel() != target.size()) {
    throw DimensionError("laplace_nll: target has " + std::to_string(target.size()) + " frames, prediction has " +
                         std::to_string(pred.numel()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    acc += std::numbers::ln2 + std::abs(static_cast<double>(target[i]) - pred[i]);
  }
  return make_result<T>("laplace_nll", {1}, {static_cast<T>(acc)}, {pred},
                        [target = target.values](Node<T>& self) {
                          auto& g = grad_of(*self.inputs[0]);
                          const auto& pv = self.inputs[0]->value;
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const T d = pv[i] - static_cast<T>(target[i]);
                            g[i] += self.grad[0] * (d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0)));
                          }
                        });
}

template <typename T>
BasicTensor<T> categorical_nll(SpeakerId speaker, const BasicTensor<T>& logits) {
  if (logits.rank() != 2) throw DimensionError("categorical_nll: logits must be S x T_S");
  const std::size_t S = logits.dim(0), segs = logits.dim(1);
  check_speaker(speaker, S);
  const std::size_t s = speaker.zero_based();
  std::vector<T> probs(logits.numel());
  double acc = 0.0;
  for (std::size_t j = 0; j < segs; ++j) {
    double mx = logits[j];
    for (std::size_t k = 1; k < S; ++k) mx = std::max(mx, static_cast<double>(logits[k * segs + j]));
    double denom = 0.0;
    for (std::size_t k = 0; k < S; ++k) denom += std::exp(logits[k * segs + j] - mx);
    const double lse = mx + std::log(denom);
    acc += lse - logits[s * segs + j];
    for (std::size_t k = 0; k < S; ++k) probs[k * segs + j] = static_cast<T>(std::exp(logits[k * segs + j] - lse));
  }
  return make_result<T>("categorical_nll", {1}, {static_cast<T>(acc)}, {logits},
                        [probs = std::move(probs), s, segs](Node<T>& self) {
                          auto& g = grad_of(*self.inputs[0]);
                          for (std::size_t i = 0; i < g.size(); ++i) {
                            const T onehot = (i / segs == s) ? T(1) : T(0);
                            g[i] += self.grad[0] * (probs[i] - onehot);
                          }
                        });
}

LossWeights LossWeights::for_frames(const ModelConfig& config, std::size_t frames) {
  const double T = static_cast<double>(frames);
  return {1.0 / (static_cast<double>(config.n_mels) * T), 1.0 / (4.0 * T),
          1.0 / (2.0 * static_cast<double>(config.classifier_frames(frames)))};
}

double LossBreakdown::recombine(const LossWeights& w) const {
  return w.like * like + w.p * (p + p0 + p1 + p2) + w.t * (t + 0.5 * t1 + 0.5 * t2);
}

const std::vector<std::string>& LossBreakdown::names() {
  static const std::vector<std::string> kNames = {"like", "p", "p0", "p1", "p2", "t", "t1", "t2", "total"};
  return kNames;
}

std::string LossBreakdown::first_non_finite() const {
  const auto v = as_vector();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return names()[i];
  }
  return {};
}

namespace {

// Evaluates one named term, attributing numeric failures to it.
template <typename F>
auto term(const char* name, F&& f) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw NumericError(std::string("loss term '") + name + "' is non-finite: " + e.what());
  }
}

}  // namespace

template <typename T>
LossGraph<T> disc_losses(const Batch& batch, const BoundNetworks<T>& nets, const ObjectiveOptions& options, Rng& rng) {
  if (batch.empty()) throw InputError("disc_losses: empty batch");
  const ModelConfig& cfg = nets.config;
  const std::size_t frames = batch.front().x.cols;
  LossGraph<T> graph;
  const LossWeights base = LossWeights::for_frames(cfg, frames);
  graph.weights = {base.like, base.p * options.aux_p_scale, base.t * options.aux_t_scale};
  const LossWeights& w = graph.weights;
  const bool aux = options.aux_enabled();

  LossBreakdown& sums = graph.values;
  BasicTensor<T> total;
  const LogF0Pattern zero_f0(std::vector<float>(frames, 0.0f));
  for (const TrainingTuple& tuple : batch) {
    if (tuple.x.cols != frames || tuple.f0.size() != frames) {
      throw DimensionError("disc_losses: every tuple in a batch must have the same number of frames");
    }
    std::vector<T> xv(tuple.x.values.begin(), tuple.x.values.end());
    const auto x = BasicTensor<T>::from({tuple.x.rows, frames}, std::move(xv));

    const auto code = enc_c(nets, x, options.tau, rng);
    const LogF0Pattern f0_r = random_resample_f0(tuple.f0, rng);
    const SpeakerId s_r = random_resample_speaker(cfg.num_speakers, rng);

    const auto rec = dec(nets, code.embeddings, tuple.f0, tuple.speaker);
    const auto like = term("like", [&] { return gaussian_nll(x, rec.mu, rec.sigma); });
    BasicTensor<T> tuple_total = scale(like, w.like);
    sums.like += like.item();

    if (aux) {
      const auto resampled = dec(nets, code.embeddings, f0_r, s_r);
      const auto zeroed = dec(nets, code.embeddings, zero_f0, tuple.speaker);
      const auto p = term("p", [&] { return laplace_nll(f0_r, p_ext(nets, resampled.mu)); });
      const auto p0 = term("p0", [&] { return laplace_nll(zero_f0, p_ext(nets, zeroed.mu)); });
      const auto p1 = term("p1", [&] { return laplace_nll(tuple.f0, p_ext(nets, x)); });
      const auto p2 = term("p2", [&] { return laplace_nll(tuple.f0, p_ext(nets, rec.mu)); });
      const auto t = term("t", [&] { return categorical_nll(s_r, cls(nets, resampled.mu)); });
      const auto t1 = term("t1", [&] { return categorical_nll(tuple.speaker, cls(nets, x)); });
      const auto t2 = term("t2", [&] { return categorical_nll(tuple.speaker, cls(nets, rec.mu)); });
      const auto p_sum = add(add(p, p0), add(p1, p2));
      const auto t_sum = add(t, scale(add(t1, t2), 0.5));
      tuple_total = add(tuple_total, add(scale(p_sum, w.p), scale(t_sum, w.t)));
      sums.p += p.item();
      sums.p0 += p0.item();
      sums.p1 += p1.item();
      sums.p2 += p2.item();
      sums.t += t.item();
      sums.t1 += t1.item();
      sums.t2 += t2.item();
    }
    total = total.defined() ? add(total, tuple_total) : tuple_total;
  }
  const double n = static_cast<double>(batch.size());
  graph.total = scale(total, 1.0 / n);
  for (double* v : {&sums.like, &sums.p, &sums.p0, &sums.p1, &sums.p2, &sums.t, &sums.t1, &sums.t2}) *v /= n;
  sums.total = sums.recombine(w);
  if (auto bad = sums.first_non_finite(); !bad.empty()) {
    throw NumericError("loss term '" + bad + "' is non-finite");
  }
  return graph;
}

#define DISC_INSTANTIATE(T)                                                                                \
  template BasicTensor<T> gaussian_nll(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> laplace_nll(const LogF0Pattern&, const BasicTensor<T>&);                         \
  template BasicTensor<T> categorical_nll(SpeakerId, const BasicTensor<T>&);                               \
  template LossGraph<T> disc_losses(const Batch&, const BoundNetworks<T>&, const ObjectiveOptions&, Rng&);

DISC_INSTANTIATE(float)
DISC_INSTANTIATE(double)

#undef DISC_INSTANTIATE

}  // namespace disc
