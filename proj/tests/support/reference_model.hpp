// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Plain-loop re-implementation of the networks and the training objective,
// with no tensor graph. Used as an independent forward-pass oracle.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "disc/f0.hpp"
#include "disc/model.hpp"
#include "disc/objectives.hpp"
#include "disc/ops.hpp"

namespace disc::testing::reference {

/// Channels x frames, row-major, double.
struct Map {
  std::size_t rows = 0, cols = 0;
  std::vector<double> v;
  Map(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
};

class Forward {
 public:
  Forward(const ParameterStore& params, const ModelConfig& config) : p_(params), c_(config) {}

  Map conv(const std::string& name, const Map& x, std::size_t stride, std::size_t pad) const {
    const auto& vt = p_.get(name + ".v");
    const auto& g = p_.get(name + ".g");
    const auto& b = p_.get(name + ".b");
    const std::size_t cout = vt.dim(0), cin = vt.dim(1), k = vt.dim(2);
    const std::size_t out_t = (x.cols + 2 * pad - k) / stride + 1;
    Map y(cout, out_t);
    for (std::size_t o = 0; o < cout; ++o) {
      double ss = 0.0;
      for (std::size_t j = 0; j < cin * k; ++j) ss += double(vt[o * cin * k + j]) * vt[o * cin * k + j];
      const double f = g[o] / std::sqrt(ss);
      for (std::size_t t = 0; t < out_t; ++t) {
        double acc = b[o];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t kk = 0; kk < k; ++kk) {
            const long src = long(t * stride + kk) - long(pad);
            if (src < 0 || src >= long(x.cols)) continue;
            acc += f * vt[(o * cin + ci) * k + kk] * x.at(ci, std::size_t(src));
          }
        }
        y.at(o, t) = acc;
      }
    }
    return y;
  }

  Map norm_relu(const std::string& name, Map h) const {
    const auto& gain = p_.get(name + ".gain");
    const auto& bias = p_.get(name + ".bias");
    for (std::size_t t = 0; t < h.cols; ++t) {
      double m = 0.0, var = 0.0;
      for (std::size_t r = 0; r < h.rows; ++r) m += h.at(r, t);
      m /= double(h.rows);
      for (std::size_t r = 0; r < h.rows; ++r) var += (h.at(r, t) - m) * (h.at(r, t) - m);
      var /= double(h.rows);
      for (std::size_t r = 0; r < h.rows; ++r) {
        const double y = gain[r] * (h.at(r, t) - m) / std::sqrt(var + kLayerNormEps) + bias[r];
        h.at(r, t) = std::max(y, 0.0);
      }
    }
    return h;
  }

  Map stack(const std::string& prefix, std::size_t layers, std::size_t stride, Map h) const {
    for (std::size_t i = 0; i < layers; ++i) {
      h = norm_relu(prefix + ".norm" + std::to_string(i),
                    conv(prefix + ".conv" + std::to_string(i), h, stride, c_.kernel / 2));
    }
    return h;
  }

  /// Content embeddings, drawing Gumbel noise from `rng` in row-major order.
  Map encode(const Map& x, double tau, Rng& rng) const {
    const Map logits = conv("enc.out", stack("enc", c_.enc_layers, 1, x), 1, 0);
    const std::size_t K = logits.rows, T = logits.cols;
    Map z(K, T);
    for (std::size_t i = 0; i < z.v.size(); ++i) {
      const double u = rng.uniform(kGumbelEps, 1.0 - kGumbelEps);
      z.v[i] = (logits.v[i] - std::log(-std::log(u))) / tau;
    }
    Map a(K, T);
    for (std::size_t t = 0; t < T; ++t) {
      double mx = -1e300, sum = 0.0;
      for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, z.at(k, t));
      for (std::size_t k = 0; k < K; ++k) sum += std::exp(z.at(k, t) - mx);
      for (std::size_t k = 0; k < K; ++k) a.at(k, t) = std::exp(z.at(k, t) - mx) / sum;
    }
    const auto& cb = p_.get("enc.codebook");
    Map e(c_.content_dim, T);
    for (std::size_t n = 0; n < c_.content_dim; ++n) {
      for (std::size_t t = 0; t < T; ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) acc += cb[n * K + k] * a.at(k, t);
        e.at(n, t) = acc;
      }
    }
    return e;
  }

  struct Decoded {
    Map mu, sigma;
  };

  Decoded decode(const Map& content, const LogF0Pattern& f0, SpeakerId s) const {
    const std::size_t T = content.cols;
    Map in(c_.content_dim + 2 + c_.speaker_dim, T);
    const auto& table = p_.get("dec.speaker");
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t n = 0; n < c_.content_dim; ++n) in.at(n, t) = content.at(n, t);
      in.at(c_.content_dim, t) = f0[t];
      in.at(c_.content_dim + 1, t) = f0[t] != 0.0f ? 1.0 : 0.0;
      for (std::size_t d = 0; d < c_.speaker_dim; ++d) {
        in.at(c_.content_dim + 2 + d, t) = table[s.zero_based() * c_.speaker_dim + d];
      }
    }
    const Map h = stack("dec", c_.dec_layers, 1, in);
    Decoded out{conv("dec.mu", h, 1, 0), conv("dec.log_sigma", h, 1, 0)};
    for (double& v : out.sigma.v) v = std::exp(std::clamp(v, c_.log_sigma_min, c_.log_sigma_max));
    return out;
  }

  std::vector<double> pitch(const Map& m) const {
    return conv("pext.out", stack("pext", c_.pext_layers, 1, m), 1, 0).v;
  }

  Map speaker_logits(const Map& m) const {
    return conv("cls.out", stack("cls", c_.cls_layers, c_.cls_stride, m), 1, 0);
  }

 private:
  const ParameterStore& p_;
  const ModelConfig& c_;
};

inline double gaussian(const Map& x, const Map& mu, const Map& sigma) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const double r = x.v[i] - mu.v[i];
    acc += 0.5 * std::log(2.0 * std::numbers::pi) + std::log(sigma.v[i]) + r * r / (2.0 * sigma.v[i] * sigma.v[i]);
  }
  return acc;
}

inline double laplace(const LogF0Pattern& target, const std::vector<double>& pred) {
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::numbers::ln2 + std::abs(target[i] - pred[i]);
  return acc;
}

inline double categorical(SpeakerId s, const Map& logits) {
  double acc = 0.0;
  for (std::size_t j = 0; j < logits.cols; ++j) {
    double mx = -1e300, sum = 0.0;
    for (std::size_t k = 0; k < logits.rows; ++k) mx = std::max(mx, logits.at(k, j));
    for (std::size_t k = 0; k < logits.rows; ++k) sum += std::exp(logits.at(k, j) - mx);
    acc += mx + std::log(sum) - logits.at(s.zero_based(), j);
  }
  return acc;
}

/// Full objective with the same random-draw order as the graph version.
inline LossBreakdown objective(const ParameterStore& params, const ModelConfig& config, const Batch& batch,
                               double tau, Rng& rng) {
  const Forward net(params, config);
  LossBreakdown s;
  const std::size_t T = batch.front().x.cols;
  const LogF0Pattern zero(std::vector<float>(T, 0.0f));
  for (const auto& tuple : batch) {
    Map x(tuple.x.rows, T);
    for (std::size_t i = 0; i < x.v.size(); ++i) x.v[i] = tuple.x.values[i];
    const Map c = net.encode(x, tau, rng);
    const double beta = rng.uniform(kResampleShiftLo, kResampleShiftHi);
    LogF0Pattern f0_r = tuple.f0;
    for (auto& v : f0_r.values) {
      if (v != 0.0f) v = static_cast<float>(v + beta);
    }
    const SpeakerId s_r{static_cast<int>(rng.below(config.num_speakers)) + 1};
    const auto rec = net.decode(c, tuple.f0, tuple.speaker);
    const auto res = net.decode(c, f0_r, s_r);
    const auto zed = net.decode(c, zero, tuple.speaker);
    s.like += gaussian(x, rec.mu, rec.sigma);
    s.p += laplace(f0_r, net.pitch(res.mu));
    s.p0 += laplace(zero, net.pitch(zed.mu));
    s.p1 += laplace(tuple.f0, net.pitch(x));
    s.p2 += laplace(tuple.f0, net.pitch(rec.mu));
    s.t += categorical(s_r, net.speaker_logits(res.mu));
    s.t1 += categorical(tuple.speaker, net.speaker_logits(x));
    s.t2 += categorical(tuple.speaker, net.speaker_logits(rec.mu));
  }
  const double n = double(batch.size());
  for (double* v : {&s.like, &s.p, &s.p0, &s.p1, &s.p2, &s.t, &s.t1, &s.t2}) *v /= n;
  const double Td = double(T);
  const double ts = double(config.classifier_frames(T));
  s.total = s.like / (double(config.n_mels) * Td) + (s.p + s.p0 + s.p1 + s.p2) / (4.0 * Td) +
            (s.t + 0.5 * s.t1 + 0.5 * s.t2) / (2.0 * ts);
  return s;
}

}  // namespace disc::testing::reference
