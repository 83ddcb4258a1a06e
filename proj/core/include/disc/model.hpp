// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// The four networks: content encoder, decoder, F0 extractor and speaker
// classifier, plus the parameter store that owns their weights.
//
// Every convolution is weight-normalized (w = g * v / ||v||) and has a
// bias. Stacks use kernel `kernel` with same padding; output heads are
// 1x1 convolutions.

#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "disc/container.hpp"
#include "disc/f0.hpp"
#include "disc/ops.hpp"
#include "disc/rng.hpp"
#include "disc/types.hpp"

namespace disc {

struct ModelConfig {
  std::size_t n_mels = 80;          // F
  std::size_t num_speakers = 2;     // S
  std::size_t codebook_size = 128;  // K
  std::size_t content_dim = 16;     // N_C
  std::size_t enc_channels = 256;
  std::size_t enc_layers = 3;
  std::size_t dec_channels = 256;
  std::size_t dec_layers = 4;
  std::size_t speaker_dim = 64;
  std::size_t pext_channels = 128;
  std::size_t pext_layers = 3;
  std::size_t cls_channels = 128;
  std::size_t cls_layers = 2;
  std::size_t cls_stride = 4;
  std::size_t kernel = 5;
  double log_sigma_min = -7.0;
  double log_sigma_max = 2.0;
  double init_scale = 0.05;

  void validate() const;
  /// Classifier output length for T input frames.
  std::size_t classifier_frames(std::size_t frames) const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

enum class Network { kEncoder, kDecoder, kF0Extractor, kClassifier };

const char* network_name(Network n);

template <typename T>
class BasicParameterStore {
 public:
  struct Entry {
    std::string name;
    Network group;
    BasicTensor<T> tensor;
  };

  void add(std::string name, Network group, BasicTensor<T> tensor);
  bool has(const std::string& name) const { return index_.contains(name); }
  const BasicTensor<T>& get(const std::string& name) const;
  BasicTensor<T>& get(const std::string& name);
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t num_values() const;

  /// Same names and values in another element type, as fresh leaves.
  template <typename U>
  BasicParameterStore<U> cast() const {
    BasicParameterStore<U> out;
    for (const auto& e : entries_) {
      std::vector<U> v(e.tensor.data().begin(), e.tensor.data().end());
      out.add(e.name, e.group, BasicTensor<U>::from(e.tensor.shape(), std::move(v), true));
    }
    return out;
  }

  /// Deep copy with fresh leaves.
  BasicParameterStore clone() const { return cast<T>(); }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

using ParameterStore = BasicParameterStore<float>;

/// Deterministic initialization from `rng`.
ParameterStore init_params(const ModelConfig& config, Rng& rng);

/// Parameters as container tensors named "param/<name>".
void store_params(const ParameterStore& params, Container& out);
/// Inverse of store_params; names and shapes must match `config` exactly.
ParameterStore restore_params(const Container& in, const ModelConfig& config);

template <typename T>
struct ConvLayer {
  BasicTensor<T> weight;  // effective, after weight normalization
  BasicTensor<T> bias;
  std::size_t stride = 1;
  std::size_t pad = 0;
};

template <typename T>
struct NormLayer {
  BasicTensor<T> gain;
  BasicTensor<T> bias;
};

template <typename T>
struct ConvStack {
  std::vector<ConvLayer<T>> convs;
  std::vector<NormLayer<T>> norms;
  ConvLayer<T> head;
};

/// Effective weights for one graph build. Binding applies weight
/// normalization once so every use of a layer within a step shares the
/// same graph node.
template <typename T>
struct BoundNetworks {
  ModelConfig config;
  ConvStack<T> encoder;
  BasicTensor<T> codebook;  // N_C x K
  BasicTensor<T> speaker_table;  // S x speaker_dim
  ConvStack<T> decoder;
  ConvLayer<T> decoder_log_sigma;  // second decoder head
  ConvStack<T> f0_extractor;
  ConvStack<T> classifier;
};

template <typename T>
BoundNetworks<T> bind(const BasicParameterStore<T>& params, const ModelConfig& config);

enum class ContentSampling { kGumbel, kArgmax };

template <typename T>
struct BasicContentCode {
  BasicTensor<T> embeddings;   // N_C x T
  BasicTensor<T> assignments;  // K x T, columns on the simplex
};

template <typename T>
struct BasicDecoderOutput {
  BasicTensor<T> mu;          // F x T
  BasicTensor<T> sigma;       // F x T, exp(log_sigma)
  BasicTensor<T> log_sigma;   // clamped to [log_sigma_min, log_sigma_max]
  BasicTensor<T> conditioning;  // concat of [c; f0; mask; speaker]
};

using ContentCode = BasicContentCode<float>;
using DecoderOutput = BasicDecoderOutput<float>;

/// Content encoder. x is a standardized F x T log-mel.
template <typename T>
BasicContentCode<T> enc_c(const BoundNetworks<T>& nets, const BasicTensor<T>& x, double tau, Rng& rng,
                          ContentSampling sampling = ContentSampling::kGumbel);

/// Decoder conditioned on the log-F0 pattern and a speaker.
template <typename T>
BasicDecoderOutput<T> dec(const BoundNetworks<T>& nets, const BasicTensor<T>& content, const LogF0Pattern& pitch,
                          SpeakerId speaker);

/// F0 extractor: F x T -> {T} per-frame log-F0 estimate.
template <typename T>
BasicTensor<T> p_ext(const BoundNetworks<T>& nets, const BasicTensor<T>& m);

/// Speaker classifier: F x T -> S x T_S logits.
template <typename T>
BasicTensor<T> cls(const BoundNetworks<T>& nets, const BasicTensor<T>& m);

}  // namespace disc
