// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/model.hpp"

#include <cmath>

#include "disc/error.hpp"

namespace disc {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("model.") + name + " must be positive");
  };
  positive(n_mels, "n_mels");
  positive(num_speakers, "num_speakers");
  positive(codebook_size, "codebook_size");
  positive(content_dim, "content_dim");
  positive(enc_channels, "enc_channels");
  positive(dec_channels, "dec_channels");
  positive(speaker_dim, "speaker_dim");
  positive(pext_channels, "pext_channels");
  positive(cls_channels, "cls_channels");
  positive(cls_stride, "cls_stride");
  if (kernel % 2 == 0) throw ConfigError("model.kernel must be odd");
  if (!(log_sigma_min < log_sigma_max)) throw ConfigError("model.log_sigma_min must be < log_sigma_max");
  if (!(init_scale > 0.0)) throw ConfigError("model.init_scale must be positive");
}

std::size_t ModelConfig::classifier_frames(std::size_t frames) const {
  for (std::size_t i = 0; i < cls_layers; ++i) frames = (frames + cls_stride - 1) / cls_stride;
  return frames;
}

const char* network_name(Network n) {
  switch (n) {
    case Network::kEncoder: return "encoder";
    case Network::kDecoder: return "decoder";
    case Network::kF0Extractor: return "f0_extractor";
    case Network::kClassifier: return "classifier";
  }
  return "?";
}

template <typename T>
void BasicParameterStore<T>::add(std::string name, Network group, BasicTensor<T> tensor) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter name " + name);
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), group, std::move(tensor)});
}

template <typename T>
const BasicTensor<T>& BasicParameterStore<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return entries_[it->second].tensor;
}

template <typename T>
BasicTensor<T>& BasicParameterStore<T>::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter " + name);
  return entries_[it->second].tensor;
}

template <typename T>
std::size_t BasicParameterStore<T>::num_values() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.numel();
  return n;
}

template class BasicParameterStore<float>;
template class BasicParameterStore<double>;

namespace {

// Layer specifications shared by init, restore and bind.
struct ConvSpec {
  std::string name;
  Network group;
  std::size_t cin, cout, kernel, stride, pad;
  bool norm;  // followed by LayerNorm + ReLU
};

std::vector<ConvSpec> layer_specs(const ModelConfig& c) {
  std::vector<ConvSpec> specs;
  const std::size_t pad = c.kernel / 2;
  auto stack = [&](const std::string& prefix, Network g, std::size_t cin, std::size_t ch, std::size_t layers,
                   std::size_t stride) {
    for (std::size_t i = 0; i < layers; ++i) {
      specs.push_back({prefix + ".conv" + std::to_string(i), g, i == 0 ? cin : ch, ch, c.kernel, stride, pad, true});
    }
    return layers == 0 ? cin : ch;
  };
  std::size_t top = stack("enc", Network::kEncoder, c.n_mels, c.enc_channels, c.enc_layers, 1);
  specs.push_back({"enc.out", Network::kEncoder, top, c.codebook_size, 1, 1, 0, false});
  top = stack("dec", Network::kDecoder, c.content_dim + 2 + c.speaker_dim, c.dec_channels, c.dec_layers, 1);
  specs.push_back({"dec.mu", Network::kDecoder, top, c.n_mels, 1, 1, 0, false});
  specs.push_back({"dec.log_sigma", Network::kDecoder, top, c.n_mels, 1, 1, 0, false});
  top = stack("pext", Network::kF0Extractor, c.n_mels, c.pext_channels, c.pext_layers, 1);
  specs.push_back({"pext.out", Network::kF0Extractor, top, 1, 1, 1, 0, false});
  top = stack("cls", Network::kClassifier, c.n_mels, c.cls_channels, c.cls_layers, c.cls_stride);
  specs.push_back({"cls.out", Network::kClassifier, top, c.num_speakers, 1, 1, 0, false});
  return specs;
}

std::string norm_name(const std::string& conv_name) {
  // "enc.conv2" -> "enc.norm2"
  auto dot = conv_name.find(".conv");
  return conv_name.substr(0, dot) + ".norm" + conv_name.substr(dot + 5);
}

}  // namespace

ParameterStore init_params(const ModelConfig& config, Rng& rng) {
  config.validate();
  ParameterStore params;
  auto normal = [&rng](std::size_t n, double scale) {
    std::vector<float> v(n);
    for (auto& x : v) x = static_cast<float>(scale * rng.normal());
    return v;
  };
  for (const auto& s : layer_specs(config)) {
    const std::size_t per = s.cin * s.kernel;
    std::vector<float> v = normal(s.cout * per, config.init_scale);
    std::vector<float> g(s.cout);
    for (std::size_t o = 0; o < s.cout; ++o) {
      double ss = 0.0;
      for (std::size_t j = 0; j < per; ++j) ss += static_cast<double>(v[o * per + j]) * v[o * per + j];
      g[o] = static_cast<float>(std::sqrt(ss));  // effective weight == v at init
    }
    params.add(s.name + ".v", s.group, Tensor::from({s.cout, s.cin, s.kernel}, std::move(v), true));
    params.add(s.name + ".g", s.group, Tensor::from({s.cout}, std::move(g), true));
    params.add(s.name + ".b", s.group, Tensor::zeros({s.cout}, true));
    if (s.norm) {
      const std::string n = norm_name(s.name);
      params.add(n + ".gain", s.group, Tensor::full({s.cout}, 1.0f, true));
      params.add(n + ".bias", s.group, Tensor::zeros({s.cout}, true));
    }
  }
  params.add("enc.codebook", Network::kEncoder,
             Tensor::from({config.content_dim, config.codebook_size},
                          normal(config.content_dim * config.codebook_size, 1.0), true));
  params.add("dec.speaker", Network::kDecoder,
             Tensor::from({config.num_speakers, config.speaker_dim},
                          normal(config.num_speakers * config.speaker_dim, 1.0), true));
  return params;
}

void store_params(const ParameterStore& params, Container& out) {
  for (const auto& e : params.entries()) out.put("param/" + e.name, e.tensor.detach());
}

ParameterStore restore_params(const Container& in, const ModelConfig& config) {
  Rng scratch(0);
  ParameterStore expected = init_params(config, scratch);
  ParameterStore params;
  for (const auto& e : expected.entries()) {
    const std::string key = "param/" + e.name;
    if (!in.has(key)) throw CheckpointError("checkpoint is missing parameter " + e.name);
    const Tensor& t = in.get(key);
    if (t.shape() != e.tensor.shape()) {
      throw CheckpointError("parameter " + e.name + " has shape " + shape_str(t.shape()) + ", model expects " +
                            shape_str(e.tensor.shape()));
    }
    params.add(e.name, e.group, t.clone(true));
  }
  return params;
}

namespace {

template <typename T>
ConvLayer<T> bind_conv(const BasicParameterStore<T>& p, const ConvSpec& s) {
  return {weight_norm(p.get(s.name + ".v"), p.get(s.name + ".g")), p.get(s.name + ".b"), s.stride, s.pad};
}

template <typename T>
BasicTensor<T> apply(const ConvLayer<T>& layer, const BasicTensor<T>& x) {
  return add_channel_bias(conv1d(x, layer.weight, layer.stride, layer.pad), layer.bias);
}

// conv -> LayerNorm -> ReLU for every stack layer, then the head.
template <typename T>
BasicTensor<T> run_stack(const ConvStack<T>& stack, BasicTensor<T> h) {
  for (std::size_t i = 0; i < stack.convs.size(); ++i) {
    h = relu(layer_norm(apply(stack.convs[i], h), stack.norms[i].gain, stack.norms[i].bias));
  }
  return h;
}

template <typename T>
void check_input(const BoundNetworks<T>& nets, const BasicTensor<T>& m, const char* who) {
  if (m.rank() != 2 || m.dim(0) != nets.config.n_mels) {
    throw DimensionError(std::string(who) + ": expected " + std::to_string(nets.config.n_mels) +
                         " x T input, got " + shape_str(m.shape()));
  }
}

}  // namespace

template <typename T>
BoundNetworks<T> bind(const BasicParameterStore<T>& params, const ModelConfig& config) {
  BoundNetworks<T> nets;
  nets.config = config;
  for (const auto& s : layer_specs(config)) {
    ConvStack<T>* stack = nullptr;
    if (s.name.starts_with("enc.")) stack = &nets.encoder;
    else if (s.name.starts_with("dec.")) stack = &nets.decoder;
    else if (s.name.starts_with("pext.")) stack = &nets.f0_extractor;
    else stack = &nets.classifier;
    ConvLayer<T> layer = bind_conv(params, s);
    if (s.norm) {
      const std::string n = norm_name(s.name);
      stack->convs.push_back(std::move(layer));
      stack->norms.push_back({params.get(n + ".gain"), params.get(n + ".bias")});
    } else if (s.name == "dec.log_sigma") {
      nets.decoder_log_sigma = std::move(layer);
    } else {
      stack->head = std::move(layer);
    }
  }
  nets.codebook = params.get("enc.codebook");
  nets.speaker_table = params.get("dec.speaker");
  return nets;
}

template <typename T>
BasicContentCode<T> enc_c(const BoundNetworks<T>& nets, const BasicTensor<T>& x, double tau, Rng& rng,
                          ContentSampling sampling) {
  check_input(nets, x, "enc_c");
  const BasicTensor<T> logits = apply(nets.encoder.head, run_stack(nets.encoder, x));
  BasicContentCode<T> code;
  code.assignments = sampling == ContentSampling::kGumbel ? gumbel_softmax(logits, tau, rng) : one_hot_argmax(logits);
  code.embeddings = matmul(nets.codebook, code.assignments);
  return code;
}

template <typename T>
BasicDecoderOutput<T> dec(const BoundNetworks<T>& nets, const BasicTensor<T>& content, const LogF0Pattern& pitch,
                          SpeakerId speaker) {
  const ModelConfig& cfg = nets.config;
  if (content.rank() != 2 || content.dim(0) != cfg.content_dim) {
    throw DimensionError("dec: content must be " + std::to_string(cfg.content_dim) + " x T, got " +
                         shape_str(content.shape()));
  }
  const std::size_t frames = content.dim(1);
  if (pitch.size() != frames) {
    throw DimensionError("dec: F0 pattern has " + std::to_string(pitch.size()) + " frames, content has " +
                         std::to_string(frames));
  }
  check_speaker(speaker, cfg.num_speakers);
  std::vector<T> f0(pitch.values.begin(), pitch.values.end());
  const auto mask_f = pitch.voiced_mask();
  std::vector<T> mask(mask_f.begin(), mask_f.end());
  BasicDecoderOutput<T> out;
  out.conditioning = concat_channels<T>({content, BasicTensor<T>::from({1, frames}, std::move(f0)),
                                         BasicTensor<T>::from({1, frames}, std::move(mask)),
                                         broadcast_frames(embedding(nets.speaker_table, speaker.zero_based()), frames)});
  const BasicTensor<T> h = run_stack(nets.decoder, out.conditioning);
  out.mu = apply(nets.decoder.head, h);
  out.log_sigma = clamp(apply(nets.decoder_log_sigma, h), cfg.log_sigma_min, cfg.log_sigma_max);
  out.sigma = exp(out.log_sigma);
  return out;
}

template <typename T>
BasicTensor<T> p_ext(const BoundNetworks<T>& nets, const BasicTensor<T>& m) {
  check_input(nets, m, "p_ext");
  const BasicTensor<T> out = apply(nets.f0_extractor.head, run_stack(nets.f0_extractor, m));
  return reshape(out, {m.dim(1)});
}

template <typename T>
BasicTensor<T> cls(const BoundNetworks<T>& nets, const BasicTensor<T>& m) {
  check_input(nets, m, "cls");
  return apply(nets.classifier.head, run_stack(nets.classifier, m));
}

#define DISC_INSTANTIATE(T)                                                                                  \
  template BoundNetworks<T> bind(const BasicParameterStore<T>&, const ModelConfig&);                         \
  template BasicContentCode<T> enc_c(const BoundNetworks<T>&, const BasicTensor<T>&, double, Rng&,           \
                                     ContentSampling);                                                       \
  template BasicDecoderOutput<T> dec(const BoundNetworks<T>&, const BasicTensor<T>&, const LogF0Pattern&,    \
                                     SpeakerId);                                                             \
  template BasicTensor<T> p_ext(const BoundNetworks<T>&, const BasicTensor<T>&);                             \
  template BasicTensor<T> cls(const BoundNetworks<T>&, const BasicTensor<T>&);

DISC_INSTANTIATE(float)
DISC_INSTANTIATE(double)

#undef DISC_INSTANTIATE

}  // namespace disc
