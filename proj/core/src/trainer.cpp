// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "disc/error.hpp"

namespace disc {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (crop_frames < 16) throw ConfigError("train.crop_frames must be >= 16");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train.adam_beta1/2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be positive");
  if (!(grad_clip > 0.0)) throw ConfigError("train.grad_clip must be positive");
  if (!(tau_start > 0.0 && tau_end > 0.0)) throw ConfigError("train.tau_start/tau_end must be positive");
}

double TrainConfig::temperature(std::size_t step) const {
  if (tau_anneal_steps == 0 || step >= tau_anneal_steps) return tau_end;
  const double frac = static_cast<double>(step) / static_cast<double>(tau_anneal_steps);
  return tau_start + (tau_end - tau_start) * frac;
}

std::vector<std::vector<std::size_t>> Dataset::by_speaker() const {
  std::vector<std::vector<std::size_t>> out(num_speakers);
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    const SpeakerId s = utterances[i].speaker;
    if (s.index < 1 || static_cast<std::size_t>(s.index) > num_speakers) {
      throw DatasetError("utterance " + utterances[i].id + " has speaker " + std::to_string(s.index) +
                         " outside 1.." + std::to_string(num_speakers));
    }
    out[s.zero_based()].push_back(i);
  }
  return out;
}

BatchSampler::BatchSampler(const Dataset& dataset, const TrainConfig& config)
    : dataset_(dataset), config_(config), by_speaker_(dataset.by_speaker()) {
  if (dataset.num_speakers == 0) throw DatasetError("dataset has no speakers");
  for (std::size_t s = 0; s < by_speaker_.size(); ++s) {
    if (by_speaker_[s].empty()) throw DatasetError("speaker " + std::to_string(s + 1) + " has no utterances");
  }
  for (const auto& u : dataset.utterances) {
    if (u.x.cols != u.f0.size()) {
      throw DatasetError("utterance " + u.id + ": log-mel and F0 lengths differ");
    }
  }
}

TrainingTuple BatchSampler::crop(const Utterance& utt, std::size_t offset, std::size_t frames) {
  TrainingTuple tuple;
  tuple.speaker = utt.speaker;
  tuple.x = Matrix(utt.x.rows, frames, 0.0f);
  tuple.f0.values.assign(frames, 0.0f);
  const std::size_t n = std::min(frames, utt.x.cols - std::min(offset, utt.x.cols));
  for (std::size_t r = 0; r < utt.x.rows; ++r) {
    for (std::size_t t = 0; t < n; ++t) tuple.x(r, t) = utt.x(r, offset + t);
  }
  for (std::size_t t = 0; t < n; ++t) tuple.f0.values[t] = utt.f0.values[offset + t];
  return tuple;
}

Batch BatchSampler::next(Rng& rng) const {
  Batch batch;
  batch.reserve(config_.batch_size * by_speaker_.size());
  for (std::size_t b = 0; b < config_.batch_size; ++b) {
    for (const auto& pool : by_speaker_) {
      const Utterance& utt = dataset_.utterances[pool[rng.below(pool.size())]];
      const std::size_t len = utt.x.cols;
      const std::size_t offset = len > config_.crop_frames ? rng.below(len - config_.crop_frames + 1) : 0;
      batch.push_back(crop(utt, offset, config_.crop_frames));
    }
  }
  return batch;
}

TrainState init_train_state(const ModelConfig& model, const TrainConfig& config) {
  config.validate();
  TrainState state;
  state.model = model;
  Rng init_rng = Rng(config.seed).split(0);
  state.params = init_params(model, init_rng);
  state.rng = Rng(config.seed).split(1);
  for (const auto& e : state.params.entries()) {
    state.adam.m.emplace_back(e.tensor.numel(), 0.0f);
    state.adam.v.emplace_back(e.tensor.numel(), 0.0f);
  }
  return state;
}

LossBreakdown train_step(const Batch& batch, TrainState& state, const TrainConfig& config) {
  ObjectiveOptions options;
  options.tau = config.temperature(state.step);
  if (!config.aux) options.aux_p_scale = options.aux_t_scale = 0.0;

  const auto nets = bind(state.params, state.model);
  const LossGraph<float> graph = disc_losses(batch, nets, options, state.rng);
  backward(graph.total);
  apply_adam(state, config);
  state.step += 1;
  return graph.values;
}

void apply_adam(TrainState& state, const TrainConfig& config) {
  auto& entries = state.params.entries();
  double norm_sq = 0.0;
  for (const auto& e : entries) {
    for (float g : e.tensor.grad()) norm_sq += static_cast<double>(g) * g;
  }
  if (!std::isfinite(norm_sq)) throw NumericError("non-finite gradient norm");
  const double norm = std::sqrt(norm_sq);
  const double clip = norm > config.grad_clip ? config.grad_clip / norm : 1.0;

  AdamState& adam = state.adam;
  adam.step += 1;
  const double t = static_cast<double>(adam.step);
  const double bc1 = 1.0 - std::pow(config.adam_beta1, t);
  const double bc2 = 1.0 - std::pow(config.adam_beta2, t);
  const auto b1 = static_cast<float>(config.adam_beta1), b2 = static_cast<float>(config.adam_beta2);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Tensor& p = entries[k].tensor;
    auto grad = p.grad();
    auto values = p.mutable_data();
    auto& m = adam.m[k];
    auto& v = adam.v[k];
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float g = grad.empty() ? 0.0f : static_cast<float>(grad[i] * clip);
      m[i] = b1 * m[i] + (1.0f - b1) * g;
      v[i] = b2 * v[i] + (1.0f - b2) * g * g;
      const double mhat = m[i] / bc1, vhat = v[i] / bc2;
      values[i] -= static_cast<float>(config.learning_rate * mhat / (std::sqrt(vhat) + config.adam_eps));
    }
    std::fill(p.mutable_grad().begin(), p.mutable_grad().end(), 0.0f);
  }
}

namespace {

constexpr const char* kStateHeader = "[state]";

std::string state_section(const TrainState& s) {
  std::ostringstream os;
  os << kStateHeader << "\n"
     << "step=" << s.step << "\n"
     << "adam_step=" << s.adam.step << "\n"
     << "rng_key=" << s.rng.key() << "\n"
     << "rng_counter=" << s.rng.counter() << "\n";
  return os.str();
}

std::uint64_t state_value(const std::string& text, const std::string& key) {
  const auto at = text.rfind(kStateHeader);
  if (at == std::string::npos) throw CheckpointError("checkpoint has no [state] section");
  std::istringstream in(text.substr(at));
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "=", 0) == 0) return std::stoull(line.substr(key.size() + 1));
  }
  throw CheckpointError("checkpoint state is missing '" + key + "'");
}

}  // namespace

Container make_checkpoint(const TrainState& state, const std::string& config_text) {
  Container c;
  c.config = config_text;
  if (!c.config.empty() && c.config.back() != '\n') c.config += '\n';
  c.config += state_section(state);
  store_params(state.params, c);
  const auto& entries = state.params.entries();
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Shape& shape = entries[k].tensor.shape();
    c.put("adam_m/" + entries[k].name, Tensor::from(shape, state.adam.m[k]));
    c.put("adam_v/" + entries[k].name, Tensor::from(shape, state.adam.v[k]));
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const std::string& config_text) {
  save_container(path, make_checkpoint(state, config_text));
}

TrainState restore_checkpoint(const Container& container, const ModelConfig& model) {
  TrainState state;
  state.model = model;
  state.params = restore_params(container, model);
  state.step = state_value(container.config, "step");
  state.adam.step = state_value(container.config, "adam_step");
  state.rng = Rng(state_value(container.config, "rng_key"), state_value(container.config, "rng_counter"));
  for (const auto& e : state.params.entries()) {
    for (const char* prefix : {"adam_m/", "adam_v/"}) {
      const std::string key = prefix + e.name;
      std::vector<float> values(e.tensor.numel(), 0.0f);
      if (container.has(key)) {
        const Tensor& t = container.get(key);
        if (t.shape() != e.tensor.shape()) throw CheckpointError("optimizer moment " + key + " has wrong shape");
        values.assign(t.data().begin(), t.data().end());
      }
      (prefix[5] == 'm' ? state.adam.m : state.adam.v).push_back(std::move(values));
    }
  }
  return state;
}

void write_log_header(std::ostream& os) {
  os << "step";
  for (const auto& n : LossBreakdown::names()) os << ',' << n;
  os << ",wall_ms\n";
}

void write_log_row(std::ostream& os, std::size_t step, const LossBreakdown& losses, double wall_ms) {
  char buf[64];
  os << step;
  for (double v : losses.as_vector()) {
    std::snprintf(buf, sizeof(buf), ",%.9g", v);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), ",%.1f\n", wall_ms);
  os << buf;
}

std::vector<LossBreakdown> train(const Dataset& dataset, const TrainConfig& config, TrainState& state,
                                 const TrainHooks& hooks) {
  config.validate();
  if (dataset.num_speakers != state.model.num_speakers) {
    throw DatasetError("dataset has " + std::to_string(dataset.num_speakers) + " speakers, model expects " +
                       std::to_string(state.model.num_speakers));
  }
  BatchSampler sampler(dataset, config);
  std::vector<LossBreakdown> history;
  if (hooks.log && state.step == 0) write_log_header(*hooks.log);
  while (state.step < config.steps) {
    const auto start = std::chrono::steady_clock::now();
    const Batch batch = sampler.next(state.rng);
    const LossBreakdown losses = train_step(batch, state, config);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    history.push_back(losses);
    if (hooks.log) {
      write_log_row(*hooks.log, state.step, losses, ms);
      hooks.log->flush();
    }
    if (hooks.on_step) hooks.on_step(state.step, losses);
    if (config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0 && !hooks.checkpoint_dir.empty()) {
      Container c = make_checkpoint(state, hooks.config_text);
      if (hooks.decorate) hooks.decorate(c);
      save_container(hooks.checkpoint_dir / ("ckpt_" + std::to_string(state.step) + ".bin"), c);
    }
  }
  return history;
}

}  // namespace disc
