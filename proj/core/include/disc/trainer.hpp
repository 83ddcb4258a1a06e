// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "disc/container.hpp"
#include "disc/model.hpp"
#include "disc/objectives.hpp"
#include "disc/rng.hpp"

namespace disc {

struct TrainConfig {
  std::size_t batch_size = 16;  // training samples; each holds one tuple per speaker
  std::size_t steps = 2000;
  std::size_t crop_frames = 128;
  double learning_rate = 2e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip = 5.0;
  double tau_start = 2.0;
  double tau_end = 0.5;
  std::size_t tau_anneal_steps = 5000;
  std::uint64_t seed = 1;
  std::size_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  bool aux = true;                   // false: reconstruction-only ablation

  void validate() const;
  /// Gumbel temperature at `step` (linear anneal, then held).
  double temperature(std::size_t step) const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct Utterance {
  std::string id;
  SpeakerId speaker;
  Matrix x;  // standardized log-mel, F x T
  LogF0Pattern f0;
};

struct Dataset {
  std::size_t num_speakers = 0;
  std::vector<Utterance> utterances;

  /// Indices into `utterances` for every speaker (position s - 1).
  std::vector<std::vector<std::size_t>> by_speaker() const;
};

/// Draws minibatches: batch_size samples, each a jointly cropped
/// (x, f0) of a uniformly chosen utterance for every speaker, in
/// speaker order. Short utterances are zero-padded; pad frames are
/// unvoiced.
class BatchSampler {
 public:
  BatchSampler(const Dataset& dataset, const TrainConfig& config);

  Batch next(Rng& rng) const;

  /// The tuple cut from `utt` at `offset`, zero-padded to `frames`.
  static TrainingTuple crop(const Utterance& utt, std::size_t offset, std::size_t frames);

 private:
  const Dataset& dataset_;
  TrainConfig config_;
  std::vector<std::vector<std::size_t>> by_speaker_;
};

struct AdamState {
  std::size_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

/// Everything that determines the rest of a training run.
struct TrainState {
  ModelConfig model;
  ParameterStore params;
  AdamState adam;
  Rng rng;
  std::size_t step = 0;
};

TrainState init_train_state(const ModelConfig& model, const TrainConfig& config);

/// Forward, backward, clipped Adam update. Returns the pre-update losses.
/// Throws NumericError naming the first non-finite term.
LossBreakdown train_step(const Batch& batch, TrainState& state, const TrainConfig& config);

/// Clipped Adam update from the gradients accumulated on state.params,
/// which are zeroed afterwards. Does not advance state.step.
void apply_adam(TrainState& state, const TrainConfig& config);

/// Checkpoint = container with params, Adam moments, step and RNG state.
/// `config_text` is stored verbatim ahead of the state section.
Container make_checkpoint(const TrainState& state, const std::string& config_text);
void save_checkpoint(const std::filesystem::path& path, const TrainState& state, const std::string& config_text);
TrainState restore_checkpoint(const Container& container, const ModelConfig& model);

struct TrainHooks {
  std::ostream* log = nullptr;  // CSV rows, header written when state.step == 0
  std::filesystem::path checkpoint_dir;  // periodic checkpoints ckpt_<step>.bin
  std::string config_text;
  std::function<void(std::size_t step, const LossBreakdown&)> on_step;
  std::function<void(Container&)> decorate;  // extra tensors for each checkpoint
};

/// Runs until state.step == config.steps; resumes from whatever step the
/// state holds.
std::vector<LossBreakdown> train(const Dataset& dataset, const TrainConfig& config, TrainState& state,
                                 const TrainHooks& hooks = {});

void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, std::size_t step, const LossBreakdown& losses, double wall_ms);

}  // namespace disc
