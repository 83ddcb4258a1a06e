// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run configuration as sectioned key=value text:
//
//   [audio]  sample_rate n_fft hop n_mels fmin fmax log_floor griffin_lim_iters
//   [model]  num_speakers codebook_size content_dim ... init_scale
//   [train]  batch_size steps crop_frames learning_rate ... aux
//   [eval]   dtw_margin mcd_order
//   [yin]    window threshold fmin fmax
//   [convert] sampling tau seed

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "disc/audio.hpp"
#include "disc/converter.hpp"
#include "disc/evaluator.hpp"
#include "disc/model.hpp"
#include "disc/trainer.hpp"

namespace disc {

struct RunConfig {
  AudioConfig audio;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  ConversionOptions convert;

  /// Cross-section checks (mel bands shared by audio and model, ...).
  void validate() const;
};

/// Paper-sized networks; the default.
RunConfig reference_preset();
/// Small networks and short crops for single-core acceptance runs.
RunConfig toy_preset();
/// "reference" or "toy"; UsageError otherwise.
RunConfig preset(std::string_view name);

/// Applies `text` on top of `base`. Unknown sections or keys and
/// malformed values throw ConfigError. Sections listed in `ignored` are
/// skipped whole.
RunConfig parse_run_config(const std::string& text, const RunConfig& base = {},
                           const std::vector<std::string>& ignored = {});
RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base = {});

/// Applies one "section.key=value" override.
void apply_override(RunConfig& config, std::string_view assignment);

/// Every key with its effective value, in a fixed order. Parsing the
/// result reproduces `config`.
std::string format_run_config(const RunConfig& config);

}  // namespace disc
