// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Conversion: retarget the log-F0 pattern, decode with the requested
// timbre, vocode with Griffin-Lim.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "disc/audio.hpp"
#include "disc/f0.hpp"
#include "disc/model.hpp"
#include "disc/types.hpp"

namespace disc {

enum class Task { kP, kT, kPT };

Task parse_task(std::string_view text);
std::string_view task_name(Task task);

/// beta, pitch speaker and timbre speaker for one conversion.
struct ConversionRequest {
  double beta = 0.0;
  SpeakerId pitch_speaker;
  SpeakerId timbre_speaker;
};

/// Task P: shift by beta, keep both speakers. Task T: timbre to `target`,
/// pitch untouched. Task PT: pitch and timbre to `target`, plus beta.
ConversionRequest request_for(Task task, SpeakerId source, SpeakerId target, double beta);

/// Per-speaker log-F0 moments, position s - 1.
class SpeakerStatsTable {
 public:
  SpeakerStatsTable() = default;
  explicit SpeakerStatsTable(std::vector<SpeakerF0Stats> stats);

  /// Throws ConfigError for a speaker outside the table.
  const SpeakerF0Stats& at(SpeakerId speaker) const;
  std::size_t size() const { return stats_.size(); }
  const std::vector<SpeakerF0Stats>& entries() const { return stats_; }

 private:
  std::vector<SpeakerF0Stats> stats_;
};

struct ConversionOptions {
  ContentSampling sampling = ContentSampling::kGumbel;
  double tau = 0.5;  // final training temperature
  std::uint64_t seed = 1;
  bool vocode = true;
};

struct ConversionResult {
  LogF0Pattern target_f0;  // f0-check
  Matrix mu;               // standardized F x T
  Matrix sigma;
  DecoderOutput decoded;   // graph handles, for inspection
  AudioClip clip;          // empty unless vocoded
};

/// Read-only view of a trained model plus the statistics needed to
/// convert. Parameters are copied once as constants.
class Converter {
 public:
  Converter(const ModelConfig& model, const ParameterStore& params, SpeakerStatsTable f0_stats,
            StandardizationStats mel_stats, AudioConfig audio);

  /// x is the standardized source log-mel, f0 its log-F0 pattern.
  ConversionResult convert(const Matrix& x, const LogF0Pattern& f0, SpeakerId source,
                           const ConversionRequest& request, const ConversionOptions& options = {}) const;

  /// Identity conversion without vocoding; returns mu.
  Matrix reconstruct(const Matrix& x, const LogF0Pattern& f0, SpeakerId source,
                     const ConversionOptions& options = {}) const;

  const BoundNetworks<float>& networks() const { return nets_; }
  const SpeakerStatsTable& f0_stats() const { return f0_stats_; }
  const StandardizationStats& mel_stats() const { return mel_stats_; }
  const AudioConfig& audio() const { return audio_; }

 private:
  ModelConfig model_;
  ParameterStore params_;
  BoundNetworks<float> nets_;
  SpeakerStatsTable f0_stats_;
  StandardizationStats mel_stats_;
  AudioConfig audio_;
};

}  // namespace disc
