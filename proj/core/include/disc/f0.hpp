// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// F0 estimation, the log-F0 pattern, per-speaker log-F0 statistics,
// random resampling and the affine target-F0 map used at conversion time.

#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "disc/audio.hpp"
#include "disc/rng.hpp"
#include "disc/types.hpp"

namespace disc {

/// Natural-log F0 per frame; exactly 0 on unvoiced frames.
struct LogF0Pattern {
  std::vector<float> values;

  LogF0Pattern() = default;
  explicit LogF0Pattern(std::vector<float> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  float operator[](std::size_t i) const { return values[i]; }
  bool voiced(std::size_t i) const { return values[i] != 0.0f; }
  std::size_t voiced_count() const;
  double voiced_fraction() const;
  /// 1 on voiced frames, 0 elsewhere.
  std::vector<float> voiced_mask() const;
  /// Voiced entries only, in order.
  std::vector<float> voiced_values() const;

  friend bool operator==(const LogF0Pattern&, const LogF0Pattern&) = default;
};

struct YinConfig {
  std::size_t window = 1024;
  double threshold = 0.15;
  double fmin = 50.0;
  double fmax = 500.0;
};

/// YIN-style estimator (cumulative-mean-normalized difference, absolute
/// threshold, parabolic refinement). Frames are centered at t * hop like
/// `stft`; the result has `frames` entries when given, otherwise
/// config.frames_for(len).
LogF0Pattern estimate_f0(const AudioClip& clip, const AudioConfig& config, const YinConfig& yin = {},
                         std::optional<std::size_t> frames = std::nullopt);

inline constexpr double kF0StdFloor = 1e-4;

struct SpeakerF0Stats {
  double mean = 0.0;
  double std = 1.0;
  SpeakerId speaker;

  friend bool operator==(const SpeakerF0Stats&, const SpeakerF0Stats&) = default;
};

/// Sample mean and sample std (n - 1) over all nonzero entries.
SpeakerF0Stats speaker_stats(std::span<const LogF0Pattern> patterns, SpeakerId speaker);

inline constexpr double kResampleShiftLo = 0.3;
inline constexpr double kResampleShiftHi = 3.0;

/// Adds one shift beta ~ Uniform[0.3, 3) to every voiced entry. When
/// `beta_out` is given it receives the drawn shift.
LogF0Pattern random_resample_f0(const LogF0Pattern& f0, Rng& rng, double* beta_out = nullptr);

/// Uniform speaker in {1..num_speakers}.
SpeakerId random_resample_speaker(std::size_t num_speakers, Rng& rng);

/// sigma_tgt / sigma_src * (lambda_i - mu_src) + mu_tgt + beta on voiced
/// entries; zeros stay zero.
LogF0Pattern target_f0(const LogF0Pattern& f0, const SpeakerF0Stats& source,
                       const SpeakerF0Stats& target, double beta);

}  // namespace disc
