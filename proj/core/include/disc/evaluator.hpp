// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Objective metrics: silence trimming, endpoint-free DTW, log-F0 RMSE and
// mel-cepstral distortion.

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "disc/audio.hpp"
#include "disc/f0.hpp"
#include "disc/types.hpp"

namespace disc {

inline constexpr double kTrimWindowSeconds = 0.025;
inline constexpr double kTrimThresholdDb = 40.0;

/// Drops leading and trailing 25 ms windows whose RMS is more than 40 dB
/// below the loudest window. Throws InputError if every sample is zero.
AudioClip trim_silence(const AudioClip& clip);

/// A sequence of equal-length frames, one vector per time step.
using FrameSequence = std::vector<std::vector<double>>;
using FrameMetric = std::function<double(std::span<const double>, std::span<const double>)>;

double absolute_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

struct DtwOptions {
  /// How far into the longer sequence the path may start, and how far
  /// before its end it may stop. Unlimited by default.
  std::size_t margin = std::numeric_limits<std::size_t>::max();
};

struct DtwResult {
  std::vector<std::pair<std::size_t, std::size_t>> path;  // (index in a, index in b)
  double total_cost = 0.0;
  double mean_cost = 0.0;  // total / path length
};

/// Monotone alignment with steps (1,0), (0,1), (1,1) minimizing the summed
/// frame distance. The shorter sequence is covered from first to last
/// frame; on the longer one the path may start and end anywhere within
/// the margin. Equal lengths pin both ends.
DtwResult dtw_align(const FrameSequence& a, const FrameSequence& b, const FrameMetric& metric,
                    const DtwOptions& options = {});

/// RMSE between voiced frames of both patterns after DTW alignment with
/// absolute distance. Throws InputError if either has no voiced frame.
double delta_f0(const LogF0Pattern& target, const LogF0Pattern& converted, const DtwOptions& options = {});

inline constexpr std::size_t kMcdOrder = 13;
/// 10 sqrt(2) / ln 10.
inline constexpr double kMcdScale = 6.141851463713754;

/// Mean over DTW-aligned frames of kMcdScale * ||mc_a - mc_b||, with
/// cepstra 1..order of each log-mel column.
double mcd(const Matrix& a_log_mel, const Matrix& b_log_mel, std::size_t order = kMcdOrder,
           const DtwOptions& options = {});

struct EvalConfig {
  std::size_t mcd_order = kMcdOrder;
  DtwOptions dtw;
  YinConfig yin;
};

struct PairMetrics {
  double delta_f0 = 0.0;
  double mcd = 0.0;
};

/// Trims both clips, extracts F0 of the converted clip and log-mels of
/// both. ΔF0 compares against `target_f0`; MCD compares the two clips.
/// ΔF0 is NaN when either pattern has no voiced frame.
PairMetrics evaluate_pair(const AudioClip& reference, const AudioClip& converted, const LogF0Pattern& target_f0,
                          const AudioConfig& audio, const EvalConfig& config = {});

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t count = 0;
};

/// Non-finite values are skipped; `count` is the number used.
Aggregate aggregate(std::span<const double> values);

}  // namespace disc
