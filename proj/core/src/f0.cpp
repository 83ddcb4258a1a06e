// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/f0.hpp"

#include <algorithm>
#include <cmath>

namespace disc {

std::size_t LogF0Pattern::voiced_count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](float v) { return v != 0.0f; }));
}

double LogF0Pattern::voiced_fraction() const {
  return values.empty() ? 0.0 : static_cast<double>(voiced_count()) / static_cast<double>(values.size());
}

std::vector<float> LogF0Pattern::voiced_mask() const {
  std::vector<float> mask(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) mask[i] = values[i] != 0.0f ? 1.0f : 0.0f;
  return mask;
}

std::vector<float> LogF0Pattern::voiced_values() const {
  std::vector<float> out;
  for (float v : values) {
    if (v != 0.0f) out.push_back(v);
  }
  return out;
}

namespace {

// Period in samples for one analysis frame, or 0 when unvoiced.
double yin_period(const std::vector<double>& seg, std::size_t window, std::size_t tau_min, std::size_t tau_max,
                  double threshold, std::vector<double>& diff, std::vector<double>& cmnd) {
  double energy = 0.0;
  for (std::size_t j = 0; j < window; ++j) energy += seg[j] * seg[j];
  if (energy < 1e-10 * static_cast<double>(window)) return 0.0;

  diff.assign(tau_max + 2, 0.0);
  for (std::size_t tau = 1; tau <= tau_max + 1; ++tau) {
    double acc = 0.0;
    for (std::size_t j = 0; j < window; ++j) {
      const double d = seg[j] - seg[j + tau];
      acc += d * d;
    }
    diff[tau] = acc;
  }
  cmnd.assign(tau_max + 2, 1.0);
  double running = 0.0;
  for (std::size_t tau = 1; tau <= tau_max + 1; ++tau) {
    running += diff[tau];
    cmnd[tau] = running > 0.0 ? diff[tau] * static_cast<double>(tau) / running : 1.0;
  }

  std::size_t best = 0;
  for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
    if (cmnd[tau] < threshold) {
      while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
      best = tau;
      break;
    }
  }
  if (best == 0) return 0.0;

  double period = static_cast<double>(best);
  if (best > 1) {
    const double a = cmnd[best - 1], b = cmnd[best], c = cmnd[best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom > 0.0) period += 0.5 * (a - c) / denom;
  }
  return period;
}

}  // namespace

LogF0Pattern estimate_f0(const AudioClip& clip, const AudioConfig& config, const YinConfig& yin,
                         std::optional<std::size_t> frames) {
  if (clip.samples.size() < config.n_fft) {
    throw InputError("estimate_f0: clip has " + std::to_string(clip.samples.size()) + " samples, need at least " +
                     std::to_string(config.n_fft));
  }
  if (!(yin.fmin > 0.0 && yin.fmin < yin.fmax) || !(yin.threshold > 0.0)) {
    throw ConfigError("estimate_f0: invalid YIN search range or threshold");
  }
  const double sr = static_cast<double>(clip.sample_rate);
  const auto tau_min = static_cast<std::size_t>(std::floor(sr / yin.fmax));
  const auto tau_max = static_cast<std::size_t>(std::ceil(sr / yin.fmin));
  const std::size_t natural = config.frames_for(clip.samples.size());
  const std::size_t count = frames.value_or(natural);
  const std::size_t seg_len = yin.window + tau_max + 2;
  const auto n = static_cast<std::ptrdiff_t>(clip.samples.size());

  LogF0Pattern out(std::vector<float>(count, 0.0f));
  std::vector<double> seg(seg_len), diff, cmnd;
  for (std::size_t t = 0; t < std::min(count, natural); ++t) {
    const std::ptrdiff_t start = static_cast<std::ptrdiff_t>(t * config.hop) - static_cast<std::ptrdiff_t>(yin.window / 2);
    for (std::size_t j = 0; j < seg_len; ++j) {
      const std::ptrdiff_t i = start + static_cast<std::ptrdiff_t>(j);
      seg[j] = (i >= 0 && i < n) ? clip.samples[static_cast<std::size_t>(i)] : 0.0;
    }
    const double period = yin_period(seg, yin.window, tau_min, tau_max, yin.threshold, diff, cmnd);
    if (period > 0.0) {
      const double f0 = std::clamp(sr / period, yin.fmin, yin.fmax);
      out.values[t] = static_cast<float>(std::log(f0));
    }
  }
  return out;
}

SpeakerF0Stats speaker_stats(std::span<const LogF0Pattern> patterns, SpeakerId speaker) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : patterns) {
    for (float v : p.values) {
      if (v != 0.0f) {
        sum += v;
        ++n;
      }
    }
  }
  if (n < 2) {
    throw InputError("speaker_stats: speaker " + std::to_string(speaker.index) +
                     " has fewer than two voiced frames");
  }
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (const auto& p : patterns) {
    for (float v : p.values) {
      if (v != 0.0f) sq += (v - mean) * (v - mean);
    }
  }
  SpeakerF0Stats stats;
  stats.mean = mean;
  stats.std = std::max(std::sqrt(sq / static_cast<double>(n - 1)), kF0StdFloor);
  stats.speaker = speaker;
  return stats;
}

LogF0Pattern random_resample_f0(const LogF0Pattern& f0, Rng& rng, double* beta_out) {
  const double beta = rng.uniform(kResampleShiftLo, kResampleShiftHi);
  if (beta_out) *beta_out = beta;
  LogF0Pattern out = f0;
  for (float& v : out.values) {
    if (v != 0.0f) v = static_cast<float>(v + beta);
  }
  return out;
}

SpeakerId random_resample_speaker(std::size_t num_speakers, Rng& rng) {
  if (num_speakers < 1) throw ConfigError("random_resample_speaker: need at least one speaker");
  return SpeakerId{static_cast<int>(rng.below(num_speakers)) + 1};
}

LogF0Pattern target_f0(const LogF0Pattern& f0, const SpeakerF0Stats& source, const SpeakerF0Stats& target,
                       double beta) {
  if (!(source.std > 0.0) || !(target.std > 0.0)) throw DomainError("target_f0: non-positive F0 std");
  const double ratio = target.std / source.std;
  LogF0Pattern out = f0;
  for (float& v : out.values) {
    if (v != 0.0f) v = static_cast<float>(ratio * (v - source.mean) + target.mean + beta);
  }
  return out;
}

}  // namespace disc
