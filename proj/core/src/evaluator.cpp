// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "disc/error.hpp"

namespace disc {

AudioClip trim_silence(const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw InputError("trim_silence: invalid sample rate");
  const auto window = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(kTrimWindowSeconds * clip.sample_rate)));
  const std::size_t n = clip.samples.size();
  const std::size_t windows = (n + window - 1) / window;
  std::vector<double> rms(windows, 0.0);
  for (std::size_t w = 0; w < windows; ++w) {
    const std::size_t lo = w * window, hi = std::min(n, lo + window);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += static_cast<double>(clip.samples[i]) * clip.samples[i];
    rms[w] = std::sqrt(acc / static_cast<double>(hi - lo));
  }
  const double peak = windows ? *std::max_element(rms.begin(), rms.end()) : 0.0;
  if (!(peak > 0.0)) throw InputError("trim_silence: clip is entirely silent");
  const double floor = peak * std::pow(10.0, -kTrimThresholdDb / 20.0);
  std::size_t first = 0, last = windows - 1;
  while (rms[first] < floor) ++first;
  while (rms[last] < floor) --last;
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.assign(clip.samples.begin() + static_cast<std::ptrdiff_t>(first * window),
                     clip.samples.begin() + static_cast<std::ptrdiff_t>(std::min(n, (last + 1) * window)));
  return out;
}

double absolute_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("absolute_distance: frame sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return acc;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("euclidean_distance: frame sizes differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

DtwResult dtw_align(const FrameSequence& a, const FrameSequence& b, const FrameMetric& metric,
                    const DtwOptions& options) {
  if (a.empty() || b.empty()) throw InputError("dtw_align: empty sequence");
  const std::size_t n = a.size(), m = b.size();
  // Free start/end cells along the longer axis.
  const std::size_t free_a = n > m ? std::min(options.margin, n - 1) : 0;
  const std::size_t free_b = m > n ? std::min(options.margin, m - 1) : 0;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n * m, kInf);
  enum : unsigned char { kStart, kDiag, kUp, kLeft };
  std::vector<unsigned char> from(n * m, kStart);
  auto at = [m](std::size_t i, std::size_t j) { return i * m + j; };

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = metric(a[i], b[j]);
      const bool can_start = (i == 0 && j <= free_b) || (j == 0 && i <= free_a);
      double best = can_start ? 0.0 : kInf;
      unsigned char step = kStart;
      // Diagonal first so ties prefer it.
      if (i > 0 && j > 0 && cost[at(i - 1, j - 1)] < best) {
        best = cost[at(i - 1, j - 1)];
        step = kDiag;
      }
      if (i > 0 && cost[at(i - 1, j)] < best) {
        best = cost[at(i - 1, j)];
        step = kUp;
      }
      if (j > 0 && cost[at(i, j - 1)] < best) {
        best = cost[at(i, j - 1)];
        step = kLeft;
      }
      cost[at(i, j)] = best + d;
      from[at(i, j)] = step;
    }
  }

  std::size_t ei = n - 1, ej = m - 1;
  double best = cost[at(ei, ej)];
  for (std::size_t j = m - 1 - free_b; j < m; ++j) {
    if (cost[at(n - 1, j)] < best) best = cost[at(n - 1, j)], ei = n - 1, ej = j;
  }
  for (std::size_t i = n - 1 - free_a; i < n; ++i) {
    if (cost[at(i, m - 1)] < best) best = cost[at(i, m - 1)], ei = i, ej = m - 1;
  }

  DtwResult out;
  out.total_cost = best;
  std::size_t i = ei, j = ej;
  while (true) {
    out.path.emplace_back(i, j);
    const unsigned char step = from[at(i, j)];
    if (step == kStart) break;
    if (step == kDiag) --i, --j;
    else if (step == kUp) --i;
    else --j;
  }
  std::reverse(out.path.begin(), out.path.end());
  out.mean_cost = out.total_cost / static_cast<double>(out.path.size());
  return out;
}

namespace {

FrameSequence voiced_frames(const LogF0Pattern& p, const char* which) {
  FrameSequence out;
  for (float v : p.values) {
    if (v != 0.0f) out.push_back({static_cast<double>(v)});
  }
  if (out.empty()) throw InputError(std::string("delta_f0: ") + which + " pattern has no voiced frames");
  return out;
}

FrameSequence columns(const Matrix& m) {
  FrameSequence out(m.cols, std::vector<double>(m.rows));
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t t = 0; t < m.cols; ++t) out[t][r] = m(r, t);
  }
  return out;
}

}  // namespace

double delta_f0(const LogF0Pattern& target, const LogF0Pattern& converted, const DtwOptions& options) {
  const FrameSequence a = voiced_frames(target, "target");
  const FrameSequence b = voiced_frames(converted, "converted");
  const DtwResult r = dtw_align(a, b, absolute_distance, options);
  double acc = 0.0;
  for (auto [i, j] : r.path) acc += (a[i][0] - b[j][0]) * (a[i][0] - b[j][0]);
  return std::sqrt(acc / static_cast<double>(r.path.size()));
}

double mcd(const Matrix& a_log_mel, const Matrix& b_log_mel, std::size_t order, const DtwOptions& options) {
  if (a_log_mel.cols == 0 || b_log_mel.cols == 0) throw InputError("mcd: empty log-mel");
  if (a_log_mel.rows != b_log_mel.rows) throw DimensionError("mcd: mel band counts differ");
  const DtwResult r =
      dtw_align(columns(mel_cepstra(a_log_mel, order)), columns(mel_cepstra(b_log_mel, order)), euclidean_distance,
                options);
  return kMcdScale * r.mean_cost;
}

PairMetrics evaluate_pair(const AudioClip& reference, const AudioClip& converted, const LogF0Pattern& target_f0,
                          const AudioConfig& audio, const EvalConfig& config) {
  const AudioClip ref = trim_silence(reference);
  const AudioClip conv = trim_silence(converted);
  PairMetrics out;
  const LogF0Pattern conv_f0 = estimate_f0(conv, audio, config.yin);
  out.delta_f0 = (target_f0.voiced_count() > 0 && conv_f0.voiced_count() > 0)
                     ? delta_f0(target_f0, conv_f0, config.dtw)
                     : std::numeric_limits<double>::quiet_NaN();
  out.mcd = mcd(log_mel(ref, audio), log_mel(conv, audio), config.mcd_order, config.dtw);
  return out;
}

Aggregate aggregate(std::span<const double> values) {
  Aggregate out;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    sum += v;
    ++out.count;
  }
  if (out.count == 0) return out;
  out.mean = sum / static_cast<double>(out.count);
  double sq = 0.0;
  for (double v : values)
    if (std::isfinite(v)) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(out.count));
  return out;
}

}  // namespace disc
