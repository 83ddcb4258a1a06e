// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Waveform <-> feature transforms: STFT, mel filterbank, log-mel
// standardization, DCT mel-cepstra and a Griffin-Lim waveform generator.

#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "disc/types.hpp"

namespace disc {

struct AudioConfig {
  int sample_rate = 16000;
  std::size_t n_fft = 1024;
  std::size_t hop = 256;
  std::size_t n_mels = 80;
  double fmin = 40.0;
  double fmax = 7600.0;
  double log_floor = 1e-5;
  std::size_t griffin_lim_iters = 60;

  std::size_t n_bins() const { return n_fft / 2 + 1; }
  /// Frames produced for `num_samples` samples: 1 + floor(len / hop).
  std::size_t frames_for(std::size_t num_samples) const { return 1 + num_samples / hop; }
};

inline constexpr double kStdFloor = 1e-8;

struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 16000;

  double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// 16-bit PCM mono RIFF/WAVE only; anything else is an InputError.
AudioClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioClip& clip);

/// Complex spectrogram, bins x frames, row-major.
struct Spectrogram {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::vector<std::complex<double>> values;

  std::complex<double>& operator()(std::size_t b, std::size_t t) { return values[b * frames + t]; }
  std::complex<double> operator()(std::size_t b, std::size_t t) const { return values[b * frames + t]; }
};

/// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

/// Centered (reflect-padded) Hann-windowed STFT; frames = 1 + floor(len / hop).
Spectrogram stft(std::span<const float> samples, std::size_t n_fft, std::size_t hop);

/// Least-squares inverse of `stft`, trimmed to `length` samples.
std::vector<float> istft(const Spectrogram& spec, std::size_t n_fft, std::size_t hop, std::size_t length);

/// HTK-mel triangular filters with unit peaks, n_mels x n_bins. Adjacent
/// triangles overlap so every linear bin feeds at most two bands and the
/// weights on any bin sum to at most 1.
Matrix mel_filterbank(const AudioConfig& config);

/// Power mel spectrogram, n_mels x frames.
Matrix mel_spectrogram(const AudioClip& clip, const AudioConfig& config);

/// ln(mel + floor).
Matrix log_compress(const Matrix& mel, double floor = 1e-5);

/// Log-mel x0 of a clip: log_compress(mel_spectrogram(clip)).
Matrix log_mel(const AudioClip& clip, const AudioConfig& config);

struct StandardizationStats {
  std::vector<float> mean;
  std::vector<float> std;

  bool fitted() const { return !mean.empty() && mean.size() == std.size(); }
  friend bool operator==(const StandardizationStats&, const StandardizationStats&) = default;
};

/// Per-row mean and (population) std pooled over every column of every
/// matrix; std floored at kStdFloor.
StandardizationStats fit_standardization(std::span<const Matrix> corpus);

Matrix standardize(const Matrix& x0, const StandardizationStats& stats);
Matrix destandardize(const Matrix& x, const StandardizationStats& stats);

/// Orthonormal DCT-II of every column; returns coefficients 1..order
/// (c0 dropped) as an order x T matrix.
Matrix mel_cepstra(const Matrix& log_mel, std::size_t order);

/// Full orthonormal DCT-II / its inverse on columns (all F coefficients).
Matrix dct_columns(const Matrix& x);
Matrix idct_columns(const Matrix& c);

inline constexpr std::size_t kNnlsIters = 200;
inline constexpr double kInverseFloor = 1e-12;

/// Standardized log-mel -> waveform: destandardize, exp, pseudo-inverse
/// filterbank (clamped >= 0) refined by kNnlsIters non-negative least
/// squares updates, then `iters` Griffin-Lim rounds starting from zero
/// phase. If `convergence` is given it receives the spectral
/// convergence ||M - |STFT(y_k)||| / ||M|| after every round.
AudioClip griffin_lim(const Matrix& x, const StandardizationStats& stats, const AudioConfig& config,
                      std::size_t iters, std::vector<double>* convergence = nullptr);

}  // namespace disc
