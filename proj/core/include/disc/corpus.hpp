// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded synthetic speech-like corpus: harmonic source with a smooth
// pitch contour, vowel formant envelopes scaled per speaker, noise
// segments for unvoiced sounds, short silences at both ends.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "disc/audio.hpp"
#include "disc/rng.hpp"
#include "disc/types.hpp"

namespace disc {

struct SynthVoice {
  double base_f0 = 120.0;      // Hz
  double formant_scale = 1.0;  // vocal-tract length factor
};

/// Voices used for speakers 1..4.
SynthVoice synth_voice(SpeakerId speaker);

struct CorpusOptions {
  std::size_t num_speakers = 2;  // 1..4
  std::size_t train_per_speaker = 8;
  std::size_t test_per_speaker = 8;
  double min_seconds = 1.2;
  double max_seconds = 1.8;
  int sample_rate = 16000;
  std::uint64_t seed = 7;
};

struct SynthClip {
  SpeakerId speaker;
  std::size_t index = 0;  // 1-based within speaker and split
  std::string split;      // "train" or "test"
  AudioClip clip;
};

AudioClip synth_utterance(const SynthVoice& voice, double seconds, int sample_rate, Rng& rng);

/// Speaker-major, train clips before test clips. Each clip draws from its
/// own RNG stream, so changing the clip count leaves earlier clips intact.
std::vector<SynthClip> synth_corpus(const CorpusOptions& options);

/// Writes WAVs plus manifest.csv into `dir`; returns the manifest path.
std::filesystem::path write_corpus(const std::filesystem::path& dir, const CorpusOptions& options);

/// Band-limited-free sawtooth at `hz`, amplitude 0.5.
AudioClip sawtooth(double hz, double seconds, int sample_rate);

}  // namespace disc
