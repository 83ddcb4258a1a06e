// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "disc/error.hpp"

namespace disc {

namespace {

struct Vowel {
  std::array<double, 3> formants;
};

// a, e, i, o, u
constexpr std::array<Vowel, 5> kVowels = {{
    {{730.0, 1090.0, 2440.0}},
    {{530.0, 1840.0, 2480.0}},
    {{270.0, 2290.0, 3010.0}},
    {{570.0, 840.0, 2410.0}},
    {{300.0, 870.0, 2240.0}},
}};
constexpr std::array<double, 3> kBandwidths = {90.0, 110.0, 140.0};

constexpr double kEdgeSilence = 0.12;   // seconds, both ends
constexpr double kTransition = 0.025;  // formant glide between segments
constexpr float kPeak = 0.5f;

struct Segment {
  double start = 0.0, end = 0.0;
  bool voiced = true;
  std::size_t vowel = 0;
};

// Cascade of two-pole resonators, unit gain at DC.
double envelope(double hz, const std::array<double, 3>& formants) {
  double a = 1.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double f2 = formants[i] * formants[i];
    a *= f2 / std::hypot(f2 - hz * hz, hz * kBandwidths[i]);
  }
  return a;
}

}  // namespace

SynthVoice synth_voice(SpeakerId speaker) {
  static constexpr std::array<SynthVoice, 4> kVoices = {{{110.0, 1.0}, {200.0, 1.15}, {150.0, 1.07}, {260.0, 1.22}}};
  if (speaker.index < 1 || speaker.index > 4) throw ConfigError("synthetic corpus supports speakers 1..4");
  return kVoices[speaker.zero_based()];
}

AudioClip synth_utterance(const SynthVoice& voice, double seconds, int sample_rate, Rng& rng) {
  if (!(seconds > 2 * kEdgeSilence)) throw ConfigError("synthetic clip too short");
  const double sr = sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(seconds * sr));

  // Segments between the edge silences; roughly one in four is unvoiced.
  std::vector<Segment> segs;
  for (double t = kEdgeSilence; t < seconds - kEdgeSilence;) {
    Segment s;
    s.start = t;
    s.voiced = segs.empty() || rng.uniform() >= 0.25;
    s.vowel = rng.below(kVowels.size());
    s.end = std::min(seconds - kEdgeSilence, t + (s.voiced ? rng.uniform(0.12, 0.26) : rng.uniform(0.06, 0.12)));
    segs.push_back(s);
    t = s.end;
  }

  // Contour: declination plus a slow vibrato-like swing.
  const double swing = rng.uniform(0.04, 0.10);
  const double rate = rng.uniform(0.5, 1.5);
  const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double offset = rng.uniform(-0.05, 0.05);

  AudioClip out;
  out.sample_rate = sample_rate;
  out.samples.assign(n, 0.0f);
  double phase = 0.0;
  std::size_t seg = 0;
  double noise_state = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sr;
    while (seg + 1 < segs.size() && t >= segs[seg].end) ++seg;
    const double log_f0 = std::log(voice.base_f0) + offset - 0.08 * t / seconds +
                          swing * std::sin(2.0 * std::numbers::pi * rate * t + phase0);
    const double f0 = std::exp(log_f0);
    phase += 2.0 * std::numbers::pi * f0 / sr;
    if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
    const double white = rng.uniform(-1.0, 1.0);
    if (t < kEdgeSilence || t >= seconds - kEdgeSilence || segs.empty()) continue;

    const Segment& s = segs[seg];
    // Fade in/out over the transition at each segment edge.
    const double ramp = std::clamp(std::min(t - s.start, s.end - t) / kTransition, 0.0, 1.0);
    if (!s.voiced) {
      noise_state = white - 0.6 * noise_state;  // tilt toward high frequencies
      out.samples[i] = static_cast<float>(0.3 * ramp * noise_state);
      continue;
    }
    std::array<double, 3> formants = kVowels[s.vowel].formants;
    if (seg > 0 && segs[seg - 1].voiced && t - s.start < kTransition) {
      const double w = (t - s.start) / kTransition;
      const auto& prev = kVowels[segs[seg - 1].vowel].formants;
      for (std::size_t k = 0; k < 3; ++k) formants[k] = (1.0 - w) * prev[k] + w * formants[k];
    }
    for (double& f : formants) f *= voice.formant_scale;
    double acc = 0.0;
    const double nyquist = 0.5 * sr - 200.0;
    for (std::size_t h = 1; h * f0 < nyquist; ++h) {
      acc += envelope(h * f0, formants) * std::sin(static_cast<double>(h) * phase) / static_cast<double>(h);
    }
    // Voiced-to-voiced boundaries glide instead of fading.
    const bool open_start = seg == 0 || !segs[seg - 1].voiced;
    const bool open_end = seg + 1 == segs.size() || !segs[seg + 1].voiced;
    const double fade_in = open_start ? std::clamp((t - s.start) / kTransition, 0.0, 1.0) : 1.0;
    const double fade_out = open_end ? std::clamp((s.end - t) / kTransition, 0.0, 1.0) : 1.0;
    const double gain = std::min(fade_in, fade_out);
    out.samples[i] = static_cast<float>(gain * acc);
  }
  float peak = 0.0f;
  for (float v : out.samples) peak = std::max(peak, std::abs(v));
  if (peak > 0.0f) {
    for (float& v : out.samples) v *= kPeak / peak;
  }
  return out;
}

std::vector<SynthClip> synth_corpus(const CorpusOptions& options) {
  if (options.num_speakers < 1 || options.num_speakers > 4) throw ConfigError("synthetic corpus supports 1..4 speakers");
  if (!(options.min_seconds <= options.max_seconds)) throw ConfigError("min_seconds must not exceed max_seconds");
  const Rng root(options.seed);
  std::vector<SynthClip> out;
  for (std::size_t s = 1; s <= options.num_speakers; ++s) {
    const SpeakerId speaker{static_cast<int>(s)};
    const SynthVoice voice = synth_voice(speaker);
    for (const char* split : {"train", "test"}) {
      const bool train = split[1] == 'r';
      const std::size_t count = train ? options.train_per_speaker : options.test_per_speaker;
      for (std::size_t k = 1; k <= count; ++k) {
        Rng rng = root.split(s * 1000003ULL + (train ? 0 : 500000ULL) + k);
        const double seconds = rng.uniform(options.min_seconds, options.max_seconds);
        out.push_back({speaker, k, split, synth_utterance(voice, seconds, options.sample_rate, rng)});
      }
    }
  }
  return out;
}

std::filesystem::path write_corpus(const std::filesystem::path& dir, const CorpusOptions& options) {
  std::filesystem::create_directories(dir / "wav");
  const auto clips = synth_corpus(options);
  const auto manifest = dir / "manifest.csv";
  std::ofstream os(manifest);
  if (!os) throw InputError("cannot write " + manifest.string());
  os << "speaker,index,path,split\n";
  for (const auto& c : clips) {
    const std::string name = "spk" + std::to_string(c.speaker.index);
    const std::string rel = "wav/" + name + "_" + c.split + "_" + std::to_string(c.index) + ".wav";
    write_wav(dir / rel, c.clip);
    os << name << ',' << c.speaker.index << ',' << rel << ',' << c.split << '\n';
  }
  return manifest;
}

AudioClip sawtooth(double hz, double seconds, int sample_rate) {
  AudioClip out;
  out.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(seconds * sample_rate));
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = hz * static_cast<double>(i) / sample_rate;
    out.samples[i] = static_cast<float>(0.5 * (2.0 * (x - std::floor(x)) - 1.0));
  }
  return out;
}

}  // namespace disc
