// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "disc/converter.hpp"
#include "support/testing.hpp"

using namespace disc;
using testing::tiny_model;

namespace {

struct Fixture {
  ModelConfig cfg = tiny_model(8, 3);
  ParameterStore params;
  SpeakerStatsTable f0_stats{{{5.0, 0.2, SpeakerId{1}}, {5.3, 0.1, SpeakerId{2}}, {4.7, 0.15, SpeakerId{3}}}};
  StandardizationStats mel;
  AudioConfig audio;
  TrainingTuple tuple;

  Fixture() {
    Rng rng(1);
    params = init_params(cfg, rng);
    mel.mean.assign(cfg.n_mels, -4.0f);
    mel.std.assign(cfg.n_mels, 2.0f);
    audio.n_mels = cfg.n_mels;
    audio.fmin = 60.0;
    audio.fmax = 4000.0;
    audio.griffin_lim_iters = 4;
    tuple = testing::random_tuple(cfg, 24, SpeakerId{1}, rng);
  }

  Converter make() const { return Converter(cfg, params, f0_stats, mel, audio); }
};

std::vector<float> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_SUITE("converter") {
  TEST_CASE("task parsing and request mapping") {
    CHECK(parse_task("P") == Task::kP);
    CHECK(parse_task("t") == Task::kT);
    CHECK(parse_task("PT") == Task::kPT);
    CHECK_THROWS_AS(parse_task("X"), UsageError);
    CHECK(task_name(Task::kPT) == "PT");
    const SpeakerId s{1}, t{2};
    auto r = request_for(Task::kP, s, t, 0.4);
    CHECK(r.beta == 0.4);
    CHECK(r.pitch_speaker == s);
    CHECK(r.timbre_speaker == s);
    r = request_for(Task::kT, s, t, 0.4);
    CHECK(r.beta == 0.0);
    CHECK(r.pitch_speaker == s);
    CHECK(r.timbre_speaker == t);
    r = request_for(Task::kPT, s, t, 0.4);
    CHECK(r.beta == 0.4);
    CHECK(r.pitch_speaker == t);
    CHECK(r.timbre_speaker == t);
  }

  TEST_CASE("identity conversion is the reconstruction") {
    const Fixture f;
    const Converter c = f.make();
    ConversionOptions opt;
    opt.vocode = false;
    const auto out = c.convert(f.tuple.x, f.tuple.f0, SpeakerId{1}, {0.0, SpeakerId{1}, SpeakerId{1}}, opt);
    CHECK(out.target_f0 == f.tuple.f0);
    CHECK(out.mu == c.reconstruct(f.tuple.x, f.tuple.f0, SpeakerId{1}, opt));
    CHECK(out.clip.samples.empty());
    // Same seed, same output.
    const auto again = c.convert(f.tuple.x, f.tuple.f0, SpeakerId{1}, {0.0, SpeakerId{1}, SpeakerId{1}}, opt);
    CHECK(again.mu == out.mu);
  }

  TEST_CASE("pitch shift adds beta on voiced frames only") {
    const Fixture f;
    const Converter c = f.make();
    ConversionOptions opt;
    opt.vocode = false;
    for (double beta : {std::log(1.5), -std::log(1.5)}) {
      const auto out = c.convert(f.tuple.x, f.tuple.f0, SpeakerId{1}, request_for(Task::kP, SpeakerId{1}, SpeakerId{1}, beta), opt);
      CHECK(out.target_f0.voiced_mask() == f.tuple.f0.voiced_mask());
      for (std::size_t i = 0; i < f.tuple.f0.size(); ++i) {
        if (f.tuple.f0.voiced(i)) CHECK(std::abs(out.target_f0[i] - f.tuple.f0[i] - beta) < 1e-5);
        else CHECK(out.target_f0[i] == 0.0f);
      }
    }
  }

  TEST_CASE("decoder is conditioned on the target pattern and timbre speaker") {
    const Fixture f;
    const Converter c = f.make();
    ConversionOptions opt;
    opt.vocode = false;
    const auto out = c.convert(f.tuple.x, f.tuple.f0, SpeakerId{1}, request_for(Task::kPT, SpeakerId{1}, SpeakerId{3}, 0.1), opt);
    const auto& cond = out.decoded.conditioning;
    const std::size_t nc = f.cfg.content_dim, T = f.tuple.f0.size();
    const auto& table = f.params.get("dec.speaker");
    for (std::size_t t = 0; t < T; ++t) {
      CHECK(cond.at(nc, t) == out.target_f0[t]);
      CHECK(cond.at(nc + 1, t) == (f.tuple.f0.voiced(t) ? 1.0f : 0.0f));
      for (std::size_t d = 0; d < f.cfg.speaker_dim; ++d) CHECK(cond.at(nc + 2 + d, t) == table[2 * f.cfg.speaker_dim + d]);
    }
    // Target statistics are matched, up to beta.
    const auto& src = f.f0_stats.at(SpeakerId{1});
    const auto& tgt = f.f0_stats.at(SpeakerId{3});
    for (std::size_t t = 0; t < T; ++t) {
      if (!f.tuple.f0.voiced(t)) continue;
      const double expect = tgt.std / src.std * (f.tuple.f0[t] - src.mean) + tgt.mean + 0.1;
      CHECK(std::abs(out.target_f0[t] - expect) < 1e-5);
    }
  }

  TEST_CASE("conversion leaves the parameters untouched and vocodes on request") {
    const Fixture f;
    std::vector<std::vector<float>> before;
    for (const auto& e : f.params.entries()) before.push_back(values(e.tensor));
    const Converter c = f.make();
    const auto out = c.convert(f.tuple.x, f.tuple.f0, SpeakerId{1}, request_for(Task::kT, SpeakerId{1}, SpeakerId{2}, 0.0));
    CHECK(out.clip.samples.size() == (f.tuple.x.cols - 1) * f.audio.hop);
    for (std::size_t i = 0; i < f.params.size(); ++i) CHECK(values(f.params.entries()[i].tensor) == before[i]);
    CHECK(values(c.networks().codebook) == values(f.params.get("enc.codebook")));
  }

  TEST_CASE("errors") {
    const Fixture f;
    const Converter c = f.make();
    CHECK_THROWS_AS(c.convert(f.tuple.x, f.tuple.f0, SpeakerId{1}, {0.0, SpeakerId{4}, SpeakerId{1}}), ConfigError);
    CHECK_THROWS_AS(c.convert(f.tuple.x, f.tuple.f0, SpeakerId{0}, {0.0, SpeakerId{1}, SpeakerId{1}}), ConfigError);
    LogF0Pattern short_f0 = f.tuple.f0;
    short_f0.values.pop_back();
    CHECK_THROWS_AS(c.convert(f.tuple.x, short_f0, SpeakerId{1}, {0.0, SpeakerId{1}, SpeakerId{1}}), DimensionError);
    CHECK_THROWS_AS(f.f0_stats.at(SpeakerId{9}), ConfigError);
    SpeakerStatsTable two{{{5.0, 0.2, SpeakerId{1}}, {5.3, 0.1, SpeakerId{2}}}};
    CHECK_THROWS_AS(Converter(f.cfg, f.params, two, f.mel, f.audio), ConfigError);
  }
}
