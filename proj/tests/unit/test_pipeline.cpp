// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "doctest.h"
#include "disc/corpus.hpp"
#include "disc/error.hpp"
#include "disc/pipeline.hpp"
#include "support/testing.hpp"

using namespace disc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

CorpusOptions small_corpus() {
  CorpusOptions o;
  o.train_per_speaker = 2;
  o.test_per_speaker = 1;
  o.min_seconds = 0.8;
  o.max_seconds = 1.0;
  return o;
}

RunConfig small_config() {
  RunConfig c = toy_preset();
  c.train.steps = 3;
  c.train.batch_size = 2;
  c.train.crop_frames = 32;
  c.audio.griffin_lim_iters = 4;
  return c;
}

// One corpus and cache shared by the cases below.
struct Shared {
  fs::path root = testing::scratch_dir("pipeline");
  fs::path manifest;
  fs::path cache_dir;
  RunConfig config = small_config();

  Shared() {
    manifest = write_corpus(root / "corpus", small_corpus());
    cache_dir = root / "cache";
    cmd_preprocess(load_manifest(manifest), config, cache_dir);
  }
};

const Shared& shared() {
  static const Shared s;
  return s;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("manifest validation") {
    const fs::path dir = testing::scratch_dir("manifest");
    fs::create_directories(dir / "wav");
    write_wav(dir / "wav/a.wav", sawtooth(200.0, 0.5, 16000));
    const auto load = [&](const std::string& body) {
      write_text(dir / "m.csv", "speaker,index,path,split\n" + body);
      return load_manifest(dir / "m.csv");
    };
    const DatasetManifest ok = load("x,1,wav/a.wav,train\ny,2,wav/a.wav,test\n");
    CHECK(ok.num_speakers == 2);
    CHECK(ok.entries[0].path.is_absolute());
    CHECK_THROWS_AS(load(""), DatasetError);
    CHECK_THROWS_AS(load("x,1,wav/a.wav,dev\n"), DatasetError);
    CHECK_THROWS_AS(load("x,1,wav/missing.wav,train\n"), DatasetError);
    CHECK_THROWS_AS(load("x,1,wav/a.wav,train\ny,3,wav/a.wav,train\n"), DatasetError);
    CHECK_THROWS_AS(load("x,1,wav/a.wav,train\ny,1,wav/a.wav,train\n"), DatasetError);
    CHECK_THROWS_AS(load("x,0,wav/a.wav,train\n"), DatasetError);
    write_text(dir / "bad.csv", "who,index,path,split\nx,1,wav/a.wav,train\n");
    CHECK_THROWS(load_manifest(dir / "bad.csv"));
  }

  TEST_CASE("preprocessing is deterministic and fits statistics on train only") {
    const Shared& s = shared();
    const fs::path again = s.root / "cache2";
    const PreprocessReport rep = cmd_preprocess(load_manifest(s.manifest), s.config, again);
    CHECK(rep.written == 6);
    CHECK(rep.skipped.empty());
    for (const auto& entry : fs::directory_iterator(s.cache_dir)) {
      CHECK_MESSAGE(slurp(entry.path()) == slurp(again / entry.path().filename()), entry.path().string());
    }

    const FeatureCache cache = load_cache(s.cache_dir);
    REQUIRE(cache.utterances.size() == 6);
    CHECK(cache.num_speakers == 2);
    std::vector<Matrix> train;
    std::vector<std::vector<LogF0Pattern>> f0(2);
    for (const auto& u : cache.utterances) {
      CHECK(u.f0.size() == u.log_mel.cols);
      if (u.split != "train") continue;
      train.push_back(u.log_mel);
      f0[u.speaker.zero_based()].push_back(u.f0);
    }
    const StandardizationStats expect = fit_standardization(train);
    CHECK(expect.mean == cache.stats.mel.mean);
    CHECK(expect.std == cache.stats.mel.std);
    // Cached statistics are stored in single precision.
    for (int k = 1; k <= 2; ++k) {
      const SpeakerF0Stats e = speaker_stats(f0[k - 1], SpeakerId{k});
      CHECK(cache.stats.f0.at(SpeakerId{k}).mean == doctest::Approx(e.mean).epsilon(1e-6));
      CHECK(cache.stats.f0.at(SpeakerId{k}).std == doctest::Approx(e.std).epsilon(1e-6));
    }
    CHECK(make_dataset(cache, "train").utterances.size() == 4);
    CHECK(make_dataset(cache, "test").utterances.size() == 2);
    CHECK_THROWS_AS(cache.find("nope"), DatasetError);
  }

  TEST_CASE("preprocessing skips unreadable files only on request") {
    const fs::path dir = testing::scratch_dir("skip");
    fs::create_directories(dir / "wav");
    write_wav(dir / "wav/a.wav", sawtooth(200.0, 0.6, 16000));
    write_wav(dir / "wav/b.wav", sawtooth(150.0, 0.6, 16000));
    write_text(dir / "wav/c.wav", "junk");
    write_text(dir / "m.csv", "speaker,index,path,split\nx,1,wav/a.wav,train\nx,1,wav/c.wav,train\ny,2,wav/b.wav,train\n");
    const DatasetManifest m = load_manifest(dir / "m.csv");
    CHECK_THROWS_AS(cmd_preprocess(m, small_config(), dir / "cache"), InputError);
    PreprocessOptions opts;
    opts.continue_on_error = true;
    const PreprocessReport rep = cmd_preprocess(m, small_config(), dir / "cache", opts);
    CHECK(rep.written == 2);
    CHECK(rep.skipped.size() == 1);
  }

  TEST_CASE("request resolution") {
    const SpeakerId src{1};
    ConvertFlags f;
    ConversionRequest r = resolve_request(f, src);
    CHECK(r.beta == 0.0);
    CHECK(r.pitch_speaker == src);
    CHECK(r.timbre_speaker == src);

    f.task = Task::kP;
    f.beta = 0.4;
    r = resolve_request(f, src);
    CHECK(r.beta == 0.4);
    CHECK(r.pitch_speaker == src);
    f.target = 2;
    CHECK_THROWS_AS(resolve_request(f, src), UsageError);

    f = {};
    f.task = Task::kT;
    CHECK_THROWS_AS(resolve_request(f, src), UsageError);
    f.target = 2;
    r = resolve_request(f, src);
    CHECK(r.beta == 0.0);
    CHECK(r.pitch_speaker == src);
    CHECK(r.timbre_speaker == SpeakerId{2});
    f.beta = 0.1;
    CHECK_THROWS_AS(resolve_request(f, src), UsageError);
    f.beta.reset();
    f.timbre_speaker = 3;
    CHECK_THROWS_AS(resolve_request(f, src), UsageError);

    f = {};
    f.task = Task::kPT;
    f.pitch_speaker = 2;
    f.beta = -0.2;
    r = resolve_request(f, src);
    CHECK(r.pitch_speaker == SpeakerId{2});
    CHECK(r.timbre_speaker == SpeakerId{2});
    CHECK(r.beta == -0.2);
    f.timbre_speaker = 1;
    CHECK_THROWS_AS(resolve_request(f, src), UsageError);

    f = {};
    f.target = 2;
    CHECK_THROWS_AS(resolve_request(f, src), UsageError);
    f = {};
    f.pitch_speaker = 2;
    f.beta = 0.3;
    r = resolve_request(f, src);
    CHECK(r.pitch_speaker == SpeakerId{2});
    CHECK(r.timbre_speaker == src);
  }

  TEST_CASE("train, convert and evaluate") {
    const Shared& s = shared();
    const FeatureCache cache = load_cache(s.cache_dir);
    RunConfig cfg = s.config;
    cfg.train.checkpoint_every = 2;

    TrainRunOptions opts;
    opts.out_dir = s.root / "run";
    const auto history = cmd_train(cache, cfg, opts);
    CHECK(history.size() == 3);
    CHECK(fs::exists(opts.out_dir / "ckpt_2.bin"));
    CHECK(fs::exists(opts.out_dir / "final.bin"));

    const LoadedModel m = load_run_checkpoint(opts.out_dir / "final.bin");
    CHECK(m.config.model == cfg.model);
    CHECK(m.config.train == cfg.train);
    CHECK(m.state.step == 3);
    CHECK(m.stats.mel.mean == cache.stats.mel.mean);
    CHECK(m.stats.f0.size() == 2);
    const Container re = make_run_checkpoint(m.state, m.config, m.stats);
    CHECK(encode_container(re) == slurp(opts.out_dir / "final.bin"));

    // Mismatched speaker count is a config problem.
    RunConfig wrong = cfg;
    wrong.model.num_speakers = 3;
    CHECK_THROWS_AS(cmd_train(cache, wrong, opts), ConfigError);

    // Resume from step 2 reproduces the straight run.
    TrainRunOptions resumed;
    resumed.out_dir = s.root / "resumed";
    resumed.resume = opts.out_dir / "ckpt_2.bin";
    cmd_train(cache, cfg, resumed);
    CHECK(slurp(resumed.out_dir / "final.bin") == slurp(opts.out_dir / "final.bin"));

    const CachedUtterance& src = cache.utterances.front();
    ConvertJob job;
    job.checkpoint = opts.out_dir / "final.bin";
    job.cache_id = src.id;
    job.cache_dir = s.cache_dir;
    job.flags.task = Task::kT;
    job.flags.target = src.speaker.index == 1 ? 2 : 1;
    job.out_wav = s.root / "out" / "t.wav";
    const ConvertOutcome out = cmd_convert(job, cfg);
    CHECK(out.source == src.speaker);
    CHECK(out.request.timbre_speaker.index == *job.flags.target);
    CHECK(out.result.mu.cols == src.log_mel.cols);
    REQUIRE(fs::exists(job.out_wav));
    const fs::path features = s.root / "out" / "t.wav.features.bin";
    REQUIRE(fs::exists(features));
    const Container fc = load_container(features);
    CHECK(fc.get("target_f0").numel() == src.f0.size());
    CHECK(cmd_convert(job, cfg).result.mu.values == out.result.mu.values);

    ConvertJob bad = job;
    bad.source_speaker = src.speaker.index == 1 ? 2 : 1;
    CHECK_THROWS_AS(cmd_convert(bad, cfg), UsageError);

    // Self-pairs score zero; the report is stable.
    const fs::path ref = s.root / "corpus" / "wav" / "spk1_train_1.wav";
    REQUIRE(fs::exists(ref));
    write_text(s.root / "pairs.csv",
               "pair_id,task,reference,converted,features\n"
               "self,I," + ref.string() + "," + ref.string() + ",\n"
               "conv,T," + ref.string() + ",out/t.wav,out/t.wav.features.bin\n");
    const auto pairs = load_pairs(s.root / "pairs.csv");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[1].converted == s.root / "out/t.wav");
    const EvaluationReport report = cmd_evaluate(pairs, cfg);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].metrics.delta_f0 == 0.0);
    CHECK(report.rows[0].metrics.mcd == 0.0);
    CHECK(std::isfinite(report.rows[1].metrics.mcd));
    REQUIRE(report.by_task.size() == 2);
    CHECK(report.by_task[0].first == "I");
    CHECK(report.by_task[1].first == "T");
    CHECK(report.by_task[1].second.second.mean == report.rows[1].metrics.mcd);
    CHECK(report.by_task[1].second.second.count == 1);

    std::ostringstream a, b;
    write_report_csv(a, report);
    write_report_csv(b, cmd_evaluate(pairs, cfg));
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("pair_id,task,delta_f0,mcd\nself,I,0.000000,0.000000\n", 0) == 0);
    CHECK(report_json(report) == report_json(cmd_evaluate(pairs, cfg)));
  }
}
