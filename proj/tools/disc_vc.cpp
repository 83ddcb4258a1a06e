// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// disc-vc: synth | preprocess | train | convert | evaluate | inspect

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "disc/config.hpp"
#include "disc/corpus.hpp"
#include "disc/error.hpp"
#include "disc/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

int exit_code(disc::ErrorKind kind) {
  switch (kind) {
    case disc::ErrorKind::kUsage:
    case disc::ErrorKind::kConfig: return kExitUsage;
    case disc::ErrorKind::kNumeric: return kExitNumeric;
    default: return kExitData;
  }
}

/// Accepts plain numbers and "log<x>", "-log<x>", "ln<x>", "-ln<x>".
double parse_beta(const std::string& text) {
  std::string t = text;
  double sign = 1.0;
  if (!t.empty() && t[0] == '-') sign = -1.0, t.erase(0, 1);
  for (const char* prefix : {"log", "ln"}) {
    const std::string p = prefix;
    if (t.rfind(p, 0) == 0) {
      std::string arg = t.substr(p.size());
      if (arg.size() >= 2 && arg.front() == '(' && arg.back() == ')') arg = arg.substr(1, arg.size() - 2);
      try {
        std::size_t used = 0;
        const double v = std::stod(arg, &used);
        if (used == arg.size() && v > 0.0) return sign * std::log(v);
      } catch (const std::exception&) {
      }
      throw disc::UsageError("cannot parse --beta '" + text + "'");
    }
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw disc::UsageError("cannot parse --beta '" + text + "'");
}

struct Common {
  std::string preset = "reference";
  std::string config_file;
  std::vector<std::string> overrides;

  disc::RunConfig resolve() const {
    disc::RunConfig c = disc::preset(preset);
    if (!config_file.empty()) c = disc::load_run_config(config_file, c);
    for (const auto& o : overrides) disc::apply_override(c, o);
    c.validate();
    return c;
  }
};

void print_effective(const disc::RunConfig& c) {
  std::cerr << "# effective config\n" << disc::format_run_config(c) << "# end config\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DisC voice conversion: disentangled content, pitch and timbre"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--preset", common.preset, "Base configuration: reference or toy")->capture_default_str();
  app.add_option("--config", common.config_file, "Sectioned key=value config file");
  app.add_option("--set", common.overrides, "Override one key, e.g. train.steps=200")->take_all();

  // synth
  auto* synth = app.add_subcommand("synth", "Write the bundled synthetic corpus");
  std::string synth_out;
  disc::CorpusOptions corpus;
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--speakers", corpus.num_speakers, "Speakers (1..4)")->capture_default_str();
  synth->add_option("--train", corpus.train_per_speaker, "Train clips per speaker")->capture_default_str();
  synth->add_option("--test", corpus.test_per_speaker, "Test clips per speaker")->capture_default_str();
  synth->add_option("--seed", corpus.seed, "Corpus seed")->capture_default_str();

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "Extract log-mel and F0 features into the cache");
  std::string manifest_path, cache_dir;
  bool keep_going = false;
  pre->add_option("--manifest", manifest_path, "CSV: speaker,index,path,split")->required();
  pre->add_option("--cache", cache_dir, "Cache directory (default $DISC_CACHE_DIR or ./disc_cache)");
  pre->add_flag("--continue-on-error", keep_going, "Skip unreadable WAVs instead of aborting");

  // train
  auto* tr = app.add_subcommand("train", "Train a model on the cached train split");
  std::string train_out, resume;
  bool no_aux = false;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  tr->add_option("--cache", cache_dir, "Cache directory");
  tr->add_option("--out", train_out, "Run directory for logs and checkpoints")->required();
  tr->add_option("--resume", resume, "Checkpoint to resume from");
  tr->add_flag("--no-aux", no_aux, "Reconstruction-only ablation (auxiliary weights 0)");
  tr->add_option("--steps", steps, "Override train.steps");
  tr->add_option("--seed", seed, "Override train.seed");

  // convert
  auto* cv = app.add_subcommand("convert", "Convert one utterance");
  disc::ConvertJob job;
  std::string input_wav, cache_id, beta_text, task_text, out_wav, out_features;
  std::optional<int> source_speaker, pitch_speaker, timbre_speaker, target;
  bool argmax = false;
  cv->add_option("--checkpoint", job.checkpoint, "Trained checkpoint")->required();
  auto* in_opt = cv->add_option("--input", input_wav, "Source WAV (16-bit PCM mono)");
  cv->add_option("--cache-id", cache_id, "Cached utterance id instead of a WAV")->excludes(in_opt);
  cv->add_option("--cache", cache_dir, "Cache directory for --cache-id");
  cv->add_option("--source-speaker", source_speaker, "Speaker index of a WAV input");
  cv->add_option("--task", task_text, "P, T or PT");
  cv->add_option("--beta", beta_text, "Log-F0 shift, e.g. 0.405 or log1.5");
  cv->add_option("--pitch-speaker", pitch_speaker, "Speaker whose F0 statistics to adopt");
  cv->add_option("--timbre-speaker", timbre_speaker, "Speaker whose timbre to adopt");
  cv->add_option("--target", target, "Target speaker for tasks T and PT");
  cv->add_option("--out", out_wav, "Output WAV")->required();
  cv->add_option("--features", out_features, "Feature file (default <out>.features.bin)");
  cv->add_flag("--argmax", argmax, "Deterministic one-hot content instead of Gumbel sampling");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score converted clips");
  std::string pairs_path, report_path;
  ev->add_option("--pairs", pairs_path, "CSV: pair_id,task,reference,converted,features")->required();
  ev->add_option("--report", report_path, "Write report to file (.json for JSON, else CSV)");

  // inspect
  auto* ins = app.add_subcommand("inspect", "Describe a checkpoint, cache entry or stats file");
  std::string inspect_path;
  ins->add_option("file", inspect_path, "Container file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      const auto manifest = disc::write_corpus(synth_out, corpus);
      std::cout << "wrote " << manifest.string() << '\n';
      return kExitOk;
    }
    if (*ins) {
      disc::inspect_container(std::cout, disc::load_container(inspect_path));
      return kExitOk;
    }

    disc::RunConfig config = common.resolve();
    if (*tr) {
      if (no_aux) config.train.aux = false;
      if (steps) config.train.steps = *steps;
      if (seed) config.train.seed = *seed;
    }
    if (*cv && argmax) config.convert.sampling = disc::ContentSampling::kArgmax;
    config.validate();
    print_effective(config);

    if (*pre) {
      const auto dir = disc::resolve_cache_dir(cache_dir);
      disc::PreprocessOptions opts{keep_going, &std::cerr};
      const auto report = disc::cmd_preprocess(disc::load_manifest(manifest_path), config, dir, opts);
      std::cout << "cached " << report.written << " utterances in " << dir.string();
      if (!report.skipped.empty()) std::cout << " (skipped " << report.skipped.size() << ")";
      std::cout << '\n';
    } else if (*tr) {
      const auto cache = disc::load_cache(disc::resolve_cache_dir(cache_dir));
      disc::TrainRunOptions opts;
      opts.out_dir = train_out;
      if (!resume.empty()) opts.resume = resume;
      opts.progress = &std::cout;
      disc::cmd_train(cache, config, opts);
      std::cout << "final checkpoint " << (std::filesystem::path(train_out) / "final.bin").string() << '\n';
    } else if (*cv) {
      if (!input_wav.empty()) job.input_wav = input_wav;
      if (!cache_id.empty()) job.cache_id = cache_id;
      job.cache_dir = cache_dir;
      job.source_speaker = source_speaker;
      if (!task_text.empty()) job.flags.task = disc::parse_task(task_text);
      if (!beta_text.empty()) job.flags.beta = parse_beta(beta_text);
      job.flags.pitch_speaker = pitch_speaker;
      job.flags.timbre_speaker = timbre_speaker;
      job.flags.target = target;
      job.out_wav = out_wav;
      if (!out_features.empty()) job.out_features = out_features;
      const auto outcome = disc::cmd_convert(job, config);
      std::cout << "source " << outcome.source.index << "  beta " << outcome.request.beta << "  pitch "
                << outcome.request.pitch_speaker.index << "  timbre " << outcome.request.timbre_speaker.index
                << "\nwrote " << out_wav << '\n';
    } else if (*ev) {
      const auto report = disc::cmd_evaluate(disc::load_pairs(pairs_path), config);
      if (report_path.empty()) {
        disc::write_report_csv(std::cout, report);
      } else {
        std::ofstream os(report_path, std::ios::binary);
        if (!os) throw disc::InputError("cannot write " + report_path);
        if (std::filesystem::path(report_path).extension() == ".json") {
          os << disc::report_json(report);
        } else {
          disc::write_report_csv(os, report);
        }
        std::cout << "wrote " << report_path << '\n';
      }
    }
    return kExitOk;
  } catch (const disc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
