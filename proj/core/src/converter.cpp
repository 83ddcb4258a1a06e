// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/converter.hpp"

#include "disc/error.hpp"
#include "disc/rng.hpp"

namespace disc {

Task parse_task(std::string_view text) {
  if (text == "P" || text == "p") return Task::kP;
  if (text == "T" || text == "t") return Task::kT;
  if (text == "PT" || text == "pt") return Task::kPT;
  throw UsageError("unknown task '" + std::string(text) + "' (expected P, T or PT)");
}

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kP: return "P";
    case Task::kT: return "T";
    case Task::kPT: return "PT";
  }
  return "?";
}

ConversionRequest request_for(Task task, SpeakerId source, SpeakerId target, double beta) {
  switch (task) {
    case Task::kP: return {beta, source, source};
    case Task::kT: return {0.0, source, target};
    case Task::kPT: return {beta, target, target};
  }
  throw UsageError("unknown task");
}

SpeakerStatsTable::SpeakerStatsTable(std::vector<SpeakerF0Stats> stats) : stats_(std::move(stats)) {}

const SpeakerF0Stats& SpeakerStatsTable::at(SpeakerId speaker) const {
  if (speaker.index < 1 || static_cast<std::size_t>(speaker.index) > stats_.size()) {
    throw ConfigError("unknown speaker " + std::to_string(speaker.index) + " (have " +
                      std::to_string(stats_.size()) + ")");
  }
  return stats_[speaker.zero_based()];
}

namespace {

ParameterStore frozen(const ParameterStore& params) {
  ParameterStore out;
  for (const auto& e : params.entries()) {
    out.add(e.name, e.group, e.tensor.clone(false));
  }
  return out;
}

void check_model_speaker(SpeakerId s, std::size_t num_speakers) {
  if (s.index < 1 || static_cast<std::size_t>(s.index) > num_speakers) {
    throw ConfigError("speaker " + std::to_string(s.index) + " is not in the model (1.." +
                      std::to_string(num_speakers) + ")");
  }
}

}  // namespace

Converter::Converter(const ModelConfig& model, const ParameterStore& params, SpeakerStatsTable f0_stats,
                     StandardizationStats mel_stats, AudioConfig audio)
    : model_(model),
      params_(frozen(params)),
      nets_(bind(params_, model_)),
      f0_stats_(std::move(f0_stats)),
      mel_stats_(std::move(mel_stats)),
      audio_(audio) {
  if (f0_stats_.size() != model_.num_speakers) {
    throw ConfigError("F0 statistics cover " + std::to_string(f0_stats_.size()) + " speakers, model has " +
                      std::to_string(model_.num_speakers));
  }
}

ConversionResult Converter::convert(const Matrix& x, const LogF0Pattern& f0, SpeakerId source,
                                    const ConversionRequest& request, const ConversionOptions& options) const {
  for (SpeakerId s : {source, request.pitch_speaker, request.timbre_speaker}) {
    check_model_speaker(s, model_.num_speakers);
  }
  if (x.rows != model_.n_mels) {
    throw DimensionError("convert: expected " + std::to_string(model_.n_mels) + " mel bands, got " +
                         std::to_string(x.rows));
  }
  if (x.cols != f0.size()) throw DimensionError("convert: log-mel and F0 lengths differ");

  ConversionResult out;
  out.target_f0 = target_f0(f0, f0_stats_.at(source), f0_stats_.at(request.pitch_speaker), request.beta);

  Rng rng(options.seed);
  const auto code = enc_c(nets_, x.to_tensor(), options.tau, rng, options.sampling);
  out.decoded = dec(nets_, code.embeddings, out.target_f0, request.timbre_speaker);
  out.mu = Matrix::from_tensor(out.decoded.mu);
  out.sigma = Matrix::from_tensor(out.decoded.sigma);
  if (options.vocode) {
    out.clip = griffin_lim(out.mu, mel_stats_, audio_, audio_.griffin_lim_iters);
  }
  return out;
}

Matrix Converter::reconstruct(const Matrix& x, const LogF0Pattern& f0, SpeakerId source,
                              const ConversionOptions& options) const {
  ConversionOptions o = options;
  o.vocode = false;
  return convert(x, f0, source, {0.0, source, source}, o).mu;
}

}  // namespace disc
