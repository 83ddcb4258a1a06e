// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0
//
// File-level workflows behind the command-line tool: manifest loading,
// feature cache, training run, conversion and batch evaluation.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "disc/config.hpp"
#include "disc/container.hpp"
#include "disc/converter.hpp"
#include "disc/evaluator.hpp"
#include "disc/trainer.hpp"

namespace disc {

struct ManifestEntry {
  std::string speaker_name;
  SpeakerId speaker;
  std::filesystem::path path;  // absolute after loading
  std::string split;           // "train" or "test"
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::size_t num_speakers = 0;
};

/// CSV with header speaker,index,path,split. Paths are relative to the
/// manifest. Throws DatasetError on sparse speaker indices, unknown
/// splits, missing files, or a speaker whose name and index disagree.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Environment variable that overrides the default cache directory.
inline constexpr const char* kCacheDirEnv = "DISC_CACHE_DIR";
/// `requested` if non-empty, else $DISC_CACHE_DIR, else "disc_cache".
std::filesystem::path resolve_cache_dir(const std::filesystem::path& requested);

struct CachedUtterance {
  std::string id;  // WAV file stem
  SpeakerId speaker;
  std::string split;
  Matrix log_mel;  // raw (not standardized)
  LogF0Pattern f0;
};

/// Mel standardization plus per-speaker log-F0 moments, all fitted on the
/// train split.
struct FeatureStats {
  StandardizationStats mel;
  SpeakerStatsTable f0;
};

Container encode_stats(const FeatureStats& stats);
FeatureStats decode_stats(const Container& c);

struct PreprocessOptions {
  bool continue_on_error = false;
  std::ostream* log = nullptr;
};

struct PreprocessReport {
  std::size_t written = 0;
  std::vector<std::string> skipped;  // "<path>: <reason>"
};

/// Writes <cache>/<id>.bin per utterance, <cache>/stats.bin and
/// <cache>/index.csv.
PreprocessReport cmd_preprocess(const DatasetManifest& manifest, const RunConfig& config,
                                const std::filesystem::path& cache_dir, const PreprocessOptions& options = {});

struct FeatureCache {
  std::vector<CachedUtterance> utterances;
  FeatureStats stats;
  std::size_t num_speakers = 0;

  const CachedUtterance& find(const std::string& id) const;
};

FeatureCache load_cache(const std::filesystem::path& cache_dir);

/// Standardized training set from one split of the cache.
Dataset make_dataset(const FeatureCache& cache, const std::string& split = "train");

struct TrainRunOptions {
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> resume;
  std::ostream* progress = nullptr;  // human-readable lines every `progress_every` steps
  std::size_t progress_every = 50;
};

/// Trains on the train split; writes train_log.csv, periodic checkpoints
/// and final.bin into out_dir. Returns the per-step losses of this run.
std::vector<LossBreakdown> cmd_train(const FeatureCache& cache, const RunConfig& config,
                                     const TrainRunOptions& options);

/// Trained model as stored in a checkpoint.
struct LoadedModel {
  RunConfig config;
  TrainState state;
  FeatureStats stats;
};

/// Checkpoints carry the run config, the train state and the feature
/// statistics ("stats/..." tensors).
Container make_run_checkpoint(const TrainState& state, const RunConfig& config, const FeatureStats& stats);
LoadedModel load_run_checkpoint(const std::filesystem::path& path);

/// Raw command-line conversion request before task resolution.
struct ConvertFlags {
  std::optional<Task> task;
  std::optional<double> beta;
  std::optional<int> pitch_speaker;
  std::optional<int> timbre_speaker;
  std::optional<int> target;
};

/// Maps flags to (beta, pitch speaker, timbre speaker). Contradictory
/// flags throw UsageError.
ConversionRequest resolve_request(const ConvertFlags& flags, SpeakerId source);

struct ConvertJob {
  std::filesystem::path checkpoint;
  std::optional<std::filesystem::path> input_wav;
  std::optional<std::string> cache_id;  // needs cache_dir
  std::filesystem::path cache_dir;
  std::optional<int> source_speaker;  // required for WAV input
  ConvertFlags flags;
  std::filesystem::path out_wav;
  std::optional<std::filesystem::path> out_features;  // default <out_wav>.features.bin
};

struct ConvertOutcome {
  ConversionRequest request;
  SpeakerId source;
  ConversionResult result;
};

ConvertOutcome cmd_convert(const ConvertJob& job, const RunConfig& config);

/// Feature file written by cmd_convert: "mu", "target_f0".
Container encode_conversion(const ConversionResult& result);

struct PairSpec {
  std::string id;
  std::string task;
  std::filesystem::path reference;
  std::filesystem::path converted;
  std::optional<std::filesystem::path> features;  // target F0 source; empty: F0 of the reference
};

/// CSV with header pair_id,task,reference,converted,features; paths
/// relative to the file.
std::vector<PairSpec> load_pairs(const std::filesystem::path& path);

struct PairRow {
  PairSpec pair;
  PairMetrics metrics;
};

struct EvaluationReport {
  std::vector<PairRow> rows;
  /// Per task, in order of first appearance.
  std::vector<std::pair<std::string, std::pair<Aggregate, Aggregate>>> by_task;
};

EvaluationReport cmd_evaluate(const std::vector<PairSpec>& pairs, const RunConfig& config);

/// pair_id,task,delta_f0,mcd rows followed by "mean"/"std" rows per task.
void write_report_csv(std::ostream& os, const EvaluationReport& report);
std::string report_json(const EvaluationReport& report);

/// Names, shapes and config text of any container file.
void inspect_container(std::ostream& os, const Container& c);

}  // namespace disc
