// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "disc/error.hpp"
#include "json.hpp"

namespace disc {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv_line(line) != header) {
    std::string expected;
    for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
    throw DatasetError(path.string() + ": expected header '" + expected + "'");
  }
  std::vector<std::vector<std::string>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DatasetError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                         std::to_string(header.size()) + " columns");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

int parse_index(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw DatasetError(where + ": invalid speaker index '" + text + "'");
}

Tensor vector_tensor(const std::vector<float>& v) { return Tensor::from({v.size()}, v); }

std::vector<float> tensor_vector(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

void put_stats(Container& c, const FeatureStats& stats, const std::string& prefix) {
  c.put(prefix + "mel_mean", vector_tensor(stats.mel.mean));
  c.put(prefix + "mel_std", vector_tensor(stats.mel.std));
  std::vector<float> mean, std;
  for (const auto& s : stats.f0.entries()) {
    mean.push_back(static_cast<float>(s.mean));
    std.push_back(static_cast<float>(s.std));
  }
  c.put(prefix + "f0_mean", vector_tensor(mean));
  c.put(prefix + "f0_std", vector_tensor(std));
}

FeatureStats get_stats(const Container& c, const std::string& prefix) {
  FeatureStats out;
  out.mel.mean = tensor_vector(c.get(prefix + "mel_mean"));
  out.mel.std = tensor_vector(c.get(prefix + "mel_std"));
  const auto mean = tensor_vector(c.get(prefix + "f0_mean"));
  const auto std = tensor_vector(c.get(prefix + "f0_std"));
  if (mean.size() != std.size() || out.mel.mean.size() != out.mel.std.size()) {
    throw CheckpointError("inconsistent statistics tensors");
  }
  std::vector<SpeakerF0Stats> table;
  for (std::size_t s = 0; s < mean.size(); ++s) {
    table.push_back({mean[s], std[s], SpeakerId{static_cast<int>(s + 1)}});
  }
  out.f0 = SpeakerStatsTable(std::move(table));
  return out;
}

std::string config_value(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key + "=", 0) == 0) return line.substr(key.size() + 1);
  }
  throw CheckpointError("missing '" + key + "' in container header");
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  const auto rows = read_csv(path, {"speaker", "index", "path", "split"});
  const fs::path base = path.parent_path();
  DatasetManifest out;
  std::map<int, std::string> names;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = path.string() + " row " + std::to_string(r + 1);
    ManifestEntry e;
    e.speaker_name = row[0];
    e.speaker = SpeakerId{parse_index(row[1], where)};
    if (e.speaker.index < 1) throw DatasetError(where + ": speaker index must be >= 1");
    e.path = fs::absolute(base / row[2]);
    e.split = row[3];
    if (e.split != "train" && e.split != "test") throw DatasetError(where + ": split must be train or test");
    if (!fs::exists(e.path)) throw DatasetError(where + ": no such file " + e.path.string());
    auto [it, fresh] = names.emplace(e.speaker.index, e.speaker_name);
    if (!fresh && it->second != e.speaker_name) {
      throw DatasetError(where + ": speaker index " + row[1] + " already names '" + it->second + "'");
    }
    out.entries.push_back(std::move(e));
  }
  if (out.entries.empty()) throw DatasetError(path.string() + ": manifest is empty");
  out.num_speakers = names.size();
  if (names.rbegin()->first != static_cast<int>(names.size())) {
    throw DatasetError(path.string() + ": speaker indices must be dense from 1");
  }
  return out;
}

fs::path resolve_cache_dir(const fs::path& requested) {
  if (!requested.empty()) return requested;
  if (const char* env = std::getenv(kCacheDirEnv); env && *env) return env;
  return "disc_cache";
}

Container encode_stats(const FeatureStats& stats) {
  Container c;
  c.config = "num_speakers=" + std::to_string(stats.f0.size()) + "\n";
  put_stats(c, stats, "");
  return c;
}

FeatureStats decode_stats(const Container& c) { return get_stats(c, ""); }

PreprocessReport cmd_preprocess(const DatasetManifest& manifest, const RunConfig& config, const fs::path& cache_dir,
                                 const PreprocessOptions& options) {
  config.validate();
  fs::create_directories(cache_dir);
  PreprocessReport report;
  std::vector<CachedUtterance> utts;
  std::set<std::string> ids;
  for (const auto& e : manifest.entries) {
    CachedUtterance u;
    u.id = e.path.stem().string();
    u.speaker = e.speaker;
    u.split = e.split;
    if (!ids.insert(u.id).second) throw DatasetError("duplicate utterance id '" + u.id + "'");
    try {
      const AudioClip clip = read_wav(e.path);
      if (clip.sample_rate != config.audio.sample_rate) {
        throw InputError("sample rate " + std::to_string(clip.sample_rate) + " != " +
                         std::to_string(config.audio.sample_rate));
      }
      u.log_mel = log_mel(clip, config.audio);
      u.f0 = estimate_f0(clip, config.audio, config.eval.yin, u.log_mel.cols);
    } catch (const InputError& err) {
      if (!options.continue_on_error) throw InputError(e.path.string() + ": " + err.what());
      report.skipped.push_back(e.path.string() + ": " + err.what());
      if (options.log) *options.log << "skipping " << report.skipped.back() << '\n';
      continue;
    }
    utts.push_back(std::move(u));
  }

  FeatureStats stats;
  std::vector<Matrix> train_mels;
  std::vector<std::vector<LogF0Pattern>> train_f0(manifest.num_speakers);
  for (const auto& u : utts) {
    if (u.split != "train") continue;
    train_mels.push_back(u.log_mel);
    train_f0[u.speaker.zero_based()].push_back(u.f0);
  }
  if (train_mels.empty()) throw DatasetError("no usable training utterances");
  stats.mel = fit_standardization(train_mels);
  std::vector<SpeakerF0Stats> table;
  for (std::size_t s = 0; s < manifest.num_speakers; ++s) {
    const SpeakerId id{static_cast<int>(s + 1)};
    if (train_f0[s].empty()) throw DatasetError("speaker " + std::to_string(s + 1) + " has no training utterances");
    table.push_back(speaker_stats(train_f0[s], id));
  }
  stats.f0 = SpeakerStatsTable(std::move(table));

  std::ofstream index(cache_dir / "index.csv", std::ios::binary);
  index << "id,speaker,split,frames\n";
  for (const auto& u : utts) {
    Container c;
    c.config = "id=" + u.id + "\nsplit=" + u.split + "\n";
    c.put("logmel", u.log_mel.to_tensor());
    c.put("f0", vector_tensor(u.f0.values));
    c.put("speaker", Tensor::from({1}, {static_cast<float>(u.speaker.index)}));
    save_container(cache_dir / (u.id + ".bin"), c);
    index << u.id << ',' << u.speaker.index << ',' << u.split << ',' << u.log_mel.cols << '\n';
    ++report.written;
  }
  save_container(cache_dir / "stats.bin", encode_stats(stats));
  return report;
}

const CachedUtterance& FeatureCache::find(const std::string& id) const {
  for (const auto& u : utterances) {
    if (u.id == id) return u;
  }
  throw DatasetError("no cached utterance '" + id + "'");
}

FeatureCache load_cache(const fs::path& cache_dir) {
  FeatureCache cache;
  const auto rows = read_csv(cache_dir / "index.csv", {"id", "speaker", "split", "frames"});
  cache.stats = decode_stats(load_container(cache_dir / "stats.bin"));
  cache.num_speakers = cache.stats.f0.size();
  for (const auto& row : rows) {
    const Container c = load_container(cache_dir / (row[0] + ".bin"));
    CachedUtterance u;
    u.id = config_value(c.config, "id");
    u.split = config_value(c.config, "split");
    u.speaker = SpeakerId{static_cast<int>(c.get("speaker").item())};
    u.log_mel = Matrix::from_tensor(c.get("logmel"));
    u.f0 = LogF0Pattern(tensor_vector(c.get("f0")));
    if (u.f0.size() != u.log_mel.cols) throw DatasetError("cache entry " + u.id + ": F0 and log-mel lengths differ");
    cache.utterances.push_back(std::move(u));
  }
  return cache;
}

Dataset make_dataset(const FeatureCache& cache, const std::string& split) {
  Dataset d;
  d.num_speakers = cache.num_speakers;
  for (const auto& u : cache.utterances) {
    if (u.split != split) continue;
    d.utterances.push_back({u.id, u.speaker, standardize(u.log_mel, cache.stats.mel), u.f0});
  }
  return d;
}

Container make_run_checkpoint(const TrainState& state, const RunConfig& config, const FeatureStats& stats) {
  Container c = make_checkpoint(state, format_run_config(config));
  put_stats(c, stats, "stats/");
  return c;
}

LoadedModel load_run_checkpoint(const fs::path& path) {
  const Container c = load_container(path);
  LoadedModel m;
  try {
    m.config = parse_run_config(c.config, reference_preset(), {"state"});
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": bad embedded config: " + e.what());
  }
  m.state = restore_checkpoint(c, m.config.model);
  m.stats = get_stats(c, "stats/");
  return m;
}

std::vector<LossBreakdown> cmd_train(const FeatureCache& cache, const RunConfig& config,
                                     const TrainRunOptions& options) {
  config.validate();
  if (config.model.num_speakers != cache.num_speakers) {
    throw ConfigError("model.num_speakers=" + std::to_string(config.model.num_speakers) + " but the cache has " +
                      std::to_string(cache.num_speakers) + " speakers");
  }
  const Dataset dataset = make_dataset(cache, "train");
  TrainState state;
  if (options.resume) {
    LoadedModel m = load_run_checkpoint(*options.resume);
    if (!(m.config.model == config.model)) throw ConfigError("resume checkpoint has a different model config");
    state = std::move(m.state);
  } else {
    state = init_train_state(config.model, config.train);
  }
  fs::create_directories(options.out_dir);
  const fs::path log_path = options.out_dir / "train_log.csv";
  std::ofstream log(log_path, options.resume ? std::ios::app : std::ios::trunc);
  if (!log) throw InputError("cannot write " + log_path.string());

  TrainHooks hooks;
  hooks.log = &log;
  hooks.checkpoint_dir = options.out_dir;
  hooks.config_text = format_run_config(config);
  hooks.decorate = [&](Container& c) { put_stats(c, cache.stats, "stats/"); };
  if (options.progress && options.progress_every > 0) {
    hooks.on_step = [&](std::size_t step, const LossBreakdown& l) {
      if (step % options.progress_every == 0 || step == config.train.steps) {
        *options.progress << "step " << step << "  like " << l.like << "  total " << l.total << '\n';
      }
    };
  }
  auto history = train(dataset, config.train, state, hooks);
  save_container(options.out_dir / "final.bin", make_run_checkpoint(state, config, cache.stats));
  return history;
}

ConversionRequest resolve_request(const ConvertFlags& f, SpeakerId source) {
  const double beta = f.beta.value_or(0.0);
  auto same = [&](const std::optional<int>& v, int expected) { return !v || *v == expected; };
  if (!f.task) {
    if (f.target) throw UsageError("--target needs --task");
    return {beta, SpeakerId{f.pitch_speaker.value_or(source.index)}, SpeakerId{f.timbre_speaker.value_or(source.index)}};
  }
  switch (*f.task) {
    case Task::kP:
      if (!same(f.pitch_speaker, source.index) || !same(f.timbre_speaker, source.index) ||
          !same(f.target, source.index)) {
        throw UsageError("task P keeps the source speaker; drop the speaker flags");
      }
      return request_for(Task::kP, source, source, beta);
    case Task::kT: {
      if (beta != 0.0) throw UsageError("task T leaves the pitch untouched; --beta must be 0");
      if (!same(f.pitch_speaker, source.index)) throw UsageError("task T keeps the source pitch speaker");
      const std::optional<int> tgt = f.target ? f.target : f.timbre_speaker;
      if (!tgt) throw UsageError("task T needs --target or --timbre-speaker");
      if (!same(f.timbre_speaker, *tgt)) throw UsageError("--target and --timbre-speaker disagree");
      return request_for(Task::kT, source, SpeakerId{*tgt}, 0.0);
    }
    case Task::kPT: {
      const std::optional<int> tgt = f.target ? f.target : (f.pitch_speaker ? f.pitch_speaker : f.timbre_speaker);
      if (!tgt) throw UsageError("task PT needs --target");
      if (!same(f.pitch_speaker, *tgt) || !same(f.timbre_speaker, *tgt)) {
        throw UsageError("task PT moves pitch and timbre to one target speaker");
      }
      return request_for(Task::kPT, source, SpeakerId{*tgt}, beta);
    }
  }
  throw UsageError("unknown task");
}

Container encode_conversion(const ConversionResult& result) {
  Container c;
  c.config = "kind=conversion\n";
  c.put("mu", result.mu.to_tensor());
  c.put("target_f0", vector_tensor(result.target_f0.values));
  return c;
}

ConvertOutcome cmd_convert(const ConvertJob& job, const RunConfig& config) {
  if (job.input_wav.has_value() == job.cache_id.has_value()) {
    throw UsageError("give exactly one of --input and --cache-id");
  }
  const LoadedModel model = load_run_checkpoint(job.checkpoint);
  const AudioConfig& audio = model.config.audio;

  ConvertOutcome out;
  Matrix raw;
  LogF0Pattern f0;
  if (job.input_wav) {
    if (!job.source_speaker) throw UsageError("--source-speaker is required for WAV input");
    out.source = SpeakerId{*job.source_speaker};
    const AudioClip clip = read_wav(*job.input_wav);
    if (clip.sample_rate != audio.sample_rate) {
      throw InputError(job.input_wav->string() + ": sample rate " + std::to_string(clip.sample_rate) +
                       " != " + std::to_string(audio.sample_rate));
    }
    raw = log_mel(clip, audio);
    f0 = estimate_f0(clip, audio, model.config.eval.yin, raw.cols);
  } else {
    const FeatureCache cache = load_cache(resolve_cache_dir(job.cache_dir));
    const CachedUtterance& u = cache.find(*job.cache_id);
    if (job.source_speaker && *job.source_speaker != u.speaker.index) {
      throw UsageError("--source-speaker disagrees with the cached speaker");
    }
    out.source = u.speaker;
    raw = u.log_mel;
    f0 = u.f0;
  }
  out.request = resolve_request(job.flags, out.source);

  const Converter converter(model.config.model, model.state.params, model.stats.f0, model.stats.mel, audio);
  out.result = converter.convert(standardize(raw, model.stats.mel), f0, out.source, out.request, config.convert);
  if (!job.out_wav.empty()) {
    if (job.out_wav.has_parent_path()) fs::create_directories(job.out_wav.parent_path());
    write_wav(job.out_wav, out.result.clip);
    const fs::path features = job.out_features.value_or(fs::path(job.out_wav.string() + ".features.bin"));
    save_container(features, encode_conversion(out.result));
  }
  return out;
}

std::vector<PairSpec> load_pairs(const fs::path& path) {
  const auto rows = read_csv(path, {"pair_id", "task", "reference", "converted", "features"});
  const fs::path base = path.parent_path();
  std::vector<PairSpec> out;
  for (const auto& r : rows) {
    PairSpec p{r[0], r[1], base / r[2], base / r[3], std::nullopt};
    if (!r[4].empty()) p.features = base / r[4];
    out.push_back(std::move(p));
  }
  return out;
}

EvaluationReport cmd_evaluate(const std::vector<PairSpec>& pairs, const RunConfig& config) {
  EvaluationReport report;
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> columns;
  for (const auto& p : pairs) {
    const AudioClip ref = read_wav(p.reference);
    const AudioClip conv = read_wav(p.converted);
    LogF0Pattern target;
    if (p.features) {
      target = LogF0Pattern(tensor_vector(load_container(*p.features).get("target_f0")));
    } else {
      target = estimate_f0(trim_silence(ref), config.audio, config.eval.yin);
    }
    PairRow row{p, evaluate_pair(ref, conv, target, config.audio, config.eval)};
    if (!columns.contains(p.task)) order.push_back(p.task);
    columns[p.task].first.push_back(row.metrics.delta_f0);
    columns[p.task].second.push_back(row.metrics.mcd);
    report.rows.push_back(std::move(row));
  }
  for (const auto& task : order) {
    const auto& [df0, mcd_values] = columns[task];
    report.by_task.push_back({task, {aggregate(df0), aggregate(mcd_values)}});
  }
  return report;
}

void write_report_csv(std::ostream& os, const EvaluationReport& report) {
  auto num = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << v;
    return s.str();
  };
  os << "pair_id,task,delta_f0,mcd\n";
  for (const auto& r : report.rows) {
    os << r.pair.id << ',' << r.pair.task << ',' << num(r.metrics.delta_f0) << ',' << num(r.metrics.mcd) << '\n';
  }
  for (const auto& [task, agg] : report.by_task) {
    os << "mean," << task << ',' << num(agg.first.mean) << ',' << num(agg.second.mean) << '\n';
    os << "std," << task << ',' << num(agg.first.std) << ',' << num(agg.second.std) << '\n';
  }
}

std::string report_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    j["pairs"].push_back({{"pair_id", r.pair.id}, {"task", r.pair.task}, {"delta_f0", r.metrics.delta_f0},
                          {"mcd", r.metrics.mcd}});
  }
  j["aggregate"] = nlohmann::ordered_json::array();
  for (const auto& [task, agg] : report.by_task) {
    j["aggregate"].push_back({{"task", task},
                              {"count", agg.second.count},
                              {"delta_f0_count", agg.first.count},
                              {"delta_f0_mean", agg.first.mean},
                              {"delta_f0_std", agg.first.std},
                              {"mcd_mean", agg.second.mean},
                              {"mcd_std", agg.second.std}});
  }
  return j.dump(2) + "\n";
}

void inspect_container(std::ostream& os, const Container& c) {
  os << "header:\n" << c.config;
  if (!c.config.empty() && c.config.back() != '\n') os << '\n';
  os << "tensors: " << c.tensors.size() << '\n';
  std::size_t total = 0;
  for (const auto& [name, t] : c.tensors) {
    os << "  " << name << ' ' << shape_str(t.shape()) << '\n';
    total += t.numel();
  }
  os << "values: " << total << '\n';
}

}  // namespace disc
