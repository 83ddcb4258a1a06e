// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "disc/error.hpp"

namespace disc {

namespace {

std::string format_value(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}
std::string format_value(std::size_t v) { return std::to_string(v); }
std::string format_value(int v) { return std::to_string(v); }
std::string format_value(bool v) { return v ? "true" : "false"; }

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T v{};
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("invalid value '" + std::string(text) + "' for " + key);
  }
  return v;
}

void parse_value(const std::string& key, std::string_view text, double& out) { out = parse_number<double>(key, text); }
void parse_value(const std::string& key, std::string_view text, std::size_t& out) {
  out = parse_number<std::size_t>(key, text);
}
void parse_value(const std::string& key, std::string_view text, int& out) { out = parse_number<int>(key, text); }
void parse_value(const std::string& key, std::string_view text, bool& out) {
  if (text == "true" || text == "1") out = true;
  else if (text == "false" || text == "0") out = false;
  else throw ConfigError("invalid boolean '" + std::string(text) + "' for " + key);
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

template <typename Sub, typename V>
Field field(std::string section, std::string key, Sub RunConfig::*sub, V Sub::*member) {
  const std::string full = section + "." + key;
  return {section, key, [sub, member](const RunConfig& c) { return format_value(c.*sub.*member); },
          [sub, member, full](RunConfig& c, std::string_view text) { parse_value(full, text, c.*sub.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = [] {
    std::vector<Field> f;
    using R = RunConfig;
    f.push_back(field("audio", "sample_rate", &R::audio, &AudioConfig::sample_rate));
    f.push_back(field("audio", "n_fft", &R::audio, &AudioConfig::n_fft));
    f.push_back(field("audio", "hop", &R::audio, &AudioConfig::hop));
    f.push_back(field("audio", "n_mels", &R::audio, &AudioConfig::n_mels));
    f.push_back(field("audio", "fmin", &R::audio, &AudioConfig::fmin));
    f.push_back(field("audio", "fmax", &R::audio, &AudioConfig::fmax));
    f.push_back(field("audio", "log_floor", &R::audio, &AudioConfig::log_floor));
    f.push_back(field("audio", "griffin_lim_iters", &R::audio, &AudioConfig::griffin_lim_iters));

    f.push_back(field("model", "num_speakers", &R::model, &ModelConfig::num_speakers));
    f.push_back(field("model", "codebook_size", &R::model, &ModelConfig::codebook_size));
    f.push_back(field("model", "content_dim", &R::model, &ModelConfig::content_dim));
    f.push_back(field("model", "enc_channels", &R::model, &ModelConfig::enc_channels));
    f.push_back(field("model", "enc_layers", &R::model, &ModelConfig::enc_layers));
    f.push_back(field("model", "dec_channels", &R::model, &ModelConfig::dec_channels));
    f.push_back(field("model", "dec_layers", &R::model, &ModelConfig::dec_layers));
    f.push_back(field("model", "speaker_dim", &R::model, &ModelConfig::speaker_dim));
    f.push_back(field("model", "pext_channels", &R::model, &ModelConfig::pext_channels));
    f.push_back(field("model", "pext_layers", &R::model, &ModelConfig::pext_layers));
    f.push_back(field("model", "cls_channels", &R::model, &ModelConfig::cls_channels));
    f.push_back(field("model", "cls_layers", &R::model, &ModelConfig::cls_layers));
    f.push_back(field("model", "cls_stride", &R::model, &ModelConfig::cls_stride));
    f.push_back(field("model", "kernel", &R::model, &ModelConfig::kernel));
    f.push_back(field("model", "log_sigma_min", &R::model, &ModelConfig::log_sigma_min));
    f.push_back(field("model", "log_sigma_max", &R::model, &ModelConfig::log_sigma_max));
    f.push_back(field("model", "init_scale", &R::model, &ModelConfig::init_scale));

    f.push_back(field("train", "batch_size", &R::train, &TrainConfig::batch_size));
    f.push_back(field("train", "steps", &R::train, &TrainConfig::steps));
    f.push_back(field("train", "crop_frames", &R::train, &TrainConfig::crop_frames));
    f.push_back(field("train", "learning_rate", &R::train, &TrainConfig::learning_rate));
    f.push_back(field("train", "adam_beta1", &R::train, &TrainConfig::adam_beta1));
    f.push_back(field("train", "adam_beta2", &R::train, &TrainConfig::adam_beta2));
    f.push_back(field("train", "adam_eps", &R::train, &TrainConfig::adam_eps));
    f.push_back(field("train", "grad_clip", &R::train, &TrainConfig::grad_clip));
    f.push_back(field("train", "tau_start", &R::train, &TrainConfig::tau_start));
    f.push_back(field("train", "tau_end", &R::train, &TrainConfig::tau_end));
    f.push_back(field("train", "tau_anneal_steps", &R::train, &TrainConfig::tau_anneal_steps));
    f.push_back({"train", "seed", [](const R& c) { return std::to_string(c.train.seed); },
                 [](R& c, std::string_view t) { c.train.seed = parse_number<std::uint64_t>("train.seed", t); }});
    f.push_back(field("train", "checkpoint_every", &R::train, &TrainConfig::checkpoint_every));
    f.push_back(field("train", "aux", &R::train, &TrainConfig::aux));

    f.push_back({"eval", "dtw_margin",
                 [](const R& c) {
                   return c.eval.dtw.margin == std::numeric_limits<std::size_t>::max()
                              ? std::string("unlimited")
                              : std::to_string(c.eval.dtw.margin);
                 },
                 [](R& c, std::string_view t) {
                   c.eval.dtw.margin = t == "unlimited" ? std::numeric_limits<std::size_t>::max()
                                                        : parse_number<std::size_t>("eval.dtw_margin", t);
                 }});
    f.push_back(field("eval", "mcd_order", &R::eval, &EvalConfig::mcd_order));
    f.push_back({"yin", "window", [](const R& c) { return std::to_string(c.eval.yin.window); },
                 [](R& c, std::string_view t) { parse_value("yin.window", t, c.eval.yin.window); }});
    f.push_back({"yin", "threshold", [](const R& c) { return format_value(c.eval.yin.threshold); },
                 [](R& c, std::string_view t) { parse_value("yin.threshold", t, c.eval.yin.threshold); }});
    f.push_back({"yin", "fmin", [](const R& c) { return format_value(c.eval.yin.fmin); },
                 [](R& c, std::string_view t) { parse_value("yin.fmin", t, c.eval.yin.fmin); }});
    f.push_back({"yin", "fmax", [](const R& c) { return format_value(c.eval.yin.fmax); },
                 [](R& c, std::string_view t) { parse_value("yin.fmax", t, c.eval.yin.fmax); }});

    f.push_back({"convert", "sampling",
                 [](const R& c) { return std::string(c.convert.sampling == ContentSampling::kArgmax ? "argmax" : "gumbel"); },
                 [](R& c, std::string_view t) {
                   if (t == "gumbel") c.convert.sampling = ContentSampling::kGumbel;
                   else if (t == "argmax") c.convert.sampling = ContentSampling::kArgmax;
                   else throw ConfigError("convert.sampling must be gumbel or argmax, got '" + std::string(t) + "'");
                 }});
    f.push_back(field("convert", "tau", &R::convert, &ConversionOptions::tau));
    f.push_back({"convert", "seed", [](const R& c) { return std::to_string(c.convert.seed); },
                 [](R& c, std::string_view t) { c.convert.seed = parse_number<std::uint64_t>("convert.seed", t); }});
    return f;
  }();
  return kFields;
}

const Field& find_field(std::string_view section, std::string_view key) {
  for (const auto& f : fields()) {
    if (f.section == section && f.key == key) return f;
  }
  throw ConfigError("unknown config key '" + std::string(section) + "." + std::string(key) + "'");
}

bool known_section(std::string_view section) {
  for (const auto& f : fields()) {
    if (f.section == section) return true;
  }
  return false;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void RunConfig::validate() const {
  if (audio.sample_rate <= 0) throw ConfigError("audio.sample_rate must be positive");
  if (audio.hop == 0 || audio.n_fft < 2 || audio.hop > audio.n_fft) {
    throw ConfigError("audio.hop must lie in 1..n_fft");
  }
  if (!(audio.fmin >= 0.0 && audio.fmin < audio.fmax && audio.fmax <= audio.sample_rate / 2.0)) {
    throw ConfigError("audio.fmin/fmax must satisfy 0 <= fmin < fmax <= sample_rate / 2");
  }
  if (!(audio.log_floor > 0.0)) throw ConfigError("audio.log_floor must be positive");
  if (model.n_mels != audio.n_mels) throw ConfigError("model and audio disagree on the number of mel bands");
  model.validate();
  train.validate();
  if (eval.mcd_order < 1 || eval.mcd_order >= audio.n_mels) {
    throw ConfigError("eval.mcd_order must lie in 1..n_mels-1");
  }
  if (!(eval.yin.fmin > 0.0 && eval.yin.fmin < eval.yin.fmax)) throw ConfigError("yin.fmin must lie in (0, fmax)");
  if (!(eval.yin.threshold > 0.0 && eval.yin.threshold < 1.0)) throw ConfigError("yin.threshold must lie in (0, 1)");
  if (!(convert.tau > 0.0)) throw ConfigError("convert.tau must be positive");
}

RunConfig reference_preset() {
  RunConfig c;
  c.convert.tau = c.train.tau_end;
  return c;
}

RunConfig toy_preset() {
  RunConfig c = reference_preset();
  c.model.codebook_size = 32;
  c.model.enc_channels = 64;
  c.model.dec_channels = 64;
  c.model.speaker_dim = 16;
  c.model.pext_channels = 32;
  c.model.cls_channels = 32;
  c.train.crop_frames = 64;
  c.train.tau_anneal_steps = 2000;
  return c;
}

RunConfig preset(std::string_view name) {
  if (name == "reference") return reference_preset();
  if (name == "toy") return toy_preset();
  throw UsageError("unknown preset '" + std::string(name) + "' (expected reference or toy)");
}

RunConfig parse_run_config(const std::string& text, const RunConfig& base, const std::vector<std::string>& ignored) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  RunConfig out = base;
  for (const auto& [section, body] : tree) {
    if (std::find(ignored.begin(), ignored.end(), section) != ignored.end()) continue;
    if (!body.data().empty()) throw ConfigError("config key '" + section + "' is outside any section");
    if (!known_section(section)) throw ConfigError("unknown config section [" + section + "]");
    for (const auto& [key, value] : body) {
      find_field(section, key).set(out, trim(value.data()));
    }
  }
  out.model.n_mels = out.audio.n_mels;
  out.validate();
  return out;
}

RunConfig load_run_config(const std::filesystem::path& path, const RunConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), base);
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw UsageError("override must look like section.key=value, got '" + std::string(assignment) + "'");
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  find_field(section, key).set(config, trim(assignment.substr(eq + 1)));
  config.model.n_mels = config.audio.n_mels;
}

std::string format_run_config(const RunConfig& config) {
  std::ostringstream os;
  std::string current;
  for (const auto& f : fields()) {
    if (f.section != current) {
      if (!current.empty()) os << '\n';
      os << '[' << f.section << "]\n";
      current = f.section;
    }
    os << f.key << '=' << f.get(config) << '\n';
  }
  return os.str();
}

}  // namespace disc
