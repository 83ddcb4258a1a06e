// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include "disc/audio.hpp"

#include <fftw3.h>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <mutex>
#include <numbers>

namespace disc {

namespace {

// FFTW's planner is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::lock_guard lock(planner_mutex());
    time_ = fftw_alloc_real(n);
    freq_ = fftw_alloc_complex(n / 2 + 1);
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), time_, freq_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), freq_, time_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(time_);
    fftw_free(freq_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  double* time() { return time_; }
  std::complex<double> bin(std::size_t k) const { return {freq_[k][0], freq_[k][1]}; }
  void set_bin(std::size_t k, std::complex<double> v) {
    freq_[k][0] = v.real();
    freq_[k][1] = v.imag();
  }
  void forward() { fftw_execute(forward_); }
  // Unnormalized: result is n times the true inverse.
  void inverse() { fftw_execute(inverse_); }
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  double* time_ = nullptr;
  fftw_complex* freq_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
void put_u32(std::ostream& os, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  os.write(b, 4);
}
void put_u16(std::ostream& os, std::uint16_t v) {
  const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  os.write(b, 2);
}

}  // namespace

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open WAV file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string name = path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw InputError(name + ": not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  int sample_rate = 0;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes.data() + pos + 4);
    const unsigned char* body = bytes.data() + pos + 8;
    if (pos + 8 + size > bytes.size()) throw InputError(name + ": truncated chunk");
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (size < 16) throw InputError(name + ": short fmt chunk");
      const std::uint16_t format = read_u16(body);
      const std::uint16_t channels = read_u16(body + 2);
      sample_rate = static_cast<int>(read_u32(body + 4));
      const std::uint16_t bits = read_u16(body + 14);
      if (format != 1 || bits != 16) {
        throw InputError(name + ": only 16-bit PCM is supported (format " + std::to_string(format) +
                         ", " + std::to_string(bits) + " bits)");
      }
      if (channels != 1) throw InputError(name + ": only mono audio is supported");
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw InputError(name + ": data chunk before fmt chunk");
      AudioClip clip;
      clip.sample_rate = sample_rate;
      clip.samples.resize(size / 2);
      for (std::size_t i = 0; i < clip.samples.size(); ++i) {
        const auto v = static_cast<std::int16_t>(read_u16(body + 2 * i));
        clip.samples[i] = static_cast<float>(v) / 32768.0f;
      }
      return clip;
    }
    pos += 8 + size + (size & 1);
  }
  throw InputError(name + ": no data chunk");
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot write WAV file " + path.string());
  const auto n = static_cast<std::uint32_t>(clip.samples.size());
  os.write("RIFF", 4);
  put_u32(os, 36 + 2 * n);
  os.write("WAVEfmt ", 8);
  put_u32(os, 16);
  put_u16(os, 1);
  put_u16(os, 1);
  put_u32(os, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(os, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_u16(os, 2);
  put_u16(os, 16);
  os.write("data", 4);
  put_u32(os, 2 * n);
  for (float s : clip.samples) {
    const double v = std::clamp(std::round(static_cast<double>(s) * 32768.0), -32768.0, 32767.0);
    put_u16(os, static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

Spectrogram stft(std::span<const float> samples, std::size_t n_fft, std::size_t hop) {
  const std::size_t len = samples.size();
  if (len < n_fft) {
    throw InputError("clip has " + std::to_string(len) + " samples, need at least " + std::to_string(n_fft));
  }
  const std::size_t pad = n_fft / 2;
  std::vector<double> padded(len + 2 * pad);
  for (std::size_t i = 0; i < len; ++i) padded[pad + i] = samples[i];
  for (std::size_t i = 0; i < pad; ++i) {
    padded[pad - 1 - i] = samples[i + 1];
    padded[pad + len + i] = samples[len - 2 - i];
  }
  const auto window = hann_window(n_fft);
  Spectrogram spec;
  spec.bins = n_fft / 2 + 1;
  spec.frames = 1 + len / hop;
  spec.values.resize(spec.bins * spec.frames);
  RealFft fft(n_fft);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double* frame = padded.data() + t * hop;
    for (std::size_t i = 0; i < n_fft; ++i) fft.time()[i] = frame[i] * window[i];
    fft.forward();
    for (std::size_t b = 0; b < spec.bins; ++b) spec(b, t) = fft.bin(b);
  }
  return spec;
}

std::vector<float> istft(const Spectrogram& spec, std::size_t n_fft, std::size_t hop, std::size_t length) {
  if (spec.bins != n_fft / 2 + 1) throw DimensionError("istft: bin count does not match n_fft");
  const std::size_t pad = n_fft / 2;
  const std::size_t total = (spec.frames - 1) * hop + n_fft;
  std::vector<double> acc(total, 0.0), wsum(total, 0.0);
  const auto window = hann_window(n_fft);
  RealFft fft(n_fft);
  const double norm = 1.0 / static_cast<double>(n_fft);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t b = 0; b < spec.bins; ++b) fft.set_bin(b, spec(b, t));
    fft.inverse();
    for (std::size_t i = 0; i < n_fft; ++i) {
      acc[t * hop + i] += fft.time()[i] * norm * window[i];
      wsum[t * hop + i] += window[i] * window[i];
    }
  }
  std::vector<float> out(length, 0.0f);
  for (std::size_t i = 0; i < length && pad + i < total; ++i) {
    const double w = wsum[pad + i];
    out[i] = w > 1e-10 ? static_cast<float>(acc[pad + i] / w) : 0.0f;
  }
  return out;
}

Matrix mel_filterbank(const AudioConfig& config) {
  if (!(config.fmin >= 0.0 && config.fmin < config.fmax && config.fmax <= config.sample_rate / 2.0)) {
    throw ConfigError("mel filterbank needs 0 <= fmin < fmax <= sample_rate/2");
  }
  if (config.n_mels == 0) throw ConfigError("mel filterbank needs at least one band");
  const std::size_t bins = config.n_bins();
  const double lo = hz_to_mel(config.fmin), hi = hz_to_mel(config.fmax);
  std::vector<double> edges(config.n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(config.n_mels + 1));
  }
  Matrix fb(config.n_mels, bins);
  const double bin_hz = static_cast<double>(config.sample_rate) / static_cast<double>(config.n_fft);
  for (std::size_t m = 0; m < config.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * bin_hz;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb(m, b) = static_cast<float>(w);
    }
  }
  return fb;
}

Matrix mel_spectrogram(const AudioClip& clip, const AudioConfig& config) {
  if (clip.sample_rate != config.sample_rate) {
    throw InputError("clip sample rate " + std::to_string(clip.sample_rate) + " != configured " +
                     std::to_string(config.sample_rate));
  }
  const Spectrogram spec = stft(clip.samples, config.n_fft, config.hop);
  const Matrix fb = mel_filterbank(config);
  Matrix mel(config.n_mels, spec.frames);
  std::vector<double> power(spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t b = 0; b < spec.bins; ++b) power[b] = std::norm(spec(b, t));
    for (std::size_t m = 0; m < config.n_mels; ++m) {
      double acc = 0.0;
      for (std::size_t b = 0; b < spec.bins; ++b) acc += fb(m, b) * power[b];
      mel(m, t) = static_cast<float>(acc);
    }
  }
  return mel;
}

Matrix log_compress(const Matrix& mel, double floor) {
  Matrix out(mel.rows, mel.cols);
  for (std::size_t i = 0; i < mel.values.size(); ++i) {
    if (mel.values[i] < 0.0f) throw DomainError("log_compress: negative mel energy");
    out.values[i] = static_cast<float>(std::log(static_cast<double>(mel.values[i]) + floor));
  }
  return out;
}

Matrix log_mel(const AudioClip& clip, const AudioConfig& config) {
  return log_compress(mel_spectrogram(clip, config), config.log_floor);
}

StandardizationStats fit_standardization(std::span<const Matrix> corpus) {
  if (corpus.empty()) throw InputError("fit_standardization: empty corpus");
  const std::size_t rows = corpus.front().rows;
  std::size_t total = 0;
  for (const auto& m : corpus) {
    if (m.rows != rows) throw DimensionError("fit_standardization: row counts differ");
    total += m.cols;
  }
  if (total < 2) throw InputError("fit_standardization: need at least two frames");
  std::vector<double> sum(rows, 0.0), sq(rows, 0.0);
  for (const auto& m : corpus) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) sum[r] += m(r, c);
    }
  }
  StandardizationStats stats;
  stats.mean.resize(rows);
  stats.std.resize(rows);
  for (std::size_t r = 0; r < rows; ++r) sum[r] /= static_cast<double>(total);
  for (const auto& m : corpus) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < m.cols; ++c) {
        const double d = m(r, c) - sum[r];
        sq[r] += d * d;
      }
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    stats.mean[r] = static_cast<float>(sum[r]);
    stats.std[r] = static_cast<float>(std::max(std::sqrt(sq[r] / static_cast<double>(total)), kStdFloor));
  }
  return stats;
}

namespace {

void check_stats(const Matrix& x, const StandardizationStats& stats) {
  if (!stats.fitted()) throw UsageError("standardization statistics have not been fitted");
  if (stats.mean.size() != x.rows) {
    throw DimensionError("standardization statistics have " + std::to_string(stats.mean.size()) +
                         " rows, input has " + std::to_string(x.rows));
  }
}

}  // namespace

Matrix standardize(const Matrix& x0, const StandardizationStats& stats) {
  check_stats(x0, stats);
  Matrix out(x0.rows, x0.cols);
  for (std::size_t r = 0; r < x0.rows; ++r) {
    for (std::size_t c = 0; c < x0.cols; ++c) {
      out(r, c) = static_cast<float>((static_cast<double>(x0(r, c)) - stats.mean[r]) / stats.std[r]);
    }
  }
  return out;
}

Matrix destandardize(const Matrix& x, const StandardizationStats& stats) {
  check_stats(x, stats);
  Matrix out(x.rows, x.cols);
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      out(r, c) = static_cast<float>(static_cast<double>(x(r, c)) * stats.std[r] + stats.mean[r]);
    }
  }
  return out;
}

namespace {

// Orthonormal DCT-II basis, basis(k, n).
Eigen::MatrixXd dct_basis(std::size_t n) {
  Eigen::MatrixXd basis(n, n);
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / nn) : std::sqrt(2.0 / nn);
    for (std::size_t i = 0; i < n; ++i) {
      basis(k, i) = s * std::cos(std::numbers::pi * static_cast<double>(k) * (2.0 * i + 1.0) / (2.0 * nn));
    }
  }
  return basis;
}

Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows, m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out(r, c) = m(r, c);
  }
  return out;
}

Matrix from_eigen(const Eigen::MatrixXd& e) {
  Matrix out(static_cast<std::size_t>(e.rows()), static_cast<std::size_t>(e.cols()));
  for (std::size_t r = 0; r < out.rows; ++r) {
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) = static_cast<float>(e(r, c));
  }
  return out;
}

}  // namespace

Matrix dct_columns(const Matrix& x) { return from_eigen(dct_basis(x.rows) * to_eigen(x)); }

Matrix idct_columns(const Matrix& c) { return from_eigen(dct_basis(c.rows).transpose() * to_eigen(c)); }

Matrix mel_cepstra(const Matrix& log_mel, std::size_t order) {
  if (order < 1 || order >= log_mel.rows) {
    throw ConfigError("mel_cepstra order " + std::to_string(order) + " outside 1.." +
                      std::to_string(log_mel.rows == 0 ? 0 : log_mel.rows - 1));
  }
  const Eigen::MatrixXd basis = dct_basis(log_mel.rows);
  return from_eigen(basis.middleRows(1, static_cast<Eigen::Index>(order)) * to_eigen(log_mel));
}

AudioClip griffin_lim(const Matrix& x, const StandardizationStats& stats, const AudioConfig& config,
                      std::size_t iters, std::vector<double>* convergence) {
  if (iters < 1) throw ConfigError("griffin_lim needs at least one iteration");
  if (x.rows != config.n_mels) throw DimensionError("griffin_lim: mel band count mismatch");
  const Matrix x0 = destandardize(x, stats);
  const Eigen::MatrixXd fb = to_eigen(mel_filterbank(config));
  const Eigen::MatrixXd pinv = fb.completeOrthogonalDecomposition().pseudoInverse();

  Eigen::MatrixXd mel(x0.rows, x0.cols);
  for (std::size_t r = 0; r < x0.rows; ++r) {
    for (std::size_t c = 0; c < x0.cols; ++c) {
      mel(r, c) = std::max(std::exp(static_cast<double>(x0(r, c))) - config.log_floor, 0.0);
    }
  }
  // Clamped pseudo-inverse, refined by multiplicative non-negative least
  // squares so harmonic peaks are not smeared across the band.
  Eigen::MatrixXd power = (pinv * mel).cwiseMax(0.0).array() + kInverseFloor;
  const Eigen::SparseMatrix<double> sparse_fb = fb.sparseView();
  const Eigen::MatrixXd numer = sparse_fb.transpose() * mel;
  for (std::size_t k = 0; k < kNnlsIters; ++k) {
    const Eigen::MatrixXd fitted = sparse_fb * power;
    const Eigen::MatrixXd denom = sparse_fb.transpose() * fitted;
    power = power.array() * numer.array() / (denom.array() + kInverseFloor);
  }
  const std::size_t bins = config.n_bins(), frames = x0.cols;
  const std::size_t length = (frames - 1) * config.hop;
  if (length < config.n_fft) throw InputError("griffin_lim: spectrogram too short to invert");

  Spectrogram target;
  target.bins = bins;
  target.frames = frames;
  target.values.resize(bins * frames);
  double target_norm = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    for (std::size_t t = 0; t < frames; ++t) {
      const double mag = std::sqrt(power(b, t));
      target(b, t) = mag;
      target_norm += mag * mag;
    }
  }
  target_norm = std::sqrt(target_norm);

  Spectrogram current = target;
  for (std::size_t k = 0; k < iters; ++k) {
    const std::vector<float> y = istft(current, config.n_fft, config.hop, length);
    const Spectrogram rebuilt = stft(y, config.n_fft, config.hop);
    double err = 0.0;
    for (std::size_t i = 0; i < current.values.size(); ++i) {
      const double mag = std::abs(target.values[i]);
      const double got = std::abs(rebuilt.values[i]);
      const double d = mag - got;
      err += d * d;
      current.values[i] = got > 1e-12 ? rebuilt.values[i] * (mag / got) : std::complex<double>(mag, 0.0);
    }
    if (convergence) convergence->push_back(target_norm > 0.0 ? std::sqrt(err) / target_norm : 0.0);
  }
  AudioClip clip;
  clip.sample_rate = config.sample_rate;
  clip.samples = istft(current, config.n_fft, config.hop, length);
  for (float& s : clip.samples) s = std::clamp(s, -1.0f, 1.0f);
  return clip;
}

}  // namespace disc
