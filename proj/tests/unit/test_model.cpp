// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "doctest.h"
#include "disc/container.hpp"
#include "disc/model.hpp"
#include "support/testing.hpp"

using namespace disc;
using testing::random_tensor;
using testing::tiny_model;

namespace {

LogF0Pattern voiced_pattern(std::size_t frames, Rng& rng) {
  std::vector<float> v(frames);
  for (auto& x : v) x = rng.uniform() < 0.3 ? 0.0f : static_cast<float>(rng.uniform(4.6, 5.4));
  return LogF0Pattern(v);
}

double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(double(a[i]) - b[i]));
  return d;
}

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("shape law for every network") {
    ModelConfig cfg = tiny_model(6, 3);
    cfg.kernel = 5;
    Rng init(1);
    const auto params = init_params(cfg, init);
    const auto nets = bind(params, cfg);
    Rng rng(2);
    for (std::size_t T : {16, 17, 23, 64, 100}) {
      const auto x = random_tensor<float>({cfg.n_mels, T}, rng, -1.0, 1.0, false);
      const auto code = enc_c(nets, x, 1.0, rng);
      CHECK(code.embeddings.shape() == Shape{cfg.content_dim, T});
      CHECK(code.assignments.shape() == Shape{cfg.codebook_size, T});
      for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (std::size_t k = 0; k < cfg.codebook_size; ++k) sum += code.assignments.at(k, t);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
      }
      const auto out = dec(nets, code.embeddings, voiced_pattern(T, rng), SpeakerId{2});
      CHECK(out.mu.shape() == Shape{cfg.n_mels, T});
      CHECK(out.sigma.shape() == Shape{cfg.n_mels, T});
      CHECK(p_ext(nets, x).shape() == Shape{T});
      const std::size_t ts = (((T + 3) / 4) + 3) / 4;
      CHECK(cls(nets, x).shape() == Shape{cfg.num_speakers, ts});
      CHECK(cfg.classifier_frames(T) == ts);
    }
    CHECK(cfg.classifier_frames(64) == 4);
    CHECK(cfg.classifier_frames(1) == 1);
    const auto one = random_tensor<float>({cfg.n_mels, 1}, rng, -1.0, 1.0, false);
    CHECK(cls(nets, one).shape() == Shape{cfg.num_speakers, 1});
  }

  TEST_CASE("dimension and speaker errors") {
    const ModelConfig cfg = tiny_model();
    Rng rng(3);
    const auto params = init_params(cfg, rng);
    const auto nets = bind(params, cfg);
    const auto wrong = random_tensor<float>({cfg.n_mels + 1, 16}, rng, -1.0, 1.0, false);
    CHECK_THROWS_AS(enc_c(nets, wrong, 1.0, rng), DimensionError);
    CHECK_THROWS_AS(p_ext(nets, wrong), DimensionError);
    CHECK_THROWS_AS(cls(nets, wrong), DimensionError);
    const auto x = random_tensor<float>({cfg.n_mels, 16}, rng, -1.0, 1.0, false);
    const auto code = enc_c(nets, x, 1.0, rng);
    CHECK_THROWS_AS(dec(nets, code.embeddings, voiced_pattern(15, rng), SpeakerId{1}), DimensionError);
    CHECK_THROWS_AS(dec(nets, code.embeddings, voiced_pattern(16, rng), SpeakerId{3}), DomainError);
    CHECK_THROWS_AS(dec(nets, code.embeddings, voiced_pattern(16, rng), SpeakerId{0}), DomainError);
  }

  TEST_CASE("sigma stays inside the clamp range") {
    const ModelConfig cfg = tiny_model();
    Rng rng(4);
    auto params = init_params(cfg, rng);
    const auto x = random_tensor<float>({cfg.n_mels, 16}, rng, -1.0, 1.0, false);
    for (float b : {1e3f, -1e3f, 0.0f}) {
      for (auto& v : params.get("dec.log_sigma.b").mutable_data()) v = b;
      const auto nets = bind(params, cfg);
      Rng r(5);
      const auto code = enc_c(nets, x, 1.0, r);
      const auto out = dec(nets, code.embeddings, voiced_pattern(16, r), SpeakerId{1});
      for (float s : out.sigma.data()) {
        CHECK(s >= float(std::exp(-7.0)) * (1 - 1e-6f));
        CHECK(s <= float(std::exp(2.0)) * (1 + 1e-6f));
        if (b > 0) CHECK(s == doctest::Approx(std::exp(2.0)).epsilon(1e-6));
        if (b < 0) CHECK(s == doctest::Approx(std::exp(-7.0)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("speaker conditioning changes the decoder mean") {
    const ModelConfig cfg = tiny_model();
    Rng rng(6);
    const auto params = init_params(cfg, rng);
    const auto nets = bind(params, cfg);
    const auto x = random_tensor<float>({cfg.n_mels, 16}, rng, -1.0, 1.0, false);
    const auto code = enc_c(nets, x, 1.0, rng);
    const auto f0 = voiced_pattern(16, rng);
    const auto a = dec(nets, code.embeddings, f0, SpeakerId{1});
    const auto b = dec(nets, code.embeddings, f0, SpeakerId{2});
    CHECK(max_abs_diff(a.mu.data(), b.mu.data()) > 1e-4);
    LogF0Pattern shifted = f0;
    for (auto& v : shifted.values) {
      if (v != 0.0f) v += 0.4f;
    }
    const auto c = dec(nets, code.embeddings, shifted, SpeakerId{1});
    CHECK(max_abs_diff(a.mu.data(), c.mu.data()) > 1e-4);
  }

  TEST_CASE("seeded encoder calls are repeatable") {
    const ModelConfig cfg = tiny_model();
    Rng rng(7);
    const auto params = init_params(cfg, rng);
    const auto nets = bind(params, cfg);
    const auto x = random_tensor<float>({cfg.n_mels, 20}, rng, -1.0, 1.0, false);
    Rng a(9), b(9), c(10);
    const auto ca = enc_c(nets, x, 0.7, a);
    const auto cb = enc_c(nets, x, 0.7, b);
    const auto cc = enc_c(nets, x, 0.7, c);
    CHECK(std::vector<float>(ca.embeddings.data().begin(), ca.embeddings.data().end()) ==
          std::vector<float>(cb.embeddings.data().begin(), cb.embeddings.data().end()));
    CHECK(max_abs_diff(ca.embeddings.data(), cc.embeddings.data()) > 0.0);
    const auto h1 = enc_c(nets, x, 0.7, a, ContentSampling::kArgmax);
    for (float v : h1.assignments.data()) CHECK((v == 0.0f || v == 1.0f));
  }

  TEST_CASE("F0 extractor on the decoder mean reaches both networks") {
    const ModelConfig cfg = tiny_model();
    Rng rng(8);
    const auto params = init_params(cfg, rng);
    const auto nets = bind(params, cfg);
    const auto x = random_tensor<float>({cfg.n_mels, 16}, rng, -1.0, 1.0, false);
    const auto code = enc_c(nets, x, 1.0, rng);
    const auto out = dec(nets, code.embeddings, voiced_pattern(16, rng), SpeakerId{1});
    const auto loss = sum(p_ext(nets, out.mu));
    backward(loss);
    auto norm = [&](const std::string& name) {
      double n = 0.0;
      for (float g : params.get(name).grad()) n += double(g) * g;
      return n;
    };
    CHECK(norm("pext.out.v") > 0.0);
    CHECK(norm("dec.mu.v") > 0.0);
    CHECK(norm("dec.conv0.v") > 0.0);
    CHECK(norm("enc.codebook") > 0.0);
    const bool untouched = params.get("dec.log_sigma.v").grad().empty() || norm("dec.log_sigma.v") == 0.0;
    CHECK(untouched);
  }

  TEST_CASE("init is seeded; save and load are exact") {
    const ModelConfig cfg = tiny_model();
    Rng a(11), b(11), c(12);
    const auto pa = init_params(cfg, a);
    const auto pb = init_params(cfg, b);
    const auto pc = init_params(cfg, c);
    REQUIRE(pa.size() == pb.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      CHECK(pa.entries()[i].name == pb.entries()[i].name);
      const auto& ta = pa.entries()[i].tensor;
      CHECK(std::equal(ta.data().begin(), ta.data().end(), pb.entries()[i].tensor.data().begin()));
      if (max_abs_diff(ta.data(), pc.entries()[i].tensor.data()) > 0.0) any_diff = true;
    }
    CHECK(any_diff);

    Container out;
    store_params(pa, out);
    const auto bytes = encode_container(out);
    const auto back = restore_params(decode_container(bytes), cfg);
    Container again;
    store_params(back, again);
    CHECK(encode_container(again) == bytes);

    ModelConfig bigger = cfg;
    bigger.dec_channels += 1;
    CHECK_THROWS_AS(restore_params(out, bigger), CheckpointError);
    Container partial;
    partial.put("param/enc.codebook", pa.get("enc.codebook").detach());
    CHECK_THROWS_AS(restore_params(partial, cfg), CheckpointError);
    auto bad = bytes;
    bad[3] = '?';
    CHECK_THROWS_AS(decode_container(bad), CheckpointError);
  }

  TEST_CASE("config validation") {
    ModelConfig cfg = tiny_model();
    cfg.kernel = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_model();
    cfg.log_sigma_min = 3.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = tiny_model();
    cfg.num_speakers = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}
