// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "disc/error.hpp"
#include "disc/tensor.hpp"

namespace disc {

/// Row-major float matrix for features outside the autodiff graph
/// (spectrograms, cepstra, statistics).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, float fill = 0.0f) : rows(r), cols(c), values(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<float> v) : rows(r), cols(c), values(std::move(v)) {
    if (values.size() != r * c) throw DimensionError("Matrix: value count does not match shape");
  }

  float& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  float operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  bool empty() const { return values.empty(); }

  Tensor to_tensor(bool requires_grad = false) const {
    return Tensor::from({rows, cols}, values, requires_grad);
  }
  static Matrix from_tensor(const Tensor& t) {
    if (t.rank() != 2) throw DimensionError("Matrix::from_tensor needs rank 2, got " + shape_str(t.shape()));
    return Matrix(t.dim(0), t.dim(1), std::vector<float>(t.data().begin(), t.data().end()));
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// 1-based speaker index in {1..S}.
struct SpeakerId {
  int index = 1;

  std::size_t zero_based() const { return static_cast<std::size_t>(index - 1); }
  friend auto operator<=>(const SpeakerId&, const SpeakerId&) = default;
};

inline void check_speaker(SpeakerId s, std::size_t num_speakers) {
  if (s.index < 1 || static_cast<std::size_t>(s.index) > num_speakers) {
    throw DomainError("speaker index " + std::to_string(s.index) + " outside 1.." +
                      std::to_string(num_speakers));
  }
}

}  // namespace disc
