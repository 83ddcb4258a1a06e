// Copyright 2026 The DisC-VC Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace disc {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kUsage,       // caller misuse: bad flags, non-scalar loss, unfitted stats
  kConfig,      // invalid configuration value
  kDimension,   // tensor shape mismatch
  kInput,       // bad or degenerate input data
  kDomain,      // argument outside the mathematical domain
  kNumeric,     // NaN / Inf produced
  kCheckpoint,  // malformed or incompatible container file
  kDataset,     // dataset / manifest problems
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define DISC_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(Kind, what) {}     \
  };

DISC_DEFINE_ERROR(UsageError, ErrorKind::kUsage)
DISC_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
DISC_DEFINE_ERROR(DimensionError, ErrorKind::kDimension)
DISC_DEFINE_ERROR(InputError, ErrorKind::kInput)
DISC_DEFINE_ERROR(DomainError, ErrorKind::kDomain)
DISC_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
DISC_DEFINE_ERROR(CheckpointError, ErrorKind::kCheckpoint)
DISC_DEFINE_ERROR(DatasetError, ErrorKind::kDataset)

#undef DISC_DEFINE_ERROR

}  // namespace disc
