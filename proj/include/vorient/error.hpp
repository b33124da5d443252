// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vorient {

// Mirrors vorient_status in vorient.h; the C API maps one onto the other.
enum class ErrorCode {
  kInvalidArgument = 1,
  kConfig,
  kValidation,
  kNotFound,
  kStageOrder,
  kStore,
  kProvider,
  kDegenerate,
  kParse,
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

class LookupError : public Error {
 public:
  explicit LookupError(const std::string& what) : Error(ErrorCode::kNotFound, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorCode::kValidation, what) {}
};

class StoreError : public Error {
 public:
  explicit StoreError(const std::string& what) : Error(ErrorCode::kStore, what) {}
};

class StageOrderError : public Error {
 public:
  explicit StageOrderError(const std::string& what)
      : Error(ErrorCode::kStageOrder, what) {}
};

class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, bool retryable)
      : Error(ErrorCode::kProvider, what), retryable_(retryable) {}

  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

// Statistic undefined for the given data (zero variance, empty margin, ...).
class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what)
      : Error(ErrorCode::kDegenerate, what) {}
};

}  // namespace vorient
