// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// HTTP JSON API over ValidationService.
//
//   POST /api/sessions          {"coder_id", "display_name"}
//   GET  /api/scheme
//   GET  /api/queue?coder=ID
//   GET  /api/images/{cell_id}
//   POST /api/codes             {"cell_id", "coder_id", "codes": {...}, "note"}
//   GET  /api/progress
//
// Every /api request carries the study token in X-Study-Token. Errors are
// {"error": message} with 400 (malformed body), 401 (token), 404 (unknown
// coder or cell) or 422 (invalid codes; adds "dimensions").

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "vorient/validation_service.hpp"

namespace vorient {

inline constexpr const char* kStudyTokenHeader = "X-Study-Token";

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::string token;
  std::optional<std::filesystem::path> static_dir;  // built UI, served at /
};

class ValidationServer {
 public:
  // Throws ConfigError for an empty token.
  ValidationServer(ValidationService& service, ServerOptions options);
  ~ValidationServer();

  ValidationServer(const ValidationServer&) = delete;
  ValidationServer& operator=(const ValidationServer&) = delete;

  // Binds and starts serving on a background thread; returns the bound port.
  int start();
  // Blocks until stop() is called from another thread.
  void wait();
  void stop();
  int port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vorient
