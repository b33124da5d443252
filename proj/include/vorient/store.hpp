// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// On-disk study store.
//
//   <root>/manifest.json           config hash, schema versions, stage log
//   <root>/config.json             effective study config
//   <root>/images/<sha256>.<ext>   content-addressed image bytes
//   <root>/prompts/<version>.txt   registered coding prompts
//   <root>/logs/*.jsonl            append-only record logs
//   <root>/queue.json              validation queue (rewritten atomically)
//   <root>/outputs/*.csv           indices, reliability, battery
//   <root>/reports/*.csv           report bundle

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/study_design.hpp"

namespace vorient {

// Append-only JSON-lines file. Appends are serialized; a torn final line
// (interrupted write) is ignored on read.
class JsonlLog {
 public:
  explicit JsonlLog(std::filesystem::path path);

  void append(const nlohmann::json& record);
  void append_all(const std::vector<nlohmann::json>& records);
  std::vector<nlohmann::json> read_all() const;
  // Atomically replaces the whole file. Only for logs whose records are
  // superseded by design (expert codes); the superseded lines must already
  // be preserved elsewhere.
  void rewrite(const std::vector<nlohmann::json>& records);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
};

inline constexpr int kStoreSchemaVersion = 1;

class StudyStore {
 public:
  // Creates the layout and manifest, or verifies that an existing manifest
  // was written for the same config. Throws StoreError("different study")
  // on a hash mismatch.
  static std::unique_ptr<StudyStore> open_or_init(const std::filesystem::path& root, const StudyConfig& config);

  StudyStore(const StudyStore&) = delete;
  StudyStore& operator=(const StudyStore&) = delete;

  const std::filesystem::path& root() const { return root_; }
  const std::string& config_hash() const { return config_hash_; }
  bool freshly_created() const { return fresh_; }

  std::string put_image(std::span<const std::uint8_t> bytes, const std::string& format);
  std::filesystem::path image_path(const std::string& image_ref, const std::string& format) const;
  std::vector<std::uint8_t> read_image(const std::string& image_ref,
                                       const std::string& format) const;

  JsonlLog& images() { return images_; }
  JsonlLog& raw_outputs() { return raw_outputs_; }
  JsonlLog& coding() { return coding_; }
  JsonlLog& consensus() { return consensus_; }
  JsonlLog& expert_codes() { return expert_codes_; }
  JsonlLog& sessions() { return sessions_; }
  JsonlLog& failures() { return failures_; }
  JsonlLog& audit() { return audit_; }

  std::filesystem::path prompts_dir() const { return root_ / "prompts"; }
  std::filesystem::path queue_path() const { return root_ / "queue.json"; }
  std::filesystem::path outputs_dir() const { return root_ / "outputs"; }
  std::filesystem::path reports_dir() const { return root_ / "reports"; }

  nlohmann::json manifest() const;
  void record_stage(const std::string& stage, const nlohmann::json& summary,
                    const std::string& timestamp);
  bool stage_completed(const std::string& stage) const;
  void record_prompt_version(const std::string& version);

 private:
  StudyStore(std::filesystem::path root, std::string hash, nlohmann::json manifest, bool fresh);
  void save_manifest_locked();

  std::filesystem::path root_;
  std::string config_hash_;
  mutable std::mutex manifest_mu_;
  nlohmann::json manifest_;
  bool fresh_;
  JsonlLog images_;
  JsonlLog raw_outputs_;
  JsonlLog coding_;
  JsonlLog consensus_;
  JsonlLog expert_codes_;
  JsonlLog sessions_;
  JsonlLog failures_;
  JsonlLog audit_;
};

}  // namespace vorient
