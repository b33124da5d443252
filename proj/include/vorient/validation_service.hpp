// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Expert validation backend: coder sessions, the blinded queue, image
// bytes, code submissions (last write wins) and progress counts. The HTTP
// layer in validation_http.hpp is a thin translation of these calls.

#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/coding.hpp"
#include "vorient/quality.hpp"
#include "vorient/study_design.hpp"

namespace vorient {

class StudyStore;
class Clock;

struct CoderSession {
  std::string coder_id;
  std::string display_name;
  std::string started_at;
};

// Codes that fail the scheme; `dimensions` names each offending field.
class InvalidCodesError : public ValidationError {
 public:
  InvalidCodesError(const std::string& what, std::vector<std::string> dimensions)
      : ValidationError(what), dimensions_(std::move(dimensions)) {}
  const std::vector<std::string>& dimensions() const { return dimensions_; }

 private:
  std::vector<std::string> dimensions_;
};

struct ExpertCodeSubmission {
  std::string cell_id;
  std::string coder_id;
  nlohmann::json codes;  // {dimension id: integer}
  std::string note;
};

struct SubmissionAck {
  std::string record_id;  // <cell_id>/<coder_id>/<n>, n counting resubmissions
  bool superseded_previous = false;
};

struct ProgressCounts {
  std::size_t pending = 0;
  std::size_t partially_coded = 0;
  std::size_t complete = 0;
};

struct Progress {
  std::size_t total = 0;
  ProgressCounts overall;
  std::map<std::string, std::size_t> coded_by_coder;
};

class ValidationService {
 public:
  // Loads queue.json, sessions and expert codes from the store. A missing
  // queue file is a StageOrderError naming the 'sample' stage.
  ValidationService(StudyStore& store, const StudyDesign& design, const Clock& clock);

  // Registers a coder, or returns the existing session for a known id.
  // Throws ValidationError for an id that is not a slug.
  CoderSession register_session(const std::string& coder_id, const std::string& display_name);
  std::vector<CoderSession> sessions() const;

  nlohmann::json scheme() const;

  // Entries this coder has not coded yet, in persisted order. Each entry is
  // {position, cell_id, priority, image_url}: no entropy, no AI codes, no
  // other coder's state. Unknown coder -> LookupError.
  nlohmann::json queue_for(const std::string& coder_id) const;

  // Image bytes and MIME type for a queued cell, with tEXt metadata
  // stripped from PNGs. Unknown cell -> LookupError.
  std::pair<std::vector<std::uint8_t>, std::string> image(const std::string& cell_id) const;

  // Unknown coder or cell -> LookupError; invalid codes -> InvalidCodesError.
  SubmissionAck submit(const ExpertCodeSubmission& submission);

  Progress progress() const;

  // The accepted (latest) record per (cell, coder).
  std::vector<CodingRecord> expert_records() const;

  const std::vector<ValidationQueueEntry>& queue() const { return queue_; }

 private:
  void persist_queue_locked();
  QueueStatus status_locked(const std::string& cell_id) const;

  StudyStore& store_;
  const StudyDesign& design_;
  const Clock& clock_;
  CodingScheme scheme_;
  mutable std::mutex mu_;
  std::vector<ValidationQueueEntry> queue_;
  std::map<std::string, CoderSession> sessions_;
  std::vector<std::string> session_order_;
  // (cell, coder) -> latest record JSON; submissions counted for record ids.
  std::map<std::pair<std::string, std::string>, nlohmann::json> accepted_;
  std::map<std::pair<std::string, std::string>, int> submissions_;
};

nlohmann::json to_json(const CoderSession& s);
nlohmann::json to_json(const Progress& p);

// Removes tEXt/zTXt/iTXt chunks from a PNG; other formats pass through.
std::vector<std::uint8_t> strip_png_text(std::span<const std::uint8_t> bytes);

}  // namespace vorient
