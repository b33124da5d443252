// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Stage orchestration over a study store:
//   design -> generate -> code -> consensus -> sample
//                                           -> reliability
//                                           -> analyze -> report
// Each stage checks its prerequisite in the manifest, skips completed work
// unless forced, and records itself in the manifest on success.

#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/coding.hpp"
#include "vorient/providers.hpp"
#include "vorient/quality.hpp"
#include "vorient/store.hpp"
#include "vorient/study_design.hpp"

namespace vorient {

enum class Stage { kDesign, kGenerate, kCode, kConsensus, kSample, kReliability, kAnalyze, kReport };

std::string_view to_string(Stage s);
// Throws ValidationError for an unknown name.
Stage parse_stage(std::string_view name);
// The stage that must have completed before `s`, if any.
std::optional<Stage> prerequisite(Stage s);

struct PipelineOptions {
  int parallel = 0;      // 0: providers.workers from the config
  bool force = false;    // redo completed work
  std::optional<int> budget;  // sample: overrides quality.validation_budget
  std::function<void(const std::string&)> progress;  // human-readable lines
};

class Pipeline {
 public:
  Pipeline(StudyConfig config, const std::filesystem::path& store_root, const Clock& clock,
           PipelineOptions options = {});
  ~Pipeline();

  // Runs one stage and returns its summary. Throws StageOrderError when the
  // prerequisite has not completed, ProviderFailure when provider calls
  // failed after retries (completed work is kept).
  nlohmann::json run(Stage stage);
  // Every stage in order; returns the list of summaries.
  nlohmann::json run_all();

  StudyStore& store() { return *store_; }
  const StudyDesign& design() const { return design_; }
  ProviderGateway& gateway() { return *gateway_; }
  PipelineOptions& options() { return options_; }

 private:
  nlohmann::json design_stage();
  nlohmann::json generate_stage();
  nlohmann::json code_stage();
  nlohmann::json consensus_stage();
  nlohmann::json sample_stage();
  nlohmann::json reliability_stage();
  nlohmann::json analyze_stage();
  nlohmann::json report_stage();

  void say(const std::string& line) const;
  int workers() const;

  StudyDesign design_;
  std::unique_ptr<StudyStore> store_;
  const Clock& clock_;
  PipelineOptions options_;
  std::unique_ptr<ProviderGateway> gateway_;
};

// Latest record per key from an append-only log.
std::vector<ImageRecord> latest_images(StudyStore& store);
std::vector<CodingRecord> latest_coding(StudyStore& store);
std::vector<ConsensusRecord> latest_consensus(StudyStore& store);
std::vector<CodingRecord> latest_expert_codes(StudyStore& store);

// True when every model and coder uses the mock provider.
bool all_mock(const StudyConfig& config);

// Mock stores are stamped with this instant.
inline constexpr std::string_view kMockInstant = "2025-09-01T00:00:00Z";

}  // namespace vorient
