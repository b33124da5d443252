// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Study registries, configuration and the country x concept x model design.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vorient {

enum class Region { kWest, kEast };
enum class ConceptCategory { kNationalIdentity, kDemographic, kCulturalArtifact };
enum class ProviderKind { kRemoteApi, kMock };

std::string_view to_string(Region r);
std::string_view to_string(ConceptCategory c);
std::string_view to_string(ProviderKind k);

struct Country {
  std::string id;
  std::string display_name;
  Region region = Region::kEast;
  bool english_core = false;
};

struct Concept {
  std::string id;
  std::string display_name;
  ConceptCategory category = ConceptCategory::kDemographic;
};

// Opaque per-provider settings. Secrets never live here; only the name of
// the environment variable holding them may be overridden.
struct ModelSpec {
  std::string id;
  std::string display_name;
  ProviderKind provider_kind = ProviderKind::kMock;
  nlohmann::json endpoint_config = nlohmann::json::object();
};

struct VlmCoderSpec {
  std::string id;
  std::string display_name;
  ProviderKind provider_kind = ProviderKind::kMock;
  std::string prompt_version = "c6-final";
  nlohmann::json endpoint_config = nlohmann::json::object();
};

struct ImageSize {
  int width = 1024;
  int height = 1024;
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

struct ProviderSettings {
  int max_attempts = 3;
  int initial_backoff_ms = 1000;
  double requests_per_second = 1.0;
  int timeout_seconds = 120;
  int workers = 4;
  // Full-size mock images instead of small solid-pattern ones.
  bool strict_mock_images = false;
};

enum class EntropyVariant { kBase2Bucketed, kBase2Unbucketed, kNaturalBucketed };

struct QualitySettings {
  EntropyVariant entropy_variant = EntropyVariant::kBase2Bucketed;
  double high_threshold = 0.6;
  double medium_threshold = 0.4;
  int validation_budget = 67;
};

struct StudyConfig {
  std::vector<Country> countries;
  std::vector<Concept> concepts;
  std::vector<ModelSpec> models;
  std::vector<VlmCoderSpec> coders;
  ImageSize image_size;
  std::string prompt_template_version = "c6-final";
  std::int64_t seed = 0;
  ProviderSettings providers;
  QualitySettings quality;
  int count_tolerance = 1;
};

// The 12 x 11 x 3 registry with a four-coder ensemble, all remote.
StudyConfig default_study_config();

StudyConfig parse_study_config(const nlohmann::json& doc);
StudyConfig load_study_config(const std::filesystem::path& path);
nlohmann::json to_json(const StudyConfig& config);

// SHA-256 (hex) of the canonical JSON serialization.
std::string config_hash(const StudyConfig& config);

// Forces every model and coder to the mock provider kind.
void force_mock(StudyConfig& config);

struct StudyCell {
  std::string country;
  std::string concept_id;
  std::string model;
  std::string cell_id;

  friend bool operator==(const StudyCell&, const StudyCell&) = default;
};

std::string make_cell_id(std::string_view country, std::string_view concept_id,
                         std::string_view model);

class StudyDesign {
 public:
  StudyDesign(StudyConfig config, std::vector<StudyCell> cells);

  const StudyConfig& config() const { return config_; }
  const std::vector<StudyCell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }

  const Country& country(std::string_view id) const;
  const Concept& concept_of(std::string_view id) const;
  const ModelSpec& model(std::string_view id) const;
  const StudyCell& cell(std::string_view cell_id) const;
  const StudyCell* find_cell(std::string_view cell_id) const;

 private:
  StudyConfig config_;
  std::vector<StudyCell> cells_;
};

// Country-major, then concept, then model.
StudyDesign build_design(const StudyConfig& config);

std::string build_prompt(const StudyDesign& design, const StudyCell& cell);

enum class Grouping { kWestEast, kEnglishCoreVsRest, kByCountry, kByConcept, kByModel };

struct CellGroup {
  std::string key;
  std::vector<StudyCell> cells;
};

// Exhaustive, disjoint partition. Group order follows registry order
// (West before East, core before rest).
std::vector<CellGroup> group_cells(const StudyDesign& design, Grouping grouping);

std::string group_key(const StudyDesign& design, const StudyCell& cell,
                      Grouping grouping);

}  // namespace vorient
