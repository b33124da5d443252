// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Five-dimension coding scheme, versioned coding prompts, and parsing of raw
// coder output into CodingRecords.

#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/error.hpp"
#include "vorient/providers.hpp"

namespace vorient {

enum class Dimension { kPolitical = 0, kCultural, kFlag, kSovereignty, kModernity };

inline constexpr std::size_t kNumDimensions = 5;
inline constexpr std::array<Dimension, kNumDimensions> kAllDimensions = {
    Dimension::kPolitical, Dimension::kCultural, Dimension::kFlag, Dimension::kSovereignty,
    Dimension::kModernity};

std::string_view dimension_id(Dimension d);

enum class DimensionKind { kCount, kOrdinal, kBinary };
enum class MeasurementLevel { kNominal, kOrdinal, kInterval };

std::string_view to_string(DimensionKind k);
std::string_view to_string(MeasurementLevel l);

struct DimensionSpec {
  std::string id;
  std::string label;
  DimensionKind kind = DimensionKind::kCount;
  int min = 0;
  std::optional<int> max;  // unbounded counts have no max
  MeasurementLevel level = MeasurementLevel::kInterval;
  std::vector<std::string> level_labels;  // one per admissible value for scales
  std::string help;

  bool admits(long long value) const {
    return value >= min && (!max || value <= *max);
  }
};

struct CodingScheme {
  std::vector<DimensionSpec> dimensions;
  std::string version;

  const DimensionSpec& spec(Dimension d) const {
    return dimensions.at(static_cast<std::size_t>(d));
  }
};

CodingScheme default_scheme();
nlohmann::json to_json(const CodingScheme& scheme);

// The five codes of one image, indexed by Dimension.
struct Codes {
  std::array<int, kNumDimensions> values{0, 0, 0, 0, 1};

  int& operator[](Dimension d) { return values[static_cast<std::size_t>(d)]; }
  int operator[](Dimension d) const { return values[static_cast<std::size_t>(d)]; }
  int political() const { return values[0]; }
  int cultural() const { return values[1]; }
  int flag() const { return values[2]; }
  int sovereignty() const { return values[3]; }
  int modernity() const { return values[4]; }

  friend bool operator==(const Codes&, const Codes&) = default;
};

// Dimensions whose value falls outside the scheme bounds.
std::vector<std::string> out_of_range_dimensions(const CodingScheme& scheme, const Codes& codes);

enum class CoderKind { kVlm, kHuman };

// Confidence assigned when a VLM response omits it.
inline constexpr double kMissingVlmConfidence = 0.5;
// Confidence recorded for human expert codes.
inline constexpr double kHumanConfidence = 1.0;

struct CodingRecord {
  std::string cell_id;
  std::string coder_id;
  CoderKind coder_kind = CoderKind::kVlm;
  Codes codes;
  std::vector<std::string> political_symbols_list;
  std::vector<std::string> cultural_symbols_list;
  std::string reasoning;
  double confidence = kMissingVlmConfidence;
  bool confidence_defaulted = false;
  std::string prompt_version;
  bool valid = false;
  std::string error;  // why the record is invalid
};

nlohmann::json to_json(const CodingRecord& r);
CodingRecord coding_record_from_json(const nlohmann::json& j);

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorCode::kParse, what) {}
};

// Finds the first balanced JSON object in free text (markdown fences, prose).
std::optional<nlohmann::json> extract_first_json_object(std::string_view text);

// Throws ParseError when no JSON object is present or a code is missing or
// not an integer, ValidationError (naming the offending dimensions) when a
// code is out of range.
CodingRecord parse_coder_output(const RawCoderOutput& raw, const CodingScheme& scheme);

// Renders the JSON object a conforming coder returns; parse_coder_output
// reproduces the codes of any valid record from it.
std::string serialize_codes(const CodingRecord& record);

// Immutable, versioned prompt texts. The built-in "c6-final" version is
// always present. When bound to a directory, versions are stored as
// <dir>/<version>.txt and loaded on construction.
class PromptRegistry {
 public:
  PromptRegistry();
  explicit PromptRegistry(std::filesystem::path dir);

  // Throws ValidationError if the version id is already registered.
  void register_version(const std::string& version, std::string text);
  const std::string& text(const std::string& version) const;
  bool contains(const std::string& version) const { return texts_.count(version) > 0; }
  std::vector<std::string> versions() const;

 private:
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, std::string> texts_;
};

inline constexpr std::string_view kFinalPromptVersion = "c6-final";

std::string_view builtin_final_prompt();

// Throws LookupError for an unknown version and ValidationError when the
// prompt does not request every dimension of the scheme.
std::string render_coding_prompt(const CodingScheme& scheme, const PromptRegistry& registry,
                                 const std::string& version);

// One provider call for one coder on one image. `reprompt` is 0 for the first
// request and 1 for the re-prompt after a parse or validation failure.
using CoderCall = std::function<RawCoderOutput(const ImageRecord& image,
                                               const VlmCoderSpec& coder,
                                               const std::string& prompt, int reprompt)>;

struct EnsembleResult {
  std::vector<CodingRecord> records;     // one per coder
  std::vector<RawCoderOutput> raw;       // every response, in request order
  bool uncodable = false;                // no coder produced a valid record
};

// Requires at least 2 coders. Parse and validation failures are re-prompted
// once; a second failure yields an invalid record. Provider failures (after
// the gateway's retries) also yield an invalid record.
EnsembleResult code_with_ensemble(const ImageRecord& image,
                                  const std::vector<VlmCoderSpec>& coders,
                                  const CodingScheme& scheme, const std::string& prompt,
                                  const std::string& prompt_version, const CoderCall& call);

}  // namespace vorient
