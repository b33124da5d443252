// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/coding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "vorient/util.hpp"

namespace vorient {

using nlohmann::json;

std::string_view dimension_id(Dimension d) {
  switch (d) {
    case Dimension::kPolitical: return "political_symbols";
    case Dimension::kCultural: return "cultural_symbols";
    case Dimension::kFlag: return "flag_appearance";
    case Dimension::kSovereignty: return "sovereignty";
    case Dimension::kModernity: return "modernity";
  }
  return "?";
}

std::string_view to_string(DimensionKind k) {
  switch (k) {
    case DimensionKind::kCount: return "count";
    case DimensionKind::kOrdinal: return "ordinal";
    case DimensionKind::kBinary: return "binary";
  }
  return "?";
}

std::string_view to_string(MeasurementLevel l) {
  switch (l) {
    case MeasurementLevel::kNominal: return "nominal";
    case MeasurementLevel::kOrdinal: return "ordinal";
    case MeasurementLevel::kInterval: return "interval";
  }
  return "?";
}

CodingScheme default_scheme() {
  CodingScheme s;
  s.version = "appendix-c-v1";
  const char* counting_rule =
      "Count every visible instance separately: if you see 3 flags, count 3 (not 1).";
  s.dimensions.push_back({"political_symbols", "Political symbols", DimensionKind::kCount, 0,
                          std::nullopt, MeasurementLevel::kInterval, {},
                          std::string("Flags, emblems, government buildings, political figures, "
                                      "military and party symbols. ") +
                              counting_rule});
  s.dimensions.push_back({"cultural_symbols", "Cultural symbols", DimensionKind::kCount, 0,
                          std::nullopt, MeasurementLevel::kInterval, {},
                          std::string("Traditional clothing (per person), cultural architecture, "
                                      "artworks, activities and objects. ") +
                              counting_rule});
  s.dimensions.push_back({"flag_appearance", "Flag appearance", DimensionKind::kOrdinal, 0, 4,
                          MeasurementLevel::kOrdinal,
                          {"No flag", "Flag pattern as symbolic element", "Flag as minor element",
                           "Flag as background or major element", "Flag as central focus"},
                          "Prominence of national flags: size, position, salience, composition."});
  s.dimensions.push_back({"sovereignty", "Sovereignty representation", DimensionKind::kBinary, 0, 1,
                          MeasurementLevel::kNominal,
                          {"No sovereignty representation", "Sovereignty representation present"},
                          "Flags, government buildings, political monuments, national emblems or "
                          "other symbols of state power."});
  s.dimensions.push_back({"modernity", "Modernity level", DimensionKind::kOrdinal, 1, 5,
                          MeasurementLevel::kOrdinal,
                          {"Fully traditional", "Mostly traditional",
                           "Mixed traditional and modern", "Mostly modern", "Fully modern"},
                          "Overall impression across clothing, architecture, technology and "
                          "scene; weight the setting when elements coexist."});
  return s;
}

json to_json(const CodingScheme& scheme) {
  json dims = json::array();
  for (const auto& d : scheme.dimensions) {
    json levels = json::array();
    for (std::size_t i = 0; i < d.level_labels.size(); ++i) {
      levels.push_back({{"value", d.min + static_cast<int>(i)}, {"label", d.level_labels[i]}});
    }
    dims.push_back({{"id", d.id},
                    {"label", d.label},
                    {"kind", to_string(d.kind)},
                    {"min", d.min},
                    {"max", d.max ? json(*d.max) : json(nullptr)},
                    {"measurement_level", to_string(d.level)},
                    {"levels", levels},
                    {"help", d.help}});
  }
  return {{"version", scheme.version}, {"dimensions", dims}};
}

std::vector<std::string> out_of_range_dimensions(const CodingScheme& scheme, const Codes& codes) {
  std::vector<std::string> bad;
  for (Dimension d : kAllDimensions) {
    if (!scheme.spec(d).admits(codes[d])) bad.emplace_back(dimension_id(d));
  }
  return bad;
}

json to_json(const CodingRecord& r) {
  json j = {{"cell_id", r.cell_id},
            {"coder_id", r.coder_id},
            {"coder_kind", r.coder_kind == CoderKind::kHuman ? "human" : "vlm"}};
  for (Dimension d : kAllDimensions) j[std::string(dimension_id(d))] = r.codes[d];
  j["political_symbols_list"] = r.political_symbols_list;
  j["cultural_symbols_list"] = r.cultural_symbols_list;
  j["reasoning"] = r.reasoning;
  j["confidence"] = r.confidence;
  j["confidence_defaulted"] = r.confidence_defaulted;
  j["prompt_version"] = r.prompt_version;
  j["valid"] = r.valid;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

CodingRecord coding_record_from_json(const json& j) {
  CodingRecord r;
  r.cell_id = j.at("cell_id").get<std::string>();
  r.coder_id = j.at("coder_id").get<std::string>();
  r.coder_kind = j.value("coder_kind", "vlm") == "human" ? CoderKind::kHuman : CoderKind::kVlm;
  for (Dimension d : kAllDimensions) {
    r.codes[d] = j.value(std::string(dimension_id(d)), r.codes[d]);
  }
  r.political_symbols_list = j.value("political_symbols_list", std::vector<std::string>{});
  r.cultural_symbols_list = j.value("cultural_symbols_list", std::vector<std::string>{});
  r.reasoning = j.value("reasoning", "");
  r.confidence = j.value("confidence", kMissingVlmConfidence);
  r.confidence_defaulted = j.value("confidence_defaulted", false);
  r.prompt_version = j.value("prompt_version", "");
  r.valid = j.value("valid", false);
  r.error = j.value("error", "");
  return r;
}

std::optional<json> extract_first_json_object(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
        break;
      }
    }
  }
  return std::nullopt;
}

namespace {

// Integers, integral floats ("3.0") and numeric strings are accepted;
// anything else is a parse failure.
int integer_code(const json& obj, std::string_view key) {
  auto it = obj.find(std::string(key));
  if (it == obj.end() || it->is_null()) {
    throw ParseError("missing code for " + std::string(key));
  }
  const json& v = *it;
  double x = 0;
  if (v.is_number_integer()) {
    const auto n = v.get<long long>();
    if (n > 1'000'000 || n < -1'000'000) {
      throw ParseError("implausible value for " + std::string(key));
    }
    return static_cast<int>(n);
  }
  if (v.is_number_float()) {
    x = v.get<double>();
  } else if (v.is_string()) {
    const std::string s = v.get<std::string>();
    char* end = nullptr;
    x = std::strtod(s.c_str(), &end);
    if (s.empty() || end == s.c_str() || *end != '\0') {
      throw ParseError("non-numeric value for " + std::string(key));
    }
  } else {
    throw ParseError("non-numeric value for " + std::string(key));
  }
  if (!std::isfinite(x) || x != std::floor(x) || std::fabs(x) > 1e6) {
    throw ParseError("non-integer value for " + std::string(key));
  }
  return static_cast<int>(x);
}

std::vector<std::string> string_list(const json& obj, const char* key) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_array()) return out;
  for (const auto& e : *it) out.push_back(e.is_string() ? e.get<std::string>() : e.dump());
  return out;
}

std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : ", ") + p;
  return s;
}

}  // namespace

CodingRecord parse_coder_output(const RawCoderOutput& raw, const CodingScheme& scheme) {
  if (raw.raw_text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ParseError("empty response from " + raw.coder_id);
  }
  auto obj = extract_first_json_object(raw.raw_text);
  if (!obj) throw ParseError("no JSON object in response from " + raw.coder_id);

  CodingRecord r;
  r.cell_id = raw.cell_id;
  r.coder_id = raw.coder_id;
  r.coder_kind = CoderKind::kVlm;
  r.prompt_version = raw.prompt_version;
  for (Dimension d : kAllDimensions) r.codes[d] = integer_code(*obj, dimension_id(d));

  const auto bad = out_of_range_dimensions(scheme, r.codes);
  if (!bad.empty()) throw ValidationError("out-of-range codes: " + join(bad));

  r.political_symbols_list = string_list(*obj, "political_symbols_list");
  r.cultural_symbols_list = string_list(*obj, "cultural_symbols_list");
  if (auto it = obj->find("reasoning"); it != obj->end()) {
    r.reasoning = it->is_string() ? it->get<std::string>() : it->dump();
  }
  // A confidence outside [0, 1] or of the wrong type is treated as absent.
  r.confidence = kMissingVlmConfidence;
  r.confidence_defaulted = true;
  if (auto it = obj->find("confidence"); it != obj->end() && it->is_number()) {
    const double c = it->get<double>();
    if (std::isfinite(c) && c >= 0.0 && c <= 1.0) {
      r.confidence = c;
      r.confidence_defaulted = false;
    }
  }
  r.valid = true;
  return r;
}

std::string serialize_codes(const CodingRecord& record) {
  json j = json::object();
  for (Dimension d : kAllDimensions) j[std::string(dimension_id(d))] = record.codes[d];
  j["political_symbols_list"] = record.political_symbols_list;
  j["cultural_symbols_list"] = record.cultural_symbols_list;
  j["reasoning"] = record.reasoning;
  if (!record.confidence_defaulted) j["confidence"] = record.confidence;
  return j.dump();
}

// The final refined prompt with the confidence field appended to the
// required output.
std::string_view builtin_final_prompt() {
  static const std::string text = R"(You are a professional visual content analyst. Please carefully observe this image and code it according to the following 5 dimensions:

Dimension 1: Political Symbols (0-unlimited)

Count the total number of political symbols by counting each visible instance separately, including: national flags (count each flag separately), emblems, political slogans; political figures, portraits, statues; government buildings (e.g., Capitol, presidential palace, parliament); military symbols (uniforms, weapons, military facilities); political markers (party emblems, political banners).

Counting rule: If you see 3 flags, count 3 (not 1). If you see 2 government buildings, count 2 (not 1).

Examples: U.S. Capitol = 1, American flag = 1 per flag, presidential portrait = 1, military uniform = 1 per person.

Dimension 2: Cultural Symbols (0-unlimited)

Count the total number of cultural symbols by counting each visible instance separately, including: traditional clothing (count each person wearing traditional attire), ethnic costumes; cultural architecture (temples, mosques, churches, pagodas, traditional buildings); cultural artworks (sculptures, paintings, calligraphy, crafts); cultural activities (festivals, rituals, ceremonies, traditional events); cultural objects (lanterns, prayer beads, traditional instruments, cultural food items).

Counting rule: If you see 5 red lanterns, count 5 (not 1). If you see 3 people in traditional clothing, count 3 (not 1).

Examples: Chinese lantern = 1 per lantern, Indian bindi = 1 per person, Japanese kimono = 1 per person, Middle Eastern calligraphy = 1 per artwork, African tribal pattern = 1 per instance.

Dimension 3: Flag Appearance (0-4)

Assess the visual prominence of national flags in the image:

0: No flag visible; 1: Flag pattern as small decorative element; 2: Flag clearly visible but not prominent; 3: Flag prominent as major visual element or background; 4: Flag as central focus dominating the image.

Judgment basis: Consider size, position, visual salience, and compositional role.

Dimension 4: Sovereignty Representation (0-1)

0: No sovereignty representation (no national symbols, no political symbols, no territorial markers); 1: Sovereignty representation present (national flags, emblems, government buildings, territorial maps, or other symbols of state sovereignty).

Dimension 5: Modernity Level (1-5)

Assess the overall modernity of the image based on clothing, architecture, technology, and scene context:

1: Fully traditional (entirely traditional elements, historical setting, no modern technology); 2: Mostly traditional (traditional elements dominate, minimal modern elements); 3: Mixed traditional and modern (balanced presence of both); 4: Mostly modern (modern elements dominate, some traditional elements); 5: Fully modern (entirely contemporary setting, modern technology, no traditional elements).

Judgment basis: Consider the overall impression. When traditional clothing appears in modern settings (e.g., traditional dress at contemporary event), weight the setting context. When modern and traditional elements coexist, assess which dominates the visual narrative.

Please provide: (1) Numerical scores for each dimension; (2) List of specific symbols observed; (3) Brief reasoning for each coding decision; (4) Your confidence in the overall coding, from 0 (guessing) to 1 (certain).

Output format (JSON): {"political_symbols": <count>, "cultural_symbols": <count>, "flag_appearance": <0-4>, "sovereignty": <0-1>, "modernity": <1-5>, "political_symbols_list": ["symbol1", "symbol2", ...], "cultural_symbols_list": ["symbol1", "symbol2", ...], "reasoning": "Brief explanation of coding decisions", "confidence": <0-1>}
)";
  return text;
}

PromptRegistry::PromptRegistry() { texts_.emplace(kFinalPromptVersion, builtin_final_prompt()); }

PromptRegistry::PromptRegistry(std::filesystem::path dir) : dir_(std::move(dir)) {
  namespace fs = std::filesystem;
  fs::create_directories(*dir_);
  for (const auto& entry : fs::directory_iterator(*dir_)) {
    if (entry.path().extension() != ".txt") continue;
    texts_.emplace(entry.path().stem().string(), util::read_text(entry.path()));
  }
  const std::string builtin(builtin_final_prompt());
  auto it = texts_.find(std::string(kFinalPromptVersion));
  if (it == texts_.end()) {
    util::write_atomic(*dir_ / (std::string(kFinalPromptVersion) + ".txt"), builtin);
    texts_.emplace(kFinalPromptVersion, builtin);
  } else if (it->second != builtin) {
    throw ValidationError("prompt version '" + std::string(kFinalPromptVersion) +
                          "' on disk differs from the built-in text");
  }
}

void PromptRegistry::register_version(const std::string& version, std::string text) {
  if (version.empty() || version.find_first_of("/\\. ") != std::string::npos) {
    throw ValidationError("invalid prompt version id '" + version + "'");
  }
  if (texts_.count(version)) {
    throw ValidationError("prompt version '" + version + "' is already registered");
  }
  if (dir_) util::write_atomic(*dir_ / (version + ".txt"), text);
  texts_.emplace(version, std::move(text));
}

const std::string& PromptRegistry::text(const std::string& version) const {
  auto it = texts_.find(version);
  if (it == texts_.end()) throw LookupError("unknown prompt version '" + version + "'");
  return it->second;
}

std::vector<std::string> PromptRegistry::versions() const {
  std::vector<std::string> v;
  for (const auto& [k, _] : texts_) v.push_back(k);
  return v;
}

std::string render_coding_prompt(const CodingScheme& scheme, const PromptRegistry& registry,
                                 const std::string& version) {
  const std::string& text = registry.text(version);
  std::vector<std::string> missing;
  for (const auto& d : scheme.dimensions) {
    if (text.find(d.id) == std::string::npos) missing.push_back(d.id);
  }
  if (!missing.empty()) {
    throw ValidationError("prompt '" + version + "' does not request " + join(missing));
  }
  return text;
}

namespace {

std::string reprompt_text(const std::string& prompt, const std::string& problem) {
  return prompt +
         "\n\nYour previous answer could not be used (" + problem +
         "). Reply with exactly one JSON object in the output format above, using integer "
         "codes within the stated ranges.";
}

}  // namespace

EnsembleResult code_with_ensemble(const ImageRecord& image,
                                  const std::vector<VlmCoderSpec>& coders,
                                  const CodingScheme& scheme, const std::string& prompt,
                                  const std::string& prompt_version, const CoderCall& call) {
  if (coders.size() < 2) throw ValidationError("ensemble coding needs at least 2 coders");
  EnsembleResult out;
  for (const auto& coder : coders) {
    CodingRecord record;
    record.cell_id = image.cell_id;
    record.coder_id = coder.id;
    record.prompt_version = prompt_version;
    std::string problem;
    for (int reprompt = 0; reprompt <= 1; ++reprompt) {
      const std::string text = reprompt ? reprompt_text(prompt, problem) : prompt;
      RawCoderOutput raw;
      try {
        raw = call(image, coder, text, reprompt);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kProvider) throw;
        problem = std::string("provider failure: ") + e.what();
        break;  // the gateway already retried
      }
      raw.prompt_version = prompt_version;
      out.raw.push_back(raw);
      try {
        record = parse_coder_output(raw, scheme);
        problem.clear();
        break;
      } catch (const ParseError& e) {
        problem = e.what();
      } catch (const ValidationError& e) {
        problem = e.what();
      }
    }
    if (!problem.empty()) {
      record.valid = false;
      record.error = problem;
    }
    out.records.push_back(std::move(record));
  }
  out.uncodable = std::none_of(out.records.begin(), out.records.end(),
                               [](const CodingRecord& r) { return r.valid; });
  return out;
}

}  // namespace vorient
