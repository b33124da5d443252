// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/study_design.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "vorient/error.hpp"
#include "vorient/hashing.hpp"

namespace vorient {

using nlohmann::json;

std::string_view to_string(Region r) { return r == Region::kWest ? "West" : "East"; }

std::string_view to_string(ConceptCategory c) {
  switch (c) {
    case ConceptCategory::kNationalIdentity: return "national_identity";
    case ConceptCategory::kDemographic: return "demographic";
    case ConceptCategory::kCulturalArtifact: return "cultural_artifact";
  }
  return "demographic";
}

std::string_view to_string(ProviderKind k) {
  return k == ProviderKind::kMock ? "mock" : "remote_api";
}

namespace {

Region parse_region(const std::string& s) {
  if (s == "West") return Region::kWest;
  if (s == "East") return Region::kEast;
  throw ConfigError("unknown region '" + s + "' (expected West or East)");
}

ConceptCategory parse_category(const std::string& s) {
  if (s == "national_identity") return ConceptCategory::kNationalIdentity;
  if (s == "demographic") return ConceptCategory::kDemographic;
  if (s == "cultural_artifact") return ConceptCategory::kCulturalArtifact;
  throw ConfigError("unknown concept category '" + s + "'");
}

ProviderKind parse_kind(const std::string& s) {
  if (s == "mock") return ProviderKind::kMock;
  if (s == "remote_api") return ProviderKind::kRemoteApi;
  throw ConfigError("unknown provider_kind '" + s + "'");
}

EntropyVariant parse_entropy_variant(const std::string& s) {
  if (s == "base2_bucketed") return EntropyVariant::kBase2Bucketed;
  if (s == "base2_unbucketed") return EntropyVariant::kBase2Unbucketed;
  if (s == "natural_bucketed") return EntropyVariant::kNaturalBucketed;
  throw ConfigError("unknown entropy_variant '" + s + "'");
}

std::string_view to_string(EntropyVariant v) {
  switch (v) {
    case EntropyVariant::kBase2Bucketed: return "base2_bucketed";
    case EntropyVariant::kBase2Unbucketed: return "base2_unbucketed";
    case EntropyVariant::kNaturalBucketed: return "natural_bucketed";
  }
  return "base2_bucketed";
}

// Lowercase slug: [a-z0-9.]+ segments joined by single dashes.
bool is_slug(std::string_view id) {
  if (id.empty() || id.front() == '-' || id.back() == '-') return false;
  char prev = 0;
  for (char c : id) {
    bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '.';
    if (!ok || (c == '-' && prev == '-')) return false;
    prev = c;
  }
  return true;
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string require_string(const json& obj, const char* key, const char* what) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ConfigError(std::string(what) + " entry is missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

Country country(std::string id, std::string name, Region r, bool core = false) {
  return Country{std::move(id), std::move(name), r, core};
}

Concept concept_entry(std::string id, ConceptCategory c) {
  std::string name = id;
  return Concept{std::move(id), std::move(name), c};
}

}  // namespace

StudyConfig default_study_config() {
  StudyConfig c;
  c.countries = {
      country("usa", "United States", Region::kWest, true),
      country("uk", "United Kingdom", Region::kWest, true),
      country("france", "France", Region::kWest),
      country("germany", "Germany", Region::kWest),
      country("australia", "Australia", Region::kWest),
      country("china", "China", Region::kEast),
      country("india", "India", Region::kEast),
      country("japan", "Japan", Region::kEast),
      country("south-korea", "South Korea", Region::kEast),
      country("brazil", "Brazil", Region::kEast),
      country("russia", "Russia", Region::kEast),
      country("egypt", "Egypt", Region::kEast),
  };
  using CC = ConceptCategory;
  c.concepts = {
      concept_entry("country", CC::kNationalIdentity),
      concept_entry("people", CC::kDemographic),
      concept_entry("women", CC::kDemographic),
      concept_entry("men", CC::kDemographic),
      concept_entry("elderly", CC::kDemographic),
      concept_entry("children", CC::kDemographic),
      concept_entry("students", CC::kDemographic),
      concept_entry("cities", CC::kCulturalArtifact),
      concept_entry("architecture", CC::kCulturalArtifact),
      concept_entry("festivals", CC::kCulturalArtifact),
      concept_entry("cuisine", CC::kCulturalArtifact),
  };
  c.models = {
      ModelSpec{"gpt-image-1", "GPT-Image-1", ProviderKind::kRemoteApi,
                json{{"adapter", "openai_images"},
                     {"base_url", "https://api.openai.com"},
                     {"model", "gpt-image-1"}}},
      ModelSpec{"midjourney", "Midjourney", ProviderKind::kRemoteApi,
                json{{"adapter", "http_bridge"},
                     {"base_url", "http://127.0.0.1:8787"},
                     {"path", "/generate"}}},
      ModelSpec{"nanobanana", "NanoBanana", ProviderKind::kRemoteApi,
                json{{"adapter", "gemini_images"},
                     {"base_url", "https://generativelanguage.googleapis.com"},
                     {"model", "gemini-2.5-flash-image"}}},
  };
  c.coders = {
      VlmCoderSpec{"qwen3-vl-32b", "Qwen3-VL-32B-Instruct", ProviderKind::kRemoteApi,
                   "c6-final",
                   json{{"adapter", "openai_chat"},
                        {"base_url", "https://dashscope-intl.aliyuncs.com"},
                        {"path", "/compatible-mode/v1/chat/completions"},
                        {"model", "qwen3-vl-32b-instruct"},
                        {"api_key_env", "QWEN_API_KEY"}}},
      VlmCoderSpec{"gpt-5", "GPT-5", ProviderKind::kRemoteApi, "c6-final",
                   json{{"adapter", "openai_chat"},
                        {"base_url", "https://api.openai.com"},
                        {"model", "gpt-5"}}},
      VlmCoderSpec{"gemini-2.5-flash", "Gemini 2.5 Flash", ProviderKind::kRemoteApi,
                   "c6-final",
                   json{{"adapter", "gemini_vision"},
                        {"base_url", "https://generativelanguage.googleapis.com"},
                        {"model", "gemini-2.5-flash"}}},
      VlmCoderSpec{"claude-haiku-4.5", "Claude Haiku 4.5", ProviderKind::kRemoteApi,
                   "c6-final",
                   json{{"adapter", "anthropic_messages"},
                        {"base_url", "https://api.anthropic.com"},
                        {"model", "claude-haiku-4-5"}}},
  };
  return c;
}

StudyConfig parse_study_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("study config must be a JSON object");
  StudyConfig c;
  for (const auto& e : doc.value("countries", json::array())) {
    Country x;
    x.id = require_string(e, "id", "country");
    x.display_name = get_or<std::string>(e, "display_name", x.id);
    x.region = parse_region(require_string(e, "region", "country"));
    x.english_core = get_or<bool>(e, "english_core", false);
    c.countries.push_back(std::move(x));
  }
  for (const auto& e : doc.value("concepts", json::array())) {
    Concept x;
    x.id = require_string(e, "id", "concept");
    x.display_name = get_or<std::string>(e, "display_name", x.id);
    x.category = parse_category(require_string(e, "category", "concept"));
    c.concepts.push_back(std::move(x));
  }
  for (const auto& e : doc.value("models", json::array())) {
    ModelSpec x;
    x.id = require_string(e, "id", "model");
    x.display_name = get_or<std::string>(e, "display_name", x.id);
    x.provider_kind = parse_kind(get_or<std::string>(e, "provider_kind", "mock"));
    x.endpoint_config = e.value("endpoint", json::object());
    c.models.push_back(std::move(x));
  }
  for (const auto& e : doc.value("coders", json::array())) {
    VlmCoderSpec x;
    x.id = require_string(e, "id", "coder");
    x.display_name = get_or<std::string>(e, "display_name", x.id);
    x.provider_kind = parse_kind(get_or<std::string>(e, "provider_kind", "mock"));
    x.prompt_version = get_or<std::string>(e, "prompt_version", "c6-final");
    x.endpoint_config = e.value("endpoint", json::object());
    c.coders.push_back(std::move(x));
  }
  if (auto it = doc.find("image_size"); it != doc.end()) {
    c.image_size.width = get_or<int>(*it, "width", 1024);
    c.image_size.height = get_or<int>(*it, "height", 1024);
  }
  c.prompt_template_version =
      get_or<std::string>(doc, "prompt_template_version", c.prompt_template_version);
  c.seed = get_or<std::int64_t>(doc, "seed", 0);
  if (auto it = doc.find("providers"); it != doc.end()) {
    auto& p = c.providers;
    p.max_attempts = get_or<int>(*it, "max_attempts", p.max_attempts);
    p.initial_backoff_ms = get_or<int>(*it, "initial_backoff_ms", p.initial_backoff_ms);
    p.requests_per_second = get_or<double>(*it, "requests_per_second", p.requests_per_second);
    p.timeout_seconds = get_or<int>(*it, "timeout_seconds", p.timeout_seconds);
    p.workers = get_or<int>(*it, "workers", p.workers);
    p.strict_mock_images = get_or<bool>(*it, "strict_mock_images", p.strict_mock_images);
  }
  if (auto it = doc.find("quality"); it != doc.end()) {
    auto& q = c.quality;
    q.entropy_variant =
        parse_entropy_variant(get_or<std::string>(*it, "entropy_variant", "base2_bucketed"));
    q.high_threshold = get_or<double>(*it, "high_threshold", q.high_threshold);
    q.medium_threshold = get_or<double>(*it, "medium_threshold", q.medium_threshold);
    q.validation_budget = get_or<int>(*it, "validation_budget", q.validation_budget);
  }
  if (auto it = doc.find("reliability"); it != doc.end()) {
    c.count_tolerance = get_or<int>(*it, "count_tolerance", c.count_tolerance);
  }

  // Credentials come from the environment only; a config may name the
  // variable ("api_key_env") but never carry the secret itself.
  auto reject_secrets = [](const json& endpoint, const std::string& owner) {
    for (const auto& [key, _] : endpoint.items()) {
      if (key == "api_key_env") continue;
      for (const char* word : {"key", "token", "secret", "password", "authorization"}) {
        if (key.find(word) != std::string::npos) {
          throw ConfigError("endpoint of '" + owner + "' has field '" + key +
                            "'; credentials must come from environment variables");
        }
      }
    }
  };
  for (const auto& m : c.models) reject_secrets(m.endpoint_config, m.id);
  for (const auto& m : c.coders) reject_secrets(m.endpoint_config, m.id);

  for (const auto& x : c.countries) {
    if (x.english_core && x.region != Region::kWest) {
      throw ConfigError("country '" + x.id + "' is english_core but not in region West");
    }
  }
  if (c.image_size.width <= 0 || c.image_size.height <= 0) {
    throw ConfigError("image_size must be positive");
  }
  if (c.providers.max_attempts < 1) throw ConfigError("providers.max_attempts must be >= 1");
  if (c.providers.workers < 1) throw ConfigError("providers.workers must be >= 1");
  if (!(c.quality.medium_threshold >= 0.0 &&
        c.quality.medium_threshold < c.quality.high_threshold)) {
    throw ConfigError("quality thresholds must satisfy 0 <= medium < high");
  }
  return c;
}

StudyConfig load_study_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open study config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("study config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_study_config(doc);
}

json to_json(const StudyConfig& c) {
  json doc;
  doc["schema_version"] = 1;
  doc["countries"] = json::array();
  for (const auto& x : c.countries) {
    doc["countries"].push_back({{"id", x.id},
                                {"display_name", x.display_name},
                                {"region", to_string(x.region)},
                                {"english_core", x.english_core}});
  }
  doc["concepts"] = json::array();
  for (const auto& x : c.concepts) {
    doc["concepts"].push_back(
        {{"id", x.id}, {"display_name", x.display_name}, {"category", to_string(x.category)}});
  }
  doc["models"] = json::array();
  for (const auto& x : c.models) {
    doc["models"].push_back({{"id", x.id},
                             {"display_name", x.display_name},
                             {"provider_kind", to_string(x.provider_kind)},
                             {"endpoint", x.endpoint_config}});
  }
  doc["coders"] = json::array();
  for (const auto& x : c.coders) {
    doc["coders"].push_back({{"id", x.id},
                             {"display_name", x.display_name},
                             {"provider_kind", to_string(x.provider_kind)},
                             {"prompt_version", x.prompt_version},
                             {"endpoint", x.endpoint_config}});
  }
  doc["image_size"] = {{"width", c.image_size.width}, {"height", c.image_size.height}};
  doc["prompt_template_version"] = c.prompt_template_version;
  doc["seed"] = c.seed;
  doc["providers"] = {{"max_attempts", c.providers.max_attempts},
                      {"initial_backoff_ms", c.providers.initial_backoff_ms},
                      {"requests_per_second", c.providers.requests_per_second},
                      {"timeout_seconds", c.providers.timeout_seconds},
                      {"workers", c.providers.workers},
                      {"strict_mock_images", c.providers.strict_mock_images}};
  doc["quality"] = {{"entropy_variant", to_string(c.quality.entropy_variant)},
                    {"high_threshold", c.quality.high_threshold},
                    {"medium_threshold", c.quality.medium_threshold},
                    {"validation_budget", c.quality.validation_budget}};
  doc["reliability"] = {{"count_tolerance", c.count_tolerance}};
  return doc;
}

std::string config_hash(const StudyConfig& config) {
  // Worker count does not change results, so it stays out of the identity.
  json doc = to_json(config);
  doc["providers"].erase("workers");
  return sha256_hex(doc.dump());
}

void force_mock(StudyConfig& config) {
  for (auto& m : config.models) m.provider_kind = ProviderKind::kMock;
  for (auto& c : config.coders) c.provider_kind = ProviderKind::kMock;
}

std::string make_cell_id(std::string_view country, std::string_view concept_id,
                         std::string_view model) {
  std::string id;
  id.reserve(country.size() + concept_id.size() + model.size() + 4);
  id.append(country).append("--").append(concept_id).append("--").append(model);
  std::transform(id.begin(), id.end(), id.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return id;
}

StudyDesign::StudyDesign(StudyConfig config, std::vector<StudyCell> cells)
    : config_(std::move(config)), cells_(std::move(cells)) {}

namespace {
template <typename T>
const T& find_by_id(const std::vector<T>& items, std::string_view id, const char* what) {
  for (const auto& item : items) {
    if (item.id == id) return item;
  }
  throw LookupError(std::string("unknown ") + what + " id '" + std::string(id) + "'");
}
}  // namespace

const Country& StudyDesign::country(std::string_view id) const {
  return find_by_id(config_.countries, id, "country");
}
const Concept& StudyDesign::concept_of(std::string_view id) const {
  return find_by_id(config_.concepts, id, "concept");
}
const ModelSpec& StudyDesign::model(std::string_view id) const {
  return find_by_id(config_.models, id, "model");
}

const StudyCell* StudyDesign::find_cell(std::string_view cell_id) const {
  for (const auto& c : cells_) {
    if (c.cell_id == cell_id) return &c;
  }
  return nullptr;
}

const StudyCell& StudyDesign::cell(std::string_view cell_id) const {
  if (const auto* c = find_cell(cell_id)) return *c;
  throw LookupError("unknown cell id '" + std::string(cell_id) + "'");
}

namespace {
template <typename T>
void check_registry(const std::vector<T>& items, const char* what) {
  if (items.empty()) throw ConfigError(std::string(what) + " registry is empty");
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (!is_slug(item.id)) {
      throw ConfigError(std::string(what) + " id '" + item.id +
                        "' is not a lowercase slug");
    }
    if (!seen.insert(item.id).second) {
      throw ConfigError(std::string("duplicate ") + what + " id '" + item.id + "'");
    }
  }
}
}  // namespace

StudyDesign build_design(const StudyConfig& config) {
  check_registry(config.countries, "country");
  check_registry(config.concepts, "concept");
  check_registry(config.models, "model");
  if (!config.coders.empty()) check_registry(config.coders, "coder");

  std::vector<StudyCell> cells;
  cells.reserve(config.countries.size() * config.concepts.size() * config.models.size());
  for (const auto& country : config.countries) {
    for (const auto& con : config.concepts) {
      for (const auto& model : config.models) {
        cells.push_back(StudyCell{country.id, con.id, model.id,
                                  make_cell_id(country.id, con.id, model.id)});
      }
    }
  }
  return StudyDesign(config, std::move(cells));
}

std::string build_prompt(const StudyDesign& design, const StudyCell& cell) {
  const Country& country = design.country(cell.country);
  const Concept& con = design.concept_of(cell.concept_id);
  // "[Concept] in [Country]" reads wrong for the country itself.
  if (con.category == ConceptCategory::kNationalIdentity) return country.display_name;
  return con.display_name + " in " + country.display_name;
}

std::string group_key(const StudyDesign& design, const StudyCell& cell, Grouping grouping) {
  switch (grouping) {
    case Grouping::kWestEast:
      return std::string(to_string(design.country(cell.country).region));
    case Grouping::kEnglishCoreVsRest:
      return design.country(cell.country).english_core ? "core" : "rest";
    case Grouping::kByCountry: return cell.country;
    case Grouping::kByConcept: return cell.concept_id;
    case Grouping::kByModel: return cell.model;
  }
  return {};
}

std::vector<CellGroup> group_cells(const StudyDesign& design, Grouping grouping) {
  std::vector<std::string> order;
  switch (grouping) {
    case Grouping::kWestEast: order = {"West", "East"}; break;
    case Grouping::kEnglishCoreVsRest: order = {"core", "rest"}; break;
    case Grouping::kByCountry:
      for (const auto& c : design.config().countries) order.push_back(c.id);
      break;
    case Grouping::kByConcept:
      for (const auto& c : design.config().concepts) order.push_back(c.id);
      break;
    case Grouping::kByModel:
      for (const auto& m : design.config().models) order.push_back(m.id);
      break;
  }
  std::map<std::string, std::size_t> slot;
  std::vector<CellGroup> groups;
  for (const auto& key : order) {
    slot[key] = groups.size();
    groups.push_back(CellGroup{key, {}});
  }
  for (const auto& cell : design.cells()) {
    groups[slot.at(group_key(design, cell, grouping))].cells.push_back(cell);
  }
  std::erase_if(groups, [](const CellGroup& g) { return g.cells.empty(); });
  return groups;
}

}  // namespace vorient
