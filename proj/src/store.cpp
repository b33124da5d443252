// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/store.hpp"

#include <fstream>
#include <sstream>

#include "vorient/error.hpp"
#include "vorient/hashing.hpp"
#include "vorient/util.hpp"

namespace vorient {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Terminates or truncates an unterminated final line left by an interrupted
// append, so the next record starts on a line of its own.
void drop_torn_tail(const fs::path& path) {
  std::error_code ec;
  const auto size = fs::file_size(path, ec);
  if (ec || size == 0) return;
  std::ifstream in(path, std::ios::binary);
  in.seekg(-1, std::ios::end);
  if (in.get() == '\n') return;
  std::string content(size, '\0');
  in.seekg(0);
  in.read(content.data(), static_cast<std::streamsize>(size));
  const auto last = content.rfind('\n');
  const auto keep = last == std::string::npos ? 0 : last + 1;
  in.close();
  if (json::accept(std::string_view(content).substr(keep))) {
    // The record is whole; only its newline is missing.
    std::ofstream(path, std::ios::binary | std::ios::app) << '\n';
    return;
  }
  fs::resize_file(path, keep, ec);
  if (ec) throw StoreError("cannot repair torn record in '" + path.string() + "'");
}

}  // namespace

JsonlLog::JsonlLog(fs::path path) : path_(std::move(path)) {}

void JsonlLog::append(const json& record) { append_all({record}); }

void JsonlLog::append_all(const std::vector<json>& records) {
  if (records.empty()) return;
  std::string chunk;
  for (const auto& r : records) {
    chunk += r.dump();
    chunk += '\n';
  }
  std::lock_guard lock(mu_);
  drop_torn_tail(path_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) throw StoreError("cannot append to '" + path_.string() + "'");
  out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  out.flush();
  if (!out) throw StoreError("short write to '" + path_.string() + "'");
}

void JsonlLog::rewrite(const std::vector<json>& records) {
  std::string content;
  for (const auto& r : records) {
    content += r.dump();
    content += '\n';
  }
  std::lock_guard lock(mu_);
  util::write_atomic(path_, content);
}

std::vector<json> JsonlLog::read_all() const {
  std::lock_guard lock(mu_);
  std::vector<json> out;
  std::ifstream in(path_, std::ios::binary);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A line without its newline is a torn append; anything else that fails
    // to parse is corruption.
    const bool terminated = !in.eof();
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error&) {
      if (terminated) throw StoreError("corrupt record in '" + path_.string() + "'");
    }
  }
  return out;
}

namespace {

json file_schemas() {
  return {{"images.jsonl", 1},    {"raw_outputs.jsonl", 1}, {"coding.jsonl", 1},
          {"consensus.jsonl", 1}, {"expert_codes.jsonl", 1}, {"sessions.jsonl", 1},
          {"failures.jsonl", 1},  {"audit.jsonl", 1},        {"queue.json", 1},
          {"indices.csv", 1},     {"reliability.csv", 1},    {"battery.csv", 1}};
}

json initial_manifest(const StudyConfig& config, const std::string& hash) {
  json models = json::array();
  for (const auto& m : config.models) {
    models.push_back({{"id", m.id}, {"provider_kind", to_string(m.provider_kind)}});
  }
  json coders = json::array();
  for (const auto& c : config.coders) {
    coders.push_back({{"id", c.id},
                      {"provider_kind", to_string(c.provider_kind)},
                      {"prompt_version", c.prompt_version}});
  }
  return {{"schema_version", kStoreSchemaVersion},
          {"config_hash", hash},
          {"prompt_versions", json::array()},
          {"providers", {{"models", models}, {"coders", coders}}},
          {"file_schemas", file_schemas()},
          {"stages", json::object()}};
}

}  // namespace

StudyStore::StudyStore(fs::path root, std::string hash, json manifest, bool fresh)
    : root_(std::move(root)),
      config_hash_(std::move(hash)),
      manifest_(std::move(manifest)),
      fresh_(fresh),
      images_(root_ / "logs" / "images.jsonl"),
      raw_outputs_(root_ / "logs" / "raw_outputs.jsonl"),
      coding_(root_ / "logs" / "coding.jsonl"),
      consensus_(root_ / "logs" / "consensus.jsonl"),
      expert_codes_(root_ / "logs" / "expert_codes.jsonl"),
      sessions_(root_ / "logs" / "sessions.jsonl"),
      failures_(root_ / "logs" / "failures.jsonl"),
      audit_(root_ / "logs" / "audit.jsonl") {}

std::unique_ptr<StudyStore> StudyStore::open_or_init(const fs::path& root, const StudyConfig& config) {
  const std::string hash = vorient::config_hash(config);
  const fs::path manifest_path = root / "manifest.json";
  std::error_code ec;
  if (fs::exists(manifest_path)) {
    json manifest;
    try {
      manifest = json::parse(util::read_text(manifest_path));
    } catch (const json::exception& e) {
      throw StoreError("unreadable manifest in '" + root.string() + "': " + e.what());
    }
    const std::string stored = manifest.value("config_hash", "");
    if (stored != hash) {
      throw StoreError("different study: store '" + root.string() + "' was created for config " +
                       stored.substr(0, 12) + ", the loaded config hashes to " +
                       hash.substr(0, 12));
    }
    return std::unique_ptr<StudyStore>(new StudyStore(root, hash, std::move(manifest), false));
  }
  fs::create_directories(root, ec);
  if (ec) throw StoreError("cannot create store '" + root.string() + "': " + ec.message());
  for (const char* sub : {"images", "prompts", "logs", "outputs", "reports"}) {
    fs::create_directories(root / sub, ec);
    if (ec) throw StoreError("cannot create '" + (root / sub).string() + "'");
  }
  json manifest = initial_manifest(config, hash);
  util::write_atomic(root / "config.json", to_json(config).dump(2) + "\n");
  util::write_atomic(manifest_path, manifest.dump(2) + "\n");
  return std::unique_ptr<StudyStore>(new StudyStore(root, hash, std::move(manifest), true));
}

std::string StudyStore::put_image(std::span<const std::uint8_t> bytes, const std::string& format) {
  const std::string ref = sha256_hex(bytes);
  const fs::path path = image_path(ref, format);
  if (!fs::exists(path)) util::write_atomic(path, bytes);
  return ref;
}

fs::path StudyStore::image_path(const std::string& image_ref, const std::string& format) const {
  return root_ / "images" / (image_ref + "." + format);
}

std::vector<std::uint8_t> StudyStore::read_image(const std::string& image_ref,
                                                 const std::string& format) const {
  auto bytes = util::read_bytes(image_path(image_ref, format));
  if (sha256_hex(bytes) != image_ref) {
    throw StoreError("image " + image_ref + " does not match its content hash");
  }
  return bytes;
}

json StudyStore::manifest() const {
  std::lock_guard lock(manifest_mu_);
  return manifest_;
}

void StudyStore::save_manifest_locked() {
  util::write_atomic(root_ / "manifest.json", manifest_.dump(2) + "\n");
}

void StudyStore::record_stage(const std::string& stage, const json& summary,
                              const std::string& timestamp) {
  std::lock_guard lock(manifest_mu_);
  auto& entry = manifest_["stages"][stage];
  entry["completed_at"] = timestamp;
  entry["summary"] = summary;
  save_manifest_locked();
}

bool StudyStore::stage_completed(const std::string& stage) const {
  std::lock_guard lock(manifest_mu_);
  return manifest_.contains("stages") && manifest_["stages"].contains(stage);
}

void StudyStore::record_prompt_version(const std::string& version) {
  std::lock_guard lock(manifest_mu_);
  auto& versions = manifest_["prompt_versions"];
  for (const auto& v : versions) {
    if (v == version) return;
  }
  versions.push_back(version);
  save_manifest_locked();
}

}  // namespace vorient
