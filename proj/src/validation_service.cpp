// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/validation_service.hpp"

#include <algorithm>
#include <filesystem>

#include "vorient/providers.hpp"
#include "vorient/store.hpp"
#include "vorient/util.hpp"

namespace vorient {

using nlohmann::json;

namespace {

bool is_slug(const std::string& s) {
  if (s.empty() || s.size() > 64) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
  });
}

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

}  // namespace

std::vector<std::uint8_t> strip_png_text(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<std::uint8_t> in(bytes.begin(), bytes.end());
  if (bytes.size() < 8 || !std::equal(kSig, kSig + 8, bytes.begin())) return in;
  std::vector<std::uint8_t> out(bytes.begin(), bytes.begin() + 8);
  std::size_t at = 8;
  while (at + 12 <= bytes.size()) {
    const std::size_t len = be32(bytes, at);
    if (at + 12 + len > bytes.size()) return in;  // malformed: serve unchanged
    const std::string type(bytes.begin() + static_cast<std::ptrdiff_t>(at + 4),
                           bytes.begin() + static_cast<std::ptrdiff_t>(at + 8));
    if (type != "tEXt" && type != "zTXt" && type != "iTXt") {
      out.insert(out.end(), bytes.begin() + static_cast<std::ptrdiff_t>(at),
                 bytes.begin() + static_cast<std::ptrdiff_t>(at + 12 + len));
    }
    at += 12 + len;
    if (type == "IEND") break;
  }
  return out;
}

json to_json(const CoderSession& s) {
  return {{"coder_id", s.coder_id}, {"display_name", s.display_name}, {"started_at", s.started_at}};
}

json to_json(const Progress& p) {
  json by_coder = json::object();
  for (const auto& [coder, n] : p.coded_by_coder) {
    by_coder[coder] = {{"complete", n}, {"pending", p.total - n}};
  }
  return {{"total", p.total},
          {"overall",
           {{"pending", p.overall.pending},
            {"partially_coded", p.overall.partially_coded},
            {"complete", p.overall.complete}}},
          {"coders", by_coder}};
}

ValidationService::ValidationService(StudyStore& store, const StudyDesign& design,
                                     const Clock& clock)
    : store_(store), design_(design), clock_(clock), scheme_(default_scheme()) {
  if (!std::filesystem::exists(store_.queue_path())) {
    throw StageOrderError("no validation queue; run the 'sample' stage first");
  }
  const auto doc = json::parse(util::read_text(store_.queue_path()));
  for (const auto& e : doc.at("entries")) queue_.push_back(queue_entry_from_json(e));

  for (const auto& j : store_.sessions().read_all()) {
    CoderSession s{j.at("coder_id").get<std::string>(), j.value("display_name", ""),
                   j.value("started_at", "")};
    if (sessions_.emplace(s.coder_id, s).second) session_order_.push_back(s.coder_id);
  }
  for (const auto& j : store_.expert_codes().read_all()) {
    const auto key = std::make_pair(j.at("cell_id").get<std::string>(),
                                    j.at("coder_id").get<std::string>());
    accepted_[key] = j;
    // record ids end in the submission ordinal.
    const auto id = j.value("record_id", std::string{});
    const auto slash = id.rfind('/');
    int n = 1;
    if (slash != std::string::npos) n = std::max(1, std::atoi(id.c_str() + slash + 1));
    submissions_[key] = std::max(submissions_[key], n);
  }
}

CoderSession ValidationService::register_session(const std::string& coder_id,
                                                 const std::string& display_name) {
  if (!is_slug(coder_id)) {
    throw ValidationError("coder_id must be a slug of [a-z0-9_-], got '" + coder_id + "'");
  }
  std::lock_guard lock(mu_);
  if (auto it = sessions_.find(coder_id); it != sessions_.end()) return it->second;
  CoderSession s{coder_id, display_name.empty() ? coder_id : display_name, clock_.now_iso8601()};
  store_.sessions().append(to_json(s));
  sessions_.emplace(coder_id, s);
  session_order_.push_back(coder_id);
  persist_queue_locked();
  return s;
}

std::vector<CoderSession> ValidationService::sessions() const {
  std::lock_guard lock(mu_);
  std::vector<CoderSession> out;
  for (const auto& id : session_order_) out.push_back(sessions_.at(id));
  return out;
}

json ValidationService::scheme() const { return to_json(scheme_); }

json ValidationService::queue_for(const std::string& coder_id) const {
  std::lock_guard lock(mu_);
  if (!sessions_.count(coder_id)) throw LookupError("unknown coder '" + coder_id + "'");
  json out = json::array();
  int position = 0;
  for (const auto& e : queue_) {
    ++position;
    if (accepted_.count({e.cell_id, coder_id})) continue;
    out.push_back({{"position", position},
                   {"cell_id", e.cell_id},
                   {"priority", to_string(e.priority)},
                   {"image_url", "/api/images/" + e.cell_id}});
  }
  return out;
}

std::pair<std::vector<std::uint8_t>, std::string> ValidationService::image(
    const std::string& cell_id) const {
  {
    std::lock_guard lock(mu_);
    const bool queued = std::any_of(queue_.begin(), queue_.end(),
                                    [&](const auto& e) { return e.cell_id == cell_id; });
    if (!queued) throw LookupError("cell '" + cell_id + "' is not in the validation queue");
  }
  std::optional<ImageRecord> rec;
  for (const auto& j : store_.images().read_all()) {
    if (j.at("cell_id") == cell_id) rec = image_record_from_json(j);
  }
  if (!rec) throw LookupError("no image stored for cell '" + cell_id + "'");
  auto bytes = store_.read_image(rec->image_ref, rec->format);
  return {strip_png_text(bytes), util::mime_type_for(rec->format)};
}

SubmissionAck ValidationService::submit(const ExpertCodeSubmission& sub) {
  if (!sub.codes.is_object()) {
    std::vector<std::string> all;
    for (Dimension d : kAllDimensions) all.emplace_back(dimension_id(d));
    throw InvalidCodesError("codes must be an object keyed by dimension id", all);
  }
  CodingRecord r;
  r.cell_id = sub.cell_id;
  r.coder_id = sub.coder_id;
  r.coder_kind = CoderKind::kHuman;
  r.confidence = kHumanConfidence;
  r.prompt_version = "expert";
  r.valid = true;
  std::vector<std::string> malformed;
  std::vector<std::string> out_of_range;
  for (Dimension d : kAllDimensions) {
    const std::string id(dimension_id(d));
    const auto it = sub.codes.find(id);
    if (it == sub.codes.end() || !it->is_number_integer()) {
      malformed.push_back(id);
      continue;
    }
    const long long v = it->get<long long>();
    if (!scheme_.spec(d).admits(v)) {
      out_of_range.push_back(id);
      continue;
    }
    r.codes[d] = static_cast<int>(v);
  }
  if (!malformed.empty() || !out_of_range.empty()) {
    std::string msg;
    std::vector<std::string> dims = malformed;
    dims.insert(dims.end(), out_of_range.begin(), out_of_range.end());
    if (!malformed.empty()) {
      msg += "missing or non-integer codes:";
      for (const auto& m : malformed) msg += " " + m;
    }
    if (!out_of_range.empty()) {
      msg += std::string(msg.empty() ? "" : "; ") + "out-of-range codes:";
      for (const auto& m : out_of_range) msg += " " + m;
    }
    throw InvalidCodesError(msg, dims);
  }

  std::lock_guard lock(mu_);
  if (!sessions_.count(sub.coder_id)) throw LookupError("unknown coder '" + sub.coder_id + "'");
  const bool queued = std::any_of(queue_.begin(), queue_.end(),
                                  [&](const auto& e) { return e.cell_id == sub.cell_id; });
  if (!queued) throw LookupError("cell '" + sub.cell_id + "' is not in the validation queue");

  const auto key = std::make_pair(sub.cell_id, sub.coder_id);
  const int n = ++submissions_[key];
  json record = to_json(r);
  record["record_id"] = sub.cell_id + "/" + sub.coder_id + "/" + std::to_string(n);
  record["note"] = sub.note;
  record["submitted_at"] = clock_.now_iso8601();

  SubmissionAck ack{record["record_id"].get<std::string>(), false};
  if (auto prev = accepted_.find(key); prev != accepted_.end()) {
    // The superseded record moves to the audit log before the replacement.
    store_.audit().append({{"event", "expert_code_superseded"},
                           {"record", prev->second},
                           {"superseded_by", ack.record_id},
                           {"at", record["submitted_at"]}});
    prev->second = record;
    std::vector<json> all;
    for (const auto& j : store_.expert_codes().read_all()) {
      const bool same = j.at("cell_id") == sub.cell_id && j.at("coder_id") == sub.coder_id;
      all.push_back(same ? record : j);
    }
    store_.expert_codes().rewrite(all);
    ack.superseded_previous = true;
  } else {
    store_.expert_codes().append(record);
    accepted_[key] = record;
  }
  persist_queue_locked();
  return ack;
}

QueueStatus ValidationService::status_locked(const std::string& cell_id) const {
  std::size_t coded = 0;
  for (const auto& id : session_order_) coded += accepted_.count({cell_id, id});
  if (coded == 0) return QueueStatus::kPending;
  return coded == session_order_.size() ? QueueStatus::kComplete : QueueStatus::kPartiallyCoded;
}

void ValidationService::persist_queue_locked() {
  auto doc = json::parse(util::read_text(store_.queue_path()));
  json entries = json::array();
  for (auto& e : queue_) {
    e.status = status_locked(e.cell_id);
    e.assigned_coders = session_order_;
    entries.push_back(to_json(e));
  }
  doc["entries"] = entries;
  util::write_atomic(store_.queue_path(), doc.dump(2) + "\n");
}

Progress ValidationService::progress() const {
  std::lock_guard lock(mu_);
  Progress p;
  p.total = queue_.size();
  for (const auto& id : session_order_) p.coded_by_coder[id] = 0;
  for (const auto& e : queue_) {
    switch (status_locked(e.cell_id)) {
      case QueueStatus::kPending: ++p.overall.pending; break;
      case QueueStatus::kPartiallyCoded: ++p.overall.partially_coded; break;
      case QueueStatus::kComplete: ++p.overall.complete; break;
    }
    for (const auto& id : session_order_) p.coded_by_coder[id] += accepted_.count({e.cell_id, id});
  }
  return p;
}

std::vector<CodingRecord> ValidationService::expert_records() const {
  std::lock_guard lock(mu_);
  std::vector<CodingRecord> out;
  for (const auto& [_, j] : accepted_) out.push_back(coding_record_from_json(j));
  return out;
}

}  // namespace vorient
