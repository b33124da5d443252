// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/quality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace vorient {

using nlohmann::json;

json to_json(const ConsensusRecord& r) {
  json j = {{"cell_id", r.cell_id}};
  for (Dimension d : kAllDimensions) j[std::string(dimension_id(d))] = r.codes[d];
  j["h_ext"] = r.h_ext;
  j["mean_confidence"] = r.mean_confidence;
  j["quality_score"] = r.quality_score;
  j["n_valid_coders"] = r.n_valid_coders;
  j["tie_broken"] = r.tie_broken;
  return j;
}

ConsensusRecord consensus_record_from_json(const json& j) {
  ConsensusRecord r;
  r.cell_id = j.at("cell_id").get<std::string>();
  for (Dimension d : kAllDimensions) r.codes[d] = j.at(std::string(dimension_id(d))).get<int>();
  r.h_ext = j.at("h_ext").get<double>();
  r.mean_confidence = j.at("mean_confidence").get<double>();
  r.quality_score = j.at("quality_score").get<double>();
  r.n_valid_coders = j.value("n_valid_coders", 0);
  r.tie_broken = j.value("tie_broken", false);
  return r;
}

double label_entropy(std::span<const int> labels, bool natural_log) {
  if (labels.empty()) return 0.0;
  std::map<int, int> freq;
  for (int v : labels) ++freq[v];
  const double n = static_cast<double>(labels.size());
  double h = 0.0;
  for (const auto& [_, c] : freq) {
    const double p = c / n;
    h -= p * (natural_log ? std::log(p) : std::log2(p));
  }
  return h == 0.0 ? 0.0 : h;  // no "-0"
}

double mean_label_entropy(const std::vector<std::vector<int>>& per_dimension, bool natural_log) {
  if (per_dimension.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& labels : per_dimension) sum += label_entropy(labels, natural_log);
  return sum / static_cast<double>(per_dimension.size());
}

namespace {

std::vector<const CodingRecord*> valid_records(std::span<const CodingRecord> records) {
  std::vector<const CodingRecord*> out;
  for (const auto& r : records) {
    if (r.valid) out.push_back(&r);
  }
  if (out.size() < 2) {
    throw InsufficientEnsembleError(records.empty() ? std::string("?") : records.front().cell_id,
                                    static_cast<int>(out.size()));
  }
  return out;
}

bool is_count(Dimension d) { return d == Dimension::kPolitical || d == Dimension::kCultural; }

double entropy_of(const std::vector<const CodingRecord*>& valid, EntropyVariant variant) {
  const bool bucket = variant != EntropyVariant::kBase2Unbucketed;
  const bool natural = variant == EntropyVariant::kNaturalBucketed;
  std::vector<std::vector<int>> per_dim;
  for (Dimension d : kAllDimensions) {
    std::vector<int> labels;
    for (const auto* r : valid) {
      int v = r->codes[d];
      if (bucket && is_count(d)) v = std::min(v, 4);
      labels.push_back(v);
    }
    per_dim.push_back(std::move(labels));
  }
  return mean_label_entropy(per_dim, natural);
}

struct Resolved {
  int value;
  bool tie_broken;
};

Resolved median_rounded(std::vector<int> v, bool toward_mode) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return {v[n / 2], false};
  const int a = v[n / 2 - 1];
  const int b = v[n / 2];
  if (a == b) return {a, false};
  if ((a + b) % 2 == 0) return {(a + b) / 2, true};
  const int lo = (a + b - 1) / 2;  // a + b odd and non-negative
  const int hi = lo + 1;
  if (!toward_mode) return {hi, true};

  std::map<int, int> freq;
  for (int x : v) ++freq[x];
  int best = 0;
  for (const auto& [_, c] : freq) best = std::max(best, c);
  std::vector<int> modes;
  for (const auto& [x, c] : freq) {
    if (c == best) modes.push_back(x);
  }
  if (modes.size() != 1) return {hi, true};
  const int m = modes.front();
  const int dlo = std::abs(m - lo);
  const int dhi = std::abs(m - hi);
  return {dlo < dhi ? lo : hi, true};
}

}  // namespace

double external_entropy(std::span<const CodingRecord> records, EntropyVariant variant) {
  return entropy_of(valid_records(records), variant);
}

double quality_score(double h_ext, double mean_confidence, const QualityWeights& w) {
  const double h = std::clamp(h_ext, 0.0, w.h_max);
  const double c = std::clamp(mean_confidence, 0.0, 1.0);
  const double q = 100.0 * (w.entropy_weight * (1.0 - h / w.h_max) + w.confidence_weight * c);
  return std::clamp(q, 0.0, 100.0);
}

ConsensusRecord consensus(std::span<const CodingRecord> records, EntropyVariant variant,
                          const QualityWeights& weights) {
  const auto valid = valid_records(records);
  ConsensusRecord out;
  out.cell_id = valid.front()->cell_id;
  out.n_valid_coders = static_cast<int>(valid.size());

  for (Dimension d : kAllDimensions) {
    std::vector<int> values;
    for (const auto* r : valid) values.push_back(r->codes[d]);
    if (d == Dimension::kSovereignty) {
      const auto ones = std::count(values.begin(), values.end(), 1);
      const auto zeros = static_cast<std::ptrdiff_t>(values.size()) - ones;
      if (ones != zeros) {
        out.codes[d] = ones > zeros ? 1 : 0;
      } else {
        const bool flagged = std::any_of(valid.begin(), valid.end(), [](const CodingRecord* r) {
          return r->codes[Dimension::kFlag] >= 2;
        });
        out.codes[d] = flagged ? 1 : 0;
        out.tie_broken = true;
      }
      continue;
    }
    const auto res = median_rounded(std::move(values), !is_count(d));
    out.codes[d] = res.value;
    out.tie_broken = out.tie_broken || res.tie_broken;
  }

  double conf = 0.0;
  for (const auto* r : valid) conf += r->confidence;
  out.mean_confidence = conf / static_cast<double>(valid.size());
  out.h_ext = entropy_of(valid, variant);
  out.quality_score = quality_score(out.h_ext, out.mean_confidence, weights);
  return out;
}

std::string_view to_string(Priority p) {
  switch (p) {
    case Priority::kHigh: return "high";
    case Priority::kMedium: return "medium";
    case Priority::kLow: return "low";
  }
  return "low";
}

std::string_view to_string(QueueStatus s) {
  switch (s) {
    case QueueStatus::kPending: return "pending";
    case QueueStatus::kPartiallyCoded: return "partially_coded";
    case QueueStatus::kComplete: return "complete";
  }
  return "pending";
}

Priority parse_priority(std::string_view s) {
  if (s == "high") return Priority::kHigh;
  if (s == "medium") return Priority::kMedium;
  if (s == "low") return Priority::kLow;
  throw ValidationError("unknown priority '" + std::string(s) + "'");
}

Priority priority_for(double h_ext, double high_threshold, double medium_threshold) {
  if (h_ext > high_threshold) return Priority::kHigh;
  if (h_ext > medium_threshold) return Priority::kMedium;
  return Priority::kLow;
}

json to_json(const ValidationQueueEntry& e) {
  return {{"cell_id", e.cell_id},
          {"h_ext", e.forced ? json(nullptr) : json(e.h_ext)},
          {"priority", to_string(e.priority)},
          {"assigned_coders", e.assigned_coders},
          {"status", to_string(e.status)},
          {"forced", e.forced}};
}

ValidationQueueEntry queue_entry_from_json(const json& j) {
  ValidationQueueEntry e;
  e.cell_id = j.at("cell_id").get<std::string>();
  e.forced = j.value("forced", false);
  e.h_ext = j.at("h_ext").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                    : j.at("h_ext").get<double>();
  e.priority = parse_priority(j.at("priority").get<std::string>());
  e.assigned_coders = j.value("assigned_coders", std::vector<std::string>{});
  const std::string status = j.value("status", "pending");
  e.status = status == "complete"          ? QueueStatus::kComplete
             : status == "partially_coded" ? QueueStatus::kPartiallyCoded
                                           : QueueStatus::kPending;
  return e;
}

std::vector<ValidationQueueEntry> prioritize_for_validation(std::span<const ConsensusRecord> records,
                                                            double high_threshold,
                                                            double medium_threshold, int budget) {
  if (!(medium_threshold >= 0.0 && medium_threshold < high_threshold)) {
    throw ValidationError("thresholds must satisfy 0 <= medium < high");
  }
  if (budget < 0) throw ValidationError("budget must be non-negative");
  std::vector<ValidationQueueEntry> all;
  all.reserve(records.size());
  for (const auto& r : records) {
    ValidationQueueEntry e;
    e.cell_id = r.cell_id;
    e.h_ext = r.h_ext;
    e.priority = priority_for(r.h_ext, high_threshold, medium_threshold);
    all.push_back(std::move(e));
  }
  std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
    if (x.priority != y.priority) return x.priority < y.priority;
    if (x.h_ext != y.h_ext) return x.h_ext > y.h_ext;
    return x.cell_id < y.cell_id;
  });
  if (all.size() > static_cast<std::size_t>(budget)) all.resize(static_cast<std::size_t>(budget));
  return all;
}

}  // namespace vorient
