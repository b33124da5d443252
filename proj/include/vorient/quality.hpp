// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Ensemble consensus, external entropy, quality score and entropy-prioritized
// sampling for expert validation.

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/coding.hpp"
#include "vorient/error.hpp"
#include "vorient/study_design.hpp"

namespace vorient {

struct ConsensusRecord {
  std::string cell_id;
  Codes codes;
  double h_ext = 0;            // bits (nats for the natural-log variant)
  double mean_confidence = 0;  // over valid coders
  double quality_score = 0;    // 0..100
  int n_valid_coders = 0;
  bool tie_broken = false;
};

nlohmann::json to_json(const ConsensusRecord& r);
ConsensusRecord consensus_record_from_json(const nlohmann::json& j);

// Fewer than two valid coder records for an image.
class InsufficientEnsembleError : public Error {
 public:
  InsufficientEnsembleError(const std::string& cell_id, int n_valid)
      : Error(ErrorCode::kValidation, "image " + cell_id + " has " + std::to_string(n_valid) +
                                          " valid coder record(s); consensus needs 2"),
        cell_id_(cell_id) {}
  const std::string& cell_id() const { return cell_id_; }

 private:
  std::string cell_id_;
};

// Shannon entropy of the empirical distribution of `labels`, in bits or nats.
double label_entropy(std::span<const int> labels, bool natural_log = false);

// Mean of per-dimension label entropies; each inner vector holds one
// dimension's labels, one per coder. Labels are used as given (no
// bucketing), so this is the primitive under external_entropy.
double mean_label_entropy(const std::vector<std::vector<int>>& per_dimension,
                          bool natural_log = false);

// Count dimensions are bucketed into {0, 1, 2, 3, >=4} except for the
// unbucketed variant. Invalid records are ignored; throws
// InsufficientEnsembleError with fewer than 2 valid records.
double external_entropy(std::span<const CodingRecord> records,
                        EntropyVariant variant = EntropyVariant::kBase2Bucketed);

// Q = 100 * (w_h * (1 - min(h, h_max) / h_max) + w_c * confidence).
struct QualityWeights {
  double entropy_weight = 0.5;
  double confidence_weight = 0.5;
  double h_max = 2.0;  // four coders, per-dimension maximum in bits
};

double quality_score(double h_ext, double mean_confidence, const QualityWeights& w = {});

// Per dimension: counts take the median with halves rounded up; ordinal
// scales take the median with halves rounded toward the mode (up when the
// mode does not decide); sovereignty takes the majority, and a tie resolves
// to 1 only if some coder reported flag_appearance >= 2. tie_broken is set
// whenever the two middle values differ or sovereignty is tied.
ConsensusRecord consensus(std::span<const CodingRecord> records,
                          EntropyVariant variant = EntropyVariant::kBase2Bucketed,
                          const QualityWeights& weights = {});

enum class Priority { kHigh, kMedium, kLow };
enum class QueueStatus { kPending, kPartiallyCoded, kComplete };

std::string_view to_string(Priority p);
std::string_view to_string(QueueStatus s);
Priority parse_priority(std::string_view s);

Priority priority_for(double h_ext, double high_threshold, double medium_threshold);

struct ValidationQueueEntry {
  std::string cell_id;
  double h_ext = 0;
  Priority priority = Priority::kLow;
  std::vector<std::string> assigned_coders;
  QueueStatus status = QueueStatus::kPending;
  // Routed here because the ensemble was insufficient; outside the budget.
  bool forced = false;
};

nlohmann::json to_json(const ValidationQueueEntry& e);
ValidationQueueEntry queue_entry_from_json(const nlohmann::json& j);

// Orders by (stratum, -h_ext, cell_id) and truncates to budget.
std::vector<ValidationQueueEntry> prioritize_for_validation(
    std::span<const ConsensusRecord> records, double high_threshold = 0.6,
    double medium_threshold = 0.4, int budget = 67);

}  // namespace vorient
