// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Composite indices per image (SI, PSI, CEI, VOI) and their group
// aggregates. Indices are always computed per image, then averaged.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/coding.hpp"
#include "vorient/quality.hpp"
#include "vorient/study_design.hpp"

namespace vorient {

inline constexpr std::string_view kCorpusScope = "corpus-wide consensus maxima";

struct NormalizationContext {
  int max_political = 1;
  int max_cultural = 1;
  std::string scope{kCorpusScope};
};

// Maxima over the consensus codes of every analyzable image. Throws
// DegenerateError when either corpus maximum is 0.
NormalizationContext normalization_context(std::span<const ConsensusRecord> consensus);

struct IndexWeights {
  double psi_flag = 0.4;
  double psi_sovereignty = 0.3;
  double psi_political = 0.3;
  double cei_cultural = 0.4;
  double cei_traditionality = 0.3;
  double cei_flag_absence = 0.3;

  // Throws ValidationError unless each triple is non-negative and sums to 1.
  void validate() const;
};

// (P - C) / (P + C + 1)
double symbolization_index(int political, int cultural);

// w_f * flag/4 + w_s * sovereignty + w_p * political/max_political.
// Codes outside the scheme, or political above the context maximum (a stale
// context), throw an internal-consistency Error.
double psi(int flag, int sovereignty, int political, const NormalizationContext& ctx,
           const IndexWeights& w = {});

// w_c * cultural/max_cultural + w_t * (1 - modernity/5) + w_a * (1 - flag/4).
double cei(int cultural, int modernity, int flag, const NormalizationContext& ctx,
           const IndexWeights& w = {});

inline double voi(double psi_value, double cei_value) { return psi_value - cei_value; }

struct IndexRecord {
  std::string cell_id;
  Codes codes;  // the consensus codes the indices were computed from
  double si = 0;
  double psi = 0;
  double cei = 0;
  double voi = 0;
  NormalizationContext normalization;
};

nlohmann::json to_json(const IndexRecord& r);
IndexRecord index_record_from_json(const nlohmann::json& j);

IndexRecord compute_index(const ConsensusRecord& c, const NormalizationContext& ctx,
                          const IndexWeights& w = {});
// One pass for the maxima, then per image.
std::vector<IndexRecord> compute_indices(std::span<const ConsensusRecord> consensus,
                                         const IndexWeights& w = {});

// cell_id,si,psi,cei,voi,max_political,max_cultural
std::string index_records_csv(std::span<const IndexRecord> records);

struct MeanSd {
  double mean = 0;
  std::optional<double> sd;  // absent for a single record
};

nlohmann::json to_json(const MeanSd& m);
MeanSd mean_sd_from_json(const nlohmann::json& j);

struct IndexAggregate {
  std::string key;
  std::size_t n = 0;
  MeanSd si, psi, cei, voi;
  // Consensus code means of the same records.
  MeanSd political, cultural, flag, sovereignty, modernity;
  int voi_rank = 0;  // 1 = highest mean VOI
};

nlohmann::json to_json(const IndexAggregate& a);
IndexAggregate index_aggregate_from_json(const nlohmann::json& j);

// Groups records by `grouping`; groups without records are omitted. The
// result is ranked by mean VOI descending, ties broken by group key.
// Records whose cell is not in the design throw LookupError.
std::vector<IndexAggregate> aggregate_indices(std::span<const IndexRecord> records,
                                              const StudyDesign& design, Grouping grouping);

}  // namespace vorient
