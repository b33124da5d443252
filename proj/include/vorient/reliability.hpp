// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Krippendorff's alpha (coincidence-matrix form), percent agreement and
// quality-stratified agreement between coders.

#pragma once

#include <map>
#include <optional>

#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

#include "vorient/coding.hpp"
#include "vorient/quality.hpp"

namespace vorient {

struct ReliabilityMatrix {
  std::vector<std::string> units;
  std::vector<std::string> coders;
  // values[u][c]; nullopt = missing.
  std::vector<std::vector<std::optional<double>>> values;
  MeasurementLevel level = MeasurementLevel::kNominal;

  // Appends a unit row; throws ValidationError on a width mismatch.
  void add_unit(std::string unit, std::vector<std::optional<double>> row);
};

struct ReliabilityResult {
  double alpha = 1;
  double observed_disagreement = 0;
  double expected_disagreement = 0;
  std::size_t n_units = 0;            // units with >= 2 values
  std::size_t n_pairable_values = 0;  // values in those units
  bool degenerate = false;            // De = 0: a single value everywhere
  std::vector<std::string> dropped_units;
};

// Throws ValidationError with fewer than 2 coders or fewer than 2 pairable
// units.
ReliabilityResult krippendorff_alpha(const ReliabilityMatrix& m);

MeasurementLevel default_level(Dimension d);

// Both values present and |a - b| <= tolerance. Exactly two coders.
double percent_agreement(const ReliabilityMatrix& m, double tolerance = 0.0);

// Tolerance used for a dimension: count_tolerance for counts, exact otherwise.
double agreement_tolerance(const DimensionSpec& spec, int count_tolerance);

// Quality strata used to break down AI-human agreement.
enum class QualityStratum { kHigh, kMedium, kLow };
std::string_view to_string(QualityStratum s);
// High: Q > 70, Medium: 50 < Q <= 70, Low: Q <= 50.
QualityStratum quality_stratum(double quality_score);

struct StratifiedAgreement {
  double overall = 0;
  std::size_t n_overall = 0;
  std::map<QualityStratum, double> by_stratum;  // empty strata are absent
  std::map<QualityStratum, std::size_t> n_by_stratum;
};

StratifiedAgreement stratified_agreement(const ReliabilityMatrix& m,
                                         const std::map<std::string, QualityStratum>& strata,
                                         double tolerance = 0.0);

// Consensus (as one pseudo-coder) against each expert, averaged over experts.
struct AiHumanDimension {
  Dimension dimension;
  std::optional<double> alpha;
  std::optional<double> agreement;
  std::map<QualityStratum, double> agreement_by_stratum;
  std::size_t n_units = 0;
};

struct AiHumanAgreement {
  std::vector<AiHumanDimension> dimensions;
  std::optional<double> overall_alpha;  // mean over dimensions with an alpha
  std::map<QualityStratum, double> agreement_by_stratum;  // mean over dimensions
  std::vector<std::string> experts;
};

AiHumanAgreement ai_human_agreement(std::span<const ConsensusRecord> consensus,
                                    std::span<const CodingRecord> expert_records,
                                    const CodingScheme& scheme, int count_tolerance = 1);

// One coder column per coder id over the given records (valid records only).
ReliabilityMatrix matrix_for(std::span<const CodingRecord> records, Dimension d,
                             const std::vector<std::string>& coders);

// Study-level coding quality: distribution of entropy, confidence and Q;
// inter-coder alpha among the VLM ensemble; AI-human agreement when expert
// codes exist. Accuracy per image is the share of (expert, dimension) pairs
// on which the consensus agrees within tolerance.
struct Distribution {
  std::size_t n = 0;
  double mean = 0;
  std::optional<double> sd;
  double min = 0;
  double max = 0;
  std::optional<double> r_accuracy;  // Pearson r with accuracy over validated images
};

struct ReliabilitySummary {
  Distribution h_ext;
  Distribution confidence;
  Distribution quality;
  std::vector<std::pair<Dimension, std::optional<double>>> inter_coder_alpha;
  std::optional<AiHumanAgreement> ai_human;
  std::size_t n_validated = 0;
};

ReliabilitySummary summarize_reliability(std::span<const ConsensusRecord> consensus,
                                         std::span<const CodingRecord> vlm_records,
                                         std::span<const CodingRecord> expert_records,
                                         const std::vector<std::string>& coders,
                                         const CodingScheme& scheme, int count_tolerance = 1);

nlohmann::json to_json(const ReliabilitySummary& s);
ReliabilitySummary reliability_summary_from_json(const nlohmann::json& j);

}  // namespace vorient
