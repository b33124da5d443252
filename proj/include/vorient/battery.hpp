// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// The study's hypothesis-test recipe over consensus codes and indices:
// country-level West/East and English-core contrasts, image-level festival
// and gender analyses, sovereignty chi-square, model ANOVAs, Tukey pairs,
// per-model bias and per-concept VOI contrasts.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/indices.hpp"
#include "vorient/quality.hpp"
#include "vorient/stats.hpp"
#include "vorient/study_design.hpp"

namespace vorient {

struct BatteryRow {
  std::string key;          // e.g. "t2.political", "s2.festivals"
  std::string table;        // "table2", "tableS2", "core", "image", "anova", "tukey", "bias"
  std::string description;
  stats::StatResult result;
  // First minus second group mean, for two-group mean comparisons.
  std::optional<double> difference;
};

struct Battery {
  std::vector<BatteryRow> rows;
  std::vector<stats::AnovaTable> anovas;
  std::optional<stats::TukeyResult> tukey_si;
  std::vector<std::string> excluded_cells;  // not analyzable (uncodable etc.)

  const BatteryRow* find(const std::string& key) const;
  const BatteryRow& row(const std::string& key) const;  // LookupError when absent
};

nlohmann::json to_json(const stats::StatResult& r);
stats::StatResult stat_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const stats::AnovaTable& t);
stats::AnovaTable anova_table_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Battery& b);
Battery battery_from_json(const nlohmann::json& j);

// key,table,test,groups,n,means,sds,difference,statistic,df1,df2,p,effect,effect_value,
// alt_effect_value,note
std::string battery_csv(const Battery& b);

// Per-country means of the measures the country-level rows compare.
struct CountryMeans {
  std::string country;
  std::size_t n = 0;
  double political = 0, cultural = 0, flag = 0, sovereignty = 0;
  double modernity = 0, modernity_normalized = 0;
  double si = 0, psi = 0, cei = 0, voi = 0;
};

std::vector<CountryMeans> country_means(std::span<const IndexRecord> indices,
                                        const StudyDesign& design);

// West/East (t2.*) and English-core (core.*) rows from country means.
std::vector<BatteryRow> country_level_rows(std::span<const CountryMeans> means,
                                           const StudyDesign& design);

// Every design cell must have an index record unless listed in `excluded`;
// otherwise ValidationError enumerates the absent cell_ids. Consensus
// records supply nothing the index records lack and are accepted for
// cross-checking only: a consensus/index cell mismatch is an error.
Battery run_paper_battery(std::span<const ConsensusRecord> consensus,
                          std::span<const IndexRecord> indices, const StudyDesign& design,
                          std::span<const std::string> excluded = {});

}  // namespace vorient
