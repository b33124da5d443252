// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Report bundle: table and figure-data CSVs rendered from the battery,
// index aggregates and the reliability summary. The renderer formats
// numbers; it never computes them.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vorient/battery.hpp"
#include "vorient/indices.hpp"
#include "vorient/reliability.hpp"
#include "vorient/study_design.hpp"

namespace vorient {

class StudyStore;

struct ReportInputs {
  Battery battery;
  std::vector<IndexAggregate> by_country;  // ranked by VOI
  std::optional<ReliabilitySummary> reliability;
};

// The battery rows every bundle needs.
std::vector<std::string> required_battery_rows(const StudyDesign& design);

// File name -> CSV content. Throws ValidationError naming missing battery
// rows or countries before anything is rendered.
std::map<std::string, std::string> render_reports(const ReportInputs& inputs,
                                                  const StudyDesign& design);

struct ReportBundle {
  std::vector<std::filesystem::path> files;
};

// Reads outputs/battery.json, outputs/aggregates.json and (optionally)
// outputs/reliability.json, then writes every CSV atomically under
// reports/. Nothing is written when any input is missing or incomplete.
ReportBundle emit_reports(StudyStore& store, const StudyDesign& design);

}  // namespace vorient
