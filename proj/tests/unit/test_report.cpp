// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "support/fixtures.hpp"
#include "vorient/battery.hpp"
#include "vorient/report.hpp"
#include "vorient/store.hpp"
#include "vorient/util.hpp"

using namespace vorient;
using nlohmann::json;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  // Enough for the report files: quoted fields never contain newlines.
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cell += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        row.push_back(cell);
        cell.clear();
      } else {
        cell += c;
      }
    }
    row.push_back(cell);
    rows.push_back(row);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  FAIL("no column " << name);
  return 0;
}

struct Rendered {
  StudyDesign design;
  std::map<std::string, std::string> files;
};

Rendered render_paper_corpus() {
  auto design = build_design(default_study_config());
  const auto corpus = testing::paper_matched_corpus(design);
  ReportInputs in;
  in.battery = run_paper_battery(corpus.consensus, corpus.indices, design);
  in.by_country = aggregate_indices(corpus.indices, design, Grouping::kByCountry);
  auto files = render_reports(in, design);
  return {std::move(design), std::move(files)};
}

}  // namespace

TEST_CASE("Table S1 from the matched corpus: USA first with VOI 0.170") {
  const auto r = render_paper_corpus();
  const auto rows = parse_csv(r.files.at("tableS1.csv"));
  REQUIRE(rows.size() == 13);
  const auto& h = rows[0];
  CHECK(rows[1][column(h, "rank")] == "1");
  CHECK(rows[1][column(h, "country")] == "usa");
  CHECK(rows[1][column(h, "voi")] == "0.170");
  CHECK(rows[1][column(h, "name")] == "United States");
  CHECK(rows[1][column(h, "n")] == "33");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& s1 = testing::table_s1()[i - 1];
    CAPTURE(s1.country);
    CHECK(rows[i][column(h, "country")] == s1.country);
    CHECK(rows[i][column(h, "voi")] == util::fixed(s1.voi, 3));
    CHECK(rows[i][column(h, "psi")] == util::fixed(s1.psi, 3));
    CHECK(rows[i][column(h, "cei")] == util::fixed(s1.cei, 3));
  }
}

TEST_CASE("Table S2 from the matched corpus: festivals first, sorted by difference") {
  const auto r = render_paper_corpus();
  const auto rows = parse_csv(r.files.at("tableS2.csv"));
  REQUIRE(rows.size() == 12);
  const auto& h = rows[0];
  CHECK(rows[1][column(h, "concept")] == "festivals");
  double prev = INFINITY;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double d = std::stod(rows[i][column(h, "difference")]);
    CHECK(d <= prev);
    prev = d;
    CHECK(rows[i][column(h, "west_n")] == "15");
    CHECK(rows[i][column(h, "east_n")] == "21");
  }
  // The corpus reproduces each concept's West-East gap up to one shared
  // shift, so the festivals-minus-cities spread is the published one.
  const auto diff_of = [&](const std::string& concept_id) {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i][column(h, "concept")] == concept_id) return std::stod(rows[i][column(h, "difference")]);
    FAIL("missing concept " << concept_id);
    return 0.0;
  };
  CHECK(diff_of("festivals") - diff_of("cities") == doctest::Approx(0.711 - 0.014).epsilon(0.002));
}

TEST_CASE("Table 2 rows and significance markers") {
  const auto r = render_paper_corpus();
  const auto rows = parse_csv(r.files.at("table2.csv"));
  REQUIRE(rows.size() > 5);
  const auto& h = rows[0];
  bool saw_political = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].size() == h.size());
    if (rows[i][column(h, "key")] == "t2.political") saw_political = true;
  }
  CHECK(saw_political);
  for (const auto& [name, content] : r.files) {
    CAPTURE(name);
    CHECK(content.find('\r') == std::string::npos);
    for (const auto& row : parse_csv(content))
      for (const auto& cell : row) {
        const bool finite = cell != "nan" && cell != "-nan" && cell != "inf" && cell != "-inf";
        CHECK(finite);
      }
    CHECK(content.back() == '\n');
  }
}

TEST_CASE("rendering is deterministic") {
  const auto a = render_paper_corpus();
  const auto b = render_paper_corpus();
  CHECK(a.files == b.files);
  CHECK(a.files.count("fig_symbols.csv"));
  CHECK(a.files.count("fig_flags.csv"));
  CHECK(a.files.count("fig_voi.csv"));
  CHECK(a.files.count("fig_gender.csv"));
  CHECK_FALSE(a.files.count("table1.csv"));  // no reliability summary given
}

TEST_CASE("incomplete inputs render nothing") {
  auto design = build_design(default_study_config());
  const auto corpus = testing::paper_matched_corpus(design);
  ReportInputs in;
  in.battery = run_paper_battery(corpus.consensus, corpus.indices, design);
  in.by_country = aggregate_indices(corpus.indices, design, Grouping::kByCountry);
  SUBCASE("missing battery row") {
    auto& rows = in.battery.rows;
    rows.erase(std::remove_if(rows.begin(), rows.end(),
                              [](const BatteryRow& b) { return b.key == "s2.cuisine"; }),
               rows.end());
    try {
      render_reports(in, design);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("s2.cuisine") != std::string::npos);
    }
  }
  SUBCASE("missing country") {
    in.by_country.pop_back();
    CHECK_THROWS_AS(render_reports(in, design), ValidationError);
  }
}

TEST_CASE("emit_reports writes nothing when an input is missing or incomplete") {
  testing::TempDir dir;
  const auto config = testing::mock_config(7);
  const auto design = build_design(config);
  auto store = StudyStore::open_or_init(dir / "s", config);
  CHECK_THROWS_AS(emit_reports(*store, design), StageOrderError);

  const auto corpus = testing::paper_matched_corpus(design);
  auto battery = run_paper_battery(corpus.consensus, corpus.indices, design);
  battery.rows.pop_back();
  util::write_atomic(store->outputs_dir() / "battery.json", to_json(battery).dump());
  json agg = json::object();
  agg["country"] = json::array();
  for (const auto& a : aggregate_indices(corpus.indices, design, Grouping::kByCountry))
    agg["country"].push_back(to_json(a));
  util::write_atomic(store->outputs_dir() / "aggregates.json", agg.dump());
  CHECK_THROWS_AS(emit_reports(*store, design), ValidationError);
  CHECK(std::filesystem::is_empty(store->reports_dir()));

  util::write_atomic(store->outputs_dir() / "battery.json",
                     to_json(run_paper_battery(corpus.consensus, corpus.indices, design)).dump());
  const auto bundle = emit_reports(*store, design);
  CHECK(bundle.files.size() == 7);
  for (const auto& f : bundle.files) CHECK(std::filesystem::exists(f));
}

TEST_CASE("battery JSON round-trip preserves every row") {
  auto design = build_design(default_study_config());
  const auto corpus = testing::paper_matched_corpus(design);
  const auto b = run_paper_battery(corpus.consensus, corpus.indices, design);
  const auto back = battery_from_json(to_json(b));
  REQUIRE(back.rows.size() == b.rows.size());
  for (std::size_t i = 0; i < b.rows.size(); ++i) {
    CHECK(back.rows[i].key == b.rows[i].key);
    if (std::isfinite(b.rows[i].result.statistic))
      CHECK(back.rows[i].result.statistic == doctest::Approx(b.rows[i].result.statistic));
  }
  CHECK(battery_csv(back) == battery_csv(b));
}
