// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "vorient/reliability.hpp"
#include "vorient/util.hpp"

using namespace vorient;
using nlohmann::json;

namespace {

// "p/q" or an integer, as written by the exact-arithmetic fixture generator.
double rational(const std::string& s) {
  const auto slash = s.find('/');
  if (slash == std::string::npos) return std::stod(s);
  return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

MeasurementLevel level_of(const std::string& s) {
  if (s == "nominal") return MeasurementLevel::kNominal;
  if (s == "ordinal") return MeasurementLevel::kOrdinal;
  return MeasurementLevel::kInterval;
}

ReliabilityMatrix matrix_from(const json& units, MeasurementLevel level) {
  ReliabilityMatrix m;
  m.level = level;
  for (std::size_t c = 0; c < units.at(0).size(); ++c) m.coders.push_back("c" + std::to_string(c));
  for (std::size_t u = 0; u < units.size(); ++u) {
    std::vector<std::optional<double>> row;
    for (const auto& v : units[u]) {
      if (v.is_null()) row.emplace_back();
      else row.emplace_back(v.get<double>());
    }
    m.add_unit("u" + std::to_string(u), std::move(row));
  }
  return m;
}

json fixture_cases() {
  std::ifstream in(std::string(VORIENT_FIXTURES) + "/krippendorff_alpha.json");
  REQUIRE(in.good());
  return json::parse(in).at("cases");
}

ReliabilityMatrix random_matrix(util::Rng& rng, std::size_t units, std::size_t coders,
                                MeasurementLevel level) {
  ReliabilityMatrix m;
  m.level = level;
  for (std::size_t c = 0; c < coders; ++c) m.coders.push_back("c" + std::to_string(c));
  for (std::size_t u = 0; u < units; ++u) {
    std::vector<std::optional<double>> row;
    const int base = static_cast<int>(rng.next() % 5);
    for (std::size_t c = 0; c < coders; ++c) {
      if (rng.bernoulli(0.1)) row.emplace_back();
      else row.emplace_back(base + (rng.bernoulli(0.3) ? static_cast<int>(rng.next() % 3) - 1 : 0));
    }
    m.add_unit("u" + std::to_string(u), std::move(row));
  }
  return m;
}

}  // namespace

TEST_CASE("alpha matches exact-arithmetic fixtures") {
  const auto cases = fixture_cases();
  REQUIRE(cases.size() >= 4);
  for (const auto& c : cases) {
    CAPTURE(c.at("name").get<std::string>());
    CAPTURE(c.at("level").get<std::string>());
    const auto m = matrix_from(c.at("units"), level_of(c.at("level")));
    const auto r = krippendorff_alpha(m);
    CHECK(std::abs(r.alpha - rational(c.at("alpha"))) < 1e-12);
    CHECK(std::abs(r.observed_disagreement - rational(c.at("observed_disagreement"))) < 1e-12);
    CHECK(std::abs(r.expected_disagreement - rational(c.at("expected_disagreement"))) < 1e-12);
  }
}

TEST_CASE("canonical reliability data: published alpha values") {
  for (const auto& c : fixture_cases()) {
    if (c.at("name") != "canonical_4x12_missing") continue;
    const double a = krippendorff_alpha(matrix_from(c.at("units"), level_of(c.at("level")))).alpha;
    const std::string lvl = c.at("level");
    const double published = lvl == "nominal" ? 0.743 : lvl == "ordinal" ? 0.815 : 0.849;
    CHECK(util::fixed(a, 3) == util::fixed(published, 3));
  }
}

TEST_CASE("perfect agreement gives alpha 1") {
  ReliabilityMatrix m;
  m.coders = {"a", "b", "c"};
  m.level = MeasurementLevel::kInterval;
  m.add_unit("1", {1.0, 1.0, 1.0});
  m.add_unit("2", {3.0, 3.0, std::nullopt});
  m.add_unit("3", {2.0, 2.0, 2.0});
  const auto r = krippendorff_alpha(m);
  CHECK(r.alpha == 1.0);
  CHECK(r.observed_disagreement == 0.0);
  CHECK_FALSE(r.degenerate);
}

TEST_CASE("a single value everywhere is degenerate") {
  ReliabilityMatrix m;
  m.coders = {"a", "b"};
  m.add_unit("1", {2.0, 2.0});
  m.add_unit("2", {2.0, 2.0});
  const auto r = krippendorff_alpha(m);
  CHECK(r.degenerate);
  CHECK(r.alpha == 1.0);
}

TEST_CASE("interval alpha is invariant under affine maps") {
  util::Rng rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    auto m = random_matrix(rng, 12 + rep % 7, 2 + rep % 4, MeasurementLevel::kInterval);
    const double a = krippendorff_alpha(m).alpha;
    const double scale = rep % 2 ? -2.5 : 7.0;
    for (auto& row : m.values)
      for (auto& v : row)
        if (v) *v = scale * *v + 11.0;
    CHECK(std::abs(krippendorff_alpha(m).alpha - a) < 1e-12);
  }
}

TEST_CASE("nominal and ordinal alpha are invariant under order-preserving relabeling") {
  util::Rng rng(8);
  for (auto level : {MeasurementLevel::kNominal, MeasurementLevel::kOrdinal}) {
    auto m = random_matrix(rng, 20, 3, level);
    const double a = krippendorff_alpha(m).alpha;
    for (auto& row : m.values)
      for (auto& v : row)
        if (v) *v = std::exp(*v);  // strictly increasing
    CHECK(krippendorff_alpha(m).alpha == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("alpha is invariant to unit and coder permutations") {
  util::Rng rng(33);
  for (auto level : {MeasurementLevel::kNominal, MeasurementLevel::kOrdinal,
                     MeasurementLevel::kInterval}) {
    const auto m = random_matrix(rng, 15, 4, level);
    const double a = krippendorff_alpha(m).alpha;
    ReliabilityMatrix p;
    p.level = level;
    p.coders = {"c3", "c1", "c0", "c2"};
    for (std::size_t u = m.units.size(); u-- > 0;) {
      const auto& r = m.values[u];
      p.add_unit(m.units[u], {r[3], r[1], r[0], r[2]});
    }
    CHECK(krippendorff_alpha(p).alpha == doctest::Approx(a).epsilon(1e-12));
  }
}

TEST_CASE("alpha is bounded above by 1 and drops units without pairs") {
  util::Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    auto m = random_matrix(rng, 10, 3, MeasurementLevel::kNominal);
    m.add_unit("lonely", {1.0, std::nullopt, std::nullopt});
    const auto r = krippendorff_alpha(m);
    CHECK(r.alpha <= 1.0);
    REQUIRE_FALSE(r.dropped_units.empty());
    CHECK(r.dropped_units.back() == "lonely");
  }
}

TEST_CASE("alpha input validation") {
  ReliabilityMatrix one;
  one.coders = {"a"};
  one.add_unit("1", {1.0});
  one.add_unit("2", {2.0});
  CHECK_THROWS_AS(krippendorff_alpha(one), ValidationError);
  ReliabilityMatrix m;
  m.coders = {"a", "b"};
  CHECK_THROWS_AS(m.add_unit("x", {1.0}), ValidationError);
  m.add_unit("1", {1.0, 2.0});
  m.add_unit("2", {1.0, std::nullopt});
  CHECK_THROWS_AS(krippendorff_alpha(m), ValidationError);  // one pairable unit
}

TEST_CASE("percent agreement with tolerance") {
  ReliabilityMatrix m;
  m.coders = {"x", "y"};
  m.add_unit("1", {1.0, 1.0});
  m.add_unit("2", {2.0, 3.0});
  m.add_unit("3", {0.0, 4.0});
  m.add_unit("4", {1.0, std::nullopt});  // skipped
  CHECK(percent_agreement(m) == doctest::Approx(1.0 / 3));
  CHECK(percent_agreement(m, 1.0) == doctest::Approx(2.0 / 3));
  ReliabilityMatrix three;
  three.coders = {"a", "b", "c"};
  CHECK_THROWS_AS(percent_agreement(three), ValidationError);
  const auto scheme = default_scheme();
  CHECK(agreement_tolerance(scheme.spec(Dimension::kPolitical), 1) == 1.0);
  CHECK(agreement_tolerance(scheme.spec(Dimension::kFlag), 1) == 0.0);
  CHECK(agreement_tolerance(scheme.spec(Dimension::kModernity), 1) == 0.0);
}

TEST_CASE("quality strata boundaries") {
  CHECK(quality_stratum(70.01) == QualityStratum::kHigh);
  CHECK(quality_stratum(70) == QualityStratum::kMedium);
  CHECK(quality_stratum(50.01) == QualityStratum::kMedium);
  CHECK(quality_stratum(50) == QualityStratum::kLow);
}

TEST_CASE("AI-human agreement against two experts") {
  std::vector<ConsensusRecord> consensus;
  std::vector<CodingRecord> experts;
  for (int i = 0; i < 6; ++i) {
    ConsensusRecord c;
    c.cell_id = "cell" + std::to_string(i);
    c.codes.values = {i % 3, 2, i % 2, i % 2, 3};
    c.quality_score = i < 3 ? 90 : 40;
    consensus.push_back(c);
    for (const char* e : {"e1", "e2"}) {
      CodingRecord r;
      r.cell_id = c.cell_id;
      r.coder_id = e;
      r.coder_kind = CoderKind::kHuman;
      r.valid = true;
      r.codes = c.codes;
      if (std::string(e) == "e2" && i == 5) r.codes[Dimension::kModernity] = 5;
      experts.push_back(r);
    }
  }
  const auto a = ai_human_agreement(consensus, experts, default_scheme());
  CHECK(a.experts == std::vector<std::string>{"e1", "e2"});
  REQUIRE(a.dimensions.size() == 5);
  const auto& political = a.dimensions[0];
  REQUIRE(political.agreement);
  CHECK(*political.agreement == 1.0);
  const auto& modernity = a.dimensions[4];
  REQUIRE(modernity.agreement);
  CHECK(*modernity.agreement == doctest::Approx((1.0 + 5.0 / 6) / 2));
  CHECK(modernity.agreement_by_stratum.at(QualityStratum::kHigh) == 1.0);
  CHECK(modernity.agreement_by_stratum.at(QualityStratum::kLow) == doctest::Approx((1.0 + 2.0 / 3) / 2));
}

TEST_CASE("reliability summary JSON round-trip") {
  ReliabilitySummary s;
  s.h_ext = {10, 0.35, 0.2, 0, 1.2, 0.4};
  s.confidence = {10, 0.8, std::nullopt, 0.5, 0.9, std::nullopt};
  s.inter_coder_alpha = {{Dimension::kPolitical, 0.7}, {Dimension::kSovereignty, std::nullopt}};
  s.n_validated = 3;
  const auto back = reliability_summary_from_json(to_json(s));
  CHECK(back.h_ext.mean == 0.35);
  CHECK(back.h_ext.r_accuracy == 0.4);
  CHECK_FALSE(back.confidence.sd);
  REQUIRE(back.inter_coder_alpha.size() == 2);
  CHECK(back.inter_coder_alpha[0].second == 0.7);
  CHECK_FALSE(back.inter_coder_alpha[1].second);
  CHECK(back.n_validated == 3);
}
