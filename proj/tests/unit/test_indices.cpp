// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "vorient/indices.hpp"
#include "vorient/util.hpp"

using namespace vorient;

namespace {

ConsensusRecord rec(std::string id, int pol, int cul, int flag, int sov, int mod) {
  ConsensusRecord r;
  r.cell_id = std::move(id);
  r.codes[Dimension::kPolitical] = pol;
  r.codes[Dimension::kCultural] = cul;
  r.codes[Dimension::kFlag] = flag;
  r.codes[Dimension::kSovereignty] = sov;
  r.codes[Dimension::kModernity] = mod;
  return r;
}

}  // namespace

TEST_CASE("VOI is PSI minus CEI") {
  CHECK(voi(0.447, 0.277) == doctest::Approx(0.170).epsilon(1e-12));
  CHECK(voi(0.391, 0.367) == doctest::Approx(0.024).epsilon(1e-12));
  CHECK(util::fixed(voi(0.447, 0.277), 3) == "0.170");
}

TEST_CASE("symbolization index") {
  CHECK(symbolization_index(0, 0) == 0);
  CHECK(symbolization_index(3, 0) == doctest::Approx(0.75));
  CHECK(symbolization_index(0, 3) == doctest::Approx(-0.75));
  CHECK(symbolization_index(2, 5) == doctest::Approx(-3.0 / 8));
  CHECK_THROWS_AS(symbolization_index(-1, 2), ValidationError);
  // Bounded in (-1, 1) and antisymmetric.
  for (int p = 0; p < 20; ++p)
    for (int c = 0; c < 20; ++c) {
      const double si = symbolization_index(p, c);
      CHECK(std::abs(si) < 1);
      CHECK(si == doctest::Approx(-symbolization_index(c, p)));
    }
}

TEST_CASE("PSI and CEI weights and normalization") {
  NormalizationContext ctx;
  ctx.max_political = 5;
  ctx.max_cultural = 10;
  CHECK(psi(4, 1, 5, ctx) == doctest::Approx(1.0));
  CHECK(psi(0, 0, 0, ctx) == doctest::Approx(0.0));
  CHECK(psi(2, 1, 1, ctx) == doctest::Approx(0.4 * 0.5 + 0.3 + 0.3 * 0.2));
  CHECK(cei(10, 0 + 1, 0, ctx) == doctest::Approx(0.4 + 0.3 * 0.8 + 0.3));
  CHECK(cei(5, 5, 4, ctx) == doctest::Approx(0.4 * 0.5));
  CHECK_THROWS_AS(psi(0, 0, 6, ctx), Error);   // above the context maximum
  CHECK_THROWS_AS(cei(0, 6, 0, ctx), Error);   // modernity outside 1..5
  IndexWeights bad;
  bad.psi_flag = 0.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  IndexWeights{}.validate();
}

TEST_CASE("indices stay in range for every admissible code") {
  NormalizationContext ctx;
  ctx.max_political = 4;
  ctx.max_cultural = 6;
  for (int f = 0; f <= 4; ++f)
    for (int s = 0; s <= 1; ++s)
      for (int p = 0; p <= 4; ++p)
        for (int c = 0; c <= 6; ++c)
          for (int m = 1; m <= 5; ++m) {
            const double a = psi(f, s, p, ctx), b = cei(c, m, f, ctx);
            CHECK(a >= 0);
            CHECK(a <= 1);
            CHECK(b >= 0);
            CHECK(b <= 1);
            CHECK(std::abs(voi(a, b)) <= 1);
          }
}

TEST_CASE("normalization context uses corpus maxima") {
  std::vector<ConsensusRecord> v = {rec("a", 2, 7, 0, 0, 3), rec("b", 5, 1, 2, 1, 4)};
  const auto ctx = normalization_context(v);
  CHECK(ctx.max_political == 5);
  CHECK(ctx.max_cultural == 7);
  CHECK(ctx.scope == kCorpusScope);
  std::vector<ConsensusRecord> none = {rec("a", 0, 3, 0, 0, 3)};
  CHECK_THROWS_AS(normalization_context(none), DegenerateError);
  const auto idx = compute_indices(v);
  REQUIRE(idx.size() == 2);
  CHECK(idx[1].psi == doctest::Approx(0.4 * 0.5 + 0.3 + 0.3));
  CHECK(idx[0].voi == doctest::Approx(idx[0].psi - idx[0].cei));
}

TEST_CASE("index record JSON and CSV") {
  std::vector<ConsensusRecord> v = {rec("usa--country--gpt-image-1", 2, 1, 3, 1, 4),
                                    rec("egypt--cuisine--midjourney", 0, 6, 0, 0, 2)};
  const auto idx = compute_indices(v);
  const auto back = index_record_from_json(to_json(idx[0]));
  CHECK(back.psi == idx[0].psi);
  CHECK(back.codes == idx[0].codes);
  const auto csv = index_records_csv(idx);
  CHECK(csv.rfind("cell_id,si,psi,cei,voi,max_political,max_cultural\n", 0) == 0);
  CHECK(csv.find("\r") == std::string::npos);
}

TEST_CASE("Table S1 ranking from a corpus matched to its columns") {
  const auto design = build_design(default_study_config());
  const auto corpus = testing::paper_matched_corpus(design);
  const auto agg = aggregate_indices(corpus.indices, design, Grouping::kByCountry);
  REQUIRE(agg.size() == 12);
  const auto& s1 = testing::table_s1();
  for (std::size_t i = 0; i < agg.size(); ++i) {
    CHECK(agg[i].key == s1[i].country);
    CHECK(agg[i].voi_rank == static_cast<int>(i) + 1);
    CHECK(agg[i].n == 33);
    CHECK(util::fixed(agg[i].psi.mean, 3) == util::fixed(s1[i].psi, 3));
    CHECK(util::fixed(agg[i].cei.mean, 3) == util::fixed(s1[i].cei, 3));
    CHECK(util::fixed(agg[i].voi.mean, 3) == util::fixed(s1[i].voi, 3));
    CHECK(std::abs(agg[i].psi.mean - s1[i].psi) < 0.0005);
    CHECK(agg[i].voi.mean == doctest::Approx(agg[i].psi.mean - agg[i].cei.mean).epsilon(1e-12));
  }
  CHECK(util::fixed(agg.front().voi.mean, 3) == "0.170");
  CHECK(agg.front().key == "usa");
  CHECK(agg.back().key == "egypt");
}

TEST_CASE("aggregation rejects records outside the design") {
  const auto design = build_design(default_study_config());
  IndexRecord r;
  r.cell_id = "atlantis--people--gpt-image-1";
  std::vector<IndexRecord> v = {r};
  CHECK_THROWS_AS(aggregate_indices(v, design, Grouping::kByCountry), LookupError);
}

TEST_CASE("region aggregates are weighted by image") {
  const auto design = build_design(default_study_config());
  const auto corpus = testing::paper_matched_corpus(design);
  const auto agg = aggregate_indices(corpus.indices, design, Grouping::kWestEast);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].key == "West");
  CHECK(agg[0].n == 165);
  CHECK(agg[1].n == 231);
}
