// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <optional>

#include "support/fixtures.hpp"
#include "vorient/coding.hpp"
#include "vorient/util.hpp"

using namespace vorient;

namespace {

RawCoderOutput raw(std::string text) {
  RawCoderOutput r;
  r.cell_id = "india--festivals--midjourney";
  r.coder_id = "gpt-5";
  r.raw_text = std::move(text);
  r.prompt_version = "c6-final";
  return r;
}

enum class Outcome { kValid, kParse, kValidation };

struct ParserCase {
  const char* name;
  const char* text;
  Outcome outcome;
  std::array<int, 5> codes;
  std::optional<double> confidence;  // nullopt: defaulted
};

const ParserCase kCases[] = {
    {"plain object",
     R"({"political_symbols": 2, "cultural_symbols": 5, "flag_appearance": 3, "sovereignty": 1, "modernity": 4, "confidence": 0.8})",
     Outcome::kValid, {2, 5, 3, 1, 4}, 0.8},
    {"markdown fence",
     "```json\n{\"political_symbols\": 0, \"cultural_symbols\": 7, \"flag_appearance\": 0, "
     "\"sovereignty\": 0, \"modernity\": 2, \"confidence\": 0.9}\n```",
     Outcome::kValid, {0, 7, 0, 0, 2}, 0.9},
    {"prose around the object",
     "Here is my coding:\n{\"political_symbols\": 1, \"cultural_symbols\": 1, \"flag_appearance\": 1, "
     "\"sovereignty\": 1, \"modernity\": 3} Hope this helps!",
     Outcome::kValid, {1, 1, 1, 1, 3}, std::nullopt},
    {"braces inside strings",
     R"({"reasoning": "a {curly} note", "political_symbols": 3, "cultural_symbols": 0, "flag_appearance": 4, "sovereignty": 1, "modernity": 5, "confidence": 1})",
     Outcome::kValid, {3, 0, 4, 1, 5}, 1.0},
    {"escaped quotes in strings",
     R"({"reasoning": "the \"capitol\" {", "political_symbols": 1, "cultural_symbols": 2, "flag_appearance": 2, "sovereignty": 1, "modernity": 4, "confidence": 0.7})",
     Outcome::kValid, {1, 2, 2, 1, 4}, 0.7},
    {"integral floats", R"({"political_symbols": 2.0, "cultural_symbols": 3, "flag_appearance": 1.0, "sovereignty": 0, "modernity": 3.0})",
     Outcome::kValid, {2, 3, 1, 0, 3}, std::nullopt},
    {"numeric strings", R"({"political_symbols": "4", "cultural_symbols": "0", "flag_appearance": "2", "sovereignty": "1", "modernity": "5", "confidence": 0.6})",
     Outcome::kValid, {4, 0, 2, 1, 5}, 0.6},
    {"large unbounded counts", R"({"political_symbols": 40, "cultural_symbols": 120, "flag_appearance": 4, "sovereignty": 1, "modernity": 1, "confidence": 0.2})",
     Outcome::kValid, {40, 120, 4, 1, 1}, 0.2},
    {"confidence out of range is defaulted", R"({"political_symbols": 0, "cultural_symbols": 1, "flag_appearance": 0, "sovereignty": 0, "modernity": 3, "confidence": 1.5})",
     Outcome::kValid, {0, 1, 0, 0, 3}, std::nullopt},
    {"confidence as string is defaulted", R"({"political_symbols": 0, "cultural_symbols": 1, "flag_appearance": 0, "sovereignty": 0, "modernity": 3, "confidence": "high"})",
     Outcome::kValid, {0, 1, 0, 0, 3}, std::nullopt},
    {"first of two objects wins",
     R"({"political_symbols": 1, "cultural_symbols": 1, "flag_appearance": 0, "sovereignty": 0, "modernity": 2} {"political_symbols": 9, "cultural_symbols": 9, "flag_appearance": 4, "sovereignty": 1, "modernity": 5})",
     Outcome::kValid, {1, 1, 0, 0, 2}, std::nullopt},
    {"empty response", "   \n", Outcome::kParse, {}, std::nullopt},
    {"no object", "I cannot code this image.", Outcome::kParse, {}, std::nullopt},
    {"truncated object", R"({"political_symbols": 1, "cultural_symbols": 2, "flag_appear)", Outcome::kParse, {}, std::nullopt},
    {"missing dimension", R"({"political_symbols": 1, "cultural_symbols": 2, "flag_appearance": 0, "sovereignty": 0})",
     Outcome::kParse, {}, std::nullopt},
    {"null code", R"({"political_symbols": null, "cultural_symbols": 2, "flag_appearance": 0, "sovereignty": 0, "modernity": 3})",
     Outcome::kParse, {}, std::nullopt},
    {"fractional code", R"({"political_symbols": 1.5, "cultural_symbols": 2, "flag_appearance": 0, "sovereignty": 0, "modernity": 3})",
     Outcome::kParse, {}, std::nullopt},
    {"word instead of number", R"({"political_symbols": "two", "cultural_symbols": 2, "flag_appearance": 0, "sovereignty": 0, "modernity": 3})",
     Outcome::kParse, {}, std::nullopt},
    {"flag out of range", R"({"political_symbols": 1, "cultural_symbols": 2, "flag_appearance": 7, "sovereignty": 0, "modernity": 3})",
     Outcome::kValidation, {}, std::nullopt},
    {"negative count and zero modernity", R"({"political_symbols": -1, "cultural_symbols": 2, "flag_appearance": 0, "sovereignty": 0, "modernity": 0})",
     Outcome::kValidation, {}, std::nullopt},
};

}  // namespace

TEST_CASE("coder output parser fixtures") {
  const auto scheme = default_scheme();
  CHECK(std::size(kCases) == 20);
  for (const auto& c : kCases) {
    CAPTURE(c.name);
    switch (c.outcome) {
      case Outcome::kValid: {
        const auto r = parse_coder_output(raw(c.text), scheme);
        CHECK(r.valid);
        CHECK(r.codes.values == c.codes);
        CHECK(r.cell_id == "india--festivals--midjourney");
        CHECK(r.prompt_version == "c6-final");
        if (c.confidence) {
          CHECK(r.confidence == doctest::Approx(*c.confidence));
          CHECK_FALSE(r.confidence_defaulted);
        } else {
          CHECK(r.confidence == kMissingVlmConfidence);
          CHECK(r.confidence_defaulted);
        }
        break;
      }
      case Outcome::kParse:
        CHECK_THROWS_AS(parse_coder_output(raw(c.text), scheme), ParseError);
        break;
      case Outcome::kValidation:
        CHECK_THROWS_AS(parse_coder_output(raw(c.text), scheme), ValidationError);
        break;
    }
  }
}

TEST_CASE("out-of-range errors name every offending dimension") {
  try {
    parse_coder_output(raw(kCases[19].text), default_scheme());
    FAIL("expected a ValidationError");
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("political_symbols") != std::string::npos);
    CHECK(what.find("modernity") != std::string::npos);
    CHECK(what.find("cultural_symbols") == std::string::npos);
  }
}

TEST_CASE("serialize and parse round-trip for random valid records") {
  const auto scheme = default_scheme();
  util::Rng rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    CodingRecord r;
    r.codes.values = {static_cast<int>(rng.next() % 30), static_cast<int>(rng.next() % 30),
                      static_cast<int>(rng.next() % 5), static_cast<int>(rng.next() % 2),
                      1 + static_cast<int>(rng.next() % 5)};
    r.political_symbols_list = {"flag", "capitol"};
    r.reasoning = "line with \"quotes\" and {braces}";
    r.confidence_defaulted = rep % 3 == 0;
    r.confidence = r.confidence_defaulted ? kMissingVlmConfidence : rng.uniform();
    const auto back = parse_coder_output(raw(serialize_codes(r)), scheme);
    CHECK(back.codes == r.codes);
    CHECK(back.political_symbols_list == r.political_symbols_list);
    CHECK(back.reasoning == r.reasoning);
    CHECK(back.confidence == r.confidence);
    CHECK(back.confidence_defaulted == r.confidence_defaulted);
  }
}

TEST_CASE("coding record JSON round-trip") {
  auto r = parse_coder_output(raw(kCases[0].text), default_scheme());
  r.cultural_symbols_list = {"lantern"};
  const auto back = coding_record_from_json(to_json(r));
  CHECK(back.codes == r.codes);
  CHECK(back.coder_id == r.coder_id);
  CHECK(back.confidence == r.confidence);
  CHECK(back.cultural_symbols_list == r.cultural_symbols_list);
  CHECK(back.valid);
}

TEST_CASE("coding scheme bounds") {
  const auto s = default_scheme();
  REQUIRE(s.dimensions.size() == 5);
  CHECK_FALSE(s.spec(Dimension::kPolitical).max);
  CHECK(s.spec(Dimension::kFlag).max == 4);
  CHECK(s.spec(Dimension::kModernity).min == 1);
  CHECK(s.spec(Dimension::kSovereignty).level == MeasurementLevel::kNominal);
  CHECK(s.spec(Dimension::kFlag).level == MeasurementLevel::kOrdinal);
  CHECK(s.spec(Dimension::kCultural).level == MeasurementLevel::kInterval);
  Codes c;
  c[Dimension::kModernity] = 6;
  c[Dimension::kSovereignty] = 2;
  CHECK(out_of_range_dimensions(s, c) == std::vector<std::string>{"sovereignty", "modernity"});
}

TEST_CASE("final prompt carries the counting rule and every dimension") {
  PromptRegistry reg;
  const auto text = render_coding_prompt(default_scheme(), reg, "c6-final");
  CHECK(text.find("If you see 3 flags, count 3") != std::string::npos);
  CHECK(text.find("\"confidence\"") != std::string::npos);
  CHECK_THROWS_AS(render_coding_prompt(default_scheme(), reg, "c1-draft"), LookupError);
  reg.register_version("c1-draft", "Count political_symbols only.");
  CHECK_THROWS_AS(render_coding_prompt(default_scheme(), reg, "c1-draft"), ValidationError);
}

TEST_CASE("prompt registry is immutable and persists versions") {
  testing::TempDir dir;
  {
    PromptRegistry reg(dir.path());
    CHECK(std::filesystem::exists(dir / "c6-final.txt"));
    reg.register_version("c7-test", "text");
    CHECK_THROWS_AS(reg.register_version("c7-test", "other"), ValidationError);
    CHECK_THROWS_AS(reg.register_version("../escape", "x"), ValidationError);
  }
  PromptRegistry again(dir.path());
  CHECK(again.text("c7-test") == "text");
  CHECK(again.versions() == std::vector<std::string>{"c6-final", "c7-test"});
  util::write_atomic(dir / "c6-final.txt", std::string("tampered"));
  CHECK_THROWS_AS(PromptRegistry(dir.path()), ValidationError);
}

TEST_CASE("ensemble re-prompts once after a bad response") {
  std::vector<VlmCoderSpec> coders(3);
  coders[0].id = "good";
  coders[1].id = "fixes-on-reprompt";
  coders[2].id = "always-bad";
  ImageRecord img;
  img.cell_id = "egypt--cuisine--nanobanana";
  std::vector<std::pair<std::string, int>> calls;
  const std::string ok = kCases[0].text;
  auto call = [&](const ImageRecord& image, const VlmCoderSpec& coder, const std::string& prompt,
                  int reprompt) {
    calls.emplace_back(coder.id, reprompt);
    RawCoderOutput r;
    r.cell_id = image.cell_id;
    r.coder_id = coder.id;
    r.reprompt = reprompt;
    if (reprompt) CHECK(prompt.find("could not be used") != std::string::npos);
    if (coder.id == "good" || (coder.id == "fixes-on-reprompt" && reprompt == 1)) r.raw_text = ok;
    else if (coder.id == "fixes-on-reprompt") r.raw_text = kCases[18].text;  // out of range
    else r.raw_text = "no idea";
    return r;
  };
  const auto res = code_with_ensemble(img, coders, default_scheme(), "PROMPT", "c6-final", call);
  REQUIRE(res.records.size() == 3);
  CHECK(res.records[0].valid);
  CHECK(res.records[1].valid);
  CHECK_FALSE(res.records[2].valid);
  CHECK(res.records[2].error.find("no JSON object") != std::string::npos);
  CHECK_FALSE(res.uncodable);
  CHECK(res.raw.size() == 5);
  const std::vector<std::pair<std::string, int>> expected = {
      {"good", 0}, {"fixes-on-reprompt", 0}, {"fixes-on-reprompt", 1}, {"always-bad", 0},
      {"always-bad", 1}};
  CHECK(calls == expected);
  for (const auto& r : res.raw) CHECK(r.prompt_version == "c6-final");
}

TEST_CASE("ensemble records provider failures without re-prompting") {
  std::vector<VlmCoderSpec> coders(2);
  coders[0].id = "down";
  coders[1].id = "also-down";
  ImageRecord img;
  img.cell_id = "usa--men--gpt-image-1";
  int n = 0;
  auto call = [&](const ImageRecord&, const VlmCoderSpec&, const std::string&, int) -> RawCoderOutput {
    ++n;
    throw ProviderError("503 from upstream", true);
  };
  const auto res = code_with_ensemble(img, coders, default_scheme(), "P", "c6-final", call);
  CHECK(n == 2);
  CHECK(res.uncodable);
  CHECK(res.records[0].error.rfind("provider failure", 0) == 0);
  CHECK_THROWS_AS(code_with_ensemble(img, {coders[0]}, default_scheme(), "P", "c6-final", call),
                  ValidationError);
}
