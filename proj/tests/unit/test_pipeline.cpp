// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <atomic>
#include <cmath>

#include "support/fixtures.hpp"
#include "vorient/mock.hpp"
#include "vorient/pipeline.hpp"
#include "vorient/util.hpp"

using namespace vorient;
using nlohmann::json;

namespace {

const FixedClock kClock{std::string(kMockInstant)};

// Wraps a provider and fails for cells matching a predicate.
class FlakyImages : public ImageProvider {
 public:
  FlakyImages(std::unique_ptr<ImageProvider> inner, std::string bad_country)
      : inner_(std::move(inner)), bad_(std::move(bad_country)) {}
  GeneratedImage generate(const StudyCell& cell, const std::string& prompt,
                          const ImageSize& size) override {
    if (cell.country == bad_) {
      ++failures;
      throw ProviderError("HTTP 503 from stub", true);
    }
    return inner_->generate(cell, prompt, size);
  }
  bool remote() const override { return false; }
  std::atomic<int> failures{0};

 private:
  std::unique_ptr<ImageProvider> inner_;
  std::string bad_;
};

class FlakyCoder : public CoderProvider {
 public:
  FlakyCoder(std::unique_ptr<CoderProvider> inner, std::string bad_concept)
      : inner_(std::move(inner)), bad_(std::move(bad_concept)) {}
  std::string code(const ImageRecord& image, std::span<const std::uint8_t> bytes,
                   const std::string& prompt, int reprompt) override {
    if (image.cell_id.find("--" + bad_ + "--") != std::string::npos) {
      throw ProviderError("HTTP 429 from stub", true);
    }
    return inner_->code(image, bytes, prompt, reprompt);
  }
  bool remote() const override { return false; }

 private:
  std::unique_ptr<CoderProvider> inner_;
  std::string bad_;
};

PipelineOptions quiet(int parallel = 4) {
  PipelineOptions o;
  o.parallel = parallel;
  return o;
}

}  // namespace

TEST_CASE("stage names and prerequisites") {
  CHECK(parse_stage("consensus") == Stage::kConsensus);
  CHECK_THROWS_AS(parse_stage("train"), ValidationError);
  CHECK_FALSE(prerequisite(Stage::kDesign));
  CHECK(prerequisite(Stage::kGenerate) == Stage::kDesign);
  CHECK(prerequisite(Stage::kSample) == Stage::kConsensus);
  CHECK(prerequisite(Stage::kReliability) == Stage::kConsensus);
  CHECK(prerequisite(Stage::kAnalyze) == Stage::kConsensus);
  CHECK(prerequisite(Stage::kReport) == Stage::kAnalyze);
  CHECK(all_mock(testing::mock_config(1)));
  CHECK_FALSE(all_mock(default_study_config()));
}

TEST_CASE("stages refuse to run out of order") {
  testing::TempDir dir;
  Pipeline p(testing::mock_config(7), dir / "s", kClock, quiet());
  try {
    p.run(Stage::kAnalyze);
    FAIL("expected StageOrderError");
  } catch (const StageOrderError& e) {
    CHECK(std::string(e.what()).find("'consensus'") != std::string::npos);
  }
  p.run(Stage::kDesign);
  CHECK_THROWS_AS(p.run(Stage::kCode), StageOrderError);
  CHECK(std::filesystem::exists(dir / "s" / "outputs" / "design.csv"));
}

TEST_CASE("generation failures keep completed images and resume") {
  testing::TempDir dir;
  const auto config = testing::mock_config(7);
  std::vector<std::string> progress;
  auto opts = quiet();
  opts.progress = [&](const std::string& s) { progress.push_back(s); };
  Pipeline p(config, dir / "s", kClock, opts);
  p.gateway().set_retry_policy({3, std::chrono::milliseconds(1)});
  auto flaky = std::make_unique<FlakyImages>(mock::make_image_provider(p.design(), config.seed, false),
                                             "egypt");
  auto* flaky_ptr = flaky.get();
  p.gateway().set_image_provider("midjourney", std::move(flaky));
  p.run(Stage::kDesign);
  CHECK_THROWS_AS(p.run(Stage::kGenerate), ProviderFailure);
  CHECK(flaky_ptr->failures == 11 * 3);  // 11 egypt midjourney cells, 3 attempts each
  CHECK(p.store().images().read_all().size() == 396 - 11);
  CHECK_FALSE(p.store().stage_completed("generate"));
  CHECK(p.store().failures().read_all().size() == 11);
  CHECK_FALSE(progress.empty());

  // Provider recovered: only the missing cells are generated.
  p.gateway().set_image_provider("midjourney", mock::make_image_provider(p.design(), config.seed, false));
  const auto s = p.run(Stage::kGenerate);
  CHECK(s.at("generated") == 11);
  CHECK(s.at("skipped") == 385);
  CHECK(p.store().stage_completed("generate"));
  CHECK(latest_images(p.store()).size() == 396);
}

TEST_CASE("coding failures are not committed and are retried on the next run") {
  testing::TempDir dir;
  const auto config = testing::mock_config(9);
  Pipeline p(config, dir / "s", kClock, quiet());
  p.gateway().set_retry_policy({2, std::chrono::milliseconds(1)});
  p.run(Stage::kDesign);
  p.run(Stage::kGenerate);
  p.gateway().set_coder_provider(
      "gpt-5", std::make_unique<FlakyCoder>(mock::make_coder_provider(config.coders[1], config.seed),
                                            "cuisine"));
  CHECK_THROWS_AS(p.run(Stage::kCode), ProviderFailure);
  const auto partial = latest_coding(p.store());
  CHECK(partial.size() == (396 - 36) * 4);
  for (const auto& r : partial) CHECK(r.cell_id.find("--cuisine--") == std::string::npos);

  p.gateway().set_coder_provider("gpt-5", mock::make_coder_provider(config.coders[1], config.seed));
  const auto s = p.run(Stage::kCode);
  CHECK(s.at("coded") == 36);
  CHECK(s.at("skipped") == 360);
  CHECK(latest_coding(p.store()).size() == 396 * 4);
}

TEST_CASE("full mock run: summaries, idempotent rerun, outputs") {
  testing::TempDir dir;
  const auto config = testing::mock_config(7);
  {
    Pipeline p(config, dir / "s", kClock, quiet());
    const auto all = p.run_all();
    REQUIRE(all.size() == 8);
    CHECK(all[0].at("cells") == 396);
    CHECK(all[1].at("generated") == 396);
    CHECK(all[2].at("coded") == 396);
    CHECK(all[3].at("consensus") == 396);
    CHECK(all[4].at("entries") == 67);
    for (const auto& s : all) CHECK(s.at("status") == "ok");
  }
  for (const char* f : {"outputs/indices.csv", "outputs/battery.csv", "outputs/reliability.csv",
                        "outputs/aggregates.json", "queue.json", "reports/tableS1.csv"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(dir / "s" / f));
  }
  const auto before = util::read_text(dir / "s" / "logs" / "consensus.jsonl");
  {
    Pipeline p(config, dir / "s", kClock, quiet(8));
    const auto again = p.run_all();
    CHECK(again[1].at("generated") == 0);
    CHECK(again[2].at("coded") == 0);
    CHECK(again[3].at("new") == 0);
    CHECK(again[4].at("skipped") == true);
  }
  CHECK(util::read_text(dir / "s" / "logs" / "consensus.jsonl") == before);
}

TEST_CASE("results do not depend on the number of workers") {
  testing::TempDir dir;
  const auto config = testing::mock_config(11);
  Pipeline a(config, dir / "a", kClock, quiet(1));
  Pipeline b(config, dir / "b", kClock, quiet(8));
  for (auto s : {Stage::kDesign, Stage::kGenerate, Stage::kCode, Stage::kConsensus}) {
    a.run(s);
    b.run(s);
  }
  for (const char* log : {"images.jsonl", "coding.jsonl", "raw_outputs.jsonl", "consensus.jsonl"}) {
    CAPTURE(log);
    CHECK(util::read_text(dir / "a" / "logs" / log) == util::read_text(dir / "b" / "logs" / log));
  }
}

TEST_CASE("sample stage: budget changes need --force") {
  testing::TempDir dir;
  Pipeline p(testing::mock_config(7), dir / "s", kClock, quiet());
  for (auto s : {Stage::kDesign, Stage::kGenerate, Stage::kCode, Stage::kConsensus, Stage::kSample})
    p.run(s);
  const auto q = json::parse(util::read_text(dir / "s" / "queue.json"));
  CHECK(q.at("budget") == 67);
  CHECK(q.at("entries").size() == 67);
  double last = INFINITY;
  int last_rank = 0;
  for (const auto& e : q.at("entries")) {
    const auto entry = queue_entry_from_json(e);
    const int rank = static_cast<int>(entry.priority);
    CHECK(rank >= last_rank);
    if (rank == last_rank) CHECK(entry.h_ext <= last);
    last_rank = rank;
    last = entry.h_ext;
    CHECK(entry.status == QueueStatus::kPending);
  }
  p.options().budget = 20;
  CHECK_THROWS_AS(p.run(Stage::kSample), ValidationError);
  p.options().force = true;
  CHECK(p.run(Stage::kSample).at("entries") == 20);
}

TEST_CASE("fault injection: coders returning garbage are excluded and routed to experts") {
  testing::TempDir dir;
  auto config = testing::mock_config(7);
  for (std::size_t i = 1; i < config.coders.size(); ++i) config.coders[i].endpoint_config["fail_mode"] = "garbage";
  Pipeline p(config, dir / "s", kClock, quiet());
  for (auto s : {Stage::kDesign, Stage::kGenerate}) p.run(s);
  const auto code = p.run(Stage::kCode);
  CHECK(code.at("invalid_records") == 396 * 3);
  CHECK(code.at("reprompts") == 396 * 3);
  const auto cons = p.run(Stage::kConsensus);
  CHECK(cons.at("consensus") == 0);
  CHECK(cons.at("excluded") == 396);
  const auto sample = p.run(Stage::kSample);
  CHECK(sample.at("forced") == 396);
  const auto q = json::parse(util::read_text(dir / "s" / "queue.json"));
  const auto first = queue_entry_from_json(q.at("entries")[0]);
  CHECK(first.forced);
  CHECK(std::isnan(first.h_ext));
  CHECK(first.priority == Priority::kHigh);
  // Audit entries are not duplicated by a rerun.
  p.options().force = true;
  p.run(Stage::kConsensus);
  std::size_t excluded_events = 0;
  for (const auto& a : p.store().audit().read_all()) excluded_events += a.at("event") == "excluded";
  CHECK(excluded_events == 396);
}
