// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <fstream>
#include <thread>

#include "support/fixtures.hpp"
#include "vorient/hashing.hpp"
#include "vorient/store.hpp"
#include "vorient/util.hpp"

using namespace vorient;
using nlohmann::json;

TEST_CASE("store layout and reopening") {
  testing::TempDir dir;
  const auto root = dir / "study";
  const auto config = testing::mock_config(7);
  {
    auto store = StudyStore::open_or_init(root, config);
    CHECK(store->freshly_created());
    for (const char* sub : {"images", "prompts", "logs", "outputs", "reports"})
      CHECK(std::filesystem::is_directory(root / sub));
    CHECK(std::filesystem::exists(root / "config.json"));
    const auto m = store->manifest();
    CHECK(m.at("config_hash") == config_hash(config));
    CHECK(m.at("schema_version") == kStoreSchemaVersion);
    store->record_stage("design", {{"cells", 396}}, "2026-01-01T00:00:00Z");
  }
  auto again = StudyStore::open_or_init(root, config);
  CHECK_FALSE(again->freshly_created());
  CHECK(again->stage_completed("design"));
  CHECK_FALSE(again->stage_completed("generate"));
  CHECK(again->manifest()["stages"]["design"]["summary"]["cells"] == 396);
}

TEST_CASE("a store refuses a different study") {
  testing::TempDir dir;
  StudyStore::open_or_init(dir / "s", testing::mock_config(7));
  try {
    StudyStore::open_or_init(dir / "s", testing::mock_config(8));
    FAIL("expected StoreError");
  } catch (const StoreError& e) {
    CHECK(std::string(e.what()).find("different study") != std::string::npos);
    CHECK(e.code() == ErrorCode::kStore);
  }
  std::ofstream(dir / "s" / "manifest.json") << "{ torn";
  CHECK_THROWS_AS(StudyStore::open_or_init(dir / "s", testing::mock_config(7)), StoreError);
}

TEST_CASE("JSONL log: append, read, torn final line") {
  testing::TempDir dir;
  JsonlLog log(dir / "x.jsonl");
  CHECK(log.read_all().empty());
  log.append({{"i", 1}});
  log.append_all({{{"i", 2}}, {{"i", 3}}});
  CHECK(log.read_all().size() == 3);

  // Simulate an interrupted append.
  std::ofstream(log.path(), std::ios::app | std::ios::binary) << R"({"i": 4, "trunc)";
  auto recs = log.read_all();
  REQUIRE(recs.size() == 3);
  CHECK(recs.back()["i"] == 3);

  // The next append replaces the torn tail.
  log.append({{"i", 5}});
  recs = log.read_all();
  REQUIRE(recs.size() == 4);
  CHECK(recs.back()["i"] == 5);

  // A whole record missing only its newline is kept.
  std::ofstream(log.path(), std::ios::app | std::ios::binary) << R"({"i": 6})";
  CHECK(log.read_all().size() == 5);
  log.append({{"i", 7}});
  recs = log.read_all();
  REQUIRE(recs.size() == 6);
  CHECK(recs[4]["i"] == 6);

  // Corruption in the middle is an error, not silently skipped.
  std::ofstream(log.path(), std::ios::app | std::ios::binary) << "garbage\n{\"i\": 8}\n";
  CHECK_THROWS_AS(log.read_all(), StoreError);
}

TEST_CASE("JSONL rewrite is atomic and complete") {
  testing::TempDir dir;
  JsonlLog log(dir / "y.jsonl");
  log.append_all({{{"a", 1}}, {{"a", 2}}});
  log.rewrite({{{"a", 9}}});
  const auto recs = log.read_all();
  REQUIRE(recs.size() == 1);
  CHECK(recs[0]["a"] == 9);
  for (const auto& e : std::filesystem::directory_iterator(dir.path()))
    CHECK(e.path().filename() == "y.jsonl");  // no temp files left behind
}

TEST_CASE("concurrent appends never interleave") {
  testing::TempDir dir;
  JsonlLog log(dir / "z.jsonl");
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 100; ++i) log.append({{"t", t}, {"i", i}, {"pad", std::string(200, 'x')}});
    });
  for (auto& th : threads) th.join();
  CHECK(log.read_all().size() == 800);
}

TEST_CASE("images are content addressed and verified on read") {
  testing::TempDir dir;
  auto store = StudyStore::open_or_init(dir / "s", testing::mock_config(1));
  const std::vector<std::uint8_t> bytes = {0x89, 'P', 'N', 'G', 1, 2, 3};
  const auto ref = store->put_image(bytes, "png");
  CHECK(ref == sha256_hex(bytes));
  CHECK(store->put_image(bytes, "png") == ref);  // idempotent
  CHECK(store->read_image(ref, "png") == bytes);
  util::write_atomic(store->image_path(ref, "png"), std::string("tampered"));
  CHECK_THROWS_AS(store->read_image(ref, "png"), StoreError);
}

TEST_CASE("prompt versions are recorded once") {
  testing::TempDir dir;
  auto store = StudyStore::open_or_init(dir / "s", testing::mock_config(1));
  store->record_prompt_version("c6-final");
  store->record_prompt_version("c6-final");
  store->record_prompt_version("c7");
  CHECK(store->manifest()["prompt_versions"] == json::array({"c6-final", "c7"}));
}
