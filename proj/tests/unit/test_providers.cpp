// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "support/fixtures.hpp"
#include "vorient/coding.hpp"
#include "vorient/hashing.hpp"
#include "vorient/mock.hpp"
#include "vorient/providers.hpp"
#include "vorient/store.hpp"
#include "vorient/util.hpp"

using namespace vorient;
using nlohmann::json;

namespace {

// Local stand-in for an OpenAI-compatible chat endpoint.
class StubServer {
 public:
  StubServer() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Server& server() { return server_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

const char* kCodes =
    R"({"political_symbols": 2, "cultural_symbols": 1, "flag_appearance": 3, "sovereignty": 1, "modernity": 4, "confidence": 0.9})";

StudyConfig remote_coder_config(const std::string& base_url, int timeout_ms) {
  auto c = testing::mock_config(3);
  c.providers.requests_per_second = 0;  // unlimited
  auto& coder = c.coders[0];
  coder.provider_kind = ProviderKind::kRemoteApi;
  coder.endpoint_config = {{"adapter", "openai_chat"},
                           {"base_url", base_url},
                           {"model", "stub-vl"},
                           {"api_key_env", "VORIENT_TEST_STUB_KEY"},
                           {"timeout_ms", timeout_ms}};
  return c;
}

}  // namespace

TEST_CASE("retry with exponential backoff stops at the attempt budget") {
  RetryPolicy p;
  p.max_attempts = 3;
  p.initial_backoff = std::chrono::milliseconds(1);
  int calls = 0, attempts = 0;
  CHECK(with_retry(p, [&] {
          if (++calls < 3) throw ProviderError("busy", true);
          return 42;
        }, &attempts) == 42);
  CHECK(attempts == 3);
  calls = 0;
  CHECK_THROWS_AS(with_retry(p, [&]() -> int { ++calls; throw ProviderError("down", true); }, &attempts),
                  ProviderError);
  CHECK(calls == 3);
  calls = 0;
  CHECK_THROWS_AS(with_retry(p, [&]() -> int { ++calls; throw ProviderError("bad key", false); }, &attempts),
                  ProviderError);
  CHECK(calls == 1);
  CHECK(attempts == 1);
}

TEST_CASE("rate limiter spaces requests") {
  RateLimiter limiter(20.0, 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 5; ++i) limiter.acquire();
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(elapsed >= 0.19);  // the first token is free, then 4 x 50 ms
  RateLimiter unlimited(0.0);
  for (int i = 0; i < 1000; ++i) unlimited.acquire();
}

TEST_CASE("openai_chat adapter: two timeouts, then success on attempt 3") {
  StubServer stub;
  std::atomic<int> hits{0};
  std::string auth, model;
  stub.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int n = ++hits;
    auth = req.get_header_value("Authorization");
    const auto body = json::parse(req.body);
    model = body.at("model");
    CHECK(body.at("messages")[0].at("content")[1].at("image_url").at("url").get<std::string>().rfind(
              "data:image/png;base64,", 0) == 0);
    if (n <= 2) std::this_thread::sleep_for(std::chrono::milliseconds(400));
    res.set_content(json{{"choices", {{{"message", {{"content", kCodes}}}}}}}.dump(), "application/json");
  });
  ::setenv("VORIENT_TEST_STUB_KEY", "stub-secret", 1);

  testing::TempDir dir;
  const auto config = remote_coder_config(stub.base_url(), 150);
  const auto design = build_design(config);
  auto store = StudyStore::open_or_init(dir / "study", config);
  FixedClock clock("2026-01-01T00:00:00Z");
  ProviderGateway gw(design, *store, clock);
  gw.set_retry_policy({3, std::chrono::milliseconds(5)});
  const auto& cell = design.cells().front();
  const auto image = gw.generate_image(cell, build_prompt(design, cell));
  const auto out = gw.code_image(image, config.coders[0], "PROMPT", "c6-final");
  CHECK(out.attempt == 3);
  CHECK(hits == 3);
  CHECK(auth == "Bearer stub-secret");
  CHECK(model == "stub-vl");
  const auto rec = parse_coder_output(out, default_scheme());
  CHECK(rec.codes.values == std::array<int, 5>{2, 1, 3, 1, 4});
  CHECK(store->failures().read_all().empty());
  ::unsetenv("VORIENT_TEST_STUB_KEY");
}

TEST_CASE("openai_chat adapter: persistent 503 exhausts retries and logs a failure") {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
    res.set_content("overloaded", "text/plain");
  });
  ::setenv("VORIENT_TEST_STUB_KEY", "k", 1);
  testing::TempDir dir;
  const auto config = remote_coder_config(stub.base_url(), 2000);
  const auto design = build_design(config);
  auto store = StudyStore::open_or_init(dir / "study", config);
  FixedClock clock("2026-01-01T00:00:00Z");
  ProviderGateway gw(design, *store, clock);
  gw.set_retry_policy({3, std::chrono::milliseconds(1)});
  const auto& cell = design.cells().front();
  const auto image = gw.generate_image(cell, build_prompt(design, cell));
  try {
    gw.code_image(image, config.coders[0], "PROMPT", "c6-final");
    FAIL("expected ProviderFailure");
  } catch (const ProviderFailure& e) {
    CHECK(e.attempts() == 3);
    CHECK(e.code() == ErrorCode::kProvider);
  }
  CHECK(hits == 3);
  const auto failures = store->failures().read_all();
  REQUIRE(failures.size() == 1);
  CHECK(failures[0].at("stage") == "code");
  CHECK(failures[0].at("attempts") == 3);
  ::unsetenv("VORIENT_TEST_STUB_KEY");
}

TEST_CASE("a missing credential fails at once and is not retried") {
  StubServer stub;
  std::atomic<int> hits{0};
  stub.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.set_content("{}", "application/json");
  });
  ::unsetenv("VORIENT_TEST_STUB_KEY");
  testing::TempDir dir;
  const auto config = remote_coder_config(stub.base_url(), 2000);
  const auto design = build_design(config);
  auto store = StudyStore::open_or_init(dir / "study", config);
  FixedClock clock("2026-01-01T00:00:00Z");
  ProviderGateway gw(design, *store, clock);
  gw.set_retry_policy({3, std::chrono::milliseconds(1)});
  const auto& cell = design.cells().front();
  const auto image = gw.generate_image(cell, build_prompt(design, cell));
  try {
    gw.code_image(image, config.coders[0], "PROMPT", "c6-final");
    FAIL("expected ProviderFailure");
  } catch (const ProviderFailure& e) {
    CHECK(e.attempts() == 1);
    CHECK(std::string(e.what()).find("VORIENT_TEST_STUB_KEY") != std::string::npos);
  }
  CHECK(hits == 0);
}

TEST_CASE("remote endpoints without base_url are a config error") {
  auto c = default_study_config();
  c.coders[0].endpoint_config.erase("base_url");
  CHECK_THROWS_AS(make_coder_provider(c.coders[0], 0, c.providers), ConfigError);
  c.coders[1].endpoint_config["adapter"] = "telepathy";
  CHECK_THROWS_AS(make_coder_provider(c.coders[1], 0, c.providers), ConfigError);
}

TEST_CASE("PNG encoder round-trips text chunks and size") {
  std::vector<std::uint8_t> rgb(4 * 3 * 3, 0x7f);
  const auto png = mock::encode_png(4, 3, rgb, {{"a", "one"}, {"vorient:scene", R"({"x":1})"}});
  CHECK(util::sniff_image_format(png) == "png");
  CHECK(mock::png_size(png) == std::make_pair(4, 3));
  CHECK(mock::png_text(png, "a") == "one");
  CHECK(mock::png_text(png, "vorient:scene") == R"({"x":1})");
  CHECK_FALSE(mock::png_text(png, "missing"));
  auto corrupt = png;
  corrupt.resize(10);
  CHECK_FALSE(mock::png_size(corrupt));
  CHECK_FALSE(mock::png_text(corrupt, "a"));
}

TEST_CASE("mock providers are deterministic and self-consistent") {
  const auto config = testing::mock_config(7);
  const auto design = build_design(config);
  auto a = mock::make_image_provider(design, 7, false);
  auto b = mock::make_image_provider(design, 7, false);
  auto other = mock::make_image_provider(design, 8, false);
  CHECK_FALSE(a->remote());
  const auto& cell = design.cells()[100];
  const auto prompt = build_prompt(design, cell);
  const auto ia = a->generate(cell, prompt, config.image_size);
  CHECK(ia.bytes == b->generate(cell, prompt, config.image_size).bytes);
  CHECK(ia.bytes != other->generate(cell, prompt, config.image_size).bytes);
  CHECK(mock::png_size(ia.bytes) == std::make_pair(32, 32));
  auto strict = mock::make_image_provider(design, 7, true);
  CHECK(mock::png_size(strict->generate(cell, prompt, config.image_size).bytes) ==
        std::make_pair(config.image_size.width, config.image_size.height));

  const auto scene = mock::scene_from_json(json::parse(*mock::png_text(ia.bytes, mock::kSceneKey)));
  CHECK(scene.cell_id == cell.cell_id);
  CHECK(out_of_range_dimensions(default_scheme(), scene.truth).empty());

  ImageRecord rec;
  rec.cell_id = cell.cell_id;
  for (const auto& spec : config.coders) {
    auto coder = mock::make_coder_provider(spec, 7);
    const auto text = coder->code(rec, ia.bytes, prompt, 0);
    CHECK(text == mock::make_coder_provider(spec, 7)->code(rec, ia.bytes, prompt, 0));
    RawCoderOutput raw{cell.cell_id, spec.id, text, 1, 0, "c6-final"};
    CHECK(parse_coder_output(raw, default_scheme()).valid);
  }
  auto garbage = config.coders[0];
  garbage.endpoint_config["fail_mode"] = "garbage";
  RawCoderOutput raw{cell.cell_id, garbage.id,
                     mock::make_coder_provider(garbage, 7)->code(rec, ia.bytes, prompt, 0), 1, 0, ""};
  CHECK_THROWS_AS(parse_coder_output(raw, default_scheme()), ParseError);
}

TEST_CASE("gateway stores images by content hash and reuses completed cells") {
  testing::TempDir dir;
  const auto config = testing::mock_config(5);
  const auto design = build_design(config);
  auto store = StudyStore::open_or_init(dir / "study", config);
  FixedClock clock("2026-01-01T00:00:00Z");
  ProviderGateway gw(design, *store, clock);
  const auto& cell = design.cells()[7];
  const auto r = gw.generate_image(cell, build_prompt(design, cell));
  const auto bytes = store->read_image(r.image_ref, r.format);
  CHECK(sha256_hex(bytes) == r.image_ref);
  CHECK(std::filesystem::exists(store->image_path(r.image_ref, "png")));
  CHECK(r.prompt_text == build_prompt(design, cell));
  CHECK(r.generated_at == "2026-01-01T00:00:00Z");
  CHECK(r.width == 1024);
  gw.generate_image(cell, build_prompt(design, cell));
  CHECK(store->images().read_all().size() == 1);
  gw.generate_image(cell, build_prompt(design, cell), true);
  CHECK(store->images().read_all().size() == 2);

  // A fresh gateway over the same store sees the committed record.
  ProviderGateway again(design, *store, clock);
  REQUIRE(again.existing_image(cell.cell_id));
  CHECK(again.existing_image(cell.cell_id)->image_ref == r.image_ref);
}
