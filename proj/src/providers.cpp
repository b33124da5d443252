// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/providers.hpp"

#include <algorithm>
#include <ctime>

#include "http_adapters.hpp"
#include "vorient/mock.hpp"
#include "vorient/store.hpp"
#include "vorient/util.hpp"

namespace vorient {

using nlohmann::json;

json to_json(const ImageRecord& r) {
  return {{"cell_id", r.cell_id},         {"model_id", r.model_id},
          {"image_ref", r.image_ref},     {"format", r.format},
          {"width", r.width},             {"height", r.height},
          {"provider_metadata", r.provider_metadata},
          {"generated_at", r.generated_at}, {"prompt_text", r.prompt_text}};
}

ImageRecord image_record_from_json(const json& j) {
  ImageRecord r;
  r.cell_id = j.at("cell_id").get<std::string>();
  r.model_id = j.value("model_id", "");
  r.image_ref = j.at("image_ref").get<std::string>();
  r.format = j.value("format", "png");
  r.width = j.value("width", 0);
  r.height = j.value("height", 0);
  r.provider_metadata =
      j.value("provider_metadata", std::map<std::string, std::string>{});
  r.generated_at = j.value("generated_at", "");
  r.prompt_text = j.value("prompt_text", "");
  return r;
}

json to_json(const RawCoderOutput& r) {
  return {{"cell_id", r.cell_id},   {"coder_id", r.coder_id}, {"raw_text", r.raw_text},
          {"attempt", r.attempt},   {"reprompt", r.reprompt}, {"prompt_version", r.prompt_version}};
}

RawCoderOutput raw_output_from_json(const json& j) {
  RawCoderOutput r;
  r.cell_id = j.at("cell_id").get<std::string>();
  r.coder_id = j.at("coder_id").get<std::string>();
  r.raw_text = j.value("raw_text", "");
  r.attempt = j.value("attempt", 1);
  r.reprompt = j.value("reprompt", 0);
  r.prompt_version = j.value("prompt_version", "");
  return r;
}

std::string SystemClock::now_iso8601() const {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RateLimiter::RateLimiter(double tokens_per_second, double burst)
    : rate_(tokens_per_second),
      burst_(burst),
      tokens_(burst),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0) return;  // unlimited
  std::unique_lock lock(mu_);
  for (;;) {
    const auto now = std::chrono::steady_clock::now();
    tokens_ = std::min(burst_,
                       tokens_ + rate_ * std::chrono::duration<double>(now - last_).count());
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

std::unique_ptr<ImageProvider> make_image_provider(const ModelSpec& model,
                                                   const StudyDesign& design,
                                                   const ProviderSettings& settings) {
  if (model.provider_kind == ProviderKind::kMock) {
    return mock::make_image_provider(design, design.config().seed, settings.strict_mock_images);
  }
  return detail::make_remote_image_provider(model, settings);
}

std::unique_ptr<CoderProvider> make_coder_provider(const VlmCoderSpec& coder, std::int64_t seed,
                                                   const ProviderSettings& settings) {
  if (coder.provider_kind == ProviderKind::kMock) return mock::make_coder_provider(coder, seed);
  return detail::make_remote_coder_provider(coder, settings);
}

ProviderGateway::ProviderGateway(const StudyDesign& design, StudyStore& store, const Clock& clock)
    : design_(design), store_(store), clock_(clock) {
  const auto& p = design.config().providers;
  retry_.max_attempts = p.max_attempts;
  retry_.initial_backoff = std::chrono::milliseconds(p.initial_backoff_ms);
  for (const auto& j : store_.images().read_all()) {
    auto r = image_record_from_json(j);
    images_[r.cell_id] = std::move(r);
  }
}

void ProviderGateway::set_image_provider(const std::string& model_id,
                                         std::unique_ptr<ImageProvider> p) {
  std::lock_guard lock(mu_);
  image_providers_[model_id] = std::move(p);
}

void ProviderGateway::set_coder_provider(const std::string& coder_id,
                                         std::unique_ptr<CoderProvider> p) {
  std::lock_guard lock(mu_);
  coder_providers_[coder_id] = std::move(p);
}

ImageProvider& ProviderGateway::image_provider(const std::string& model_id) {
  std::lock_guard lock(mu_);
  auto& slot = image_providers_[model_id];
  if (!slot) {
    slot = make_image_provider(design_.model(model_id), design_, design_.config().providers);
  }
  return *slot;
}

CoderProvider& ProviderGateway::coder_provider(const std::string& coder_id) {
  std::lock_guard lock(mu_);
  auto& slot = coder_providers_[coder_id];
  if (!slot) {
    const auto& coders = design_.config().coders;
    auto it = std::find_if(coders.begin(), coders.end(),
                           [&](const VlmCoderSpec& c) { return c.id == coder_id; });
    if (it == coders.end()) throw LookupError("unknown coder '" + coder_id + "'");
    slot = make_coder_provider(*it, design_.config().seed, design_.config().providers);
  }
  return *slot;
}

RateLimiter& ProviderGateway::limiter(const std::string& provider_id) {
  std::lock_guard lock(mu_);
  auto& slot = limiters_[provider_id];
  if (!slot) slot = std::make_unique<RateLimiter>(design_.config().providers.requests_per_second);
  return *slot;
}

std::optional<ImageRecord> ProviderGateway::existing_image(const std::string& cell_id) const {
  std::lock_guard lock(mu_);
  auto it = images_.find(cell_id);
  if (it == images_.end()) return std::nullopt;
  return it->second;
}

ImageRecord ProviderGateway::fetch_image(const StudyCell& cell, const std::string& prompt) {
  ImageProvider& provider = image_provider(cell.model);
  const ImageSize size = design_.config().image_size;
  int attempts = 0;
  GeneratedImage img;
  try {
    img = with_retry(
        retry_,
        [&] {
          if (provider.remote()) limiter(cell.model).acquire();
          auto out = provider.generate(cell, prompt, size);
          if (out.bytes.empty()) throw ProviderError("empty image payload", false);
          return out;
        },
        &attempts);
  } catch (const ProviderError& e) {
    store_.failures().append({{"stage", "generate"},
                              {"cell_id", cell.cell_id},
                              {"provider", cell.model},
                              {"attempts", attempts},
                              {"error", e.what()},
                              {"at", clock_.now_iso8601()}});
    throw ProviderFailure("generation failed for " + cell.cell_id + " after " +
                              std::to_string(attempts) + " attempt(s): " + e.what(),
                          attempts);
  }

  ImageRecord r;
  r.cell_id = cell.cell_id;
  r.model_id = cell.model;
  r.format = img.format.empty() ? util::sniff_image_format(img.bytes) : img.format;
  r.image_ref = store_.put_image(img.bytes, r.format);
  r.width = size.width;
  r.height = size.height;
  r.provider_metadata = std::move(img.metadata);
  r.provider_metadata["attempts"] = std::to_string(attempts);
  r.generated_at = clock_.now_iso8601();
  r.prompt_text = prompt;
  return r;
}

void ProviderGateway::commit_image(const ImageRecord& record) {
  store_.images().append(to_json(record));
  std::lock_guard lock(mu_);
  images_[record.cell_id] = record;
}

ImageRecord ProviderGateway::generate_image(const StudyCell& cell, const std::string& prompt,
                                            bool force) {
  if (!force) {
    if (auto existing = existing_image(cell.cell_id)) return *existing;
  }
  ImageRecord r = fetch_image(cell, prompt);
  commit_image(r);
  return r;
}

RawCoderOutput ProviderGateway::code_image(const ImageRecord& image, const VlmCoderSpec& coder,
                                           const std::string& prompt,
                                           const std::string& prompt_version, int reprompt) {
  CoderProvider& provider = coder_provider(coder.id);
  const auto bytes = store_.read_image(image.image_ref, image.format);
  int attempts = 0;
  RawCoderOutput out;
  out.cell_id = image.cell_id;
  out.coder_id = coder.id;
  out.reprompt = reprompt;
  out.prompt_version = prompt_version;
  try {
    out.raw_text = with_retry(
        retry_,
        [&] {
          if (provider.remote()) limiter(coder.id).acquire();
          return provider.code(image, bytes, prompt, reprompt);
        },
        &attempts);
  } catch (const ProviderError& e) {
    store_.failures().append({{"stage", "code"},
                              {"cell_id", image.cell_id},
                              {"provider", coder.id},
                              {"attempts", attempts},
                              {"error", e.what()},
                              {"at", clock_.now_iso8601()}});
    throw ProviderFailure("coding failed for " + image.cell_id + " by " + coder.id + " after " +
                              std::to_string(attempts) + " attempt(s): " + e.what(),
                          attempts);
  }
  out.attempt = attempts;
  return out;
}

}  // namespace vorient
