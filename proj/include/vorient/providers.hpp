// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Provider gateway: uniform clients for text-to-image generators and
// vision-language coders, retry/backoff, rate limiting, and the append-only
// image and raw-output stores.

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/error.hpp"
#include "vorient/study_design.hpp"

namespace vorient {

class StudyStore;

struct ImageRecord {
  std::string cell_id;
  std::string model_id;
  std::string image_ref;  // sha256 of the stored bytes
  std::string format = "png";
  int width = 0;
  int height = 0;
  std::map<std::string, std::string> provider_metadata;
  std::string generated_at;
  std::string prompt_text;
};

nlohmann::json to_json(const ImageRecord& r);
ImageRecord image_record_from_json(const nlohmann::json& j);

struct RawCoderOutput {
  std::string cell_id;
  std::string coder_id;
  std::string raw_text;
  int attempt = 1;   // provider attempts used for this response
  int reprompt = 0;  // 1 for the single re-prompt after a bad response
  std::string prompt_version;
};

nlohmann::json to_json(const RawCoderOutput& r);
RawCoderOutput raw_output_from_json(const nlohmann::json& j);

struct GeneratedImage {
  std::vector<std::uint8_t> bytes;
  std::string format = "png";
  std::map<std::string, std::string> metadata;
};

class ImageProvider {
 public:
  virtual ~ImageProvider() = default;
  virtual GeneratedImage generate(const StudyCell& cell, const std::string& prompt,
                                  const ImageSize& size) = 0;
  // Local providers skip the token bucket.
  virtual bool remote() const { return true; }
};

class CoderProvider {
 public:
  virtual ~CoderProvider() = default;
  virtual std::string code(const ImageRecord& image, std::span<const std::uint8_t> image_bytes,
                           const std::string& prompt, int reprompt) = 0;
  virtual bool remote() const { return true; }
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::string now_iso8601() const = 0;
};

class SystemClock : public Clock {
 public:
  std::string now_iso8601() const override;
};

// Mock runs stamp records with a fixed instant so stores are reproducible.
class FixedClock : public Clock {
 public:
  explicit FixedClock(std::string instant) : instant_(std::move(instant)) {}
  std::string now_iso8601() const override { return instant_; }

 private:
  std::string instant_;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

// Calls fn until it succeeds, a non-retryable ProviderError is thrown, or the
// attempt budget is exhausted; sleeps initial_backoff * 2^(n-1) between
// attempts. Reports the number of attempts through *attempts.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn, int* attempts) -> decltype(fn()) {
  auto backoff = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    if (attempts) *attempts = attempt;
    try {
      return fn();
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= policy.max_attempts) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

// Token bucket; acquire() blocks until a token is available.
class RateLimiter {
 public:
  explicit RateLimiter(double tokens_per_second, double burst = 1.0);
  void acquire();

 private:
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

std::unique_ptr<ImageProvider> make_image_provider(const ModelSpec& model,
                                                   const StudyDesign& design,
                                                   const ProviderSettings& settings);
std::unique_ptr<CoderProvider> make_coder_provider(const VlmCoderSpec& coder,
                                                   std::int64_t seed,
                                                   const ProviderSettings& settings);

// Raised after retries are exhausted; the failure is already logged.
class ProviderFailure : public Error {
 public:
  ProviderFailure(const std::string& what, int attempts)
      : Error(ErrorCode::kProvider, what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class ProviderGateway {
 public:
  ProviderGateway(const StudyDesign& design, StudyStore& store, const Clock& clock);

  // Replaces the provider for a model or coder (tests, custom bridges).
  void set_image_provider(const std::string& model_id, std::unique_ptr<ImageProvider> p);
  void set_coder_provider(const std::string& coder_id, std::unique_ptr<CoderProvider> p);

  std::optional<ImageRecord> existing_image(const std::string& cell_id) const;

  // Generates, stores bytes under their hash and returns the record without
  // appending it. Throws ProviderFailure after logging a failure record.
  ImageRecord fetch_image(const StudyCell& cell, const std::string& prompt);
  void commit_image(const ImageRecord& record);

  // fetch + commit; returns the existing record for completed cells unless
  // force is set.
  ImageRecord generate_image(const StudyCell& cell, const std::string& prompt, bool force = false);

  // Calls the coder with retry; the output is returned, not appended.
  RawCoderOutput code_image(const ImageRecord& image, const VlmCoderSpec& coder,
                            const std::string& prompt, const std::string& prompt_version,
                            int reprompt = 0);

  const RetryPolicy& retry_policy() const { return retry_; }
  void set_retry_policy(RetryPolicy p) { retry_ = p; }

 private:
  ImageProvider& image_provider(const std::string& model_id);
  CoderProvider& coder_provider(const std::string& coder_id);
  RateLimiter& limiter(const std::string& provider_id);

  const StudyDesign& design_;
  StudyStore& store_;
  const Clock& clock_;
  RetryPolicy retry_;
  mutable std::mutex mu_;
  std::map<std::string, std::unique_ptr<ImageProvider>> image_providers_;
  std::map<std::string, std::unique_ptr<CoderProvider>> coder_providers_;
  std::map<std::string, std::unique_ptr<RateLimiter>> limiters_;
  std::map<std::string, ImageRecord> images_;
};

}  // namespace vorient
