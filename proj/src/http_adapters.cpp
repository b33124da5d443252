// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "http_adapters.hpp"

#include <cstdlib>

#include <httplib.h>

#include "vorient/error.hpp"
#include "vorient/util.hpp"

namespace vorient::detail {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
  std::string model;
  std::string key_env;
  int timeout_ms = 120000;
};

Endpoint resolve(const json& cfg, const std::string& default_path, const std::string& key_env,
                 const ProviderSettings& settings) {
  Endpoint e;
  e.origin = cfg.value("base_url", "");
  if (e.origin.empty()) throw ConfigError("endpoint is missing base_url");
  while (!e.origin.empty() && e.origin.back() == '/') e.origin.pop_back();
  e.path = cfg.value("path", default_path);
  e.model = cfg.value("model", "");
  e.key_env = cfg.value("api_key_env", key_env);
  e.timeout_ms = cfg.value("timeout_ms", settings.timeout_seconds * 1000);
  return e;
}

std::string credential(const Endpoint& e, bool required) {
  const char* v = std::getenv(e.key_env.c_str());
  if ((v == nullptr || *v == '\0') && required) {
    throw ProviderError("environment variable " + e.key_env + " is not set", false);
  }
  return v ? v : "";
}

bool retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

struct Response {
  std::string body;
  std::string content_type;
};

Response post(const Endpoint& e, const std::string& path, const httplib::Headers& headers,
              const std::string& body) {
  httplib::Client cli(e.origin);
  const auto secs = e.timeout_ms / 1000;
  const auto usecs = (e.timeout_ms % 1000) * 1000;
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  auto res = cli.Post(path, headers, body, "application/json");
  if (!res) {
    throw ProviderError("request to " + e.origin + path + " failed: " +
                            httplib::to_string(res.error()),
                        true);
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("HTTP " + std::to_string(res->status) + " from " + e.origin + path + ": " +
                            res->body.substr(0, 300),
                        retryable_status(res->status));
  }
  return {res->body, res->get_header_value("Content-Type")};
}

json parse_body(const std::string& body, const std::string& who) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw ProviderError(who + " returned a non-JSON body", true);
  return j;
}

GeneratedImage decoded_image(const std::string& b64, const std::string& who) {
  GeneratedImage img;
  img.bytes = util::base64_decode(b64);
  img.format = util::sniff_image_format(img.bytes);
  if (img.bytes.empty() || img.format == "bin") {
    throw ProviderError(who + " returned a malformed image payload", false);
  }
  return img;
}

class OpenAiImages : public ImageProvider {
 public:
  OpenAiImages(const ModelSpec& m, const ProviderSettings& s)
      : e_(resolve(m.endpoint_config, "/v1/images/generations", "OPENAI_API_KEY", s)) {}

  GeneratedImage generate(const StudyCell&, const std::string& prompt,
                          const ImageSize& size) override {
    const json req = {{"model", e_.model},
                      {"prompt", prompt},
                      {"n", 1},
                      {"size", std::to_string(size.width) + "x" + std::to_string(size.height)}};
    const auto res = post(e_, e_.path, {{"Authorization", "Bearer " + credential(e_, true)}},
                          req.dump());
    const json j = parse_body(res.body, "openai_images");
    const auto& data = j.value("data", json::array());
    if (data.empty() || !data[0].contains("b64_json")) {
      throw ProviderError("openai_images response has no image", false);
    }
    auto img = decoded_image(data[0]["b64_json"].get<std::string>(), "openai_images");
    if (j.contains("created")) img.metadata["created"] = j["created"].dump();
    if (data[0].contains("revised_prompt")) {
      img.metadata["revised_prompt"] = data[0]["revised_prompt"].get<std::string>();
    }
    return img;
  }

 private:
  Endpoint e_;
};

class GeminiImages : public ImageProvider {
 public:
  GeminiImages(const ModelSpec& m, const ProviderSettings& s)
      : e_(resolve(m.endpoint_config, "", "GEMINI_API_KEY", s)) {}

  GeneratedImage generate(const StudyCell&, const std::string& prompt,
                          const ImageSize&) override {
    const json req = {{"contents", {{{"parts", {{{"text", prompt}}}}}}},
                      {"generationConfig", {{"responseModalities", {"IMAGE"}}}}};
    const std::string path =
        e_.path.empty() ? "/v1beta/models/" + e_.model + ":generateContent" : e_.path;
    const auto res = post(e_, path, {{"x-goog-api-key", credential(e_, true)}}, req.dump());
    const json j = parse_body(res.body, "gemini_images");
    for (const auto& cand : j.value("candidates", json::array())) {
      for (const auto& part : cand["content"].value("parts", json::array())) {
        const json* inline_data = part.contains("inlineData")    ? &part["inlineData"]
                                  : part.contains("inline_data") ? &part["inline_data"]
                                                                 : nullptr;
        if (inline_data) {
          auto img = decoded_image(inline_data->value("data", ""), "gemini_images");
          img.metadata["model"] = e_.model;
          return img;
        }
      }
    }
    throw ProviderError("gemini_images response has no image part", false);
  }

 private:
  Endpoint e_;
};

// Generic bridge for generators without an official API. Request:
// {"prompt", "width", "height", "cell_id"}; response: image bytes with an
// image/* content type, or {"image_b64": ..., "metadata": {...}}.
class HttpBridgeImages : public ImageProvider {
 public:
  HttpBridgeImages(const ModelSpec& m, const ProviderSettings& s)
      : e_(resolve(m.endpoint_config, "/generate", "MIDJOURNEY_BRIDGE_TOKEN", s)) {}

  GeneratedImage generate(const StudyCell& cell, const std::string& prompt,
                          const ImageSize& size) override {
    const json req = {{"prompt", prompt},
                      {"width", size.width},
                      {"height", size.height},
                      {"cell_id", cell.cell_id}};
    httplib::Headers headers;
    if (const auto token = credential(e_, false); !token.empty()) {
      headers.emplace("Authorization", "Bearer " + token);
    }
    const auto res = post(e_, e_.path, headers, req.dump());
    if (res.content_type.rfind("image/", 0) == 0) {
      GeneratedImage img;
      img.bytes.assign(res.body.begin(), res.body.end());
      img.format = util::sniff_image_format(img.bytes);
      if (img.format == "bin") throw ProviderError("bridge returned a malformed image", false);
      return img;
    }
    const json j = parse_body(res.body, "http_bridge");
    auto img = decoded_image(j.value("image_b64", ""), "http_bridge");
    for (const auto& [k, v] : j.value("metadata", json::object()).items()) {
      img.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return img;
  }

 private:
  Endpoint e_;
};

std::string data_url(const ImageRecord& image, std::span<const std::uint8_t> bytes) {
  return "data:" + util::mime_type_for(image.format) + ";base64," + util::base64_encode(bytes);
}

class OpenAiChat : public CoderProvider {
 public:
  OpenAiChat(const VlmCoderSpec& c, const ProviderSettings& s)
      : e_(resolve(c.endpoint_config, "/v1/chat/completions", "OPENAI_API_KEY", s)) {}

  std::string code(const ImageRecord& image, std::span<const std::uint8_t> bytes,
                   const std::string& prompt, int) override {
    const json content = json::array(
        {{{"type", "text"}, {"text", prompt}},
         {{"type", "image_url"}, {"image_url", {{"url", data_url(image, bytes)}}}}});
    const json req = {{"model", e_.model},
                      {"messages", {{{"role", "user"}, {"content", content}}}}};
    const auto res = post(e_, e_.path, {{"Authorization", "Bearer " + credential(e_, true)}},
                          req.dump());
    const json j = parse_body(res.body, "openai_chat");
    const auto& choices = j.value("choices", json::array());
    if (choices.empty()) return "";
    const auto& msg = choices[0].value("message", json::object());
    return msg.contains("content") && msg["content"].is_string()
               ? msg["content"].get<std::string>()
               : "";
  }

 private:
  Endpoint e_;
};

class GeminiVision : public CoderProvider {
 public:
  GeminiVision(const VlmCoderSpec& c, const ProviderSettings& s)
      : e_(resolve(c.endpoint_config, "", "GEMINI_API_KEY", s)) {}

  std::string code(const ImageRecord& image, std::span<const std::uint8_t> bytes,
                   const std::string& prompt, int) override {
    const json parts = json::array(
        {{{"text", prompt}},
         {{"inline_data",
           {{"mime_type", util::mime_type_for(image.format)},
            {"data", util::base64_encode(bytes)}}}}});
    const json req = {{"contents", {{{"parts", parts}}}}};
    const std::string path =
        e_.path.empty() ? "/v1beta/models/" + e_.model + ":generateContent" : e_.path;
    const auto res = post(e_, path, {{"x-goog-api-key", credential(e_, true)}}, req.dump());
    const json j = parse_body(res.body, "gemini_vision");
    std::string text;
    for (const auto& cand : j.value("candidates", json::array())) {
      for (const auto& part : cand["content"].value("parts", json::array())) {
        if (part.contains("text")) text += part["text"].get<std::string>();
      }
      break;
    }
    return text;
  }

 private:
  Endpoint e_;
};

class AnthropicMessages : public CoderProvider {
 public:
  AnthropicMessages(const VlmCoderSpec& c, const ProviderSettings& s)
      : e_(resolve(c.endpoint_config, "/v1/messages", "ANTHROPIC_API_KEY", s)) {}

  std::string code(const ImageRecord& image, std::span<const std::uint8_t> bytes,
                   const std::string& prompt, int) override {
    const json content = json::array(
        {{{"type", "image"},
          {"source",
           {{"type", "base64"},
            {"media_type", util::mime_type_for(image.format)},
            {"data", util::base64_encode(bytes)}}}},
         {{"type", "text"}, {"text", prompt}}});
    const json req = {{"model", e_.model},
                      {"max_tokens", 1024},
                      {"messages", {{{"role", "user"}, {"content", content}}}}};
    const auto res = post(e_, e_.path,
                          {{"x-api-key", credential(e_, true)}, {"anthropic-version", "2023-06-01"}},
                          req.dump());
    const json j = parse_body(res.body, "anthropic_messages");
    std::string text;
    for (const auto& block : j.value("content", json::array())) {
      if (block.value("type", "") == "text") text += block.value("text", "");
    }
    return text;
  }

 private:
  Endpoint e_;
};

}  // namespace

std::unique_ptr<ImageProvider> make_remote_image_provider(const ModelSpec& model,
                                                          const ProviderSettings& settings) {
  const std::string adapter = model.endpoint_config.value("adapter", "");
  if (adapter == "openai_images") return std::make_unique<OpenAiImages>(model, settings);
  if (adapter == "gemini_images") return std::make_unique<GeminiImages>(model, settings);
  if (adapter == "http_bridge") return std::make_unique<HttpBridgeImages>(model, settings);
  throw ConfigError("model '" + model.id + "' has unknown adapter '" + adapter + "'");
}

std::unique_ptr<CoderProvider> make_remote_coder_provider(const VlmCoderSpec& coder,
                                                          const ProviderSettings& settings) {
  const std::string adapter = coder.endpoint_config.value("adapter", "");
  if (adapter == "openai_chat") return std::make_unique<OpenAiChat>(coder, settings);
  if (adapter == "gemini_vision") return std::make_unique<GeminiVision>(coder, settings);
  if (adapter == "anthropic_messages") return std::make_unique<AnthropicMessages>(coder, settings);
  throw ConfigError("coder '" + coder.id + "' has unknown adapter '" + adapter + "'");
}

}  // namespace vorient::detail
