// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Remote provider adapters (internal). Each adapter isolates one vendor's
// request/response shape; credentials are read from the environment at call
// time. Default variables:
//
//   openai_images, openai_chat  OPENAI_API_KEY
//   gemini_images, gemini_vision GEMINI_API_KEY
//   anthropic_messages          ANTHROPIC_API_KEY
//   http_bridge                 MIDJOURNEY_BRIDGE_TOKEN (optional)
//
// endpoint.api_key_env renames the variable (e.g. QWEN_API_KEY for an
// OpenAI-compatible endpoint).

#pragma once

#include <memory>

#include "vorient/providers.hpp"

namespace vorient::detail {

std::unique_ptr<ImageProvider> make_remote_image_provider(const ModelSpec& model,
                                                          const ProviderSettings& settings);
std::unique_ptr<CoderProvider> make_remote_coder_provider(const VlmCoderSpec& coder,
                                                          const ProviderSettings& settings);

}  // namespace vorient::detail
