// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Deterministic offline providers.
//
// The mock generator draws a ground-truth scene for each cell from a bias
// profile (English-core West, other West, East) modulated by concept and
// model, and embeds it in a small PNG as a tEXt chunk. Mock coders read the
// scene back from the image bytes and report it with coder-specific noise
// that grows with the scene's difficulty, so ensemble disagreement, entropy
// and consensus accuracy behave like a real annotation run.

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vorient/coding.hpp"
#include "vorient/providers.hpp"
#include "vorient/study_design.hpp"

namespace vorient::mock {

struct Scene {
  std::string cell_id;
  Codes truth;
  double difficulty = 0;  // 0 = unambiguous, 1 = very ambiguous
};

nlohmann::json to_json(const Scene& s);
Scene scene_from_json(const nlohmann::json& j);

Scene make_scene(const StudyDesign& design, const StudyCell& cell, std::int64_t seed);

// 8-bit RGB PNG with optional tEXt chunks.
std::vector<std::uint8_t> encode_png(int width, int height, std::span<const std::uint8_t> rgb,
                                     const std::vector<std::pair<std::string, std::string>>& text);
std::optional<std::string> png_text(std::span<const std::uint8_t> png, const std::string& key);
// Width and height from the IHDR chunk.
std::optional<std::pair<int, int>> png_size(std::span<const std::uint8_t> png);

inline constexpr const char* kSceneKey = "vorient:scene";

// Mock images are 32x32 unless strict, in which case they have the
// configured size. Records always carry the configured size.
std::unique_ptr<ImageProvider> make_image_provider(const StudyDesign& design, std::int64_t seed,
                                                   bool strict);

// endpoint_config may set "fail_mode": "garbage" (never returns JSON) or
// "out_of_range" (flag_appearance 7) for fault-injection runs.
std::unique_ptr<CoderProvider> make_coder_provider(const VlmCoderSpec& coder, std::int64_t seed);

}  // namespace vorient::mock
