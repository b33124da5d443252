// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vorient::util {

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_text(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target.
void write_atomic(const std::filesystem::path& path, std::string_view content);
void write_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> content);

// Fixed-point formatting with a leading '-' only for nonzero values.
std::string fixed(double value, int decimals);

// "image/png" etc. from magic bytes; "png" | "jpeg" | "webp" | "bin".
std::string sniff_image_format(std::span<const std::uint8_t> bytes);
std::string mime_type_for(std::string_view format);

// Deterministic generator (splitmix64-seeded xoshiro256**) so mock data is
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  double uniform();  // [0, 1)
  double normal();
  int poisson(double lambda);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t s_[4];
  bool has_spare_ = false;
  double spare_ = 0;
};

}  // namespace vorient::util
