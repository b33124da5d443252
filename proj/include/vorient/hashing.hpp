// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace vorient {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

// 64-bit FNV-1a; used to derive deterministic RNG streams from ids.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0);

}  // namespace vorient
