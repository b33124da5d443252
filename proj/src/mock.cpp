// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/mock.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include <zlib.h>

#include "vorient/error.hpp"
#include "vorient/hashing.hpp"
#include "vorient/util.hpp"

namespace vorient::mock {

using nlohmann::json;

json to_json(const Scene& s) {
  json codes = json::object();
  for (Dimension d : kAllDimensions) codes[std::string(dimension_id(d))] = s.truth[d];
  return {{"cell_id", s.cell_id}, {"truth", codes}, {"difficulty", s.difficulty}};
}

Scene scene_from_json(const json& j) {
  Scene s;
  s.cell_id = j.at("cell_id").get<std::string>();
  for (Dimension d : kAllDimensions) {
    s.truth[d] = j.at("truth").at(std::string(dimension_id(d))).get<int>();
  }
  s.difficulty = j.at("difficulty").get<double>();
  return s;
}

namespace {

// Expected political count, cultural count, flag level, P(sovereignty),
// mean modernity.
struct Profile {
  double pol, cul, flag, sov, mod;
};

constexpr Profile kNeutral{0.6, 3.3, 0.6, 0.4, 3.4};
constexpr Profile kEnglishCore{1.7, 2.4, 2.0, 0.8, 4.1};
constexpr Profile kOtherWest{0.35, 3.2, 0.45, 0.5, 3.8};
constexpr Profile kEast{0.15, 4.1, 0.12, 0.2, 2.8};

Profile concept_adjusted(Profile p, const std::string& concept_id, bool west) {
  if (concept_id == "country") {
    p.pol += west ? 0.8 : 0.3;
    p.flag += west ? 0.6 : 0.2;
    p.sov += 0.15;
  } else if (concept_id == "festivals") {
    if (west) {
      p.pol += 1.2;
      p.flag += 0.5;
      p.cul += 1.0;
    } else {
      p.cul += 2.5;
      p.mod -= 0.6;
    }
  } else if (concept_id == "cities") {
    // Global cities look alike: pull toward the neutral profile.
    p.cul = 0.5 * (p.cul + kNeutral.cul) - 1.2;
    p.mod = 0.5 * (p.mod + kNeutral.mod) + 0.6;
  } else if (concept_id == "women") {
    if (!west) {
      p.cul += 0.4;
      p.mod -= 0.3;
    }
  } else if (concept_id == "cuisine") {
    p.cul += 0.5;
    p.pol -= 0.2;
  } else if (concept_id == "elderly") {
    p.mod -= 0.4;
  } else if (concept_id == "students" || concept_id == "children") {
    p.mod += 0.2;
  }
  return p;
}

double model_strength(const ModelSpec& model) {
  if (auto it = model.endpoint_config.find("bias_strength");
      it != model.endpoint_config.end() && it->is_number()) {
    return it->get<double>();
  }
  if (model.id == "gpt-image-1") return 0.8;
  if (model.id == "midjourney") return 1.2;
  return 1.0;
}

double lerp_from_neutral(double neutral, double target, double s) {
  return neutral + s * (target - neutral);
}

int clamp_int(double v, int lo, int hi) {
  return static_cast<int>(std::clamp(std::lround(v), static_cast<long>(lo), static_cast<long>(hi)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_chunk(std::vector<std::uint8_t>& out, const char type[4],
               std::span<const std::uint8_t> data) {
  put_u32(out, static_cast<std::uint32_t>(data.size()));
  const std::size_t type_at = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  const auto crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
  put_u32(out, static_cast<std::uint32_t>(crc));
}

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

}  // namespace

Scene make_scene(const StudyDesign& design, const StudyCell& cell, std::int64_t seed) {
  const Country& country = design.country(cell.country);
  const bool west = country.region == Region::kWest;
  const Profile base = country.english_core ? kEnglishCore : (west ? kOtherWest : kEast);
  const Profile target = concept_adjusted(base, cell.concept_id, west);
  const Profile neutral = concept_adjusted(kNeutral, cell.concept_id, west);
  const double s = model_strength(design.model(cell.model));

  Profile p{lerp_from_neutral(neutral.pol, target.pol, s),
            lerp_from_neutral(neutral.cul, target.cul, s),
            lerp_from_neutral(neutral.flag, target.flag, s),
            lerp_from_neutral(neutral.sov, target.sov, s),
            lerp_from_neutral(neutral.mod, target.mod, s)};
  p.pol = std::max(p.pol, 0.02);
  p.cul = std::max(p.cul, 0.05);
  p.flag = std::clamp(p.flag, 0.01, 4.0);
  p.sov = std::clamp(p.sov, 0.02, 0.98);
  p.mod = std::clamp(p.mod, 1.0, 5.0);

  util::Rng rng(fnv1a64(cell.cell_id, static_cast<std::uint64_t>(seed)));
  Scene scene;
  scene.cell_id = cell.cell_id;
  Codes& t = scene.truth;
  t[Dimension::kFlag] = std::min(rng.poisson(p.flag), 4);
  t[Dimension::kPolitical] = rng.poisson(p.pol);
  // A prominent flag is itself a political symbol and a sovereignty marker.
  if (t[Dimension::kFlag] >= 2) t[Dimension::kPolitical] = std::max(t[Dimension::kPolitical], 1);
  t[Dimension::kCultural] = rng.poisson(p.cul);
  t[Dimension::kSovereignty] = (rng.bernoulli(p.sov) || t[Dimension::kFlag] >= 2) ? 1 : 0;
  t[Dimension::kModernity] = clamp_int(p.mod + 0.7 * rng.normal(), 1, 5);
  scene.difficulty = 0.30 + 0.20 * rng.uniform();
  return scene;
}

std::vector<std::uint8_t> encode_png(int width, int height, std::span<const std::uint8_t> rgb,
                                     const std::vector<std::pair<std::string, std::string>>& text) {
  const std::size_t row = static_cast<std::size_t>(width) * 3;
  if (width <= 0 || height <= 0 || rgb.size() != row * static_cast<std::size_t>(height)) {
    throw ValidationError("encode_png: pixel buffer does not match dimensions");
  }
  std::vector<std::uint8_t> out(std::begin(kPngSignature), std::end(kPngSignature));

  std::vector<std::uint8_t> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(width));
  put_u32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit truecolor
  put_chunk(out, "IHDR", ihdr);

  for (const auto& [key, value] : text) {
    std::vector<std::uint8_t> data(key.begin(), key.end());
    data.push_back(0);
    data.insert(data.end(), value.begin(), value.end());
    put_chunk(out, "tEXt", data);
  }

  std::vector<std::uint8_t> raw;
  raw.reserve((row + 1) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);  // filter: none
    raw.insert(raw.end(), rgb.begin() + static_cast<std::ptrdiff_t>(row * y),
               rgb.begin() + static_cast<std::ptrdiff_t>(row * (y + 1)));
  }
  uLongf packed_size = compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> packed(packed_size);
  if (compress2(packed.data(), &packed_size, raw.data(), static_cast<uLong>(raw.size()), 6) !=
      Z_OK) {
    throw Error(ErrorCode::kInternal, "zlib compression failed");
  }
  packed.resize(packed_size);
  put_chunk(out, "IDAT", packed);
  put_chunk(out, "IEND", {});
  return out;
}

std::optional<std::string> png_text(std::span<const std::uint8_t> png, const std::string& key) {
  if (png.size() < 8 || std::memcmp(png.data(), kPngSignature, 8) != 0) return std::nullopt;
  std::size_t at = 8;
  while (at + 12 <= png.size()) {
    const std::uint32_t len = get_u32(png, at);
    if (at + 12 + len > png.size()) return std::nullopt;
    const auto* type = reinterpret_cast<const char*>(png.data() + at + 4);
    const auto* data = reinterpret_cast<const char*>(png.data() + at + 8);
    if (std::memcmp(type, "tEXt", 4) == 0) {
      const std::string_view chunk(data, len);
      const auto nul = chunk.find('\0');
      if (nul != std::string_view::npos && chunk.substr(0, nul) == key) {
        return std::string(chunk.substr(nul + 1));
      }
    }
    if (std::memcmp(type, "IEND", 4) == 0) break;
    at += 12 + len;
  }
  return std::nullopt;
}

std::optional<std::pair<int, int>> png_size(std::span<const std::uint8_t> png) {
  if (png.size() < 24 || std::memcmp(png.data(), kPngSignature, 8) != 0) return std::nullopt;
  if (std::memcmp(png.data() + 12, "IHDR", 4) != 0) return std::nullopt;
  return std::pair<int, int>(static_cast<int>(get_u32(png, 16)), static_cast<int>(get_u32(png, 20)));
}

namespace {

class MockImageProvider : public ImageProvider {
 public:
  MockImageProvider(const StudyDesign& design, std::int64_t seed, bool strict)
      : design_(design), seed_(seed), strict_(strict) {}

  GeneratedImage generate(const StudyCell& cell, const std::string& prompt,
                          const ImageSize& size) override {
    const Scene scene = make_scene(design_, cell, seed_);
    const int w = strict_ ? size.width : 32;
    const int h = strict_ ? size.height : 32;

    // Horizontal bands, one per flag level, in two cell-derived colours.
    const std::uint64_t tint = fnv1a64(cell.cell_id, static_cast<std::uint64_t>(seed_));
    const std::uint8_t a[3] = {static_cast<std::uint8_t>(tint), static_cast<std::uint8_t>(tint >> 8),
                               static_cast<std::uint8_t>(tint >> 16)};
    const std::uint8_t b[3] = {static_cast<std::uint8_t>(255 - a[0]),
                               static_cast<std::uint8_t>(255 - a[1]),
                               static_cast<std::uint8_t>(255 - a[2])};
    const int bands = 1 + scene.truth.flag() + scene.truth.modernity();
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
      const std::uint8_t* c = ((y * bands / h) % 2 == 0) ? a : b;
      for (int x = 0; x < w; ++x) {
        std::memcpy(&rgb[(static_cast<std::size_t>(y) * w + x) * 3], c, 3);
      }
    }
    GeneratedImage img;
    img.bytes = encode_png(w, h, rgb, {{kSceneKey, to_json(scene).dump()}, {"prompt", prompt}});
    img.format = "png";
    img.metadata = {{"provider", "mock"},
                    {"seed", std::to_string(seed_)},
                    {"pixel_width", std::to_string(w)},
                    {"pixel_height", std::to_string(h)}};
    return img;
  }

  bool remote() const override { return false; }

 private:
  const StudyDesign& design_;
  std::int64_t seed_;
  bool strict_;
};

double coder_noise(const VlmCoderSpec& coder) {
  if (auto it = coder.endpoint_config.find("noise");
      it != coder.endpoint_config.end() && it->is_number()) {
    return it->get<double>();
  }
  return 0.30 + 0.1 * static_cast<double>(fnv1a64(coder.id) % 1000) / 1000.0;
}

const char* const kPoliticalPool[] = {"national flag", "government building", "state emblem",
                                      "political statue", "military uniform", "party banner"};
const char* const kCulturalPool[] = {"traditional garment", "temple",   "lantern",
                                     "calligraphy",         "festival decoration",
                                     "traditional instrument", "traditional dish"};

std::vector<std::string> symbol_list(const char* const* pool, std::size_t pool_size, int count,
                                     util::Rng& rng) {
  std::vector<std::string> out;
  for (int i = 0; i < std::min(count, 6); ++i) out.emplace_back(pool[rng.next() % pool_size]);
  return out;
}

class MockCoderProvider : public CoderProvider {
 public:
  MockCoderProvider(VlmCoderSpec coder, std::int64_t seed)
      : coder_(std::move(coder)), seed_(seed), noise_(coder_noise(coder_)) {
    fail_mode_ = coder_.endpoint_config.value("fail_mode", "");
  }

  std::string code(const ImageRecord& image, std::span<const std::uint8_t> bytes,
                   const std::string& /*prompt*/, int reprompt) override {
    if (fail_mode_ == "garbage") return "I am unable to provide a structured answer for this image.";
    const auto text = png_text(bytes, kSceneKey);
    if (!text) throw ProviderError("mock coder cannot read scene from " + image.image_ref, false);
    const Scene scene = scene_from_json(json::parse(*text));

    util::Rng rng(fnv1a64(image.cell_id + "|" + coder_.id + "|" + std::to_string(reprompt),
                          static_cast<std::uint64_t>(seed_)));
    Codes c = scene.truth;
    const double q = std::clamp(scene.difficulty * noise_, 0.0, 0.9);
    for (Dimension d : kAllDimensions) {
      if (!rng.bernoulli(q)) continue;
      int& v = c[d];
      switch (d) {
        case Dimension::kPolitical:
        case Dimension::kCultural: {
          const int step = rng.bernoulli(0.2) ? 2 : 1;
          v = (v == 0 || rng.bernoulli(0.5)) ? v + step : std::max(0, v - step);
          break;
        }
        case Dimension::kFlag:
        case Dimension::kModernity: {
          const int lo = d == Dimension::kFlag ? 0 : 1;
          const int hi = d == Dimension::kFlag ? 4 : 5;
          if (v == lo) {
            ++v;
          } else if (v == hi) {
            --v;
          } else {
            v += rng.bernoulli(0.5) ? 1 : -1;
          }
          break;
        }
        case Dimension::kSovereignty: v = 1 - v; break;
      }
    }
    if (fail_mode_ == "out_of_range") c[Dimension::kFlag] = 7;

    json out = json::object();
    for (Dimension d : kAllDimensions) out[std::string(dimension_id(d))] = c[d];
    out["political_symbols_list"] = symbol_list(kPoliticalPool, std::size(kPoliticalPool),
                                                c.political(), rng);
    out["cultural_symbols_list"] = symbol_list(kCulturalPool, std::size(kCulturalPool),
                                               c.cultural(), rng);
    out["reasoning"] = "Counted " + std::to_string(c.political()) + " political and " +
                       std::to_string(c.cultural()) + " cultural symbols; flag level " +
                       std::to_string(c.flag()) + ", modernity " + std::to_string(c.modernity()) +
                       ".";
    const double conf =
        std::clamp(0.97 - 0.55 * scene.difficulty + 0.04 * rng.normal(), 0.05, 0.99);
    if (!rng.bernoulli(0.02)) out["confidence"] = std::round(conf * 100.0) / 100.0;

    switch (rng.next() % 4) {
      case 0: return out.dump();
      case 1: return "```json\n" + out.dump(2) + "\n```";
      case 2:
        return "Here is my coding of the image.\n\n" + out.dump(2) +
               "\n\nThe scores follow the coding scheme.";
      default: return "```\n" + out.dump() + "\n```\n";
    }
  }

  bool remote() const override { return false; }

 private:
  VlmCoderSpec coder_;
  std::int64_t seed_;
  double noise_;
  std::string fail_mode_;
};

}  // namespace

std::unique_ptr<ImageProvider> make_image_provider(const StudyDesign& design, std::int64_t seed,
                                                   bool strict) {
  return std::make_unique<MockImageProvider>(design, seed, strict);
}

std::unique_ptr<CoderProvider> make_coder_provider(const VlmCoderSpec& coder, std::int64_t seed) {
  return std::make_unique<MockCoderProvider>(coder, seed);
}

}  // namespace vorient::mock
