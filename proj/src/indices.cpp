// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/indices.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "vorient/stats.hpp"
#include "vorient/util.hpp"

namespace vorient {

using nlohmann::json;

NormalizationContext normalization_context(std::span<const ConsensusRecord> consensus) {
  if (consensus.empty()) throw DegenerateError("no consensus records to normalize over");
  NormalizationContext ctx;
  ctx.max_political = 0;
  ctx.max_cultural = 0;
  for (const auto& c : consensus) {
    ctx.max_political = std::max(ctx.max_political, c.codes.political());
    ctx.max_cultural = std::max(ctx.max_cultural, c.codes.cultural());
  }
  if (ctx.max_political == 0 || ctx.max_cultural == 0) {
    throw DegenerateError("corpus maximum of " +
                          std::string(ctx.max_political == 0 ? "political" : "cultural") +
                          " symbols is 0; PSI/CEI are undefined");
  }
  return ctx;
}

void IndexWeights::validate() const {
  auto check = [](const char* name, double a, double b, double c) {
    if (a < 0 || b < 0 || c < 0 || std::fabs(a + b + c - 1.0) > 1e-12) {
      throw ValidationError(std::string(name) + " weights must be non-negative and sum to 1");
    }
  };
  check("PSI", psi_flag, psi_sovereignty, psi_political);
  check("CEI", cei_cultural, cei_traditionality, cei_flag_absence);
}

double symbolization_index(int political, int cultural) {
  if (political < 0 || cultural < 0) throw ValidationError("symbol counts must be >= 0");
  return static_cast<double>(political - cultural) / static_cast<double>(political + cultural + 1);
}

namespace {

[[noreturn]] void inconsistent(const std::string& what) {
  throw Error(ErrorCode::kInternal, "index input inconsistent with normalization context: " + what);
}

void check_ctx(const NormalizationContext& ctx) {
  if (ctx.max_political < 1 || ctx.max_cultural < 1) inconsistent("maxima must be >= 1");
}

void check_flag(int flag) {
  if (flag < 0 || flag > 4) inconsistent("flag " + std::to_string(flag) + " outside 0-4");
}

}  // namespace

double psi(int flag, int sovereignty, int political, const NormalizationContext& ctx,
           const IndexWeights& w) {
  check_ctx(ctx);
  check_flag(flag);
  if (sovereignty != 0 && sovereignty != 1) inconsistent("sovereignty must be 0 or 1");
  if (political < 0 || political > ctx.max_political) {
    inconsistent("political " + std::to_string(political) + " > max " +
                 std::to_string(ctx.max_political));
  }
  return w.psi_flag * flag / 4.0 + w.psi_sovereignty * sovereignty +
         w.psi_political * political / static_cast<double>(ctx.max_political);
}

double cei(int cultural, int modernity, int flag, const NormalizationContext& ctx,
           const IndexWeights& w) {
  check_ctx(ctx);
  check_flag(flag);
  if (modernity < 1 || modernity > 5) inconsistent("modernity outside 1-5");
  if (cultural < 0 || cultural > ctx.max_cultural) {
    inconsistent("cultural " + std::to_string(cultural) + " > max " +
                 std::to_string(ctx.max_cultural));
  }
  return w.cei_cultural * cultural / static_cast<double>(ctx.max_cultural) +
         w.cei_traditionality * (1.0 - modernity / 5.0) + w.cei_flag_absence * (1.0 - flag / 4.0);
}

json to_json(const IndexRecord& r) {
  json j = {{"cell_id", r.cell_id}, {"si", r.si},   {"psi", r.psi},
            {"cei", r.cei},         {"voi", r.voi}, {"max_political", r.normalization.max_political},
            {"max_cultural", r.normalization.max_cultural},
            {"scope", r.normalization.scope}};
  for (Dimension d : kAllDimensions) j[std::string(dimension_id(d))] = r.codes[d];
  return j;
}

IndexRecord index_record_from_json(const json& j) {
  IndexRecord r;
  r.cell_id = j.at("cell_id").get<std::string>();
  r.si = j.at("si").get<double>();
  r.psi = j.at("psi").get<double>();
  r.cei = j.at("cei").get<double>();
  r.voi = j.at("voi").get<double>();
  r.normalization.max_political = j.at("max_political").get<int>();
  r.normalization.max_cultural = j.at("max_cultural").get<int>();
  r.normalization.scope = j.value("scope", std::string(kCorpusScope));
  for (Dimension d : kAllDimensions) {
    r.codes[d] = j.value(std::string(dimension_id(d)), r.codes[d]);
  }
  return r;
}

IndexRecord compute_index(const ConsensusRecord& c, const NormalizationContext& ctx,
                          const IndexWeights& w) {
  IndexRecord r;
  r.cell_id = c.cell_id;
  r.codes = c.codes;
  r.si = symbolization_index(c.codes.political(), c.codes.cultural());
  r.psi = psi(c.codes.flag(), c.codes.sovereignty(), c.codes.political(), ctx, w);
  r.cei = cei(c.codes.cultural(), c.codes.modernity(), c.codes.flag(), ctx, w);
  r.voi = voi(r.psi, r.cei);
  r.normalization = ctx;
  return r;
}

std::vector<IndexRecord> compute_indices(std::span<const ConsensusRecord> consensus,
                                         const IndexWeights& w) {
  w.validate();
  const auto ctx = normalization_context(consensus);
  std::vector<IndexRecord> out;
  out.reserve(consensus.size());
  for (const auto& c : consensus) out.push_back(compute_index(c, ctx, w));
  return out;
}

std::string index_records_csv(std::span<const IndexRecord> records) {
  std::string out = "cell_id,si,psi,cei,voi,max_political,max_cultural\n";
  for (const auto& r : records) {
    out += r.cell_id + ',' + util::fixed(r.si, 3) + ',' + util::fixed(r.psi, 3) + ',' +
           util::fixed(r.cei, 3) + ',' + util::fixed(r.voi, 3) + ',' +
           std::to_string(r.normalization.max_political) + ',' +
           std::to_string(r.normalization.max_cultural) + '\n';
  }
  return out;
}

json to_json(const MeanSd& m) {
  return {{"mean", m.mean}, {"sd", m.sd ? json(*m.sd) : json(nullptr)}};
}

MeanSd mean_sd_from_json(const json& j) {
  MeanSd m;
  m.mean = j.at("mean").get<double>();
  if (j.contains("sd") && !j.at("sd").is_null()) m.sd = j.at("sd").get<double>();
  return m;
}

namespace {

constexpr const char* kAggregateFields[] = {"si",       "psi",  "cei",         "voi",      "political",
                                            "cultural", "flag", "sovereignty", "modernity"};

template <typename Aggregate>
auto field(Aggregate& a, int i) {
  decltype(&a.si) fields[] = {&a.si,       &a.psi,  &a.cei,         &a.voi,      &a.political,
                      &a.cultural, &a.flag, &a.sovereignty, &a.modernity};
  return fields[i];
}

MeanSd summarize(const std::vector<double>& v) {
  MeanSd m;
  m.mean = stats::mean(v);
  if (v.size() >= 2) m.sd = stats::sample_sd(v);
  return m;
}

}  // namespace

json to_json(const IndexAggregate& a) {
  json j = {{"key", a.key}, {"n", a.n}, {"voi_rank", a.voi_rank}};
  for (int i = 0; i < 9; ++i) j[kAggregateFields[i]] = to_json(*field(a, i));
  return j;
}

IndexAggregate index_aggregate_from_json(const json& j) {
  IndexAggregate a;
  a.key = j.at("key").get<std::string>();
  a.n = j.at("n").get<std::size_t>();
  a.voi_rank = j.value("voi_rank", 0);
  for (int i = 0; i < 9; ++i) *field(a, i) = mean_sd_from_json(j.at(kAggregateFields[i]));
  return a;
}

std::vector<IndexAggregate> aggregate_indices(std::span<const IndexRecord> records,
                                              const StudyDesign& design, Grouping grouping) {
  std::map<std::string, std::vector<const IndexRecord*>> groups;
  for (const auto& r : records) {
    const StudyCell* cell = design.find_cell(r.cell_id);
    if (!cell) throw LookupError("index record for unknown cell '" + r.cell_id + "'");
    groups[group_key(design, *cell, grouping)].push_back(&r);
  }

  std::vector<IndexAggregate> out;
  for (const auto& [key, members] : groups) {
    IndexAggregate a;
    a.key = key;
    a.n = members.size();
    std::vector<double> cols[9];
    for (const auto* r : members) {
      const double vals[9] = {r->si,
                              r->psi,
                              r->cei,
                              r->voi,
                              static_cast<double>(r->codes.political()),
                              static_cast<double>(r->codes.cultural()),
                              static_cast<double>(r->codes.flag()),
                              static_cast<double>(r->codes.sovereignty()),
                              static_cast<double>(r->codes.modernity())};
      for (int i = 0; i < 9; ++i) cols[i].push_back(vals[i]);
    }
    for (int i = 0; i < 9; ++i) *field(a, i) = summarize(cols[i]);
    out.push_back(std::move(a));
  }
  std::sort(out.begin(), out.end(), [](const IndexAggregate& x, const IndexAggregate& y) {
    if (x.voi.mean != y.voi.mean) return x.voi.mean > y.voi.mean;
    return x.key < y.key;
  });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].voi_rank = static_cast<int>(i + 1);
  return out;
}

}  // namespace vorient
