// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vorient/stats.hpp"

namespace vorient {

void ReliabilityMatrix::add_unit(std::string unit, std::vector<std::optional<double>> row) {
  if (row.size() != coders.size()) {
    throw ValidationError("unit '" + unit + "' has " + std::to_string(row.size()) +
                          " values for " + std::to_string(coders.size()) + " coders");
  }
  units.push_back(std::move(unit));
  values.push_back(std::move(row));
}

ReliabilityResult krippendorff_alpha(const ReliabilityMatrix& m) {
  if (m.coders.size() < 2) throw ValidationError("alpha needs at least 2 coders");
  if (m.values.size() != m.units.size()) throw ValidationError("matrix rows do not match units");

  ReliabilityResult res;
  std::vector<std::vector<double>> pairable;
  for (std::size_t u = 0; u < m.values.size(); ++u) {
    std::vector<double> vals;
    for (const auto& v : m.values[u]) {
      if (v) vals.push_back(*v);
    }
    if (vals.size() < 2) {
      res.dropped_units.push_back(m.units[u]);
      continue;
    }
    pairable.push_back(std::move(vals));
  }
  if (pairable.size() < 2) {
    throw ValidationError("alpha needs at least 2 pairable units, got " +
                          std::to_string(pairable.size()));
  }

  // Distinct values index the coincidence matrix.
  std::vector<double> levels;
  for (const auto& vals : pairable) levels.insert(levels.end(), vals.begin(), vals.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  const std::size_t k = levels.size();
  auto index_of = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(levels.begin(), levels.end(), v) -
                                    levels.begin());
  };

  std::vector<double> o(k * k, 0.0);
  double n = 0;
  for (const auto& vals : pairable) {
    const double mu = static_cast<double>(vals.size());
    n += mu;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (i == j) continue;
        o[index_of(vals[i]) * k + index_of(vals[j])] += 1.0 / (mu - 1.0);
      }
    }
  }
  std::vector<double> marg(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) marg[c] += o[c * k + d];
  }

  auto delta2 = [&](std::size_t c, std::size_t d) -> double {
    switch (m.level) {
      case MeasurementLevel::kNominal: return c == d ? 0.0 : 1.0;
      case MeasurementLevel::kInterval: {
        const double diff = levels[c] - levels[d];
        return diff * diff;
      }
      case MeasurementLevel::kOrdinal: {
        const std::size_t lo = std::min(c, d);
        const std::size_t hi = std::max(c, d);
        double s = 0;
        for (std::size_t g = lo; g <= hi; ++g) s += marg[g];
        s -= (marg[c] + marg[d]) / 2.0;
        return s * s;
      }
    }
    return 0.0;
  };

  double observed = 0;
  double expected = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < k; ++d) {
      if (c == d) continue;
      const double w = delta2(c, d);
      observed += o[c * k + d] * w;
      expected += marg[c] * marg[d] * w;
    }
  }
  res.n_units = pairable.size();
  res.n_pairable_values = static_cast<std::size_t>(std::lround(n));
  res.observed_disagreement = observed / n;
  res.expected_disagreement = expected / (n * (n - 1.0));
  if (res.expected_disagreement == 0.0) {
    res.alpha = 1.0;
    res.degenerate = true;
  } else {
    res.alpha = 1.0 - res.observed_disagreement / res.expected_disagreement;
  }
  return res;
}

MeasurementLevel default_level(Dimension d) { return default_scheme().spec(d).level; }

double percent_agreement(const ReliabilityMatrix& m, double tolerance) {
  if (m.coders.size() != 2) throw ValidationError("percent agreement compares exactly 2 coders");
  std::size_t n = 0;
  std::size_t agree = 0;
  for (const auto& row : m.values) {
    if (!row[0] || !row[1]) continue;
    ++n;
    if (std::fabs(*row[0] - *row[1]) <= tolerance + 1e-12) ++agree;
  }
  if (n == 0) throw ValidationError("percent agreement on an empty matrix");
  return static_cast<double>(agree) / static_cast<double>(n);
}

double agreement_tolerance(const DimensionSpec& spec, int count_tolerance) {
  return spec.kind == DimensionKind::kCount ? static_cast<double>(count_tolerance) : 0.0;
}

std::string_view to_string(QualityStratum s) {
  switch (s) {
    case QualityStratum::kHigh: return "high";
    case QualityStratum::kMedium: return "medium";
    case QualityStratum::kLow: return "low";
  }
  return "low";
}

QualityStratum quality_stratum(double q) {
  if (q > 70.0) return QualityStratum::kHigh;
  if (q > 50.0) return QualityStratum::kMedium;
  return QualityStratum::kLow;
}

StratifiedAgreement stratified_agreement(const ReliabilityMatrix& m,
                                         const std::map<std::string, QualityStratum>& strata,
                                         double tolerance) {
  StratifiedAgreement out;
  out.overall = percent_agreement(m, tolerance);
  std::map<QualityStratum, ReliabilityMatrix> parts;
  for (std::size_t u = 0; u < m.units.size(); ++u) {
    auto it = strata.find(m.units[u]);
    if (it == strata.end()) {
      throw ValidationError("unit '" + m.units[u] + "' has no quality stratum");
    }
    auto& part = parts[it->second];
    part.coders = m.coders;
    part.level = m.level;
    part.add_unit(m.units[u], m.values[u]);
    if (m.values[u][0] && m.values[u][1]) ++out.n_overall;
  }
  for (const auto& [stratum, part] : parts) {
    bool any = std::any_of(part.values.begin(), part.values.end(),
                           [](const auto& row) { return row[0] && row[1]; });
    if (!any) continue;
    out.by_stratum[stratum] = percent_agreement(part, tolerance);
    out.n_by_stratum[stratum] = static_cast<std::size_t>(
        std::count_if(part.values.begin(), part.values.end(),
                      [](const auto& row) { return row[0] && row[1]; }));
  }
  return out;
}

ReliabilityMatrix matrix_for(std::span<const CodingRecord> records, Dimension d,
                             const std::vector<std::string>& coders) {
  ReliabilityMatrix m;
  m.coders = coders;
  m.level = default_level(d);
  std::map<std::string, std::vector<std::optional<double>>> rows;
  std::vector<std::string> order;
  for (const auto& r : records) {
    if (!r.valid) continue;
    auto it = std::find(coders.begin(), coders.end(), r.coder_id);
    if (it == coders.end()) continue;
    auto [row, inserted] = rows.try_emplace(r.cell_id, coders.size());
    if (inserted) order.push_back(r.cell_id);
    row->second[static_cast<std::size_t>(it - coders.begin())] = r.codes[d];
  }
  for (const auto& unit : order) m.add_unit(unit, rows[unit]);
  return m;
}

AiHumanAgreement ai_human_agreement(std::span<const ConsensusRecord> consensus,
                                    std::span<const CodingRecord> expert_records,
                                    const CodingScheme& scheme, int count_tolerance) {
  AiHumanAgreement out;
  std::map<std::string, const ConsensusRecord*> by_cell;
  for (const auto& c : consensus) by_cell[c.cell_id] = &c;
  std::set<std::string> experts;
  for (const auto& r : expert_records) {
    if (r.valid) experts.insert(r.coder_id);
  }
  out.experts.assign(experts.begin(), experts.end());

  std::map<QualityStratum, std::vector<double>> stratum_values;
  std::vector<double> alphas;
  for (Dimension d : kAllDimensions) {
    AiHumanDimension dim{d, std::nullopt, std::nullopt, {}, 0};
    const double tol = agreement_tolerance(scheme.spec(d), count_tolerance);
    std::vector<double> a_vals;
    std::vector<double> p_vals;
    std::map<QualityStratum, std::vector<double>> s_vals;
    for (const auto& expert : out.experts) {
      ReliabilityMatrix m;
      m.coders = {"consensus", expert};
      m.level = scheme.spec(d).level;
      std::map<std::string, QualityStratum> strata;
      for (const auto& r : expert_records) {
        if (!r.valid || r.coder_id != expert) continue;
        auto it = by_cell.find(r.cell_id);
        if (it == by_cell.end()) continue;
        m.add_unit(r.cell_id, {static_cast<double>(it->second->codes[d]),
                               static_cast<double>(r.codes[d])});
        strata[r.cell_id] = quality_stratum(it->second->quality_score);
      }
      if (m.units.empty()) continue;
      dim.n_units = std::max(dim.n_units, m.units.size());
      if (m.units.size() >= 2) a_vals.push_back(krippendorff_alpha(m).alpha);
      const auto strat = stratified_agreement(m, strata, tol);
      p_vals.push_back(strat.overall);
      for (const auto& [s, v] : strat.by_stratum) s_vals[s].push_back(v);
    }
    auto mean_of = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    if (!a_vals.empty()) {
      dim.alpha = mean_of(a_vals);
      alphas.push_back(*dim.alpha);
    }
    if (!p_vals.empty()) dim.agreement = mean_of(p_vals);
    for (const auto& [s, v] : s_vals) {
      dim.agreement_by_stratum[s] = mean_of(v);
      stratum_values[s].push_back(dim.agreement_by_stratum[s]);
    }
    out.dimensions.push_back(std::move(dim));
  }
  if (!alphas.empty()) {
    double s = 0;
    for (double a : alphas) s += a;
    out.overall_alpha = s / static_cast<double>(alphas.size());
  }
  for (const auto& [s, v] : stratum_values) {
    double sum = 0;
    for (double x : v) sum += x;
    out.agreement_by_stratum[s] = sum / static_cast<double>(v.size());
  }
  return out;
}

namespace {

using nlohmann::json;

Distribution distribution(const std::vector<double>& v) {
  Distribution d;
  d.n = v.size();
  if (v.empty()) return d;
  d.mean = stats::mean(v);
  if (v.size() >= 2) d.sd = stats::sample_sd(v);
  d.min = *std::min_element(v.begin(), v.end());
  d.max = *std::max_element(v.begin(), v.end());
  return d;
}

std::optional<double> correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() < 3) return std::nullopt;
  try {
    return stats::pearson_r(x, y);
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json to_json(const Distribution& d) {
  return {{"n", d.n},     {"mean", d.mean}, {"sd", opt(d.sd)},
          {"min", d.min}, {"max", d.max},   {"r_accuracy", opt(d.r_accuracy)}};
}

Distribution distribution_from_json(const json& j) {
  Distribution d;
  d.n = j.at("n").get<std::size_t>();
  d.mean = j.at("mean").get<double>();
  d.sd = opt_from(j, "sd");
  d.min = j.at("min").get<double>();
  d.max = j.at("max").get<double>();
  d.r_accuracy = opt_from(j, "r_accuracy");
  return d;
}

json strata_json(const std::map<QualityStratum, double>& m) {
  json j = json::object();
  for (const auto& [s, v] : m) j[std::string(to_string(s))] = v;
  return j;
}

std::map<QualityStratum, double> strata_from_json(const json& j) {
  std::map<QualityStratum, double> m;
  for (auto s : {QualityStratum::kHigh, QualityStratum::kMedium, QualityStratum::kLow}) {
    const std::string key(to_string(s));
    if (j.contains(key)) m[s] = j.at(key).get<double>();
  }
  return m;
}

Dimension dimension_from_id(const std::string& id) {
  for (Dimension d : kAllDimensions) {
    if (dimension_id(d) == id) return d;
  }
  throw ValidationError("unknown dimension '" + id + "'");
}

}  // namespace

ReliabilitySummary summarize_reliability(std::span<const ConsensusRecord> consensus,
                                         std::span<const CodingRecord> vlm_records,
                                         std::span<const CodingRecord> expert_records,
                                         const std::vector<std::string>& coders,
                                         const CodingScheme& scheme, int count_tolerance) {
  ReliabilitySummary out;
  std::vector<double> h, c, q;
  for (const auto& r : consensus) {
    h.push_back(r.h_ext);
    c.push_back(r.mean_confidence);
    q.push_back(r.quality_score);
  }
  out.h_ext = distribution(h);
  out.confidence = distribution(c);
  out.quality = distribution(q);

  for (Dimension d : kAllDimensions) {
    std::optional<double> alpha;
    try {
      alpha = krippendorff_alpha(matrix_for(vlm_records, d, coders)).alpha;
    } catch (const ValidationError&) {
    }
    out.inter_coder_alpha.emplace_back(d, alpha);
  }

  bool any_expert = std::any_of(expert_records.begin(), expert_records.end(),
                                [](const CodingRecord& r) { return r.valid; });
  if (!any_expert) return out;
  out.ai_human = ai_human_agreement(consensus, expert_records, scheme, count_tolerance);

  // Per-image accuracy against the experts.
  std::map<std::string, std::pair<int, int>> hits;  // agree, total
  std::map<std::string, const ConsensusRecord*> by_cell;
  for (const auto& r : consensus) by_cell[r.cell_id] = &r;
  for (const auto& e : expert_records) {
    if (!e.valid) continue;
    auto it = by_cell.find(e.cell_id);
    if (it == by_cell.end()) continue;
    for (Dimension d : kAllDimensions) {
      const double tol = agreement_tolerance(scheme.spec(d), count_tolerance);
      auto& [agree, total] = hits[e.cell_id];
      agree += std::abs(it->second->codes[d] - e.codes[d]) <= tol ? 1 : 0;
      ++total;
    }
  }
  std::vector<double> acc, ha, ca, qa;
  for (const auto& [cell, ht] : hits) {
    const auto* r = by_cell.at(cell);
    acc.push_back(static_cast<double>(ht.first) / ht.second);
    ha.push_back(r->h_ext);
    ca.push_back(r->mean_confidence);
    qa.push_back(r->quality_score);
  }
  out.n_validated = acc.size();
  out.h_ext.r_accuracy = correlation(ha, acc);
  out.confidence.r_accuracy = correlation(ca, acc);
  out.quality.r_accuracy = correlation(qa, acc);
  return out;
}

json to_json(const ReliabilitySummary& s) {
  json alpha = json::object();
  for (const auto& [d, a] : s.inter_coder_alpha) alpha[std::string(dimension_id(d))] = opt(a);
  json j = {{"h_ext", to_json(s.h_ext)},
            {"confidence", to_json(s.confidence)},
            {"quality", to_json(s.quality)},
            {"inter_coder_alpha", alpha},
            {"n_validated", s.n_validated},
            {"ai_human", nullptr}};
  if (s.ai_human) {
    json dims = json::array();
    for (const auto& d : s.ai_human->dimensions) {
      dims.push_back({{"dimension", dimension_id(d.dimension)},
                      {"alpha", opt(d.alpha)},
                      {"agreement", opt(d.agreement)},
                      {"agreement_by_stratum", strata_json(d.agreement_by_stratum)},
                      {"n_units", d.n_units}});
    }
    j["ai_human"] = {{"dimensions", dims},
                     {"overall_alpha", opt(s.ai_human->overall_alpha)},
                     {"agreement_by_stratum", strata_json(s.ai_human->agreement_by_stratum)},
                     {"experts", s.ai_human->experts}};
  }
  return j;
}

ReliabilitySummary reliability_summary_from_json(const json& j) {
  ReliabilitySummary s;
  s.h_ext = distribution_from_json(j.at("h_ext"));
  s.confidence = distribution_from_json(j.at("confidence"));
  s.quality = distribution_from_json(j.at("quality"));
  const auto& alpha = j.at("inter_coder_alpha");
  for (Dimension d : kAllDimensions) {
    const std::string id(dimension_id(d));
    if (alpha.contains(id)) s.inter_coder_alpha.emplace_back(d, opt_from(alpha, id.c_str()));
  }
  s.n_validated = j.value("n_validated", std::size_t{0});
  if (j.contains("ai_human") && !j.at("ai_human").is_null()) {
    const auto& a = j.at("ai_human");
    AiHumanAgreement ah;
    for (const auto& d : a.at("dimensions")) {
      ah.dimensions.push_back(AiHumanDimension{
          dimension_from_id(d.at("dimension").get<std::string>()), opt_from(d, "alpha"),
          opt_from(d, "agreement"), strata_from_json(d.at("agreement_by_stratum")),
          d.at("n_units").get<std::size_t>()});
    }
    ah.overall_alpha = opt_from(a, "overall_alpha");
    ah.agreement_by_stratum = strata_from_json(a.at("agreement_by_stratum"));
    ah.experts = a.at("experts").get<std::vector<std::string>>();
    s.ai_human = std::move(ah);
  }
  return s;
}

}  // namespace vorient
