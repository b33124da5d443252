// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/battery.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

#include "vorient/util.hpp"

namespace vorient {

using nlohmann::json;
using stats::Sample;
using stats::SampleUnit;
using stats::StatResult;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
json number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

double number_from(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }
std::optional<double> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

stats::EffectKind effect_kind_from(const std::string& s) {
  for (auto k : {stats::EffectKind::kCohensD, stats::EffectKind::kHedgesG,
                 stats::EffectKind::kCramersV, stats::EffectKind::kPartialEtaSquared}) {
    if (s == stats::to_string(k)) return k;
  }
  throw ValidationError("unknown effect size kind '" + s + "'");
}

json to_json(const std::optional<stats::EffectSize>& e) {
  if (!e) return nullptr;
  return {{"kind", stats::to_string(e->kind)}, {"value", number(e->value)}};
}

std::optional<stats::EffectSize> effect_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return stats::EffectSize{effect_kind_from(j.at("kind").get<std::string>()),
                           number_from(j.at("value"))};
}

}  // namespace

json to_json(const StatResult& r) {
  json groups = json::array();
  for (const auto& g : r.groups) {
    groups.push_back({{"label", g.label}, {"n", g.n}, {"mean", number(g.mean)}, {"sd", number(g.sd)}});
  }
  return {{"test", r.test_name},
          {"statistic", number(r.statistic)},
          {"df1", number(r.df1)},
          {"df2", number(r.df2)},
          {"p", number(r.p_value)},
          {"effect_size", to_json(r.effect_size)},
          {"alt_effect_size", to_json(r.alt_effect_size)},
          {"groups", groups},
          {"note", r.note}};
}

StatResult stat_result_from_json(const json& j) {
  StatResult r;
  r.test_name = j.at("test").get<std::string>();
  r.statistic = number_from(j.at("statistic"));
  r.df1 = number_from(j.at("df1"));
  r.df2 = optional_from(j, "df2");
  r.p_value = number_from(j.at("p"));
  r.effect_size = effect_from(j.at("effect_size"));
  r.alt_effect_size = effect_from(j.at("alt_effect_size"));
  for (const auto& g : j.at("groups")) {
    r.groups.push_back(stats::GroupDescriptive{g.at("label").get<std::string>(),
                                               g.at("n").get<std::size_t>(),
                                               number_from(g.at("mean")), optional_from(g, "sd")});
  }
  r.note = j.value("note", "");
  return r;
}

json to_json(const stats::AnovaTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"source", r.source},
                    {"ss", number(r.ss)},
                    {"df", number(r.df)},
                    {"ms", number(r.ms)},
                    {"f", number(r.f)},
                    {"p", number(r.p)},
                    {"partial_eta_squared", number(r.partial_eta_squared)}});
  }
  return {{"name", t.name}, {"rows", rows}, {"total_ss", number(t.total_ss)},
          {"total_df", number(t.total_df)}};
}

stats::AnovaTable anova_table_from_json(const json& j) {
  stats::AnovaTable t;
  t.name = j.at("name").get<std::string>();
  t.total_ss = number_from(j.at("total_ss"));
  t.total_df = number_from(j.at("total_df"));
  for (const auto& r : j.at("rows")) {
    t.rows.push_back(stats::AnovaRow{r.at("source").get<std::string>(), number_from(r.at("ss")),
                                     number_from(r.at("df")), optional_from(r, "ms"),
                                     optional_from(r, "f"), optional_from(r, "p"),
                                     optional_from(r, "partial_eta_squared")});
  }
  return t;
}

const BatteryRow* Battery::find(const std::string& key) const {
  for (const auto& r : rows) {
    if (r.key == key) return &r;
  }
  return nullptr;
}

const BatteryRow& Battery::row(const std::string& key) const {
  if (const auto* r = find(key)) return *r;
  throw LookupError("battery has no row '" + key + "'");
}

json to_json(const Battery& b) {
  json rows = json::array();
  for (const auto& r : b.rows) {
    rows.push_back({{"key", r.key},
                    {"table", r.table},
                    {"description", r.description},
                    {"difference", number(r.difference)},
                    {"result", to_json(r.result)}});
  }
  json anovas = json::array();
  for (const auto& t : b.anovas) anovas.push_back(to_json(t));
  json tukey = nullptr;
  if (b.tukey_si) {
    json pairs = json::array();
    for (const auto& p : b.tukey_si->pairs) {
      pairs.push_back({{"a", p.a},
                       {"b", p.b},
                       {"mean_diff", number(p.mean_diff)},
                       {"q", number(p.q)},
                       {"p_adjusted", number(p.p_adjusted)},
                       {"reject", p.reject}});
    }
    tukey = {{"pairs", pairs},
             {"ms_error", number(b.tukey_si->ms_error)},
             {"df_error", number(b.tukey_si->df_error)},
             {"q_critical", number(b.tukey_si->q_critical)},
             {"zero_variance_warning", b.tukey_si->zero_variance_warning}};
  }
  return {{"rows", rows}, {"anovas", anovas}, {"tukey_si", tukey},
          {"excluded_cells", b.excluded_cells}};
}

Battery battery_from_json(const json& j) {
  Battery b;
  for (const auto& r : j.at("rows")) {
    b.rows.push_back(BatteryRow{r.at("key").get<std::string>(), r.at("table").get<std::string>(),
                                r.value("description", ""), stat_result_from_json(r.at("result")),
                                optional_from(r, "difference")});
  }
  for (const auto& t : j.value("anovas", json::array())) b.anovas.push_back(anova_table_from_json(t));
  if (j.contains("tukey_si") && !j.at("tukey_si").is_null()) {
    const auto& t = j.at("tukey_si");
    stats::TukeyResult res;
    for (const auto& p : t.at("pairs")) {
      res.pairs.push_back(stats::TukeyPair{p.at("a").get<std::string>(), p.at("b").get<std::string>(),
                                           number_from(p.at("mean_diff")), number_from(p.at("q")),
                                           number_from(p.at("p_adjusted")),
                                           p.at("reject").get<bool>()});
    }
    res.ms_error = number_from(t.at("ms_error"));
    res.df_error = number_from(t.at("df_error"));
    res.q_critical = number_from(t.at("q_critical"));
    res.zero_variance_warning = t.value("zero_variance_warning", false);
    b.tukey_si = std::move(res);
  }
  b.excluded_cells = j.value("excluded_cells", std::vector<std::string>{});
  return b;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string fmt(double v, int decimals) { return std::isfinite(v) ? util::fixed(v, decimals) : ""; }
std::string fmt(const std::optional<double>& v, int decimals) {
  return v ? fmt(*v, decimals) : "";
}

}  // namespace

std::string battery_csv(const Battery& b) {
  std::string out =
      "key,table,test,groups,n,means,sds,difference,statistic,df1,df2,p,effect,effect_value,"
      "alt_effect_value,note\n";
  for (const auto& row : b.rows) {
    const auto& r = row.result;
    std::string labels, ns, means, sds;
    for (std::size_t i = 0; i < r.groups.size(); ++i) {
      const auto& g = r.groups[i];
      const char* sep = i ? ";" : "";
      labels += sep + g.label;
      ns += sep + std::to_string(g.n);
      means += sep + fmt(g.mean, 3);
      sds += sep + fmt(g.sd, 3);
    }
    out += csv_field(row.key) + ',' + row.table + ',' + csv_field(r.test_name) + ',' +
           csv_field(labels) + ',' + ns + ',' + means + ',' + sds + ',' + fmt(row.difference, 3) +
           ',' + fmt(r.statistic, 2) +
           ',' + fmt(r.df1, 0) + ',' + fmt(r.df2, 0) + ',' + fmt(r.p_value, 4) + ',' +
           (r.effect_size ? stats::to_string(r.effect_size->kind) : "") + ',' +
           fmt(r.effect_size ? std::optional<double>(r.effect_size->value) : std::nullopt, 2) +
           ',' +
           fmt(r.alt_effect_size ? std::optional<double>(r.alt_effect_size->value)
                                 : std::nullopt,
               2) +
           ',' + csv_field(r.note) + '\n';
  }
  return out;
}

namespace {

enum class Measure {
  kPolitical, kCultural, kFlag, kSovereignty, kModernity, kModernityNormalized,
  kSi, kPsi, kCei, kVoi,
};

double measure(const IndexRecord& r, Measure m) {
  switch (m) {
    case Measure::kPolitical: return r.codes.political();
    case Measure::kCultural: return r.codes.cultural();
    case Measure::kFlag: return r.codes.flag();
    case Measure::kSovereignty: return r.codes.sovereignty();
    case Measure::kModernity: return r.codes.modernity();
    case Measure::kModernityNormalized: return (r.codes.modernity() - 1) / 4.0;
    case Measure::kSi: return r.si;
    case Measure::kPsi: return r.psi;
    case Measure::kCei: return r.cei;
    case Measure::kVoi: return r.voi;
  }
  return kNaN;
}

double country_measure(const CountryMeans& c, Measure m) {
  switch (m) {
    case Measure::kPolitical: return c.political;
    case Measure::kCultural: return c.cultural;
    case Measure::kFlag: return c.flag;
    case Measure::kSovereignty: return c.sovereignty;
    case Measure::kModernity: return c.modernity;
    case Measure::kModernityNormalized: return c.modernity_normalized;
    case Measure::kSi: return c.si;
    case Measure::kPsi: return c.psi;
    case Measure::kCei: return c.cei;
    case Measure::kVoi: return c.voi;
  }
  return kNaN;
}

// Computes a row, turning a statistic that is undefined for the data into a
// NaN row with the reason as its note.
BatteryRow guarded(std::string key, std::string table, std::string description,
                   const std::function<StatResult()>& fn) {
  BatteryRow row{std::move(key), std::move(table), std::move(description), {}, {}};
  try {
    row.result = fn();
    const auto& g = row.result.groups;
    if (g.size() == 2 && row.result.test_name.ends_with("_t")) {
      row.difference = g[0].mean - g[1].mean;
    }
  } catch (const DegenerateError& e) {
    row.result.test_name = "undefined";
    row.result.statistic = kNaN;
    row.result.df1 = kNaN;
    row.result.p_value = kNaN;
    row.result.note = e.what();
  } catch (const ValidationError& e) {
    row.result.test_name = "undefined";
    row.result.statistic = kNaN;
    row.result.df1 = kNaN;
    row.result.p_value = kNaN;
    row.result.note = e.what();
  }
  return row;
}

StatResult anova_row_result(const stats::AnovaTable& t, const std::string& source,
                            const std::string& test_name) {
  const auto& row = t.row(source);
  StatResult r;
  r.test_name = test_name;
  r.statistic = row.f.value_or(kNaN);
  r.df1 = row.df;
  r.df2 = t.row("Residual").df;  // callers testing against another term override this
  r.p_value = row.p.value_or(kNaN);
  if (row.partial_eta_squared) {
    r.effect_size = stats::EffectSize{stats::EffectKind::kPartialEtaSquared, *row.partial_eta_squared};
  }
  if (!row.f) r.note = "F undefined (zero error variance)";
  return r;
}

struct Obs {
  const StudyCell* cell;
  const IndexRecord* rec;
  Region region;
};

struct Spec {
  const char* suffix;
  Measure m;
  const char* description;
};

constexpr Spec kCountryRows[] = {
    {"political", Measure::kPolitical, "Political symbol count"},
    {"cultural", Measure::kCultural, "Cultural symbol count"},
    {"flag", Measure::kFlag, "Flag appearance (0-4)"},
    {"si", Measure::kSi, "Symbolization Index"},
    {"modernity", Measure::kModernityNormalized, "Modernity, normalized (m-1)/4"},
    {"modernity_raw", Measure::kModernity, "Modernity, raw 1-5"},
    {"sovereignty", Measure::kSovereignty, "Sovereignty share"},
    {"psi", Measure::kPsi, "Political Sovereignty Index"},
    {"cei", Measure::kCei, "Cultural Exoticization Index"},
    {"voi", Measure::kVoi, "Visual Orientalism Index"},
};

}  // namespace

std::vector<CountryMeans> country_means(std::span<const IndexRecord> indices,
                                        const StudyDesign& design) {
  std::map<std::string, std::vector<const IndexRecord*>> by_country;
  for (const auto& r : indices) {
    const StudyCell* cell = design.find_cell(r.cell_id);
    if (!cell) throw LookupError("index record for unknown cell '" + r.cell_id + "'");
    by_country[cell->country].push_back(&r);
  }
  std::vector<CountryMeans> out;
  for (const auto& country : design.config().countries) {
    auto it = by_country.find(country.id);
    if (it == by_country.end()) continue;
    CountryMeans c;
    c.country = country.id;
    c.n = it->second.size();
    const double n = static_cast<double>(c.n);
    for (const auto* r : it->second) {
      c.political += measure(*r, Measure::kPolitical) / n;
      c.cultural += measure(*r, Measure::kCultural) / n;
      c.flag += measure(*r, Measure::kFlag) / n;
      c.sovereignty += measure(*r, Measure::kSovereignty) / n;
      c.modernity += measure(*r, Measure::kModernity) / n;
      c.modernity_normalized += measure(*r, Measure::kModernityNormalized) / n;
      c.si += r->si / n;
      c.psi += r->psi / n;
      c.cei += r->cei / n;
      c.voi += r->voi / n;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<BatteryRow> country_level_rows(std::span<const CountryMeans> means,
                                           const StudyDesign& design) {
  std::vector<BatteryRow> rows;
  auto contrast = [&](const std::string& prefix, const std::string& table, Grouping grouping,
                      const Spec& spec, const std::string& label) {
    rows.push_back(guarded(prefix + spec.suffix, table, std::string(spec.description) + label, [&] {
      const bool west_east = grouping == Grouping::kWestEast;
      Sample a{west_east ? "West" : "core", {}, SampleUnit::kCountryMean};
      Sample b{west_east ? "East" : "rest", {}, SampleUnit::kCountryMean};
      for (const auto& c : means) {
        const auto& country = design.country(c.country);
        const bool first = west_east ? country.region == Region::kWest : country.english_core;
        (first ? a : b).values.push_back(country_measure(c, spec.m));
      }
      return stats::student_t(a, b);
    }));
  };
  for (const auto& spec : kCountryRows) {
    contrast("t2.", "table2", Grouping::kWestEast, spec, ", West vs East country means");
  }
  for (const auto& spec : kCountryRows) {
    const std::string s = spec.suffix;
    if (s != "political" && s != "flag" && s != "cultural" && s != "voi") continue;
    contrast("core.", "core", Grouping::kEnglishCoreVsRest, spec,
             ", English-core vs other country means");
  }
  return rows;
}

Battery run_paper_battery(std::span<const ConsensusRecord> consensus,
                          std::span<const IndexRecord> indices, const StudyDesign& design,
                          std::span<const std::string> excluded) {
  Battery b;
  b.excluded_cells.assign(excluded.begin(), excluded.end());
  std::sort(b.excluded_cells.begin(), b.excluded_cells.end());
  const std::set<std::string> excluded_set(excluded.begin(), excluded.end());

  std::map<std::string, const IndexRecord*> by_cell;
  for (const auto& r : indices) by_cell[r.cell_id] = &r;
  std::set<std::string> consensus_cells;
  for (const auto& c : consensus) consensus_cells.insert(c.cell_id);

  std::vector<std::string> missing;
  std::vector<Obs> obs;
  for (const auto& cell : design.cells()) {
    if (excluded_set.count(cell.cell_id)) continue;
    auto it = by_cell.find(cell.cell_id);
    if (it == by_cell.end() || !consensus_cells.count(cell.cell_id)) {
      missing.push_back(cell.cell_id);
      continue;
    }
    obs.push_back(Obs{&cell, it->second, design.country(cell.country).region});
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("battery input incomplete; missing " + std::to_string(missing.size()) +
                          " cell(s): " + list);
  }

  std::vector<IndexRecord> analyzable;
  for (const auto& o : obs) analyzable.push_back(*o.rec);
  const auto means = country_means(analyzable, design);
  b.rows = country_level_rows(means, design);

  // Image-level West/East contrasts, optionally within one concept.
  auto image_contrast = [&](const std::string& key, const std::string& table,
                            const std::string& description, const std::string& concept_id,
                            Measure m) {
    b.rows.push_back(guarded(key, table, description, [&] {
      Sample west{"West", {}, SampleUnit::kImage};
      Sample east{"East", {}, SampleUnit::kImage};
      for (const auto& o : obs) {
        if (!concept_id.empty() && o.cell->concept_id != concept_id) continue;
        (o.region == Region::kWest ? west : east).values.push_back(measure(*o.rec, m));
      }
      return stats::student_t(west, east);
    }));
  };
  image_contrast("t2.women_cultural", "table2", "Women: cultural symbols, images", "women",
                 Measure::kCultural);
  image_contrast("t2.festival_modernity", "table2", "Festivals: modernity normalized, images",
                 "festivals", Measure::kModernityNormalized);
  image_contrast("image.festival_modernity_raw", "image", "Festivals: modernity raw, images",
                 "festivals", Measure::kModernity);
  image_contrast("image.festival_political", "image", "Festivals: political symbols, images",
                 "festivals", Measure::kPolitical);
  image_contrast("image.festival_cultural", "image", "Festivals: cultural symbols, images",
                 "festivals", Measure::kCultural);
  image_contrast("image.modernity_raw", "image", "All images: modernity raw", "",
                 Measure::kModernity);
  image_contrast("image.cities_voi", "image", "Cities: VOI, images", "cities", Measure::kVoi);

  b.rows.push_back(guarded("chi.sovereignty", "image", "Sovereignty present, West vs East images",
                           [&] {
                             stats::Table2x2 t{};
                             for (const auto& o : obs) {
                               const int row = o.region == Region::kWest ? 0 : 1;
                               const int col = o.rec->codes.sovereignty() == 1 ? 0 : 1;
                               t[row][col] += 1;
                             }
                             auto r = stats::chi_square_2x2(t);
                             r.groups[0].label = "West";
                             r.groups[1].label = "East";
                             return r;
                           }));

  // Region x gender on the women and men concepts.
  for (Measure m : {Measure::kCultural, Measure::kModernity}) {
    const std::string name = m == Measure::kCultural ? "cultural" : "modernity";
    b.rows.push_back(guarded("anova.gender_" + name, "anova",
                             "Region x gender interaction, " + name + " (images)", [&] {
                               std::vector<stats::FactorialObservation> data;
                               std::map<std::string, Sample> cells;
                               for (const auto& o : obs) {
                                 const auto& con = o.cell->concept_id;
                                 if (con != "women" && con != "men") continue;
                                 const std::string region(to_string(o.region));
                                 data.push_back({region, con, measure(*o.rec, m)});
                                 auto& s = cells[region + "/" + con];
                                 s.label = region + "/" + con;
                                 s.values.push_back(measure(*o.rec, m));
                               }
                               auto table = stats::two_way_anova(data, "region", "gender");
                               table.name = "gender_" + name;
                               auto r = anova_row_result(table, "region:gender",
                                                         "two-way ANOVA interaction");
                               for (const char* label :
                                    {"West/women", "West/men", "East/women", "East/men"}) {
                                 auto it = cells.find(label);
                                 if (it != cells.end()) r.groups.push_back(stats::describe(it->second));
                               }
                               b.anovas.push_back(std::move(table));
                               return r;
                             }));
  }

  // Model (fixed) x country (random), concepts as replicates.
  for (Measure m : {Measure::kPolitical, Measure::kCultural, Measure::kSi}) {
    const std::string name = m == Measure::kPolitical  ? "political"
                             : m == Measure::kCultural ? "cultural"
                                                       : "si";
    b.rows.push_back(guarded("mixed." + name, "anova", "Model effect, " + name +
                                                           " (model fixed, country random)",
                             [&] {
                               std::vector<stats::FactorialObservation> data;
                               for (const auto& o : obs) {
                                 data.push_back({o.cell->model, o.cell->country, measure(*o.rec, m)});
                               }
                               stats::AnovaTable table;
                               std::string note;
                               try {
                                 table = stats::mixed_anova_balanced(data, "model", "country");
                               } catch (const ValidationError&) {
                                 table = stats::two_way_anova(data, "model", "country");
                                 note = "unbalanced after exclusions; Type II two-way ANOVA";
                               }
                               table.name = "mixed_" + name + (note.empty() ? "" : "_unbalanced");
                               StatResult r;
                               if (note.empty()) {
                                 r = anova_row_result(table, "model", "mixed ANOVA fixed effect");
                                 r.df2 = table.row("model:country").df;
                               } else {
                                 r = anova_row_result(table, "model", "two-way ANOVA main effect");
                                 r.note = note;
                               }
                               b.anovas.push_back(std::move(table));
                               return r;
                             }));
  }

  b.rows.push_back(guarded("anova.model_region_si", "anova", "Model x region interaction, SI", [&] {
    std::vector<stats::FactorialObservation> data;
    for (const auto& o : obs) {
      data.push_back({o.cell->model, std::string(to_string(o.region)), o.rec->si});
    }
    auto table = stats::two_way_anova(data, "model", "region");
    table.name = "model_region_si";
    auto r = anova_row_result(table, "model:region", "two-way ANOVA interaction");
    b.anovas.push_back(std::move(table));
    return r;
  }));

  // Tukey pairs across models on SI.
  {
    std::vector<Sample> groups;
    for (const auto& model : design.config().models) {
      Sample s{model.id, {}, SampleUnit::kImage};
      for (const auto& o : obs) {
        if (o.cell->model == model.id) s.values.push_back(o.rec->si);
      }
      if (!s.values.empty()) groups.push_back(std::move(s));
    }
    try {
      b.tukey_si = stats::tukey_hsd(groups);
      for (const auto& p : b.tukey_si->pairs) {
        StatResult r;
        r.test_name = "Tukey HSD";
        r.statistic = p.q;
        r.df1 = static_cast<double>(groups.size());
        r.df2 = b.tukey_si->df_error;
        r.p_value = p.p_adjusted;
        r.note = "mean difference " + util::fixed(p.mean_diff, 4);
        b.rows.push_back(BatteryRow{"tukey.si." + p.a + "~" + p.b, "tukey",
                                    "SI pairwise model difference", r, p.mean_diff});
      }
    } catch (const Error& e) {
      b.rows.push_back(guarded("tukey.si", "tukey", "SI pairwise model difference",
                               [&]() -> StatResult { throw DegenerateError(e.what()); }));
    }
  }

  // Per-model bias: mean |d| across the five dimensions, country level.
  for (const auto& model : design.config().models) {
    b.rows.push_back(guarded("bias." + model.id, "bias",
                             "Mean |d| over five dimensions, " + model.display_name, [&] {
                               std::vector<IndexRecord> subset;
                               for (const auto& o : obs) {
                                 if (o.cell->model == model.id) subset.push_back(*o.rec);
                               }
                               const auto cm = country_means(subset, design);
                               double sum = 0;
                               int used = 0;
                               std::string skipped;
                               for (Measure m : {Measure::kPolitical, Measure::kCultural,
                                                 Measure::kFlag, Measure::kSovereignty,
                                                 Measure::kModernity}) {
                                 Sample west{"West", {}, SampleUnit::kCountryMean};
                                 Sample east{"East", {}, SampleUnit::kCountryMean};
                                 for (const auto& c : cm) {
                                   (design.country(c.country).region == Region::kWest ? west : east)
                                       .values.push_back(country_measure(c, m));
                                 }
                                 try {
                                   sum += std::fabs(stats::cohens_d(west, east, stats::DVariant::kPooledD));
                                   ++used;
                                 } catch (const DegenerateError&) {
                                   skipped += skipped.empty() ? "" : ";";
                                   skipped += std::to_string(static_cast<int>(m));
                                 }
                               }
                               if (used == 0) throw DegenerateError("no dimension has a defined d");
                               StatResult r;
                               r.test_name = "mean |d|";
                               r.statistic = sum / used;
                               r.df1 = used;
                               r.p_value = kNaN;
                               r.effect_size = stats::EffectSize{stats::EffectKind::kCohensD, r.statistic};
                               if (!skipped.empty()) r.note = "dimensions without d: " + skipped;
                               return r;
                             }));
  }

  // Per-concept VOI contrasts.
  for (const auto& con : design.config().concepts) {
    image_contrast("s2." + con.id, "tableS2", con.display_name + ": VOI, West vs East images",
                   con.id, Measure::kVoi);
  }
  return b;
}

}  // namespace vorient
