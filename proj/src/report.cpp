// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/report.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "vorient/store.hpp"
#include "vorient/util.hpp"

namespace vorient {

namespace {

using nlohmann::json;

std::string num(double v, int decimals) {
  return std::isfinite(v) ? util::fixed(v, decimals) : "";
}
std::string num(const std::optional<double>& v, int decimals) {
  return v ? num(*v, decimals) : "";
}

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string significance(double p) {
  if (!std::isfinite(p)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.10) return "†";
  return "";
}

std::string df_text(const stats::StatResult& r) {
  std::string s = num(r.df1, 0);
  if (r.df2) s += ";" + num(*r.df2, 0);
  return s;
}

std::optional<double> effect_value(const std::optional<stats::EffectSize>& e) {
  if (!e) return std::nullopt;
  return e->value;
}

struct Table2Row {
  const char* hyp;
  std::string key;
  std::string dv;
  int decimals;  // for the descriptives
};

std::vector<Table2Row> table2_layout(const StudyDesign& design) {
  std::vector<Table2Row> rows = {
      {"RQ1a", "t2.political", "Political symbols", 2},
      {"RQ1a", "t2.cultural", "Cultural symbols", 2},
      {"RQ1a", "t2.flag", "Flag appearance", 2},
      {"", "t2.si", "SI", 3},
      {"", "t2.psi", "PSI", 3},
      {"", "t2.cei", "CEI", 3},
      {"", "t2.voi", "VOI", 3},
      {"", "t2.modernity", "Modernity (normalized)", 3},
      {"", "t2.modernity_raw", "Modernity (1-5)", 2},
      {"H2a", "t2.women_cultural", "Women cultural symbols", 2},
      {"H2b", "t2.festival_modernity", "Festival modernity (normalized)", 3},
  };
  for (const auto& m : design.config().models) {
    rows.push_back({"H3a", "bias." + m.id, "Model bias " + m.display_name, 2});
  }
  rows.push_back({"H3a", "mixed.si", "Model effect on SI", 3});
  return rows;
}

std::string render_table2(const Battery& b, const StudyDesign& design) {
  std::string out =
      "hyp,key,dv,west_n,west_mean,west_sd,east_n,east_mean,east_sd,test,statistic,df,p,sig,"
      "effect,effect_value,alt_effect_value\n";
  for (const auto& layout : table2_layout(design)) {
    const auto& row = b.row(layout.key);
    const auto& r = row.result;
    std::string desc[6];
    if (r.groups.size() == 2) {
      for (int i = 0; i < 2; ++i) {
        desc[3 * i] = std::to_string(r.groups[i].n);
        desc[3 * i + 1] = num(r.groups[i].mean, layout.decimals);
        desc[3 * i + 2] = num(r.groups[i].sd, layout.decimals);
      }
    }
    out += std::string(layout.hyp) + ',' + layout.key + ',' + quoted(layout.dv);
    for (const auto& d : desc) out += ',' + d;
    out += ',' + quoted(r.test_name) + ',' + num(r.statistic, 2) + ',' + df_text(r) + ',' +
           num(r.p_value, 4) + ',' + significance(r.p_value) + ',' +
           (r.effect_size ? stats::to_string(r.effect_size->kind) : "") + ',' +
           num(effect_value(r.effect_size), 2) + ',' + num(effect_value(r.alt_effect_size), 2) +
           '\n';
  }
  return out;
}

std::string render_table_s1(const std::vector<IndexAggregate>& by_country,
                            const StudyDesign& design) {
  std::string out =
      "rank,country,name,region,n,voi,psi,cei,si,political,cultural,flag,sovereignty,"
      "modernity\n";
  for (const auto& a : by_country) {
    const auto& c = design.country(a.key);
    out += std::to_string(a.voi_rank) + ',' + a.key + ',' + quoted(c.display_name) + ',' +
           std::string(to_string(c.region)) + ',' + std::to_string(a.n) + ',' +
           num(a.voi.mean, 3) + ',' + num(a.psi.mean, 3) + ',' + num(a.cei.mean, 3) + ',' +
           num(a.si.mean, 3) + ',' + num(a.political.mean, 2) + ',' + num(a.cultural.mean, 2) +
           ',' + num(a.flag.mean, 2) + ',' + num(a.sovereignty.mean, 2) + ',' +
           num(a.modernity.mean, 2) + '\n';
  }
  return out;
}

std::string render_table_s2(const Battery& b, const StudyDesign& design) {
  std::vector<const BatteryRow*> rows;
  for (const auto& con : design.config().concepts) rows.push_back(&b.row("s2." + con.id));
  std::stable_sort(rows.begin(), rows.end(), [](const BatteryRow* x, const BatteryRow* y) {
    const double dx = x->difference.value_or(-INFINITY);
    const double dy = y->difference.value_or(-INFINITY);
    if (dx != dy) return dx > dy;
    return x->key < y->key;
  });
  std::string out =
      "rank,concept,west_n,west_mean,west_sd,east_n,east_mean,east_sd,difference,d,g,t,df,p,"
      "sig\n";
  int rank = 0;
  for (const auto* row : rows) {
    const auto& r = row->result;
    std::string desc[6];
    if (r.groups.size() == 2) {
      for (int i = 0; i < 2; ++i) {
        desc[3 * i] = std::to_string(r.groups[i].n);
        desc[3 * i + 1] = num(r.groups[i].mean, 3);
        desc[3 * i + 2] = num(r.groups[i].sd, 3);
      }
    }
    out += std::to_string(++rank) + ',' + row->key.substr(3);
    for (const auto& d : desc) out += ',' + d;
    out += ',' + num(row->difference, 3) + ',' + num(effect_value(r.effect_size), 2) + ',' +
           num(effect_value(r.alt_effect_size), 2) + ',' + num(r.statistic, 2) + ',' +
           df_text(r) + ',' + num(r.p_value, 4) + ',' + significance(r.p_value) + '\n';
  }
  return out;
}

std::string render_table1(const ReliabilitySummary& s) {
  std::string out = "section,metric,n,mean,sd,min,max,r_accuracy\n";
  auto dist = [&](const char* name, const Distribution& d, int decimals) {
    out += std::string("quality,") + name + ',' + std::to_string(d.n) + ',' +
           num(d.mean, decimals) + ',' + num(d.sd, decimals) + ',' + num(d.min, decimals) + ',' +
           num(d.max, decimals) + ',' + num(d.r_accuracy, 2) + '\n';
  };
  dist("h_ext", s.h_ext, 2);
  dist("mean_confidence", s.confidence, 2);
  dist("quality_score", s.quality, 1);
  for (const auto& [d, a] : s.inter_coder_alpha) {
    out += "inter_coder_alpha," + std::string(dimension_id(d)) + ",," + num(a, 2) + ",,,,\n";
  }
  if (s.ai_human) {
    const auto& ah = *s.ai_human;
    out += "ai_human_alpha,overall," + std::to_string(s.n_validated) + ',' +
           num(ah.overall_alpha, 2) + ",,,,\n";
    for (const auto& d : ah.dimensions) {
      out += "ai_human_alpha," + std::string(dimension_id(d.dimension)) + ',' +
             std::to_string(d.n_units) + ',' + num(d.alpha, 2) + ",,,,\n";
    }
    for (const auto& [stratum, v] : ah.agreement_by_stratum) {
      out += "ai_human_agreement," + std::string(to_string(stratum)) + ",," + num(v, 2) + ",,,,\n";
    }
  }
  return out;
}

std::string render_fig_symbols(const std::vector<IndexAggregate>& by_country,
                               const StudyDesign& design) {
  std::string out = "group,region,measure,mean,sd,n\n";
  for (const auto& a : by_country) {
    const std::string region(to_string(design.country(a.key).region));
    out += a.key + ',' + region + ",political," + num(a.political.mean, 3) + ',' +
           num(a.political.sd, 3) + ',' + std::to_string(a.n) + '\n';
    out += a.key + ',' + region + ",cultural," + num(a.cultural.mean, 3) + ',' +
           num(a.cultural.sd, 3) + ',' + std::to_string(a.n) + '\n';
  }
  return out;
}

std::string render_single(const std::vector<IndexAggregate>& by_country, const StudyDesign& design,
                          MeanSd IndexAggregate::*field) {
  std::string out = "group,region,mean,sd,n\n";
  for (const auto& a : by_country) {
    const auto& m = a.*field;
    out += a.key + ',' + std::string(to_string(design.country(a.key).region)) + ',' +
           num(m.mean, 3) + ',' + num(m.sd, 3) + ',' + std::to_string(a.n) + '\n';
  }
  return out;
}

std::string render_fig_gender(const Battery& b) {
  std::string out = "group,measure,mean,sd,n\n";
  for (const char* measure : {"cultural", "modernity"}) {
    const auto& r = b.row(std::string("anova.gender_") + measure).result;
    for (const auto& g : r.groups) {
      out += g.label + ',' + measure + ',' + num(g.mean, 3) + ',' + num(g.sd, 3) + ',' +
             std::to_string(g.n) + '\n';
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> required_battery_rows(const StudyDesign& design) {
  std::vector<std::string> keys;
  for (const auto& l : table2_layout(design)) keys.push_back(l.key);
  for (const auto& con : design.config().concepts) keys.push_back("s2." + con.id);
  keys.push_back("anova.gender_cultural");
  keys.push_back("anova.gender_modernity");
  return keys;
}

std::map<std::string, std::string> render_reports(const ReportInputs& in,
                                                  const StudyDesign& design) {
  std::vector<std::string> missing;
  for (const auto& key : required_battery_rows(design)) {
    if (!in.battery.find(key)) missing.push_back(key);
  }
  std::set<std::string> countries;
  for (const auto& a : in.by_country) {
    design.country(a.key);  // LookupError for a foreign aggregate
    countries.insert(a.key);
  }
  for (const auto& c : design.config().countries) {
    if (!countries.count(c.id)) missing.push_back("aggregate:" + c.id);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("report inputs incomplete; missing " + list);
  }

  std::map<std::string, std::string> files;
  files["table2.csv"] = render_table2(in.battery, design);
  files["tableS1.csv"] = render_table_s1(in.by_country, design);
  files["tableS2.csv"] = render_table_s2(in.battery, design);
  files["fig_symbols.csv"] = render_fig_symbols(in.by_country, design);
  files["fig_flags.csv"] = render_single(in.by_country, design, &IndexAggregate::flag);
  files["fig_voi.csv"] = render_single(in.by_country, design, &IndexAggregate::voi);
  files["fig_gender.csv"] = render_fig_gender(in.battery);
  if (in.reliability) files["table1.csv"] = render_table1(*in.reliability);
  return files;
}

ReportBundle emit_reports(StudyStore& store, const StudyDesign& design) {
  const auto battery_path = store.outputs_dir() / "battery.json";
  const auto aggregates_path = store.outputs_dir() / "aggregates.json";
  const auto reliability_path = store.outputs_dir() / "reliability.json";
  for (const auto& p : {battery_path, aggregates_path}) {
    if (!std::filesystem::exists(p)) {
      throw StageOrderError("report needs " + p.filename().string() + "; run 'analyze' first");
    }
  }
  ReportInputs in;
  in.battery = battery_from_json(json::parse(util::read_text(battery_path)));
  const auto aggregates = json::parse(util::read_text(aggregates_path));
  for (const auto& a : aggregates.at("country")) {
    in.by_country.push_back(index_aggregate_from_json(a));
  }
  if (std::filesystem::exists(reliability_path)) {
    in.reliability = reliability_summary_from_json(json::parse(util::read_text(reliability_path)));
  }
  const auto files = render_reports(in, design);

  ReportBundle bundle;
  std::filesystem::create_directories(store.reports_dir());
  for (const auto& [name, content] : files) {
    const auto path = store.reports_dir() / name;
    util::write_atomic(path, content);
    bundle.files.push_back(path);
  }
  return bundle;
}

}  // namespace vorient
