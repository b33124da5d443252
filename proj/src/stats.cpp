// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "vorient/error.hpp"
#include "vorient/special_functions.hpp"

namespace vorient::stats {

namespace {

struct Moments {
  double n;
  double mean;
  double var;  // sample variance
};

Moments moments(const Sample& s) {
  if (s.values.size() < 2) {
    throw ValidationError("sample '" + s.label + "' needs at least 2 values");
  }
  const double m = mean(s.values);
  double ss = 0;
  for (double v : s.values) ss += (v - m) * (v - m);
  return {static_cast<double>(s.values.size()), m, ss / (s.values.size() - 1)};
}

Moments moments(const SummaryStats& s) {
  if (s.n < 2) throw ValidationError("group '" + s.label + "' needs n >= 2");
  if (s.sd < 0) throw ValidationError("group '" + s.label + "' has negative sd");
  return {s.n, s.mean, s.sd * s.sd};
}

double pooled_var(const Moments& a, const Moments& b) {
  return ((a.n - 1) * a.var + (b.n - 1) * b.var) / (a.n + b.n - 2);
}

double hedges_factor(double df) { return 1.0 - 3.0 / (4.0 * df - 1.0); }

double d_from_moments(const Moments& a, const Moments& b, DVariant variant) {
  const double sp = std::sqrt(pooled_var(a, b));
  if (!(sp > 0)) throw DegenerateError("pooled standard deviation is zero");
  const double d = (a.mean - b.mean) / sp;
  return variant == DVariant::kPooledD ? d : d * hedges_factor(a.n + b.n - 2);
}

StatResult t_from_moments(const Moments& a, const Moments& b, GroupDescriptive ga,
                          GroupDescriptive gb) {
  StatResult r;
  r.test_name = "student_t";
  r.df1 = a.n + b.n - 2;
  r.groups = {std::move(ga), std::move(gb)};
  const double sp2 = pooled_var(a, b);
  if (!(sp2 > 0)) {
    if (a.mean == b.mean) {
      r.statistic = 0;
      r.p_value = 1;
      r.note = "zero pooled variance";
      return r;
    }
    throw DegenerateError("zero pooled variance with unequal means");
  }
  const double se = std::sqrt(sp2 * (1.0 / a.n + 1.0 / b.n));
  r.statistic = (a.mean - b.mean) / se;
  r.p_value = special::student_t_two_sided_p(r.statistic, r.df1);
  const double d = (a.mean - b.mean) / std::sqrt(sp2);
  r.effect_size = EffectSize{EffectKind::kCohensD, d};
  r.alt_effect_size = EffectSize{EffectKind::kHedgesG, d * hedges_factor(r.df1)};
  return r;
}

double ss_about_mean(std::span<const double> v) {
  const double m = mean(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return ss;
}

// Finalizes MS / F / p / partial eta squared against an error row.
void fill_test(AnovaRow& row, double ss_den, double df_den, double ss_resid) {
  row.ss = std::max(0.0, row.ss);
  if (row.df > 0) row.ms = row.ss / row.df;
  if (row.df > 0 && df_den > 0 && ss_den > 0) {
    const double ms_den = ss_den / df_den;
    row.f = *row.ms / ms_den;
    row.p = special::f_sf(*row.f, row.df, df_den);
  }
  if (row.ss + ss_resid > 0) row.partial_eta_squared = row.ss / (row.ss + ss_resid);
}

std::vector<std::string> levels_in_order(std::span<const FactorialObservation> data,
                                         bool first) {
  std::vector<std::string> out;
  for (const auto& o : data) {
    const std::string& key = first ? o.a : o.b;
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
  }
  return out;
}

std::size_t index_of(const std::vector<std::string>& v, const std::string& key) {
  return static_cast<std::size_t>(std::find(v.begin(), v.end(), key) - v.begin());
}

}  // namespace

const char* to_string(EffectKind k) {
  switch (k) {
    case EffectKind::kCohensD: return "d";
    case EffectKind::kHedgesG: return "g";
    case EffectKind::kCramersV: return "V";
    case EffectKind::kPartialEtaSquared: return "partial_eta2";
  }
  return "";
}

double mean(std::span<const double> v) {
  if (v.empty()) throw ValidationError("mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) throw ValidationError("standard deviation needs n >= 2");
  return std::sqrt(ss_about_mean(v) / static_cast<double>(v.size() - 1));
}

GroupDescriptive describe(const Sample& s) {
  GroupDescriptive g;
  g.label = s.label;
  g.n = s.values.size();
  if (g.n == 0) return g;
  g.mean = mean(s.values);
  if (g.n >= 2) g.sd = sample_sd(s.values);
  return g;
}

StatResult student_t(const Sample& a, const Sample& b) {
  return t_from_moments(moments(a), moments(b), describe(a), describe(b));
}

StatResult student_t(const SummaryStats& a, const SummaryStats& b) {
  auto desc = [](const SummaryStats& s) {
    return GroupDescriptive{s.label, static_cast<std::size_t>(std::llround(s.n)), s.mean,
                            s.sd};
  };
  return t_from_moments(moments(a), moments(b), desc(a), desc(b));
}

StatResult welch_t(const Sample& a, const Sample& b) {
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  StatResult r;
  r.test_name = "welch_t";
  r.groups = {describe(a), describe(b)};
  const double va = ma.var / ma.n;
  const double vb = mb.var / mb.n;
  if (!(va + vb > 0)) {
    if (ma.mean == mb.mean) {
      r.df1 = ma.n + mb.n - 2;
      r.note = "zero variance";
      return r;
    }
    throw DegenerateError("zero variance with unequal means");
  }
  r.statistic = (ma.mean - mb.mean) / std::sqrt(va + vb);
  r.df1 = (va + vb) * (va + vb) / (va * va / (ma.n - 1) + vb * vb / (mb.n - 1));
  r.p_value = special::student_t_two_sided_p(r.statistic, r.df1);
  if (pooled_var(ma, mb) > 0) {
    const double d = d_from_moments(ma, mb, DVariant::kPooledD);
    r.effect_size = EffectSize{EffectKind::kCohensD, d};
  }
  return r;
}

double cohens_d(const Sample& a, const Sample& b, DVariant variant) {
  return d_from_moments(moments(a), moments(b), variant);
}

double cohens_d(const SummaryStats& a, const SummaryStats& b, DVariant variant) {
  return d_from_moments(moments(a), moments(b), variant);
}

StatResult chi_square_2x2(const Table2x2& counts) {
  double n = 0;
  std::array<double, 2> row{}, col{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      if (counts[i][j] < 0) throw ValidationError("negative count in contingency table");
      row[i] += counts[i][j];
      col[j] += counts[i][j];
      n += counts[i][j];
    }
  }
  for (int i = 0; i < 2; ++i) {
    if (!(row[i] > 0) || !(col[i] > 0)) {
      throw DegenerateError("contingency table has a zero marginal");
    }
  }
  double chi2 = 0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double e = row[i] * col[j] / n;
      chi2 += (counts[i][j] - e) * (counts[i][j] - e) / e;
    }
  }
  StatResult r;
  r.test_name = "chi_square_2x2";
  r.statistic = chi2;
  r.df1 = 1;
  r.p_value = special::chi_square_sf(chi2, 1);
  r.effect_size = EffectSize{EffectKind::kCramersV, std::sqrt(chi2 / n)};
  for (int i = 0; i < 2; ++i) {
    r.groups.push_back(GroupDescriptive{"row" + std::to_string(i + 1),
                                        static_cast<std::size_t>(std::llround(row[i])),
                                        counts[i][0] / row[i], std::nullopt});
  }
  return r;
}

const AnovaRow& AnovaTable::row(const std::string& source) const {
  for (const auto& r : rows) {
    if (r.source == source) return r;
  }
  throw LookupError("ANOVA table '" + name + "' has no row '" + source + "'");
}

AnovaTable one_way_anova(std::span<const Sample> groups) {
  if (groups.size() < 2) throw ValidationError("one-way ANOVA needs at least 2 groups");
  std::vector<double> all;
  double ss_within = 0;
  for (const auto& g : groups) {
    if (g.values.empty()) throw ValidationError("group '" + g.label + "' is empty");
    all.insert(all.end(), g.values.begin(), g.values.end());
    ss_within += ss_about_mean(g.values);
  }
  const double total = ss_about_mean(all);
  const double n = static_cast<double>(all.size());
  const double k = static_cast<double>(groups.size());
  if (n - k < 1) throw ValidationError("one-way ANOVA has no residual degrees of freedom");

  AnovaTable t;
  t.name = "one_way_anova";
  t.total_ss = total;
  t.total_df = n - 1;
  AnovaRow between{"group", total - ss_within, k - 1};
  AnovaRow resid{"Residual", ss_within, n - k};
  fill_test(between, ss_within, n - k, ss_within);
  resid.ms = ss_within / (n - k);
  t.rows = {between, resid};
  return t;
}

AnovaTable two_way_anova(std::span<const FactorialObservation> data, const std::string& a_name,
                         const std::string& b_name) {
  const auto a_levels = levels_in_order(data, true);
  const auto b_levels = levels_in_order(data, false);
  if (a_levels.size() < 2 || b_levels.size() < 2) {
    throw ValidationError("two-way ANOVA needs at least 2 levels per factor");
  }
  const std::size_t na = a_levels.size();
  const std::size_t nb = b_levels.size();
  std::vector<std::vector<std::vector<double>>> cells(na, std::vector<std::vector<double>>(nb));
  std::vector<std::vector<double>> by_a(na), by_b(nb);
  std::vector<double> all;
  for (const auto& o : data) {
    const auto i = index_of(a_levels, o.a);
    const auto j = index_of(b_levels, o.b);
    cells[i][j].push_back(o.value);
    by_a[i].push_back(o.value);
    by_b[j].push_back(o.value);
    all.push_back(o.value);
  }
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      if (cells[i][j].empty()) {
        throw ValidationError("empty cell (" + a_name + "=" + a_levels[i] + ", " + b_name +
                              "=" + b_levels[j] + ")");
      }
    }
  }
  const double n = static_cast<double>(all.size());
  const double df_resid = n - static_cast<double>(na * nb);
  if (df_resid < 1) throw ValidationError("two-way ANOVA has no residual degrees of freedom");

  double rss_full = 0;
  for (const auto& row : cells) {
    for (const auto& c : row) rss_full += ss_about_mean(c);
  }
  double rss_a = 0, rss_b = 0;
  for (const auto& g : by_a) rss_a += ss_about_mean(g);
  for (const auto& g : by_b) rss_b += ss_about_mean(g);

  // Additive model y ~ 1 + A + B by least squares (treatment coding).
  const double grand = mean(all);
  const Eigen::Index p = static_cast<Eigen::Index>(1 + (na - 1) + (nb - 1));
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(all.size()), p);
  Eigen::VectorXd y(static_cast<Eigen::Index>(all.size()));
  Eigen::Index r = 0;
  for (const auto& o : data) {
    const auto i = index_of(a_levels, o.a);
    const auto j = index_of(b_levels, o.b);
    x(r, 0) = 1.0;
    if (i > 0) x(r, static_cast<Eigen::Index>(i)) = 1.0;
    if (j > 0) x(r, static_cast<Eigen::Index>(na - 1 + j)) = 1.0;
    y(r) = o.value - grand;
    ++r;
  }
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
  const double rss_add = (y - x * beta).squaredNorm();

  AnovaTable t;
  t.name = "two_way_anova";
  t.total_ss = ss_about_mean(all);
  t.total_df = n - 1;
  AnovaRow ra{a_name, rss_b - rss_add, static_cast<double>(na - 1)};
  AnovaRow rb{b_name, rss_a - rss_add, static_cast<double>(nb - 1)};
  AnovaRow rab{a_name + ":" + b_name, rss_add - rss_full,
               static_cast<double>((na - 1) * (nb - 1))};
  AnovaRow resid{"Residual", rss_full, df_resid};
  for (AnovaRow* row : {&ra, &rb, &rab}) fill_test(*row, rss_full, df_resid, rss_full);
  resid.ms = rss_full / df_resid;
  t.rows = {ra, rb, rab, resid};
  return t;
}

AnovaTable mixed_anova_balanced(std::span<const FactorialObservation> data,
                                const std::string& fixed_name, const std::string& random_name) {
  const auto a_levels = levels_in_order(data, true);
  const auto b_levels = levels_in_order(data, false);
  if (a_levels.size() < 2 || b_levels.size() < 2) {
    throw ValidationError("mixed ANOVA needs at least 2 levels per factor");
  }
  const std::size_t m = a_levels.size();
  const std::size_t c = b_levels.size();
  std::vector<std::vector<std::vector<double>>> cells(m, std::vector<std::vector<double>>(c));
  for (const auto& o : data) {
    cells[index_of(a_levels, o.a)][index_of(b_levels, o.b)].push_back(o.value);
  }
  const std::size_t reps = cells[0][0].size();
  for (const auto& row : cells) {
    for (const auto& cell : row) {
      if (cell.size() != reps) {
        throw ValidationError(
            "mixed_anova_balanced requires a fully balanced layout; use two_way_anova for "
            "unbalanced data");
      }
    }
  }
  if (reps < 2) throw ValidationError("mixed_anova_balanced needs at least 2 replicates per cell");

  std::vector<double> all;
  std::vector<double> mean_a(m, 0), mean_b(c, 0);
  std::vector<std::vector<double>> cell_mean(m, std::vector<double>(c));
  double ss_error = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      cell_mean[i][j] = mean(cells[i][j]);
      ss_error += ss_about_mean(cells[i][j]);
      all.insert(all.end(), cells[i][j].begin(), cells[i][j].end());
      mean_a[i] += cell_mean[i][j] / c;
      mean_b[j] += cell_mean[i][j] / m;
    }
  }
  const double grand = mean(all);
  const double r = static_cast<double>(reps);
  double ss_a = 0, ss_b = 0, ss_ab = 0;
  for (std::size_t i = 0; i < m; ++i) ss_a += (mean_a[i] - grand) * (mean_a[i] - grand);
  for (std::size_t j = 0; j < c; ++j) ss_b += (mean_b[j] - grand) * (mean_b[j] - grand);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const double e = cell_mean[i][j] - mean_a[i] - mean_b[j] + grand;
      ss_ab += e * e;
    }
  }
  ss_a *= static_cast<double>(c) * r;
  ss_b *= static_cast<double>(m) * r;
  ss_ab *= r;

  const double df_a = static_cast<double>(m - 1);
  const double df_b = static_cast<double>(c - 1);
  const double df_ab = df_a * df_b;
  const double df_e = static_cast<double>(m * c) * (r - 1);

  AnovaTable t;
  t.name = "mixed_anova_balanced";
  t.total_ss = ss_about_mean(all);
  t.total_df = static_cast<double>(all.size()) - 1;
  AnovaRow ra{fixed_name, ss_a, df_a};
  AnovaRow rb{random_name, ss_b, df_b};
  AnovaRow rab{fixed_name + ":" + random_name, ss_ab, df_ab};
  AnovaRow re{"Residual", ss_error, df_e};
  fill_test(ra, ss_ab, df_ab, ss_error);
  fill_test(rb, ss_error, df_e, ss_error);
  fill_test(rab, ss_error, df_e, ss_error);
  re.ms = ss_error / df_e;
  t.rows = {ra, rb, rab, re};
  return t;
}

TukeyResult tukey_hsd(std::span<const Sample> groups, double alpha) {
  if (groups.size() < 2) throw ValidationError("Tukey HSD needs at least 2 groups");
  if (!(alpha > 0 && alpha < 1)) throw ValidationError("alpha must be in (0, 1)");
  TukeyResult out;
  double ss_within = 0;
  double n_total = 0;
  for (const auto& g : groups) {
    if (g.values.size() < 2) throw ValidationError("group '" + g.label + "' needs n >= 2");
    const double ss = ss_about_mean(g.values);
    if (ss == 0 && g.values.size() == 2) out.zero_variance_warning = true;
    ss_within += ss;
    n_total += static_cast<double>(g.values.size());
  }
  const int k = static_cast<int>(groups.size());
  out.df_error = n_total - k;
  out.ms_error = ss_within / out.df_error;
  out.q_critical = special::studentized_range_quantile(1.0 - alpha, k, out.df_error);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      TukeyPair p;
      p.a = groups[i].label;
      p.b = groups[j].label;
      p.mean_diff = mean(groups[i].values) - mean(groups[j].values);
      const double se = std::sqrt(0.5 * out.ms_error *
                                  (1.0 / groups[i].values.size() + 1.0 / groups[j].values.size()));
      if (se > 0) {
        p.q = std::fabs(p.mean_diff) / se;
        p.p_adjusted = special::studentized_range_sf(p.q, k, out.df_error);
      } else {
        p.q = p.mean_diff == 0 ? 0 : INFINITY;
        p.p_adjusted = p.mean_diff == 0 ? 1.0 : 0.0;
      }
      p.reject = p.p_adjusted < alpha;
      out.pairs.push_back(p);
    }
  }
  return out;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ValidationError("pearson_r needs two equal-length series with n >= 2");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0) || !(syy > 0)) throw DegenerateError("pearson_r of a constant series");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace vorient::stats
