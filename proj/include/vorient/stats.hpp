// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Hypothesis-testing engine: descriptives, two-sample t tests and
// standardized mean differences, 2x2 chi-square, one-way / two-way /
// balanced mixed ANOVA and Tukey HSD.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vorient::stats {

enum class SampleUnit { kCountryMean, kImage };

struct Sample {
  std::string label;
  std::vector<double> values;
  SampleUnit unit = SampleUnit::kImage;
};

// Group descriptives used when only published summaries are available.
struct SummaryStats {
  std::string label;
  double n = 0;
  double mean = 0;
  double sd = 0;
};

struct GroupDescriptive {
  std::string label;
  std::size_t n = 0;
  double mean = 0;
  std::optional<double> sd;  // absent for n < 2
};

GroupDescriptive describe(const Sample& s);
double mean(std::span<const double> v);
// Sample standard deviation (n - 1 denominator); requires n >= 2.
double sample_sd(std::span<const double> v);

enum class EffectKind { kCohensD, kHedgesG, kCramersV, kPartialEtaSquared };

const char* to_string(EffectKind k);

struct EffectSize {
  EffectKind kind;
  double value;
};

struct StatResult {
  std::string test_name;
  double statistic = 0;
  double df1 = 0;
  std::optional<double> df2;
  double p_value = 1;
  std::optional<EffectSize> effect_size;
  std::optional<EffectSize> alt_effect_size;
  std::vector<GroupDescriptive> groups;
  std::string note;
};

enum class DVariant { kPooledD, kHedgesG };

// Pooled-variance Student's t; p two-tailed. Zero pooled variance with equal
// means gives t = 0, p = 1; with unequal means it throws DegenerateError.
// The result carries pooled d as effect size and Hedges' g as alternate.
StatResult student_t(const Sample& a, const Sample& b);
StatResult student_t(const SummaryStats& a, const SummaryStats& b);

// Welch-Satterthwaite variant for sensitivity runs.
StatResult welch_t(const Sample& a, const Sample& b);

double cohens_d(const Sample& a, const Sample& b, DVariant variant);
double cohens_d(const SummaryStats& a, const SummaryStats& b, DVariant variant);

// counts[row][col]; rows are groups, columns outcomes. Pearson chi-square
// without continuity correction, df = 1, Cramer's V = sqrt(chi2 / n).
using Table2x2 = std::array<std::array<double, 2>, 2>;
StatResult chi_square_2x2(const Table2x2& counts);

struct AnovaRow {
  std::string source;
  double ss = 0;
  double df = 0;
  std::optional<double> ms;
  std::optional<double> f;
  std::optional<double> p;
  std::optional<double> partial_eta_squared;
};

struct AnovaTable {
  std::string name;
  std::vector<AnovaRow> rows;
  double total_ss = 0;
  double total_df = 0;

  const AnovaRow& row(const std::string& source) const;
};

AnovaTable one_way_anova(std::span<const Sample> groups);

struct FactorialObservation {
  std::string a;
  std::string b;
  double value = 0;
};

// Type II sums of squares; equals the classical decomposition when the
// layout is balanced. Rows: a, b, a:b, Residual.
AnovaTable two_way_anova(std::span<const FactorialObservation> data,
                         const std::string& a_name = "A",
                         const std::string& b_name = "B");

// a = fixed factor, b = random factor, replicates within each cell.
// The fixed effect is tested against the interaction mean square
// (df (m - 1, (m - 1)(c - 1))); the random factor and the interaction are
// tested against the residual. Throws ValidationError on imbalance.
AnovaTable mixed_anova_balanced(std::span<const FactorialObservation> data,
                                const std::string& fixed_name = "fixed",
                                const std::string& random_name = "random");

struct TukeyPair {
  std::string a;
  std::string b;
  double mean_diff = 0;
  double q = 0;
  double p_adjusted = 1;
  bool reject = false;
};

struct TukeyResult {
  std::vector<TukeyPair> pairs;
  double ms_error = 0;
  double df_error = 0;
  double q_critical = 0;
  // A group with zero variance and n = 2 was pooled anyway.
  bool zero_variance_warning = false;
};

TukeyResult tukey_hsd(std::span<const Sample> groups, double alpha = 0.05);

double pearson_r(std::span<const double> x, std::span<const double> y);

}  // namespace vorient::stats
