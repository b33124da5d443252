// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

#include "vorient/special_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "vorient/error.hpp"

namespace vorient::special {

namespace {

constexpr double kEps = 1e-15;
constexpr double kTiny = 1e-300;
constexpr int kMaxIter = 10000;

// Continued fraction for I_x(a, b), modified Lentz.
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw Error(ErrorCode::kInternal, "incomplete beta continued fraction did not converge");
}

double gamma_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < kMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kEps) {
      return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
  }
  throw Error(ErrorCode::kInternal, "incomplete gamma series did not converge");
}

double gamma_continued_fraction(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
    }
  }
  throw Error(ErrorCode::kInternal, "incomplete gamma continued fraction did not converge");
}

struct Rule20 {
  std::array<double, 20> nodes{};
  std::array<double, 20> weights{};

  Rule20() {
    constexpr int n = 20;
    for (int i = 0; i < n / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0;
        double p2 = 0.0;
        for (int j = 1; j <= n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        pp = n * (z * p1 - p2) / (z * z - 1.0);
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::fabs(z - z1) < 1e-16) break;
      }
      nodes[i] = -z;
      nodes[n - 1 - i] = z;
      weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
  }
};

const Rule20& rule20() {
  static const Rule20 rule;
  return rule;
}

template <typename F>
double integrate_panels(F&& f, double lo, double hi, int panels) {
  const Rule20& r = rule20();
  const double width = (hi - lo) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = lo + (p + 0.5) * width;
    const double half = 0.5 * width;
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
      s += r.weights[i] * f(mid + half * r.nodes[i]);
    }
    total += s * half;
  }
  return total;
}

// P(range of k iid standard normals > w).
double range_sf(double w, int k) {
  if (w <= 0.0) return 1.0;
  if (k == 2) return std::erfc(w / 2.0);  // 2 * (1 - Phi(w / sqrt 2))
  constexpr double kInvSqrt2Pi = 0.3989422804014327;
  auto integrand = [&](double z) {
    const double inside = normal_cdf(z) - normal_cdf(z - w);
    return kInvSqrt2Pi * std::exp(-0.5 * z * z) * std::pow(inside, k - 1);
  };
  // The density factor is below 1e-16 outside [-8.5, 8.5].
  const double cdf = k * integrate_panels(integrand, -8.5, 8.5, 34);
  return std::max(0.0, 1.0 - cdf);
}

}  // namespace

double log_gamma(double x) { return std::lgamma(x); }

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "incomplete_beta requires a > 0 and b > 0");
  }
  if (std::isnan(x) || x < 0.0 || x > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "incomplete_beta requires 0 <= x <= 1");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "gamma_p requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "gamma_q requires a > 0 and x >= 0");
  }
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::kInvalidArgument, "t distribution needs df > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t > 0.0 ? 1.0 - tail : tail;
}

double chi_square_sf(double x, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::kInvalidArgument, "chi-square needs df > 0");
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * df, 0.5 * x);
}

double f_sf(double f, double df1, double df2) {
  if (!(df1 > 0.0) || !(df2 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "F distribution needs positive df");
  }
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return incomplete_beta(0.5 * df2, 0.5 * df1, df2 / (df2 + df1 * f));
}

double studentized_range_sf(double q, int k, double df) {
  if (k < 2) throw Error(ErrorCode::kInvalidArgument, "studentized range needs k >= 2");
  if (!(df > 0.0)) throw Error(ErrorCode::kInvalidArgument, "studentized range needs df > 0");
  if (!(q > 0.0)) return 1.0;
  if (std::isinf(q)) return 0.0;
  if (df > 1e6) return range_sf(q, k);

  // s = sqrt(chi2_df / df); its density in log form.
  const double log_norm = 0.5 * df * std::log(df) - log_gamma(0.5 * df) -
                          (0.5 * df - 1.0) * std::numbers::ln2;
  auto density = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::exp(log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s);
  };
  const double spread = 14.0 / std::sqrt(2.0 * df);
  const double lo = std::max(0.0, 1.0 - spread);
  const double hi = 1.0 + (df < 4.0 ? 10.0 : spread);
  auto integrand = [&](double s) { return range_sf(q * s, k) * density(s); };

  int panels = 8;
  double prev = integrate_panels(integrand, lo, hi, panels);
  while (panels < 2048) {
    panels *= 2;
    const double cur = integrate_panels(integrand, lo, hi, panels);
    const double diff = std::fabs(cur - prev);
    prev = cur;
    if (diff <= 1e-9 * std::fabs(cur) || diff < 1e-15) break;
  }
  return std::clamp(prev, 0.0, 1.0);
}

double studentized_range_cdf(double q, int k, double df) {
  return 1.0 - studentized_range_sf(q, k, df);
}

double studentized_range_quantile(double p, int k, double df) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "quantile probability must be in (0, 1)");
  }
  double lo = 0.0;
  double hi = 8.0;
  while (studentized_range_cdf(hi, k, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw Error(ErrorCode::kInternal, "studentized range quantile diverged");
  }
  // Illinois false position on g(q) = cdf(q) - p.
  double glo = studentized_range_cdf(lo, k, df) - p;
  double ghi = studentized_range_cdf(hi, k, df) - p;
  int side = 0;
  double q = lo;
  for (int it = 0; it < 200; ++it) {
    q = (lo * ghi - hi * glo) / (ghi - glo);
    const double g = studentized_range_cdf(q, k, df) - p;
    if (std::fabs(g) < 1e-13 || hi - lo < 1e-11) break;
    if ((g > 0.0) == (ghi > 0.0)) {
      hi = q;
      ghi = g;
      if (side == -1) glo *= 0.5;
      side = -1;
    } else {
      lo = q;
      glo = g;
      if (side == 1) ghi *= 0.5;
      side = 1;
    }
  }
  return q;
}

GaussLegendreRule gauss_legendre_20() {
  const Rule20& r = rule20();
  return {r.nodes, r.weights};
}

}  // namespace vorient::special
