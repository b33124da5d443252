// Copyright 2026 The vorient Authors
// SPDX-License-Identifier: Apache-2.0

// Special functions and distribution tails used by the hypothesis tests.
//
// The incomplete beta and gamma functions use the modified Lentz continued
// fraction (and the power series for P(a, x) below a + 1). Both iterate until
// the relative change of a step drops below 1e-15, which keeps every p-value
// accurate to well under 1e-10 absolute.

#pragma once

#include <span>
#include <utility>

namespace vorient::special {

double log_gamma(double x);

// I_x(a, b), a > 0, b > 0, 0 <= x <= 1.
double incomplete_beta(double a, double b, double x);

// Regularized lower / upper incomplete gamma, a > 0, x >= 0.
double gamma_p(double a, double x);
double gamma_q(double a, double x);

double normal_cdf(double z);

// P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);
double student_t_cdf(double t, double df);

// Upper tail of the chi-square distribution.
double chi_square_sf(double x, double df);

// Upper tail of the F distribution.
double f_sf(double f, double df1, double df2);

// Studentized range distribution. The inner range probability is integrated
// with panelled 20-point Gauss-Legendre over the normal line; the outer
// integral over the scaled chi variable is Gauss-Legendre with panel
// doubling until the relative change is below 1e-9.
double studentized_range_cdf(double q, int k, double df);
double studentized_range_sf(double q, int k, double df);
double studentized_range_quantile(double p, int k, double df);

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendreRule {
  std::span<const double> nodes;
  std::span<const double> weights;
};
GaussLegendreRule gauss_legendre_20();

}  // namespace vorient::special
