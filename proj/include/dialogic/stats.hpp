#pragma once

#include <cstddef>
#include <span>

namespace dialogic::stats {

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance, n - 1 denominator; 0 when n <= 1
};

Moments moments(std::span<const double> xs);

/// Regularized incomplete beta function I_x(a, b) for a, b > 0 and
/// x in [0, 1], evaluated by Lentz's continued fraction with the usual
/// symmetry switch so the fraction always converges quickly.
double regularized_incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with `df` degrees of freedom.
double student_t_cdf(double t, double df);

/// P(|T| >= |t|) for T ~ t(df).
double student_t_two_sided_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
};

/// Welch's unequal-variance two-sample t-test with Welch-Satterthwaite
/// degrees of freedom and a two-sided p-value.
///
/// Throws Error{DegenerateSample} if either sample has fewer than two
/// values or both sample variances are zero.
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Classic pooled-variance Student t-test (df = na + nb - 2). Same
/// degeneracy rules as welch_t_test.
TTestResult pooled_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace dialogic::stats
