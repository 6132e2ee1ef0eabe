#include "dialogic/stats.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "dialogic/error.hpp"

namespace dialogic::stats {

Moments moments(std::span<const double> xs) {
  Moments m;
  m.n = xs.size();
  if (m.n == 0) return m;
  double sum = 0.0;
  for (double x : xs) sum += x;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n < 2) return m;
  // Two-pass with the compensation term keeps large offsets harmless.
  double ss = 0.0;
  double comp = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    ss += d * d;
    comp += d;
  }
  ss -= comp * comp / static_cast<double>(m.n);
  m.variance = ss > 0.0 ? ss / static_cast<double>(m.n - 1) : 0.0;
  return m;
}

namespace {

constexpr int kMaxIterations = 100000;
constexpr double kEpsilon = 1e-16;
constexpr double kTiny = 1e-300;

// Continued fraction for I_x(a, b); converges for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
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
    if (std::fabs(del - 1.0) < kEpsilon) return h;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || std::isnan(x)) {
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("incomplete beta needs a, b > 0 (got {}, {})", a, b));
  }
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "degrees of freedom must be > 0");
  }
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  const double x = df / (df + t * t);
  double p = regularized_incomplete_beta(df / 2.0, 0.5, x);
  if (p > 1.0) p = 1.0;
  if (p < 0.0) p = 0.0;
  return p;
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t < 0.0 ? tail : 1.0 - tail;
}

namespace {

void require_testable(const Moments& a, const Moments& b) {
  if (a.n < 2 || b.n < 2) {
    throw Error(ErrorCode::DegenerateSample,
                fmt::format("t-test needs n >= 2 per sample (got {} and {})",
                            a.n, b.n));
  }
  if (a.variance == 0.0 && b.variance == 0.0) {
    throw Error(ErrorCode::DegenerateSample,
                "t-test undefined: both samples have zero variance");
  }
}

}  // namespace

TTestResult welch_t_test(std::span<const double> a,
                         std::span<const double> b) {
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  require_testable(ma, mb);
  const double qa = ma.variance / static_cast<double>(ma.n);
  const double qb = mb.variance / static_cast<double>(mb.n);
  const double se2 = qa + qb;
  TTestResult r;
  r.t = (ma.mean - mb.mean) / std::sqrt(se2);
  r.df = se2 * se2 / (qa * qa / static_cast<double>(ma.n - 1) +
                      qb * qb / static_cast<double>(mb.n - 1));
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

TTestResult pooled_t_test(std::span<const double> a,
                          std::span<const double> b) {
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  require_testable(ma, mb);
  const double na = static_cast<double>(ma.n);
  const double nb = static_cast<double>(mb.n);
  const double df = na + nb - 2.0;
  const double pooled =
      ((na - 1.0) * ma.variance + (nb - 1.0) * mb.variance) / df;
  TTestResult r;
  r.t = (ma.mean - mb.mean) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  r.df = df;
  r.p = student_t_two_sided_p(r.t, r.df);
  return r;
}

}  // namespace dialogic::stats
