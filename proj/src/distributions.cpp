#include "argbot/distributions.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "argbot/error.hpp"

namespace argbot::stats {
namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 20000; ++m) {
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
  return h;
}

double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// P(range of k iid standard normals <= w).
double normal_range_cdf(double w, int k) {
  if (w <= 0.0) return 0.0;
  constexpr double kInvSqrt2Pi = 0.398942280401432677939946;
  auto integrand = [w, k](double z) {
    const double inner = normal_cdf(z) - normal_cdf(z - w);
    if (inner <= 0.0) return 0.0;
    return kInvSqrt2Pi * std::exp(-0.5 * z * z) * std::pow(inner, k - 1);
  };
  using boost::math::quadrature::gauss_kronrod;
  const double lo = -8.5;
  const double hi = 8.5 + std::min(w, 8.5);
  const double mid = 0.5 * w;
  double value = gauss_kronrod<double, 61>::integrate(integrand, lo, mid, 15, 1e-13) +
                 gauss_kronrod<double, 61>::integrate(integrand, mid, hi, 15, 1e-13);
  return std::clamp(k * value, 0.0, 1.0);
}

}  // namespace

double incomplete_beta(double x, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw Error(Errc::InvalidArgument, "incomplete_beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return std::exp(log_front) * beta_continued_fraction(x, a, b) / a;
  }
  return 1.0 - std::exp(log_front) * beta_continued_fraction(1.0 - x, b, a) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw Error(Errc::InvalidArgument, "degrees of freedom must be positive");
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return 0.0;
  if (std::isinf(df)) return std::erfc(std::fabs(t) / std::sqrt(2.0));
  const double x = df / (df + t * t);
  return incomplete_beta(x, 0.5 * df, 0.5);
}

double student_t_cdf(double t, double df) {
  const double tail = 0.5 * student_t_two_sided_p(t, df);
  return t >= 0.0 ? 1.0 - tail : tail;
}

double studentized_range_cdf(double q, int k, double df) {
  if (k < 2) throw Error(Errc::InvalidArgument, "studentized range needs k >= 2");
  if (!(df > 0.0)) throw Error(Errc::InvalidArgument, "degrees of freedom must be positive");
  if (q <= 0.0) return 0.0;
  if (std::isinf(q)) return 1.0;
  if (std::isinf(df) || df > 1e7) return normal_range_cdf(q, k);

  // Integrate over s = sqrt(chi2_df / df), whose density is concentrated
  // around 1 with spread ~ 1/sqrt(2 df).
  const double log_norm = 0.5 * df * std::log(df) - std::lgamma(0.5 * df) - (0.5 * df - 1.0) * std::log(2.0);
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    const double log_density = log_norm + (df - 1.0) * std::log(s) - 0.5 * df * s * s;
    return std::exp(log_density) * normal_range_cdf(q * s, k);
  };
  const double spread = 1.0 / std::sqrt(2.0 * df);
  const double mode = std::sqrt(std::max(df - 1.0, 0.0) / df);
  const double lo = std::max(0.0, mode - 14.0 * spread);
  const double hi = mode + 14.0 * spread + (df < 10.0 ? 6.0 : 0.0);
  using boost::math::quadrature::gauss_kronrod;
  double value = 0.0;
  if (mode > lo) value += gauss_kronrod<double, 31>::integrate(integrand, lo, mode, 12, 1e-11);
  value += gauss_kronrod<double, 31>::integrate(integrand, mode, hi, 12, 1e-11);
  return std::clamp(value, 0.0, 1.0);
}

double tukey_p_value(double t, int k, double df) {
  if (std::isnan(t)) return t;
  return 1.0 - studentized_range_cdf(std::fabs(t) * std::sqrt(2.0), k, df);
}

}  // namespace argbot::stats
