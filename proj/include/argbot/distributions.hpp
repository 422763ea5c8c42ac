#pragma once

#include <limits>

namespace argbot::stats {

inline constexpr double kInfiniteDf = std::numeric_limits<double>::infinity();

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double x, double a, double b);

double normal_cdf(double z);

double student_t_cdf(double t, double df);
// P(|T| >= |t|) for T ~ t(df). Evaluated as I_{df/(df+t^2)}(df/2, 1/2) so
// small tail probabilities keep full relative precision.
double student_t_two_sided_p(double t, double df);

// P(Q <= q) for the studentized range of k means with df error degrees of
// freedom (df = kInfiniteDf for the known-variance case).
double studentized_range_cdf(double q, int k, double df);

// Tukey-adjusted two-sided p-value for a pairwise t-ratio within a family of
// k levels: P(Q >= |t| * sqrt(2)).
double tukey_p_value(double t, int k, double df);

}  // namespace argbot::stats
