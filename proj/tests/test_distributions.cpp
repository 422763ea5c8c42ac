#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "argbot/distributions.hpp"

using namespace argbot::stats;

// Boost.Math serves as the independent oracle for the beta and t functions.
TEST(Distributions, IncompleteBetaMatchesBoost) {
  for (double a : {0.5, 1.0, 2.5, 10.0, 150.0, 1300.0}) {
    for (double b : {0.5, 1.0, 3.0, 40.0}) {
      for (double x : {1e-6, 0.01, 0.2, 0.5, 0.77, 0.999}) {
        const double want = boost::math::ibeta(a, b, x);
        EXPECT_NEAR(incomplete_beta(x, a, b), want, 1e-12 + 1e-10 * want) << a << " " << b << " " << x;
      }
    }
  }
  EXPECT_EQ(incomplete_beta(0.0, 2.0, 3.0), 0.0);
  EXPECT_EQ(incomplete_beta(1.0, 2.0, 3.0), 1.0);
}

TEST(Distributions, StudentTMatchesBoost) {
  for (double df : {1.0, 2.0, 5.0, 30.0, 1347.0, 2596.0}) {
    boost::math::students_t dist(df);
    for (double t : {-8.0, -2.61, -1.0, 0.0, 0.3, 1.96, 3.06, 12.0}) {
      EXPECT_NEAR(student_t_cdf(t, df), boost::math::cdf(dist, t), 1e-10) << df << " " << t;
      const double two = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
      EXPECT_NEAR(student_t_two_sided_p(t, df), two, 1e-10 + 1e-8 * two) << df << " " << t;
    }
  }
  boost::math::normal n;
  for (double z : {-3.0, -0.5, 0.0, 1.0, 2.5}) EXPECT_NEAR(normal_cdf(z), boost::math::cdf(n, z), 1e-14);
}

TEST(Distributions, TwoSidedPShape) {
  EXPECT_DOUBLE_EQ(student_t_two_sided_p(0.0, 10.0), 1.0);
  double last = 1.0;
  for (double t = 0.1; t < 40.0; t += 0.1) {
    const double p = student_t_two_sided_p(t, 10.0);
    EXPECT_LT(p, last);
    last = p;
  }
  EXPECT_LT(student_t_two_sided_p(1e3, 10.0), 1e-20);
  EXPECT_DOUBLE_EQ(student_t_two_sided_p(2.0, 7.0), student_t_two_sided_p(-2.0, 7.0));
}

// Reference values frozen from scipy.stats.studentized_range.cdf.
TEST(Distributions, StudentizedRangeMatchesReferenceValues) {
  struct Row {
    double q;
    int k;
    double df;
    double cdf;
  };
  const Row rows[] = {
      {1.824, 4, 2596, 0.4304663008146583}, {3.691, 4, 2596, 0.9549749377772788},
      {3.0, 3, 20, 0.8892432021469359},     {2.5, 2, 10, 0.8924587374811902},
      {4.0, 5, 60, 0.9519494564560211},     {1.0, 4, 1000, 0.10570088000084932},
      {3.63, 4, 1e6, 0.9497027148595385},
  };
  for (const auto& r : rows) {
    EXPECT_NEAR(studentized_range_cdf(r.q, r.k, r.df), r.cdf, 2e-6) << r.q << " " << r.k << " " << r.df;
  }
}

TEST(Distributions, TukeyTwoLevelsEqualsPlainT) {
  // With two levels the studentized range reduces to |T| * sqrt(2).
  for (double t : {0.5, 1.5, 3.06}) {
    EXPECT_NEAR(tukey_p_value(t, 2, 1777.0), student_t_two_sided_p(t, 1777.0), 2e-6);
  }
}

// Pairwise contrasts among four treatment levels, Study 2 (df 2596), and the
// two-level Study 1 family (df 1777); p-values as printed to two decimals.
TEST(Distributions, TukeyReproducesPublishedContrastRows) {
  struct Row {
    double t;
    int k;
    double df;
    double p;
  };
  const Row rows[] = {
      {3.92, 4, 2596, 0.00}, {1.29, 4, 2596, 0.57}, {-2.61, 4, 2596, 0.04},
      {2.63, 4, 2596, 0.04}, {-1.28, 4, 2596, 0.57}, {1.33, 4, 2596, 0.54},
      {3.06, 2, 1777, 0.00},
  };
  for (const auto& r : rows) {
    const double p = tukey_p_value(r.t, r.k, r.df);
    // Half a unit in the last printed digit, widened for the rounding of t.
    EXPECT_NEAR(p, r.p, 0.0065) << r.t;
  }
  // Stated with three decimals in the text.
  EXPECT_NEAR(tukey_p_value(3.06, 2, 1777), 0.002, 0.0006);
}

TEST(Distributions, StudentizedRangeEdges) {
  EXPECT_EQ(studentized_range_cdf(0.0, 4, 50), 0.0);
  EXPECT_NEAR(studentized_range_cdf(50.0, 4, 50), 1.0, 1e-9);
  EXPECT_LT(studentized_range_cdf(2.0, 4, 50), studentized_range_cdf(2.1, 4, 50));
  EXPECT_NEAR(tukey_p_value(0.0, 4, 100), 1.0, 1e-9);
}
