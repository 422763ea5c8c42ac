#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "argbot/domain.hpp"

namespace argbot::analytics {

// ---------------------------------------------------------------------------
// Outcome construction

// ratio_i = count_i / mean(counts). Throws UndefinedRatio when the group mean
// is zero.
std::vector<double> share_of_comments(std::span<const double> counts);

// Same construction on whitespace-token totals; `comments_per_member[i]` holds
// the texts written by member i.
std::vector<double> share_of_tokens(const std::vector<std::vector<std::string>>& comments_per_member);

double representativeness(int repr_own, int repr_express, int repr_marginalized);

// (x - mean) / sd with the n-1 sample standard deviation.
std::vector<double> zscore(std::span<const double> values);

enum class Outcome {
  UniqueArguments,
  ShareComments,
  ShareTokens,
  Representativeness,
  ViewpointsRange,
  NewArguments,
  DifferentBackgrounds,
  Opportunity,
};

std::string_view to_string(Outcome o);
Outcome parse_outcome(std::string_view s);
std::vector<Outcome> all_outcomes();

struct Controls {
  std::optional<double> group_size;
  std::optional<double> age;
  std::optional<double> male;
  std::optional<double> education;
  std::optional<double> exp_political;
  std::optional<double> exp_online;

  bool operator==(const Controls&) const = default;
};

struct OutcomeRow {
  ParticipantId participant_id;
  GroupId group_id = 0;
  Condition condition = Condition::Control;
  std::optional<double> unique_arguments;
  std::optional<double> share_comments;
  std::optional<double> share_tokens;
  std::optional<double> representativeness;
  std::optional<double> viewpoints_range;
  std::optional<double> new_arguments;
  std::optional<double> different_backgrounds;
  std::optional<double> opportunity;
  Controls controls;

  std::optional<double> outcome(Outcome o) const;
  bool operator==(const OutcomeRow&) const = default;
};

// Rows whose outcome and every control are present. Returns the kept rows
// and the number dropped.
std::pair<std::vector<OutcomeRow>, std::size_t> complete_cases(const std::vector<OutcomeRow>& rows, Outcome outcome);

// ---------------------------------------------------------------------------
// Regression

enum class ModelKind { PerCondition, Pooled };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct ModelSpec {
  ModelKind kind = ModelKind::PerCondition;
  Outcome outcome = Outcome::UniqueArguments;
  // Condition levels that get a column (reference excluded). Empty means the
  // levels present in the rows.
  std::vector<Condition> levels;
  Condition reference = Condition::Control;
  bool standardize = true;
};

// Coefficient label for a condition dummy, e.g. "AI Moderator".
std::string coefficient_name(Condition c);
inline constexpr std::string_view kPooledEffect = "Pooled Effect";
inline constexpr std::string_view kIntercept = "Intercept";

struct DesignMatrix {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> names;
};

// Intercept, condition dummies (Moderator, Participant, AI Moderator,
// AI Participant order) or a single pooled any-treatment dummy, then the
// controls group size, age, male, education, political and online
// discussion experience.
DesignMatrix build_design_matrix(const std::vector<OutcomeRow>& rows, const ModelSpec& spec);

struct RegressionFit {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd t_statistics;
  Eigen::VectorXd p_values;
  Eigen::MatrixXd covariance;
  std::size_t n = 0;
  std::size_t df = 0;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double residual_variance = 0.0;
  double rss = 0.0;

  std::optional<std::size_t> index_of(std::string_view name) const;
};

// Classical OLS: Householder QR solve, covariance sigma^2 (X'X)^-1 with
// sigma^2 = RSS / (n - p), two-sided t p-values on n - p df.
RegressionFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names = {});
RegressionFit ols_fit(const DesignMatrix& design);

struct ContrastResult {
  std::string label;
  std::string first;
  std::string second;
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t df = 0;
  double t_ratio = 0.0;
  double p_value = 1.0;        // unadjusted
  double p_value_tukey = 1.0;  // adjusted over the levels named in the family
};

// Pairs name fitted coefficients; the reference level's name ("Control" by
// default) is accepted and stands for a fixed zero coefficient.
std::vector<ContrastResult> pairwise_contrasts(const RegressionFit& fit,
                                               const std::vector<std::pair<std::string, std::string>>& pairs,
                                               std::string_view reference_name = "Control");

// Every ordered pair (later level minus earlier level) among the given
// conditions, using their coefficient names.
std::vector<std::pair<std::string, std::string>> all_condition_pairs(const std::vector<Condition>& levels);

// "" / "+" / "*" / "**" / "***" for p at the 0.1 / 0.05 / 0.01 / 0.001 cuts.
std::string significance_marker(double p);

std::string regression_table(const std::vector<RegressionFit>& fits, const std::vector<std::string>& titles = {});
std::string contrast_table(const std::vector<ContrastResult>& contrasts);
std::string fits_csv(const std::vector<RegressionFit>& fits, const std::vector<std::string>& titles);

}  // namespace argbot::analytics
