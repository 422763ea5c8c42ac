#include "argbot/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "argbot/distributions.hpp"
#include "argbot/error.hpp"
#include "argbot/text.hpp"

namespace argbot::analytics {

std::vector<double> share_of_comments(std::span<const double> counts) {
  if (counts.empty()) throw Error(Errc::UndefinedRatio, "empty group");
  for (double c : counts) {
    if (c < 0.0) throw Error(Errc::InvalidArgument, "negative count");
  }
  const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / static_cast<double>(counts.size());
  if (mean <= 0.0) throw Error(Errc::UndefinedRatio, "group mean is zero; shares undefined");
  std::vector<double> out;
  out.reserve(counts.size());
  for (double c : counts) out.push_back(c / mean);
  return out;
}

std::vector<double> share_of_tokens(const std::vector<std::vector<std::string>>& comments_per_member) {
  std::vector<double> totals;
  totals.reserve(comments_per_member.size());
  for (const auto& member : comments_per_member) {
    std::size_t n = 0;
    for (const auto& c : member) n += text::count_tokens(c);
    totals.push_back(static_cast<double>(n));
  }
  return share_of_comments(totals);
}

double representativeness(int repr_own, int repr_express, int repr_marginalized) {
  for (int v : {repr_own, repr_express, repr_marginalized}) {
    if (v < 1 || v > 5) throw Error(Errc::InvalidArgument, "representativeness item out of [1,5]");
  }
  return (repr_own + repr_express + repr_marginalized) / 3.0;
}

std::vector<double> zscore(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw Error(Errc::TooFewObservations, "z-score needs at least 2 values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw Error(Errc::ConstantVector, "z-score of a constant vector");
  std::vector<double> out;
  out.reserve(n);
  for (double v : values) out.push_back((v - mean) / sd);
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::UniqueArguments: return "unique_arguments";
    case Outcome::ShareComments: return "share_comments";
    case Outcome::ShareTokens: return "share_tokens";
    case Outcome::Representativeness: return "representativeness";
    case Outcome::ViewpointsRange: return "viewpoints_range";
    case Outcome::NewArguments: return "new_arguments";
    case Outcome::DifferentBackgrounds: return "different_backgrounds";
    case Outcome::Opportunity: return "opportunity";
  }
  return "unique_arguments";
}

std::vector<Outcome> all_outcomes() {
  return {Outcome::UniqueArguments,   Outcome::ShareComments,   Outcome::ShareTokens,
          Outcome::Representativeness, Outcome::ViewpointsRange, Outcome::NewArguments,
          Outcome::DifferentBackgrounds, Outcome::Opportunity};
}

Outcome parse_outcome(std::string_view s) {
  for (Outcome o : all_outcomes()) {
    if (s == to_string(o)) return o;
  }
  throw Error(Errc::InvalidArgument, "unknown outcome: " + std::string(s));
}

std::optional<double> OutcomeRow::outcome(Outcome o) const {
  switch (o) {
    case Outcome::UniqueArguments: return unique_arguments;
    case Outcome::ShareComments: return share_comments;
    case Outcome::ShareTokens: return share_tokens;
    case Outcome::Representativeness: return representativeness;
    case Outcome::ViewpointsRange: return viewpoints_range;
    case Outcome::NewArguments: return new_arguments;
    case Outcome::DifferentBackgrounds: return different_backgrounds;
    case Outcome::Opportunity: return opportunity;
  }
  return std::nullopt;
}

namespace {

bool controls_complete(const Controls& c) {
  return c.group_size && c.age && c.male && c.education && c.exp_political && c.exp_online;
}

// Column order of the dummies follows the regression tables: Moderator before
// Participant, then the AI-labelled pair.
constexpr Condition kDummyOrder[] = {Condition::Control, Condition::Moderator, Condition::Participant,
                                     Condition::AIModerator, Condition::AIParticipant};

}  // namespace

std::pair<std::vector<OutcomeRow>, std::size_t> complete_cases(const std::vector<OutcomeRow>& rows, Outcome outcome) {
  std::vector<OutcomeRow> kept;
  std::size_t dropped = 0;
  for (const auto& r : rows) {
    if (r.outcome(outcome) && controls_complete(r.controls)) {
      kept.push_back(r);
    } else {
      ++dropped;
    }
  }
  return {std::move(kept), dropped};
}

std::string_view to_string(ModelKind k) { return k == ModelKind::Pooled ? "pooled" : "per_condition"; }

ModelKind parse_model_kind(std::string_view s) {
  if (s == "pooled") return ModelKind::Pooled;
  if (s == "per_condition") return ModelKind::PerCondition;
  throw Error(Errc::InvalidArgument, "unknown model spec: " + std::string(s));
}

std::string coefficient_name(Condition c) {
  switch (c) {
    case Condition::Control: return "Control";
    case Condition::Participant: return "Participant";
    case Condition::Moderator: return "Moderator";
    case Condition::AIParticipant: return "AI Participant";
    case Condition::AIModerator: return "AI Moderator";
  }
  return "Control";
}

DesignMatrix build_design_matrix(const std::vector<OutcomeRow>& rows, const ModelSpec& spec) {
  if (rows.empty()) throw Error(Errc::TooFewObservations, "no rows for design matrix");

  std::vector<Condition> levels = spec.levels;
  if (levels.empty()) {
    std::set<Condition> present;
    for (const auto& r : rows) present.insert(r.condition);
    levels.assign(present.begin(), present.end());
  }
  std::vector<Condition> dummies;
  for (Condition c : kDummyOrder) {
    if (c != spec.reference && std::find(levels.begin(), levels.end(), c) != levels.end()) dummies.push_back(c);
  }

  DesignMatrix d;
  d.names.emplace_back(kIntercept);
  if (spec.kind == ModelKind::PerCondition) {
    for (Condition c : dummies) d.names.push_back(coefficient_name(c));
  } else {
    d.names.emplace_back(kPooledEffect);
  }
  for (const char* n : {"Group size", "Age", "Male", "Education", "Exp. Political Discussions",
                        "Exp. Online Discussions"}) {
    d.names.emplace_back(n);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(d.names.size());
  d.X = Eigen::MatrixXd::Zero(n, p);
  std::vector<double> y(rows.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    const auto value = r.outcome(spec.outcome);
    if (!value) {
      throw Error(Errc::MissingValue, "participant " + r.participant_id + " lacks outcome " +
                                          std::string(to_string(spec.outcome)));
    }
    if (!controls_complete(r.controls)) {
      throw Error(Errc::MissingValue, "participant " + r.participant_id + " lacks a control value");
    }
    y[static_cast<std::size_t>(i)] = *value;
    Eigen::Index col = 0;
    d.X(i, col++) = 1.0;
    if (spec.kind == ModelKind::PerCondition) {
      for (Condition c : dummies) d.X(i, col++) = r.condition == c ? 1.0 : 0.0;
    } else {
      d.X(i, col++) = r.condition == Condition::Control ? 0.0 : 1.0;
    }
    const auto& c = r.controls;
    for (double v : {*c.group_size, *c.age, *c.male, *c.education, *c.exp_political, *c.exp_online}) {
      d.X(i, col++) = v;
    }
  }
  if (spec.standardize) y = zscore(y);
  d.y = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  return d;
}

std::optional<std::size_t> RegressionFit::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

RegressionFit ols_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names) {
  const auto n = X.rows();
  const auto p = X.cols();
  if (y.size() != n) throw Error(Errc::InvalidArgument, "X and y row counts differ");
  if (p == 0) throw Error(Errc::InvalidArgument, "design matrix has no columns");
  if (n <= p) {
    throw Error(Errc::TooFewObservations,
                fmt::format("need more observations than parameters (n={}, p={})", n, p));
  }
  if (names.empty()) {
    for (Eigen::Index j = 0; j < p; ++j) names.push_back(fmt::format("x{}", j));
  }
  if (static_cast<Eigen::Index>(names.size()) != p) throw Error(Errc::InvalidArgument, "name count mismatch");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    throw Error(Errc::RankDeficient, fmt::format("design matrix is rank deficient (rank {} < {})", qr.rank(), p));
  }

  RegressionFit fit;
  fit.names = std::move(names);
  fit.n = static_cast<std::size_t>(n);
  fit.df = static_cast<std::size_t>(n - p);
  fit.coefficients = qr.solve(y);

  const Eigen::VectorXd residuals = y - X * fit.coefficients;
  fit.rss = residuals.squaredNorm();
  fit.residual_variance = fit.rss / static_cast<double>(fit.df);

  // (X'X)^-1 = P R^-1 R^-T P' from X P = Q R.
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd r_inv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd unscaled_pivoted = r_inv * r_inv.transpose();
  const auto& perm = qr.colsPermutation();
  Eigen::MatrixXd unscaled = perm * unscaled_pivoted * perm.transpose();
  unscaled = 0.5 * (unscaled + unscaled.transpose()).eval();
  fit.covariance = fit.residual_variance * unscaled;

  fit.standard_errors = fit.covariance.diagonal().cwiseSqrt();
  fit.t_statistics.resize(p);
  fit.p_values.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double b = fit.coefficients(j);
    const double se = fit.standard_errors(j);
    double t;
    if (se > 0.0) {
      t = b / se;
    } else {
      t = b == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b);
    }
    fit.t_statistics(j) = t;
    fit.p_values(j) = stats::student_t_two_sided_p(t, static_cast<double>(fit.df));
  }

  const double mean_y = y.mean();
  const double tss = (y.array() - mean_y).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - fit.rss / tss : 0.0;
  fit.adj_r_squared =
      1.0 - (1.0 - fit.r_squared) * static_cast<double>(n - 1) / static_cast<double>(fit.df);
  return fit;
}

RegressionFit ols_fit(const DesignMatrix& design) { return ols_fit(design.X, design.y, design.names); }

std::vector<ContrastResult> pairwise_contrasts(const RegressionFit& fit,
                                               const std::vector<std::pair<std::string, std::string>>& pairs,
                                               std::string_view reference_name) {
  auto lookup = [&](const std::string& name) -> std::optional<std::size_t> {
    if (name == reference_name && !fit.index_of(name)) return std::nullopt;
    if (auto idx = fit.index_of(name)) return idx;
    throw Error(Errc::UnknownCoefficient, "unknown coefficient: " + name);
  };
  auto display = [](const std::string& name) {
    for (Condition c : kDummyOrder) {
      if (coefficient_name(c) == name) {
        if (auto id = bot_identity(c)) return id->display_name;
      }
    }
    return name;
  };

  std::set<std::string> family;
  for (const auto& [a, b] : pairs) {
    family.insert(a);
    family.insert(b);
  }
  const int k = static_cast<int>(family.size());
  const double df = static_cast<double>(fit.df);

  std::vector<ContrastResult> out;
  for (const auto& [a, b] : pairs) {
    const auto ia = lookup(a);
    const auto ib = lookup(b);
    ContrastResult c;
    c.first = a;
    c.second = b;
    c.label = display(a) + " - " + display(b);
    c.df = fit.df;
    const double ba = ia ? fit.coefficients(static_cast<Eigen::Index>(*ia)) : 0.0;
    const double bb = ib ? fit.coefficients(static_cast<Eigen::Index>(*ib)) : 0.0;
    const double vaa = ia ? fit.covariance(static_cast<Eigen::Index>(*ia), static_cast<Eigen::Index>(*ia)) : 0.0;
    const double vbb = ib ? fit.covariance(static_cast<Eigen::Index>(*ib), static_cast<Eigen::Index>(*ib)) : 0.0;
    const double vab =
        ia && ib ? fit.covariance(static_cast<Eigen::Index>(*ia), static_cast<Eigen::Index>(*ib)) : 0.0;
    c.estimate = ba - bb;
    const double var = vaa + vbb - 2.0 * vab;
    c.standard_error = std::sqrt(std::max(var, 0.0));
    if (c.standard_error > 0.0) {
      c.t_ratio = c.estimate / c.standard_error;
    } else {
      c.t_ratio = c.estimate == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), c.estimate);
    }
    c.p_value = stats::student_t_two_sided_p(c.t_ratio, df);
    c.p_value_tukey = k >= 2 ? stats::tukey_p_value(c.t_ratio, k, df) : c.p_value;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> all_condition_pairs(const std::vector<Condition>& levels) {
  std::vector<Condition> sorted = levels;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::pair<std::string, std::string>> out;
  for (std::size_t j = 1; j < sorted.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) out.emplace_back(coefficient_name(sorted[j]), coefficient_name(sorted[i]));
  }
  return out;
}

std::string significance_marker(double p) {
  if (std::isnan(p)) return "";
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  if (p < 0.1) return "+";
  return "";
}

std::string regression_table(const std::vector<RegressionFit>& fits, const std::vector<std::string>& titles) {
  std::vector<std::string> rows;
  for (const auto& f : fits) {
    for (const auto& n : f.names) {
      if (std::find(rows.begin(), rows.end(), n) == rows.end()) rows.push_back(n);
    }
  }
  std::size_t label_w = std::string_view("Variable").size();
  for (const auto& r : rows) label_w = std::max(label_w, r.size());
  label_w = std::max<std::size_t>(label_w, 8);
  constexpr std::size_t kColW = 16;

  std::string out;
  auto line = [&](const std::string& label, const std::vector<std::string>& cells) {
    out += fmt::format("{:<{}}", label, label_w);
    for (const auto& c : cells) out += fmt::format(" {:>{}}", c, kColW);
    out += '\n';
  };

  std::vector<std::string> header;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    header.push_back(i < titles.size() ? titles[i] : fmt::format("({})", i + 1));
  }
  const std::string rule(label_w + fits.size() * (kColW + 1), '-');
  out += rule + '\n';
  line("Variable", header);
  out += rule + '\n';
  for (const auto& r : rows) {
    std::vector<std::string> est, se;
    for (const auto& f : fits) {
      if (auto idx = f.index_of(r)) {
        const auto j = static_cast<Eigen::Index>(*idx);
        est.push_back(fmt::format("{:.3f}{}", f.coefficients(j), significance_marker(f.p_values(j))));
        se.push_back(fmt::format("({:.3f})", f.standard_errors(j)));
      } else {
        est.emplace_back();
        se.emplace_back();
      }
    }
    line(r, est);
    line("", se);
  }
  out += rule + '\n';
  std::vector<std::string> nobs, r2, r2a;
  for (const auto& f : fits) {
    nobs.push_back(fmt::format("{}", f.n));
    r2.push_back(fmt::format("{:.3f}", f.r_squared));
    r2a.push_back(fmt::format("{:.3f}", f.adj_r_squared));
  }
  line("Num.Obs.", nobs);
  line("R2", r2);
  line("R2 Adj.", r2a);
  out += rule + '\n';
  out += "Note: + p < 0.1, * p < 0.05, ** p < 0.01, *** p < 0.001\n";
  return out;
}

std::string contrast_table(const std::vector<ContrastResult>& contrasts) {
  std::size_t label_w = 8;
  for (const auto& c : contrasts) label_w = std::max(label_w, c.label.size());
  std::string out = fmt::format("{:<{}} {:>9} {:>8} {:>6} {:>8} {:>9} {:>9}\n", "contrast", label_w, "estimate", "SE",
                                "df", "t.ratio", "p.value", "p.tukey");
  for (const auto& c : contrasts) {
    out += fmt::format("{:<{}} {:>9.3f} {:>8.3f} {:>6} {:>8.2f} {:>9.4f} {:>9.4f}\n", c.label, label_w, c.estimate,
                       c.standard_error, c.df, c.t_ratio, c.p_value, c.p_value_tukey);
  }
  return out;
}

std::string fits_csv(const std::vector<RegressionFit>& fits, const std::vector<std::string>& titles) {
  std::string out = "model,term,estimate,std_error,t_statistic,p_value,n,df,r_squared,adj_r_squared\n";
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    const std::string title = i < titles.size() ? titles[i] : fmt::format("model{}", i + 1);
    for (std::size_t j = 0; j < f.names.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      out += fmt::format("{},{},{:.17g},{:.17g},{:.17g},{:.17g},{},{},{:.17g},{:.17g}\n", title, f.names[j],
                         f.coefficients(k), f.standard_errors(k), f.t_statistics(k), f.p_values(k), f.n, f.df,
                         f.r_squared, f.adj_r_squared);
    }
  }
  return out;
}

}  // namespace argbot::analytics
