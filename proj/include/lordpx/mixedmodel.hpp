#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lordpx/dataset.hpp"
#include "lordpx/estimators.hpp"

namespace lordpx {

enum class LmmOutcome { Post, Gain };

/// Which random-intercept model to fit. Treatment is always a covariate;
/// the pretest slope is optional.
struct LmmSpec {
  LmmOutcome outcome = LmmOutcome::Post;
  bool include_pretest = true;

  static constexpr LmmSpec post_ancova() { return {LmmOutcome::Post, true}; }
  static constexpr LmmSpec gain_anova() { return {LmmOutcome::Gain, false}; }
  /// Gain outcome that also adjusts for pretest; algebraically the same
  /// treatment effect as post_ancova.
  static constexpr LmmSpec gain_ancova() { return {LmmOutcome::Gain, true}; }

  EstimateKind kind() const noexcept {
    return outcome == LmmOutcome::Post ? EstimateKind::MlmPostAncova : EstimateKind::MlmGainAnova;
  }
  std::string name() const;

  friend bool operator==(const LmmSpec&, const LmmSpec&) = default;
};

/// y = X beta + u[group] + e with u ~ N(0, s2u), e ~ N(0, s2e).
struct LmmProblem {
  std::vector<double> y;
  Eigen::MatrixXd x;                     // n x p, includes the intercept column
  std::vector<std::size_t> group;        // per row, in [0, group_names.size())
  std::vector<std::string> group_names;
  std::vector<std::string> coef_names;
  EstimateKind kind = EstimateKind::MlmPostAncova;

  std::size_t n() const noexcept { return y.size(); }
  std::size_t p() const noexcept { return static_cast<std::size_t>(x.cols()); }
};

/// Builds the design for `spec`. Schools are indexed in sorted id order, so
/// the problem is a function of the record multiset, not the record order.
LmmProblem build_problem(const TrialDataset& data, const LmmSpec& spec);

struct SchoolEffect {
  std::string school_id;
  std::size_t n = 0;
  double raw_mean = 0.0;    // mean outcome in the school
  double fixed_mean = 0.0;  // mean of x'beta over the school's pupils
  double blup = 0.0;        // predicted random intercept

  double predicted_mean() const noexcept { return fixed_mean + blup; }

  friend bool operator==(const SchoolEffect&, const SchoolEffect&) = default;
};

struct LmmFit {
  EstimateKind kind = EstimateKind::MlmPostAncova;
  std::vector<std::string> coef_names;
  std::vector<double> beta;     // intercept, treatment, [pretest]
  std::vector<double> se_beta;  // Wald standard errors
  double sigma2_u = 0.0;
  double sigma2_e = 0.0;
  double icc = 0.0;
  double lambda = 0.0;  // sigma2_u / sigma2_e
  double reml_value = 0.0;
  bool converged = false;
  std::size_t n_obs = 0;
  std::size_t n_groups = 0;
  std::vector<SchoolEffect> schools;

  double treatment() const { return beta.at(1); }
  double treatment_se() const { return se_beta.at(1); }

  friend bool operator==(const LmmFit&, const LmmFit&) = default;
};

/// Per-school sufficient statistics for profiled REML. Rows are sorted
/// within each school before accumulation, so the statistics are
/// bit-identical under any permutation of the input rows.
class RemlProfile {
 public:
  explicit RemlProfile(const LmmProblem& problem);

  /// log|H| + (n - p) log(r' H^-1 r) + log|X' H^-1 X| with V = s2e * H.
  double criterion(double lambda) const;

  /// d criterion / d log(lambda), analytic.
  double slope(double lambda) const;

  /// GLS solution and variance components at a fixed lambda.
  LmmFit fit_at(double lambda) const;

  std::size_t n() const noexcept { return n_; }
  std::size_t p() const noexcept { return p_; }
  std::size_t n_groups() const noexcept { return counts_.size(); }

 private:
  struct Solved {
    Eigen::VectorXd beta;
    Eigen::MatrixXd a_inv;
    double rss = 0.0;
    double log_det_a = 0.0;
    bool ok = false;
  };
  Solved solve(double lambda) const;

  std::size_t n_ = 0, p_ = 0;
  EstimateKind kind_;
  std::vector<std::string> coef_names_;
  std::vector<std::string> group_names_;
  std::vector<double> counts_;
  std::vector<Eigen::VectorXd> mean_x_;
  std::vector<double> mean_y_;
  Eigen::MatrixXd wxx_;
  Eigen::VectorXd wxy_;
  double wyy_ = 0.0;
};

struct FitOptions {
  double log_lambda_lo = -12.0;
  double log_lambda_hi = 12.0;
  double tol = 1e-8;         // absolute, in log lambda
  int scan_points = 49;      // coarse scan locating the golden-section bracket
  double zero_lambda = 1e-10;
};

/// Profiled REML fit: coarse scan over log lambda, golden-section refinement
/// inside the best scan cell, then bisection on the sign of the analytic
/// slope; clamp to lambda = 0 at the lower boundary.
LmmFit fit_reml(const LmmProblem& problem, const FitOptions& options = {});

LmmFit fit_lmm(const TrialDataset& data, const LmmSpec& spec, const FitOptions& options = {});

/// beta_treatment / sqrt(s2u + s2e), interval scaled the same way.
EffectEstimate effect_size_total_variance(const LmmFit& fit);

double icc_of(const LmmFit& fit);

}  // namespace lordpx
