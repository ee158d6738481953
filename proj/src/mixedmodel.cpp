#include "lordpx/mixedmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "lordpx/error.hpp"
#include "lordpx/golden_section.hpp"

namespace lordpx {

std::string LmmSpec::name() const {
  if (outcome == LmmOutcome::Post) return include_pretest ? "post-ANCOVA" : "post-ANOVA";
  return include_pretest ? "gain-ANCOVA" : "gain-ANOVA";
}

LmmProblem build_problem(const TrialDataset& data, const LmmSpec& spec) {
  const auto& recs = data.records();
  const std::size_t n = recs.size();
  const Eigen::Index p = spec.include_pretest ? 3 : 2;

  std::map<std::string, std::size_t> index;
  for (const auto& r : recs) index.emplace(r.school_id, 0);
  LmmProblem prob;
  prob.group_names.reserve(index.size());
  for (auto& [id, idx] : index) {
    idx = prob.group_names.size();
    prob.group_names.push_back(id);
  }

  prob.kind = spec.kind();
  prob.coef_names = {"intercept", "treatment"};
  if (spec.include_pretest) prob.coef_names.emplace_back("pretest");
  prob.y.resize(n);
  prob.x.resize(static_cast<Eigen::Index>(n), p);
  prob.group.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = recs[i];
    const auto row = static_cast<Eigen::Index>(i);
    prob.y[i] = spec.outcome == LmmOutcome::Post ? r.posttest : r.posttest - r.pretest;
    prob.x(row, 0) = 1.0;
    prob.x(row, 1) = static_cast<double>(r.group);
    if (spec.include_pretest) prob.x(row, 2) = r.pretest;
    prob.group[i] = index.at(r.school_id);
  }
  return prob;
}

RemlProfile::RemlProfile(const LmmProblem& problem)
    : n_(problem.n()),
      p_(problem.p()),
      kind_(problem.kind),
      coef_names_(problem.coef_names),
      group_names_(problem.group_names) {
  const std::size_t groups = problem.group_names.size();
  const auto p = static_cast<Eigen::Index>(p_);
  if (groups < 2) {
    throw Error(ErrorCode::TooFewSchools,
                "random-intercept model needs at least 2 schools, got " + std::to_string(groups));
  }
  if (n_ <= p_) {
    throw Error(ErrorCode::RankDeficientDesign, "fewer observations than fixed effects");
  }

  std::vector<std::vector<std::size_t>> rows(groups);
  for (std::size_t i = 0; i < n_; ++i) rows.at(problem.group[i]).push_back(i);

  const auto row_less = [&](std::size_t a, std::size_t b) {
    if (problem.y[a] != problem.y[b]) return problem.y[a] < problem.y[b];
    for (Eigen::Index k = 0; k < p; ++k) {
      const double xa = problem.x(static_cast<Eigen::Index>(a), k);
      const double xb = problem.x(static_cast<Eigen::Index>(b), k);
      if (xa != xb) return xa < xb;
    }
    return false;
  };

  wxx_ = Eigen::MatrixXd::Zero(p, p);
  wxy_ = Eigen::VectorXd::Zero(p);
  for (std::size_t j = 0; j < groups; ++j) {
    auto& idx = rows[j];
    if (idx.empty()) continue;
    std::sort(idx.begin(), idx.end(), row_less);
    const double nj = static_cast<double>(idx.size());
    Eigen::VectorXd mx = Eigen::VectorXd::Zero(p);
    double my = 0.0;
    for (std::size_t i : idx) {
      mx += problem.x.row(static_cast<Eigen::Index>(i)).transpose();
      my += problem.y[i];
    }
    mx /= nj;
    my /= nj;
    for (std::size_t i : idx) {
      const Eigen::VectorXd dx = problem.x.row(static_cast<Eigen::Index>(i)).transpose() - mx;
      const double dy = problem.y[i] - my;
      wxx_.noalias() += dx * dx.transpose();
      wxy_ += dx * dy;
      wyy_ += dy * dy;
    }
    counts_.push_back(nj);
    mean_x_.push_back(std::move(mx));
    mean_y_.push_back(my);
    // Empty groups are skipped; keep names aligned with the statistics.
  }
  if (counts_.size() != groups) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < groups; ++j) {
      if (!rows[j].empty()) names.push_back(group_names_[j]);
    }
    group_names_ = std::move(names);
  }
  if (counts_.size() < 2) {
    throw Error(ErrorCode::TooFewSchools, "fewer than 2 non-empty schools");
  }

  // Full rank check on the scaled cross-product X'X.
  Eigen::MatrixXd xtx = wxx_;
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    xtx.noalias() += counts_[j] * mean_x_[j] * mean_x_[j].transpose();
  }
  Eigen::VectorXd scale = xtx.diagonal();
  if ((scale.array() <= 0.0).any()) {
    throw Error(ErrorCode::RankDeficientDesign, "design has an all-zero column");
  }
  scale = scale.array().rsqrt();
  const Eigen::MatrixXd corr = scale.asDiagonal() * xtx * scale.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < 1e-10) {
    throw Error(ErrorCode::RankDeficientDesign, "design matrix is not full column rank");
  }
}

RemlProfile::Solved RemlProfile::solve(double lambda) const {
  Solved s;
  Eigen::MatrixXd a = wxx_;
  Eigen::VectorXd b = wxy_;
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    const double c = counts_[j] / (1.0 + lambda * counts_[j]);
    a.noalias() += c * mean_x_[j] * mean_x_[j].transpose();
    b += c * mean_y_[j] * mean_x_[j];
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) return s;
  s.beta = llt.solve(b);
  s.a_inv = llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
  s.log_det_a = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

  double rss = wyy_ - 2.0 * s.beta.dot(wxy_) + s.beta.dot(wxx_ * s.beta);
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    const double c = counts_[j] / (1.0 + lambda * counts_[j]);
    const double e = mean_y_[j] - mean_x_[j].dot(s.beta);
    rss += c * e * e;
  }
  s.rss = rss;
  s.ok = rss > 0.0 && std::isfinite(rss);
  return s;
}

double RemlProfile::criterion(double lambda) const {
  const Solved s = solve(lambda);
  if (!s.ok) return std::numeric_limits<double>::quiet_NaN();
  double log_det_h = 0.0;
  for (double nj : counts_) log_det_h += std::log1p(lambda * nj);
  return log_det_h + static_cast<double>(n_ - p_) * std::log(s.rss) + s.log_det_a;
}

double RemlProfile::slope(double lambda) const {
  const Solved s = solve(lambda);
  if (!s.ok) return std::numeric_limits<double>::quiet_NaN();
  double d_log_det_h = 0.0, d_rss = 0.0, d_log_det_a = 0.0;
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    const double c = counts_[j] / (1.0 + lambda * counts_[j]);
    const double e = mean_y_[j] - mean_x_[j].dot(s.beta);
    d_log_det_h += c;
    d_rss -= c * c * e * e;
    d_log_det_a -= c * c * mean_x_[j].dot(s.a_inv * mean_x_[j]);
  }
  return lambda * (d_log_det_h + static_cast<double>(n_ - p_) * d_rss / s.rss + d_log_det_a);
}

LmmFit RemlProfile::fit_at(double lambda) const {
  const Solved s = solve(lambda);
  if (!s.ok) {
    throw Error(ErrorCode::NonConvergence, "GLS solve failed at lambda = " + std::to_string(lambda));
  }
  LmmFit fit;
  fit.kind = kind_;
  fit.coef_names = coef_names_;
  fit.n_obs = n_;
  fit.n_groups = counts_.size();
  fit.lambda = lambda;
  fit.sigma2_e = s.rss / static_cast<double>(n_ - p_);
  fit.sigma2_u = lambda * fit.sigma2_e;
  fit.icc = lambda / (1.0 + lambda);
  fit.beta.assign(s.beta.data(), s.beta.data() + s.beta.size());
  fit.se_beta.resize(p_);
  for (std::size_t k = 0; k < p_; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    fit.se_beta[k] = std::sqrt(s.a_inv(kk, kk) * fit.sigma2_e);
  }
  fit.schools.reserve(counts_.size());
  for (std::size_t j = 0; j < counts_.size(); ++j) {
    SchoolEffect se;
    se.school_id = group_names_[j];
    se.n = static_cast<std::size_t>(counts_[j]);
    se.raw_mean = mean_y_[j];
    se.fixed_mean = mean_x_[j].dot(s.beta);
    const double shrink = lambda * counts_[j] / (1.0 + lambda * counts_[j]);
    se.blup = shrink * (se.raw_mean - se.fixed_mean);
    fit.schools.push_back(std::move(se));
  }
  fit.reml_value = criterion(lambda);
  fit.converged = true;
  return fit;
}

LmmFit fit_reml(const LmmProblem& problem, const FitOptions& options) {
  const RemlProfile profile(problem);
  const auto crit_log = [&](double log_lambda) { return profile.criterion(std::exp(log_lambda)); };

  const int points = std::max(options.scan_points, 3);
  const double step = (options.log_lambda_hi - options.log_lambda_lo) / (points - 1);
  std::vector<double> grid(static_cast<std::size_t>(points));
  std::size_t best = 0;
  double lo_val = std::numeric_limits<double>::infinity();
  double hi_val = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double v = crit_log(options.log_lambda_lo + i * step);
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonConvergence,
                  "REML criterion is not finite at log lambda = " +
                      std::to_string(options.log_lambda_lo + i * step));
    }
    grid[static_cast<std::size_t>(i)] = v;
    if (v < lo_val) {
      lo_val = v;
      best = static_cast<std::size_t>(i);
    }
    hi_val = std::max(hi_val, v);
  }

  // Flat profile (e.g. one pupil per school): lambda is not identified and
  // every value gives the same fixed effects; report the boundary.
  if (hi_val - lo_val <= 1e-10 * (1.0 + std::abs(lo_val))) {
    return profile.fit_at(0.0);
  }

  const double a = options.log_lambda_lo + std::max<double>(0.0, static_cast<double>(best) - 1.0) * step;
  const double b = std::min(options.log_lambda_hi, options.log_lambda_lo + (static_cast<double>(best) + 1.0) * step);
  const auto gs = optim::golden_section_minimize(crit_log, a, b, options.tol);
  if (!std::isfinite(gs.fx)) {
    throw Error(ErrorCode::NonConvergence, "REML criterion is not finite at the optimum");
  }

  double log_lambda = gs.x;
  {
    // The criterion is flat to rounding near the optimum; its slope is not,
    // so bisecting on the slope sign pins log lambda far below tol.
    const auto slope_log = [&](double x) { return profile.slope(std::exp(x)); };
    double lo = gs.x - 4.0 * options.tol, hi = gs.x + 4.0 * options.tol;
    for (int k = 0; k < 30 && !(slope_log(lo) <= 0.0 && slope_log(hi) >= 0.0); ++k) {
      lo = std::max(options.log_lambda_lo, gs.x - (gs.x - lo) * 2.0);
      hi = std::min(options.log_lambda_hi, gs.x + (hi - gs.x) * 2.0);
    }
    if (slope_log(lo) <= 0.0 && slope_log(hi) >= 0.0) {
      for (int k = 0; k < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++k) {
        const double mid = 0.5 * (lo + hi);
        (slope_log(mid) < 0.0 ? lo : hi) = mid;
      }
      log_lambda = 0.5 * (lo + hi);
    }
  }

  double lambda = std::exp(log_lambda);
  if (best == 0 && profile.criterion(0.0) <= gs.fx) lambda = 0.0;
  if (lambda < options.zero_lambda) lambda = 0.0;

  LmmFit fit = profile.fit_at(lambda);
  fit.converged = gs.converged;
  return fit;
}

LmmFit fit_lmm(const TrialDataset& data, const LmmSpec& spec, const FitOptions& options) {
  return fit_reml(build_problem(data, spec), options);
}

EffectEstimate effect_size_total_variance(const LmmFit& fit) {
  if (!fit.converged) {
    throw Error(ErrorCode::NotConverged, "mixed model did not converge");
  }
  const double total_sd = std::sqrt(fit.sigma2_u + fit.sigma2_e);
  EffectEstimate est;
  est.kind = fit.kind;
  est.g = fit.treatment() / total_sd;
  est.se = fit.treatment_se() / total_sd;
  est.lb = (fit.treatment() - kZ975 * fit.treatment_se()) / total_sd;
  est.ub = (fit.treatment() + kZ975 * fit.treatment_se()) / total_sd;
  return est;
}

double icc_of(const LmmFit& fit) {
  if (!fit.converged) {
    throw Error(ErrorCode::NotConverged, "mixed model did not converge");
  }
  return fit.sigma2_u / (fit.sigma2_u + fit.sigma2_e);
}

}  // namespace lordpx
