#include "lordpx/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lordpx/error.hpp"
#include "lordpx/stats.hpp"

namespace lordpx {

std::string_view to_string(EstimateKind kind) noexcept {
  switch (kind) {
    case EstimateKind::PostDIM: return "PostDIM";
    case EstimateKind::GainDIM: return "GainDIM";
    case EstimateKind::MlmPostAncova: return "MlmPostAncova";
    case EstimateKind::MlmGainAnova: return "MlmGainAnova";
    case EstimateKind::PretestImbalance: return "PretestImbalance";
  }
  return "PostDIM";
}

std::optional<EstimateKind> estimate_kind_from_string(std::string_view name) noexcept {
  for (auto k : {EstimateKind::PostDIM, EstimateKind::GainDIM, EstimateKind::MlmPostAncova,
                 EstimateKind::MlmGainAnova, EstimateKind::PretestImbalance}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

double hedges_correction(std::size_t n_t, std::size_t n_c) {
  const double df = static_cast<double>(n_t + n_c) - 2.0;
  return 1.0 - 3.0 / (4.0 * df - 1.0);
}

EffectEstimate hedges_g(std::span<const double> treated, std::span<const double> control,
                        EstimateKind kind) {
  const std::size_t n_t = treated.size();
  const std::size_t n_c = control.size();
  if (n_t < 2 || n_c < 2) {
    throw Error(ErrorCode::TooFewObservations,
                "each arm needs at least 2 values (got " + std::to_string(n_t) + " and " +
                    std::to_string(n_c) + ")");
  }
  const double var_t = stats::sample_variance(treated);
  const double var_c = stats::sample_variance(control);
  const double pooled_var =
      ((n_t - 1) * var_t + (n_c - 1) * var_c) / static_cast<double>(n_t + n_c - 2);
  if (!(pooled_var > 0.0)) {
    throw Error(ErrorCode::ZeroPooledVariance, "pooled variance is zero");
  }
  const double diff = stats::mean(treated) - stats::mean(control);
  const double nt = static_cast<double>(n_t);
  const double nc = static_cast<double>(n_c);

  EffectEstimate est;
  est.kind = kind;
  est.g = hedges_correction(n_t, n_c) * diff / std::sqrt(pooled_var);
  const double se = std::sqrt((nt + nc) / (nt * nc) + est.g * est.g / (2.0 * (nt + nc)));
  est.se = se;
  est.lb = est.g - kZ975 * se;
  est.ub = est.g + kZ975 * se;
  return est;
}

EffectEstimate dim_post(const TrialDataset& data) {
  auto [t, c] = data.split_by_group([](const PupilRecord& r) { return r.posttest; });
  return hedges_g(t, c, EstimateKind::PostDIM);
}

EffectEstimate dim_gain(const TrialDataset& data) {
  auto [t, c] = data.split_by_group([](const PupilRecord& r) { return r.posttest - r.pretest; });
  try {
    return hedges_g(t, c, EstimateKind::GainDIM);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroPooledVariance) throw;
    // Only the case where every gain is identical is degenerate; arms
    // constant at different values remain an error.
    const double first = t.front();
    const auto same = [first](double v) { return v == first; };
    if (!std::all_of(t.begin(), t.end(), same) || !std::all_of(c.begin(), c.end(), same)) throw;
    EffectEstimate est;
    est.kind = EstimateKind::GainDIM;
    est.degenerate = true;
    return est;
  }
}

EffectEstimate pretest_imbalance(const TrialDataset& data) {
  auto [t, c] = data.split_by_group([](const PupilRecord& r) { return r.pretest; });
  return hedges_g(t, c, EstimateKind::PretestImbalance);
}

}  // namespace lordpx
