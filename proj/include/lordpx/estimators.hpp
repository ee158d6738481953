#pragma once

#include <optional>
#include <span>
#include <string_view>

#include "lordpx/dataset.hpp"

namespace lordpx {

enum class EstimateKind { PostDIM, GainDIM, MlmPostAncova, MlmGainAnova, PretestImbalance };

std::string_view to_string(EstimateKind kind) noexcept;
std::optional<EstimateKind> estimate_kind_from_string(std::string_view name) noexcept;

/// Normal 97.5% quantile used for every Wald interval in the library.
inline constexpr double kZ975 = 1.96;

/// A standardized effect with a symmetric Wald interval.
///
/// `se` is empty only for degenerate gain scores (every gain identical),
/// where g is reported as 0 and lb == ub == 0.
struct EffectEstimate {
  EstimateKind kind = EstimateKind::PostDIM;
  double g = 0.0;
  std::optional<double> se;
  double lb = 0.0;
  double ub = 0.0;
  bool degenerate = false;

  double ci_width() const noexcept { return ub - lb; }
  bool covers(double value) const noexcept { return lb <= value && value <= ub; }

  friend bool operator==(const EffectEstimate&, const EffectEstimate&) = default;
};

/// Small-sample correction J = 1 - 3 / (4 df - 1), df = n_t + n_c - 2.
double hedges_correction(std::size_t n_t, std::size_t n_c);

/// Hedges' g of `treated` minus `control` with pooled n-1 variances.
EffectEstimate hedges_g(std::span<const double> treated, std::span<const double> control,
                        EstimateKind kind = EstimateKind::PostDIM);

EffectEstimate dim_post(const TrialDataset& data);

/// Hedges' g of posttest - pretest. All-identical gains yield a degenerate
/// estimate (g = 0, no standard error) instead of an error.
EffectEstimate dim_gain(const TrialDataset& data);

EffectEstimate pretest_imbalance(const TrialDataset& data);

}  // namespace lordpx
