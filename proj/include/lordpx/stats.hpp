#pragma once

#include <optional>
#include <span>

namespace lordpx::stats {

double mean(std::span<const double> xs);

/// Sample variance with the n-1 denominator. Two-pass for stability.
double sample_variance(std::span<const double> xs);

/// Pearson correlation; empty when either series has zero variance
/// or the spans are shorter than two.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace lordpx::stats
