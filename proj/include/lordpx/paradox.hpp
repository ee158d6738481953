#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lordpx/estimators.hpp"

namespace lordpx {

enum class VerdictCategory { Consistent, MagnitudeDivergent, BorderlineReversal, Reversal };
enum class ImbalanceFlag { Balanced, Notable, Substantial };

std::string_view to_string(VerdictCategory c) noexcept;
std::string_view to_string(ImbalanceFlag f) noexcept;
std::optional<VerdictCategory> verdict_category_from_string(std::string_view s) noexcept;
std::optional<ImbalanceFlag> imbalance_flag_from_string(std::string_view s) noexcept;

struct Thresholds {
  double divergence = 0.1;   // |a - b| at or above this is worth noting
  double substantial = 0.2;  // |pret.imb| above this is substantial
  double notable = 0.1;      // |pret.imb| above this is notable
  double near_zero = 0.05;   // an estimate below this in magnitude sits on the zero line

  /// Parses "d=0.1,imb=0.2,note=0.1,nz=0.05"; omitted keys keep defaults.
  static Thresholds parse(std::string_view text);

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

/// Comparisons are made with this slack so that two-decimal table values
/// land on the intended side of a threshold (0.12 - 0.02 counts as 0.10).
inline constexpr double kThresholdSlack = 1e-9;

struct ComparisonRecord {
  std::string label;
  std::optional<EffectEstimate> gP, gG, ttP, ttG;
  std::optional<double> pret_imb;
  std::optional<double> icc;
  std::optional<std::size_t> n_sch;

  bool partial() const noexcept { return !(gP && gG && ttP && ttG); }
};

struct ParadoxVerdict {
  VerdictCategory category = VerdictCategory::Consistent;
  double divergence = 0.0;
  ImbalanceFlag imbalance_flag = ImbalanceFlag::Balanced;
  bool near_zero = false;

  friend bool operator==(const ParadoxVerdict&, const ParadoxVerdict&) = default;
};

/// Classifies the pair (first, second) and the baseline imbalance.
ParadoxVerdict classify_pair(double first, double second, double pret_imb,
                             const Thresholds& t = {});

ImbalanceFlag imbalance_flag(double pret_imb, const Thresholds& t = {});

/// Simple pair (gP, gG). Throws MissingEstimate when either or pret_imb is absent.
ParadoxVerdict classify(const ComparisonRecord& record, const Thresholds& t = {});

/// Multilevel pair (ttP, ttG).
ParadoxVerdict classify_mlm(const ComparisonRecord& record, const Thresholds& t = {});

struct BatchItem {
  std::string label;
  std::optional<ParadoxVerdict> simple;
  std::optional<ParadoxVerdict> mlm;
  bool partial = false;
};

struct BatchSummary {
  std::vector<BatchItem> items;
  std::array<std::size_t, 4> simple_counts{};  // indexed by VerdictCategory
  std::array<std::size_t, 4> mlm_counts{};
  std::array<std::size_t, 3> imbalance_counts{};  // indexed by ImbalanceFlag
  std::size_t partial_count = 0;
};

BatchSummary batch_classify(const std::vector<ComparisonRecord>& records, const Thresholds& t = {});

struct SignedCount {
  std::size_t negative = 0;
  std::size_t positive = 0;
  std::vector<std::string> labels;

  std::size_t total() const noexcept { return negative + positive; }
};

/// Records whose |pret.imb| exceeds `threshold`, split by sign.
SignedCount count_imbalance_above(const std::vector<ComparisonRecord>& records, double threshold);

enum class EstimatorPair { Simple, Mlm };

/// Median of |first - second| over records carrying the pair.
std::optional<double> median_divergence(const std::vector<ComparisonRecord>& records,
                                        EstimatorPair pair);

}  // namespace lordpx
