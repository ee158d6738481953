#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lordpx/dataset.hpp"
#include "lordpx/error.hpp"
#include "lordpx/estimators.hpp"
#include "lordpx/mixedmodel.hpp"
#include "lordpx/paradox.hpp"

namespace lordpx {

struct AnalysisOptions {
  bool standardize = false;
  Thresholds thresholds;
  FitOptions fit;
  bool keep_school_effects = true;
};

struct EstimateSet {
  std::optional<EffectEstimate> gP, gG, ttP, ttG;

  friend bool operator==(const EstimateSet&, const EstimateSet&) = default;
};

/// Everything computed for one outcome: the four estimators, both model
/// fits, both verdicts. Stages that fail leave their fields empty and add
/// an entry to `errors`; the report is then partial.
struct AnalysisReport {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::string label;
  std::size_t dropped_rows = 0;
  bool standardized = false;
  DatasetSummary summary;
  EstimateSet estimates;
  std::optional<LmmFit> post_ancova;
  std::optional<LmmFit> gain_anova;
  std::optional<ParadoxVerdict> simple_verdict;
  std::optional<ParadoxVerdict> mlm_verdict;
  Thresholds thresholds;
  std::vector<std::string> warnings;
  std::vector<std::string> errors;
  std::optional<ErrorCode> first_error;

  bool partial() const noexcept { return !errors.empty(); }

  friend bool operator==(const AnalysisReport&, const AnalysisReport&) = default;
};

AnalysisReport analyze(const TrialDataset& data, const AnalysisOptions& options = {},
                       std::size_t dropped_rows = 0);

/// The estimates and imbalance of a report as a classifier input.
ComparisonRecord to_comparison_record(const AnalysisReport& report);

}  // namespace lordpx
