#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lordpx/estimators.hpp"
#include "lordpx/paradox.hpp"

namespace lordpx {

/// One published outcome: project metadata, the four effect estimates with
/// their bounds, and the sample summary, joined on `label`.
struct ReferenceRow {
  // outcomes.tsv
  int outcome = 0;
  std::string label;
  std::string title;
  std::string design;  // srt, mst, crt, action, quasi, rdd
  std::string lock;    // verbatim; empty where no rating was assigned
  // effects.tsv
  EffectEstimate gP, gG, ttP, ttG;
  double pret_imb = 0.0;
  // summary.tsv
  std::size_t n = 0, n_t = 0, n_c = 0, n_sch = 0;
  double icc = 0.0;
  double pt_corr = 0.0;
  double pp_corr = 0.0;
  double summary_pret_imb = 0.0;
  // row positions in the effects and summary assets
  std::size_t effects_rank = 0;
  std::size_t summary_rank = 0;
};

struct ReferenceAsset {
  std::string_view name;
  std::string_view content;
};

/// The bundled TSV assets, as compiled into the library.
std::vector<ReferenceAsset> reference_assets();

/// 64-bit FNV-1a, used to guard the assets against drift.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

class ReferenceTable {
 public:
  /// Parses and validates the bundled assets. Throws CorruptAsset when an
  /// invariant fails (row count, unique labels, join, cross-table pret.imb).
  static const ReferenceTable& bundled();

  static ReferenceTable parse(std::string_view outcomes, std::string_view effects,
                              std::string_view summary);

  /// Rows in outcome-number order.
  const std::vector<ReferenceRow>& rows() const noexcept { return rows_; }
  const ReferenceRow* find(std::string_view label) const;
  const ReferenceRow& at(std::string_view label) const;  // throws UnknownLabel

  /// Rows in the effects-table order (ascending pret.imb).
  std::vector<const ReferenceRow*> by_effects_order() const;

 private:
  std::vector<ReferenceRow> rows_;
};

/// Classifier input for a reference row. Standard errors are recovered as
/// (ub - lb) / 3.92; the published bounds are kept as printed.
ComparisonRecord to_comparison_record(const ReferenceRow& row);

std::vector<ComparisonRecord> reference_comparison_records();  // effects-table order

}  // namespace lordpx
