#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lordpx/analysis.hpp"
#include "lordpx/paradox.hpp"
#include "lordpx/reference.hpp"

namespace lordpx {

/// Pretty-printed JSON document with a "schema_version" field. Doubles are
/// written with round-trip precision, so report_from_json inverts it exactly.
std::string report_to_json(const AnalysisReport& report);
AnalysisReport report_from_json(std::string_view text);

/// A JSON array of reports; reports_from_json also accepts a single object.
std::string reports_to_json(const std::vector<AnalysisReport>& reports);
std::vector<AnalysisReport> reports_from_json(std::string_view text);

/// Header and one row per report, columns mirroring the reference tables
/// followed by both verdicts. Undefined values print as NA.
std::string report_tsv_header();
std::string report_tsv_row(const AnalysisReport& report);

/// Line-oriented verdict listing: label, pair, category, divergence,
/// near_zero, imbalance flag.
std::string verdicts_to_tsv(const BatchSummary& batch);
std::string verdicts_to_json(const BatchSummary& batch);

std::string reference_tsv_header(bool with_verdicts);
std::string reference_tsv_row(const ReferenceRow& row, const BatchItem* verdicts);
std::string reference_to_json(const std::vector<const ReferenceRow*>& rows,
                              const std::vector<const BatchItem*>& verdicts);

}  // namespace lordpx
