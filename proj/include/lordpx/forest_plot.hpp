#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lordpx/analysis.hpp"
#include "lordpx/estimators.hpp"
#include "lordpx/reference.hpp"

namespace lordpx {

/// One outcome as drawn: a label, its baseline imbalance, and up to four
/// estimates. Missing estimates leave their bar out.
struct PlotRow {
  std::string label;
  double pret_imb = 0.0;
  std::optional<EffectEstimate> gP, gG, ttP, ttG;
};

PlotRow plot_row(const ReferenceRow& row);
PlotRow plot_row(const AnalysisReport& report);  // throws MissingEstimate without pret_imb

/// Reference rows in effects-table order.
std::vector<PlotRow> reference_plot_rows();

struct PlotSubsets {
  std::vector<PlotRow> negative;     // closest to zero first, most negative last
  std::vector<PlotRow> nonnegative;  // largest first, zero last
};

/// Sorts ascending by pret_imb (stable), splits on sign, and reverses each
/// half so both figures read top-down from the first row.
PlotSubsets split_for_plot(std::vector<PlotRow> rows);

/// Two panels: gP and gG on the left, ttP and ttG on the right, with a
/// vertical zero line. Rows are drawn top-down in the order given.
std::string render_forest_svg(const std::vector<PlotRow>& rows, std::string_view title);

/// Writes PREFIX_negative.svg and PREFIX_nonnegative.svg, skipping an empty
/// subset. Returns the paths written.
std::vector<std::string> write_forest_plots(const std::vector<PlotRow>& rows,
                                            const std::string& prefix);

/// Row labels in document order, read back from a rendered figure.
std::vector<std::string> svg_row_labels(std::string_view svg);

}  // namespace lordpx
