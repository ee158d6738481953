#include "lordpx/forest_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "lordpx/error.hpp"

namespace lordpx {

namespace {

constexpr double kWidth = 960.0;
constexpr double kLabelWidth = 110.0;
constexpr double kPanelWidth = 380.0;
constexpr double kPanelGap = 40.0;
constexpr double kTop = 70.0;
constexpr double kRowHeight = 22.0;
constexpr double kBottom = 70.0;
constexpr const char* kFont = "DejaVu Sans, Arial, Helvetica, sans-serif";
constexpr const char* kFirstColour = "#1f5fa8";
constexpr const char* kSecondColour = "#c8402f";

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '&') {
      for (auto [ent, ch] : {std::pair{"&amp;", '&'}, std::pair{"&lt;", '<'},
                             std::pair{"&gt;", '>'}, std::pair{"&quot;", '"'}}) {
        const std::string_view e(ent);
        if (s.substr(i, e.size()) == e) {
          out += ch;
          i += e.size() - 1;
          goto next;
        }
      }
    }
    out += s[i];
  next:;
  }
  return out;
}

std::string px(double v) {
  const std::string s = fmt::format("{:.2f}", v);
  return s == "-0.00" ? "0.00" : s;
}

struct Axis {
  double lo = -0.5, hi = 0.5;
  double x0 = 0.0;

  double map(double v) const { return x0 + (v - lo) / (hi - lo) * kPanelWidth; }
};

Axis make_axis(const std::vector<PlotRow>& rows, bool multilevel, double x0) {
  double lo = 0.0, hi = 0.0;
  for (const auto& r : rows) {
    for (const auto* e : multilevel ? std::array{&r.ttP, &r.ttG} : std::array{&r.gP, &r.gG}) {
      if (!*e) continue;
      lo = std::min(lo, (*e)->lb);
      hi = std::max(hi, (*e)->ub);
    }
  }
  if (hi - lo <= 0.0) {
    lo = -0.5;
    hi = 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, x0};
}

double nice_step(double range) {
  const double raw = range / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

void draw_panel(std::string& out, const std::vector<PlotRow>& rows, const Axis& axis,
                bool multilevel) {
  const double y_end = kTop + kRowHeight * static_cast<double>(rows.size());
  const std::string_view first = multilevel ? "ttP" : "gP";
  const std::string_view second = multilevel ? "ttG" : "gG";

  out += fmt::format("<g class=\"panel\" data-estimators=\"{} {}\">\n", first, second);
  out += fmt::format(
      "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"13\" font-weight=\"bold\">{} and {}</text>\n",
      px(axis.x0 + kPanelWidth / 2), px(kTop - 14), first, second);
  out += fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999999\" stroke-width=\"1\"/>\n",
      px(axis.x0), px(kTop - 6), px(kPanelWidth), px(y_end - kTop + 12));

  const double step = nice_step(axis.hi - axis.lo);
  for (long k = static_cast<long>(std::ceil(axis.lo / step)); k * step <= axis.hi; ++k) {
    const double v = static_cast<double>(k) * step;
    const double x = axis.map(v);
    out += fmt::format(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#999999\" stroke-width=\"1\"/>\n",
        px(x), px(y_end + 6), px(y_end + 11));
    const std::string tick = fmt::format("{:.{}f}", k == 0 ? 0.0 : v, step < 0.1 ? 2 : 1);
    out += fmt::format("<text class=\"tick\" x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n",
                       px(x), px(y_end + 24), tick);
  }
  out += fmt::format(
      "<line class=\"zero\" x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#333333\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n",
      px(axis.map(0.0)), px(kTop - 6), px(y_end + 6));

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y_mid = kTop + kRowHeight * (static_cast<double>(i) + 0.5);
    const auto& r = rows[i];
    const std::array estimates =
        multilevel ? std::array{&r.ttP, &r.ttG} : std::array{&r.gP, &r.gG};
    for (std::size_t j = 0; j < 2; ++j) {
      const auto& e = *estimates[j];
      if (!e) continue;
      const double y = y_mid + (j == 0 ? -3.5 : 3.5);
      const char* colour = j == 0 ? kFirstColour : kSecondColour;
      out += fmt::format(
          "<line class=\"ci\" x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"{3}\" stroke-width=\"1.5\"/>\n",
          px(axis.map(e->lb)), px(axis.map(e->ub)), px(y), colour);
      out += fmt::format("<circle class=\"point\" cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"{}\"/>\n",
                         px(axis.map(e->g)), px(y), colour);
    }
  }
  out += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">effect size</text>\n",
                     px(axis.x0 + kPanelWidth / 2), px(y_end + 40));
  out += "</g>\n";
}

}  // namespace

PlotRow plot_row(const ReferenceRow& row) {
  return {row.label, row.pret_imb, row.gP, row.gG, row.ttP, row.ttG};
}

PlotRow plot_row(const AnalysisReport& report) {
  if (!report.summary.pret_imb) {
    throw Error(ErrorCode::MissingEstimate, report.label + ": report has no pret_imb");
  }
  return {report.label,       *report.summary.pret_imb, report.estimates.gP,
          report.estimates.gG, report.estimates.ttP,    report.estimates.ttG};
}

std::vector<PlotRow> reference_plot_rows() {
  std::vector<PlotRow> rows;
  for (const auto* r : ReferenceTable::bundled().by_effects_order()) rows.push_back(plot_row(*r));
  return rows;
}

PlotSubsets split_for_plot(std::vector<PlotRow> rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const PlotRow& a, const PlotRow& b) { return a.pret_imb < b.pret_imb; });
  PlotSubsets out;
  for (auto& r : rows) (r.pret_imb < 0.0 ? out.negative : out.nonnegative).push_back(std::move(r));
  std::reverse(out.negative.begin(), out.negative.end());
  std::reverse(out.nonnegative.begin(), out.nonnegative.end());
  return out;
}

std::string render_forest_svg(const std::vector<PlotRow>& rows, std::string_view title) {
  const bool any = std::any_of(rows.begin(), rows.end(), [](const PlotRow& r) {
    return r.gP || r.gG || r.ttP || r.ttG;
  });
  if (!any) throw Error(ErrorCode::EmptyInput, "no records with estimates to plot");

  const double height = kTop + kRowHeight * static_cast<double>(rows.size()) + kBottom;
  const double left_x = kLabelWidth;
  const double right_x = kLabelWidth + kPanelWidth + kPanelGap;

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"{2}\">\n",
      px(kWidth), px(height), kFont);
  out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>\n", px(kWidth),
                     px(height));
  out += fmt::format("<text class=\"title\" x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                     px(kWidth / 2), escape(title));

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y_mid = kTop + kRowHeight * (static_cast<double>(i) + 0.5);
    out += fmt::format(
        "<text class=\"label\" x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"11\">{}</text>\n",
        px(kLabelWidth - 8), px(y_mid + 4), escape(rows[i].label));
  }

  draw_panel(out, rows, make_axis(rows, false, left_x), false);
  draw_panel(out, rows, make_axis(rows, true, right_x), true);

  const double ly = height - 14;
  out += fmt::format(
      "<g class=\"legend\" font-size=\"11\">\n"
      "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"{3}\" stroke-width=\"2\"/>\n"
      "<text x=\"{4}\" y=\"{5}\">posttest (gP, ttP)</text>\n"
      "<line x1=\"{6}\" y1=\"{2}\" x2=\"{7}\" y2=\"{2}\" stroke=\"{8}\" stroke-width=\"2\"/>\n"
      "<text x=\"{9}\" y=\"{5}\">gain (gG, ttG)</text>\n"
      "</g>\n",
      px(left_x), px(left_x + 20), px(ly - 4), kFirstColour, px(left_x + 26), px(ly),
      px(left_x + 180), px(left_x + 200), kSecondColour, px(left_x + 206));
  out += "</svg>\n";
  return out;
}

std::vector<std::string> write_forest_plots(const std::vector<PlotRow>& rows,
                                            const std::string& prefix) {
  if (rows.empty()) throw Error(ErrorCode::EmptyInput, "no records to plot");
  const PlotSubsets subsets = split_for_plot(rows);
  std::vector<std::string> written;
  for (const auto& [suffix, subset, title] :
       {std::tuple{"_negative.svg", &subsets.negative, "Outcomes with negative pre-test imbalance"},
        std::tuple{"_nonnegative.svg", &subsets.nonnegative,
                   "Outcomes with non-negative pre-test imbalance"}}) {
    if (subset->empty()) continue;
    const std::string svg = render_forest_svg(*subset, title);
    const std::string path = prefix + suffix;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::UnwritablePath, "cannot open " + path + " for writing");
    f << svg;
    if (!f.flush()) throw Error(ErrorCode::UnwritablePath, "failed writing " + path);
    written.push_back(path);
  }
  return written;
}

std::vector<std::string> svg_row_labels(std::string_view svg) {
  std::vector<std::string> labels;
  constexpr std::string_view open = "<text class=\"label\"";
  std::size_t pos = 0;
  while ((pos = svg.find(open, pos)) != std::string_view::npos) {
    const std::size_t start = svg.find('>', pos);
    const std::size_t end = svg.find("</text>", start);
    if (start == std::string_view::npos || end == std::string_view::npos) break;
    labels.push_back(unescape(svg.substr(start + 1, end - start - 1)));
    pos = end;
  }
  return labels;
}

}  // namespace lordpx
