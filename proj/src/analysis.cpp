#include "lordpx/analysis.hpp"

namespace lordpx {

namespace {

template <class F>
auto attempt(AnalysisReport& report, const char* stage, F&& f) -> std::optional<decltype(f())> {
  try {
    return f();
  } catch (const Error& e) {
    report.errors.push_back(std::string(stage) + ": " + e.what());
    if (!report.first_error) report.first_error = e.code();
    return std::nullopt;
  }
}

}  // namespace

AnalysisReport analyze(const TrialDataset& input, const AnalysisOptions& options,
                       std::size_t dropped_rows) {
  AnalysisReport report;
  report.label = input.label();
  report.dropped_rows = dropped_rows;
  report.thresholds = options.thresholds;

  std::optional<TrialDataset> standardized;
  if (options.standardize && !input.standardized()) {
    standardized = attempt(report, "standardize", [&] { return standardize_z(input); });
  }
  const TrialDataset& data = standardized ? *standardized : input;
  report.standardized = data.standardized();
  if (report.standardized) report.warnings.emplace_back("scores z-scored over the pooled sample");
  if (dropped_rows > 0) {
    report.warnings.push_back(std::to_string(dropped_rows) + " incomplete rows dropped");
  }

  report.summary = summarize(data);
  if (!report.summary.pt_corr || !report.summary.pp_corr) {
    report.warnings.emplace_back("a correlation is undefined (zero variance)");
  }

  report.estimates.gP = attempt(report, "dim_post", [&] { return dim_post(data); });
  report.estimates.gG = attempt(report, "dim_gain", [&] { return dim_gain(data); });
  if (report.estimates.gG && report.estimates.gG->degenerate) {
    report.warnings.emplace_back("DegenerateGains: every gain score is identical");
  }

  report.post_ancova = attempt(report, "post_ancova",
                               [&] { return fit_lmm(data, LmmSpec::post_ancova(), options.fit); });
  if (report.post_ancova) {
    report.estimates.ttP = attempt(report, "post_ancova",
                                   [&] { return effect_size_total_variance(*report.post_ancova); });
  }
  report.gain_anova = attempt(report, "gain_anova",
                              [&] { return fit_lmm(data, LmmSpec::gain_anova(), options.fit); });
  if (report.gain_anova) {
    report.estimates.ttG = attempt(report, "gain_anova",
                                   [&] { return effect_size_total_variance(*report.gain_anova); });
  }
  if (!options.keep_school_effects) {
    if (report.post_ancova) report.post_ancova->schools.clear();
    if (report.gain_anova) report.gain_anova->schools.clear();
  }

  const ComparisonRecord record = to_comparison_record(report);
  if (record.gP && record.gG && record.pret_imb) {
    report.simple_verdict = classify(record, options.thresholds);
  }
  if (record.ttP && record.ttG && record.pret_imb) {
    report.mlm_verdict = classify_mlm(record, options.thresholds);
  }
  return report;
}

ComparisonRecord to_comparison_record(const AnalysisReport& report) {
  ComparisonRecord r;
  r.label = report.label;
  r.gP = report.estimates.gP;
  r.gG = report.estimates.gG;
  r.ttP = report.estimates.ttP;
  r.ttG = report.estimates.ttG;
  r.pret_imb = report.summary.pret_imb;
  if (report.post_ancova) r.icc = report.post_ancova->icc;
  r.n_sch = report.summary.n_sch;
  return r;
}

}  // namespace lordpx
