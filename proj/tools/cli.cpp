#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include "lordpx/analysis.hpp"
#include "lordpx/dataset.hpp"
#include "lordpx/error.hpp"
#include "lordpx/forest_plot.hpp"
#include "lordpx/reference.hpp"
#include "lordpx/report.hpp"
#include "lordpx/sim_config.hpp"
#include "lordpx/simulate.hpp"

namespace lordpx::cli {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitFit = 3;

int exit_code_for(ErrorCode code) {
  return code == ErrorCode::NonConvergence || code == ErrorCode::NotConverged ? kExitFit
                                                                              : kExitData;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::UnwritablePath, "cannot open " + path + " for writing");
  f << text;
  if (!f.flush()) throw Error(ErrorCode::UnwritablePath, "failed writing " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::FileUnreadable, "cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct AnalyzeArgs {
  std::vector<std::string> inputs;
  CsvSchema schema;
  bool standardize = false;
  std::string thresholds;
  std::string format = "json";
  std::string out;
};

struct FileResult {
  std::optional<AnalysisReport> report;
  std::string error;
  int exit = kExitOk;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  AnalysisOptions options;
  options.standardize = a.standardize;
  if (!a.thresholds.empty()) options.thresholds = Thresholds::parse(a.thresholds);

  std::vector<FileResult> results(a.inputs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < a.inputs.size(); ++i) {
    try {
      const LoadResult loaded = load_csv(a.inputs[i], a.schema);
      AnalysisReport report = analyze(loaded.data, options, loaded.dropped_count);
      if (report.first_error) results[i].exit = exit_code_for(*report.first_error);
      results[i].report = std::move(report);
    } catch (const Error& e) {
      results[i].error = e.what();
      results[i].exit = exit_code_for(e.code());
    } catch (const std::exception& e) {
      results[i].error = e.what();
      results[i].exit = kExitData;
    }
  }

  int code = kExitOk;
  std::vector<AnalysisReport> reports;
  for (std::size_t i = 0; i < results.size(); ++i) {
    code = std::max(code, results[i].exit);
    if (!results[i].error.empty()) err << "error: " << results[i].error << "\n";
    if (!results[i].report) continue;
    for (const auto& e : results[i].report->errors) {
      err << a.inputs[i] << ": " << e << "\n";
    }
    reports.push_back(std::move(*results[i].report));
  }
  if (reports.empty()) return code;

  std::string text;
  if (a.format == "tsv") {
    text = report_tsv_header();
    for (const auto& r : reports) text += report_tsv_row(r);
  } else if (a.inputs.size() == 1) {
    text = report_to_json(reports.front());
  } else {
    text = reports_to_json(reports);
  }
  emit(text, a.out, out);
  return code;
}

struct ReferenceArgs {
  std::vector<std::string> labels;
  std::optional<double> min_abs_imb;
  std::string design;
  std::string order = "outcome";
  bool verdicts = false;
  std::string thresholds;
  std::string format = "tsv";
  std::string out;
};

int cmd_reference(const ReferenceArgs& a, std::ostream& out) {
  const ReferenceTable& table = ReferenceTable::bundled();
  const Thresholds t = a.thresholds.empty() ? Thresholds{} : Thresholds::parse(a.thresholds);

  std::vector<const ReferenceRow*> rows;
  if (!a.labels.empty()) {
    for (const auto& label : a.labels) rows.push_back(&table.at(label));
  } else if (a.order == "effects") {
    rows = table.by_effects_order();
  } else {
    for (const auto& r : table.rows()) rows.push_back(&r);
  }
  std::erase_if(rows, [&](const ReferenceRow* r) {
    if (a.min_abs_imb && !(std::abs(r->pret_imb) > *a.min_abs_imb + kThresholdSlack)) return true;
    return !a.design.empty() && r->design != a.design;
  });

  std::vector<BatchItem> items;
  std::vector<const BatchItem*> item_ptrs;
  if (a.verdicts) {
    std::vector<ComparisonRecord> records;
    for (const auto* r : rows) records.push_back(to_comparison_record(*r));
    items = batch_classify(records, t).items;
    for (const auto& item : items) item_ptrs.push_back(&item);
  }

  std::string text;
  if (a.format == "json") {
    text = reference_to_json(rows, item_ptrs);
  } else {
    text = reference_tsv_header(a.verdicts);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      text += reference_tsv_row(*rows[i], a.verdicts ? item_ptrs[i] : nullptr);
    }
  }
  emit(text, a.out, out);
  return kExitOk;
}

struct PlotArgs {
  bool reference = false;
  std::vector<std::string> reports;
  std::string prefix;
};

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  std::vector<PlotRow> rows;
  if (a.reference) rows = reference_plot_rows();
  for (const auto& path : a.reports) {
    for (const auto& report : reports_from_json(read_file(path))) rows.push_back(plot_row(report));
  }
  for (const auto& path : write_forest_plots(rows, a.prefix)) out << path << "\n";
  return kExitOk;
}

struct SimulateArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_csv;
  std::string sweep_out;
  bool serial = false;
  int threads = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SimulationConfig config = load_sim_config(a.config);
  if (a.seed) {
    for (auto& spec : config.grid) spec.seed = *a.seed;
  }
  const bool want_sweep = !a.sweep_out.empty() || (a.out_csv.empty() && config.replicates > 0);
  const bool want_csv = !a.out_csv.empty() || !want_sweep;

  if (want_csv) {
    if (config.grid.size() != 1) {
      throw Error(ErrorCode::ConfigParse,
                  a.config + ": dataset output needs a single scenario, config defines " +
                      std::to_string(config.grid.size()));
    }
    emit(to_csv(generate(config.grid.front())), a.out_csv, out);
  }
  if (want_sweep) {
    if (config.replicates == 0) {
      throw Error(ErrorCode::ConfigParse, a.config + ": sweep output needs replicates > 0");
    }
    if (a.threads > 0) omp_set_num_threads(a.threads);
    const SweepTable table =
        a.serial ? sweep_serial(config.grid, config.replicates) : sweep(config.grid, config.replicates);
    emit(table.to_tsv(), a.sweep_out, out);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detects disagreement between posttest and gain-score effect estimates"};
  app.name("lordpx");
  app.require_subcommand(1);
  app.set_help_flag("-h,--help", "Print this help message and exit");

  AnalyzeArgs analyze_args;
  auto* analyze_cmd = app.add_subcommand("analyze", "Analyse one or more trial CSV files");
  analyze_cmd->add_option("csv", analyze_args.inputs, "Input CSV files")->required();
  analyze_cmd->add_option("--col-id", analyze_args.schema.pupil_id, "Pupil id column");
  analyze_cmd->add_option("--col-school", analyze_args.schema.school, "School id column");
  analyze_cmd->add_option("--col-group", analyze_args.schema.group, "Group column (0 control, 1 intervention)");
  analyze_cmd->add_option("--col-pre", analyze_args.schema.pretest, "Pretest column");
  analyze_cmd->add_option("--col-post", analyze_args.schema.posttest, "Posttest column");
  analyze_cmd->add_flag("--standardize", analyze_args.standardize, "Z-score pretest and posttest first");
  analyze_cmd->add_option("--thresholds", analyze_args.thresholds, "e.g. d=0.1,imb=0.2,note=0.1,nz=0.05");
  analyze_cmd->add_option("--format", analyze_args.format, "Output format")
      ->check(CLI::IsMember({"json", "tsv"}));
  analyze_cmd->add_option("-o,--out", analyze_args.out, "Output file (default stdout)");

  ReferenceArgs reference_args;
  auto* reference_cmd = app.add_subcommand("reference", "Print the bundled reference outcomes");
  reference_cmd->add_option("--label", reference_args.labels, "Select outcomes by label");
  reference_cmd->add_option("--min-abs-imb", reference_args.min_abs_imb, "Keep |pret.imb| above this");
  reference_cmd->add_option("--design", reference_args.design, "Keep one design")
      ->check(CLI::IsMember({"srt", "mst", "crt", "action", "quasi", "rdd"}));
  reference_cmd->add_option("--order", reference_args.order, "Row order")
      ->check(CLI::IsMember({"outcome", "effects"}));
  reference_cmd->add_flag("--verdicts", reference_args.verdicts, "Append classifier verdicts");
  reference_cmd->add_option("--thresholds", reference_args.thresholds, "Classifier thresholds");
  reference_cmd->add_option("--format", reference_args.format, "Output format")
      ->check(CLI::IsMember({"json", "tsv"}));
  reference_cmd->add_option("-o,--out", reference_args.out, "Output file (default stdout)");

  PlotArgs plot_args;
  auto* plot_cmd = app.add_subcommand("plot", "Draw forest plots split by baseline imbalance sign");
  plot_cmd->add_flag("--reference", plot_args.reference, "Plot the bundled reference outcomes");
  plot_cmd->add_option("reports", plot_args.reports, "Report JSON files from analyze");
  plot_cmd->add_option("-o,--out", plot_args.prefix, "Output prefix")->required();

  SimulateArgs simulate_args;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate trials or run a replicate sweep");
  simulate_cmd->add_option("-c,--config", simulate_args.config, "key=value config file")->required();
  simulate_cmd->add_option("--seed", simulate_args.seed, "Override the seed of every scenario");
  simulate_cmd->add_option("--out-csv", simulate_args.out_csv, "Write the generated dataset here");
  simulate_cmd->add_option("--sweep-out", simulate_args.sweep_out, "Write the sweep TSV here");
  simulate_cmd->add_flag("--serial", simulate_args.serial, "Run the sweep on one thread");
  simulate_cmd->add_option("--threads", simulate_args.threads, "OpenMP thread count")
      ->check(CLI::NonNegativeNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(analyze_args, out, err);
    if (*reference_cmd) return cmd_reference(reference_args, out);
    if (*plot_cmd) {
      if (!plot_args.reference && plot_args.reports.empty()) {
        err << "plot: give --reference or at least one report file\n";
        return kExitUsage;
      }
      return cmd_plot(plot_args, out);
    }
    if (*simulate_cmd) return cmd_simulate(simulate_args, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace lordpx::cli
