#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "lordpx/forest_plot.hpp"
#include "lordpx/simulate.hpp"
#include "test_helpers.hpp"

using lordpx::cli::run_cli;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "lordpx");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string column(const std::string& line, std::size_t k) {
  std::istringstream in(line);
  std::string cell;
  for (std::size_t i = 0; i <= k; ++i) std::getline(in, cell, '\t');
  return cell;
}

std::string reversal_csv() {
  lordpx::ScenarioSpec s;
  s.n_sch = 20;
  s.pupils_per_school = {100};
  s.delta_pre = -0.4;
  s.rho = 0.7;
  s.seed = 42;
  return lordpx::to_csv(lordpx::generate(s));
}

}  // namespace

TEST_CASE("reference filters") {
  const Run all = run({"reference"});
  CHECK(all.code == 0);
  CHECK(lines(all.out).size() == 51);

  const Run shine = run({"reference", "--label", "shine"});
  const auto rows = lines(shine.out);
  REQUIRE(rows.size() == 2);
  CHECK(column(rows[1], 3) == "rdd");
  CHECK(column(rows[1], 17) == "-2.64");
  CHECK(column(rows[1], 18) == "549");
  CHECK(column(rows[1], 22) == "0.03");

  const auto big = lines(run({"reference", "--min-abs-imb", "0.3", "--order", "effects"}).out);
  REQUIRE(big.size() == 5);
  CHECK(column(big[1], 1) == "shine");
  CHECK(column(big[2], 1) == "ttsm");
  CHECK(column(big[3], 1) == "fs");
  CHECK(column(big[4], 1) == "cmtm");

  CHECK(lines(run({"reference", "--design", "rdd"}).out).size() == 2);
  const auto v = lines(run({"reference", "--label", "ttsm", "--verdicts"}).out);
  CHECK(v[1].find("\tReversal\tConsistent\tSubstantial") != std::string::npos);

  const Run bad = run({"reference", "--label", "nope"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("UnknownLabel") != std::string::npos);

  const auto j = nlohmann::json::parse(run({"reference", "--format", "json", "--verdicts"}).out);
  CHECK(j["rows"].size() == 50);
  CHECK(j["rows"][0]["verdicts"]["simple"]["category"].is_string());
}

TEST_CASE("analyze a simulated reversal") {
  const auto dir = testing::scratch_dir("cli_analyze");
  const auto csv = testing::write_file(dir / "rev.csv", reversal_csv());
  const Run a = run({"analyze", csv.string()});
  REQUIRE(a.code == 0);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j["label"] == "rev");
  CHECK(j["verdicts"]["simple"]["category"] == "Reversal");
  CHECK(j["partial"] == false);
  CHECK(run({"analyze", csv.string()}).out == a.out);

  const Run tsv = run({"analyze", "--format", "tsv", csv.string(), csv.string()});
  CHECK(tsv.code == 0);
  const auto rows = lines(tsv.out);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1] == rows[2]);

  const auto out = dir / "report.json";
  CHECK(run({"analyze", csv.string(), "--standardize", "-o", out.string()}).code == 0);
  const auto z = nlohmann::json::parse(testing::read_file(out));
  CHECK(z["input"]["standardized"] == true);
  CHECK(z["thresholds"]["d"] == 0.1);

  const Run strict = run({"analyze", csv.string(), "--thresholds", "d=5"});
  CHECK(nlohmann::json::parse(strict.out)["verdicts"]["simple"]["category"] == "Consistent");
  CHECK(run({"analyze", csv.string(), "--thresholds", "zz=1"}).code == 2);
}

TEST_CASE("analyze a one-school file") {
  const auto dir = testing::scratch_dir("cli_one");
  const auto csv = testing::write_file(dir / "one.csv",
                                       "pupil_id,school_id,group,pretest,posttest\n"
                                       "1,a,1,1,2\n2,a,0,2,3\n3,a,1,3,5\n4,a,0,1,1\n");
  const Run r = run({"analyze", csv.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("TooFewSchools") != std::string::npos);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["partial"] == true);
  CHECK(j["first_error"] == "TooFewSchools");
  CHECK(j["estimates"]["gP"].is_object());
  CHECK(j["estimates"]["gG"].is_object());
  CHECK(j["estimates"]["ttP"].is_null());
}

TEST_CASE("analyze with mapped columns and data errors") {
  const auto dir = testing::scratch_dir("cli_cols");
  const auto csv = testing::write_file(dir / "m.csv",
                                       "sch,arm,before,after\n"
                                       "a,1,1,2\na,0,2,3\nb,1,3,5\nb,0,1,1\nc,1,2,2\nc,0,0,1\n");
  CHECK(run({"analyze", csv.string()}).code == 2);
  const Run ok = run({"analyze", csv.string(), "--col-school", "sch", "--col-group", "arm",
                      "--col-pre", "before", "--col-post", "after"});
  CHECK(ok.code == 0);
  CHECK(nlohmann::json::parse(ok.out)["summary"]["n_sch"] == 3);
  CHECK(run({"analyze", (dir / "missing.csv").string()}).code == 2);
}

TEST_CASE("plot the reference figures") {
  const auto dir = testing::scratch_dir("cli_plot");
  const std::string prefix = (dir / "fig").string();
  const Run r = run({"plot", "--reference", "-o", prefix});
  REQUIRE(r.code == 0);
  const auto neg = lordpx::svg_row_labels(testing::read_file(prefix + "_negative.svg"));
  const auto pos = lordpx::svg_row_labels(testing::read_file(prefix + "_nonnegative.svg"));
  REQUIRE(neg.size() == 25);
  CHECK(neg.front() == "ipmee");
  CHECK(neg.back() == "shine");
  CHECK(pos.front() == "tfl");
  CHECK(pos.back() == "ar");
  CHECK(run({"plot", "-o", prefix}).code == 1);
}

TEST_CASE("plot from analyze reports") {
  const auto dir = testing::scratch_dir("cli_plot_reports");
  const auto csv = testing::write_file(dir / "rev.csv", reversal_csv());
  const auto json = dir / "rev.json";
  REQUIRE(run({"analyze", csv.string(), "-o", json.string()}).code == 0);
  const Run r = run({"plot", json.string(), "-o", (dir / "fig").string()});
  CHECK(r.code == 0);
  CHECK(r.out == (dir / "fig_negative.svg").string() + "\n");
  CHECK(lordpx::svg_row_labels(testing::read_file(dir / "fig_negative.svg")) ==
        std::vector<std::string>{"rev"});
}

TEST_CASE("simulate datasets and sweeps") {
  const auto dir = testing::scratch_dir("cli_sim");
  const auto cfg = testing::write_file(dir / "one.cfg",
                                       "n_sch = 6\npupils_per_school = 10\nseed = 42\n");
  const Run a = run({"simulate", "-c", cfg.string()});
  const Run b = run({"simulate", "-c", cfg.string()});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(lines(a.out).size() == 61);
  CHECK(lines(a.out)[0] == "pupil_id,school_id,group,pretest,posttest");
  CHECK(run({"simulate", "-c", cfg.string(), "--seed", "43"}).out != a.out);

  const auto out_csv = dir / "d.csv";
  CHECK(run({"simulate", "-c", cfg.string(), "--out-csv", out_csv.string()}).code == 0);
  CHECK(testing::read_file(out_csv) == a.out);

  const auto sweep_cfg = testing::write_file(dir / "sweep.cfg",
                                             "n_sch = 40\npupils_per_school = 40\n"
                                             "delta_pre = -0.4, 0, 0.4\nrho = 0.7\nseed = 1\n"
                                             "replicates = 100\n");
  const auto tsv_path = dir / "sweep.tsv";
  const Run s = run({"simulate", "-c", sweep_cfg.string(), "--sweep-out", tsv_path.string()});
  REQUIRE(s.code == 0);
  const auto rows = lines(testing::read_file(tsv_path));
  REQUIRE(rows.size() == 13);
  CHECK(column(rows[0], 17) == "reversal_freq");
  CHECK(column(rows[1], 11) == "PostDIM");
  CHECK(std::stod(column(rows[1], 17)) > 0.5);
  CHECK(std::stod(column(rows[5], 17)) < 0.1);
  CHECK(std::stod(column(rows[9], 17)) > 0.5);
  const Run serial = run({"simulate", "-c", sweep_cfg.string(), "--serial"});
  CHECK(serial.out == testing::read_file(tsv_path));
  CHECK(run({"simulate", "-c", sweep_cfg.string(), "--out-csv", out_csv.string()}).code == 2);
}

TEST_CASE("malformed config reports the line") {
  const auto dir = testing::scratch_dir("cli_badcfg");
  const auto cfg = testing::write_file(dir / "bad.cfg", "n_sch = 6\nrho = 2\n");
  const Run r = run({"simulate", "-c", cfg.string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad.cfg:2:") != std::string::npos);
}

TEST_CASE("usage") {
  CHECK(run({}).code == 1);
  CHECK(run({"bogus"}).code == 1);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"analyze", "--format", "xml", "x.csv"}).code == 1);
}
