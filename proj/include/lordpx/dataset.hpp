#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lordpx {

struct PupilRecord {
  std::string pupil_id;
  std::string school_id;
  int group = 0;  // 1 = intervention, 0 = control
  double pretest = 0.0;
  double posttest = 0.0;
};

/// Per-pupil records for one outcome after complete-case filtering.
///
/// Construction checks that both arms are non-empty and every record is
/// well formed. School counts are not enforced here: the mixed models
/// reject single-school data themselves so the simple estimators can
/// still be reported.
class TrialDataset {
 public:
  TrialDataset(std::vector<PupilRecord> records, std::string label, bool standardized = false);

  const std::vector<PupilRecord>& records() const noexcept { return records_; }
  const std::string& label() const noexcept { return label_; }
  bool standardized() const noexcept { return standardized_; }

  std::size_t size() const noexcept { return records_.size(); }
  std::size_t n_treated() const noexcept { return n_treated_; }
  std::size_t n_control() const noexcept { return records_.size() - n_treated_; }
  std::size_t n_schools() const;

  /// Values of `field` for the intervention arm and the control arm.
  std::pair<std::vector<double>, std::vector<double>> split_by_group(
      const std::function<double(const PupilRecord&)>& field) const;

  TrialDataset with_label(std::string label) const;

 private:
  std::vector<PupilRecord> records_;
  std::string label_;
  bool standardized_;
  std::size_t n_treated_ = 0;
};

struct CsvSchema {
  std::string pupil_id = "pupil_id";  // optional column; row number used when absent
  std::string school = "school_id";
  std::string group = "group";
  std::string pretest = "pretest";
  std::string posttest = "posttest";
};

struct DroppedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string reason;
};

struct LoadResult {
  TrialDataset data;
  std::size_t dropped_count = 0;
  std::vector<DroppedRow> dropped;
};

/// Reads a comma-delimited file with a header row. Rows with a missing or
/// unparseable school, group, pretest or posttest are dropped and counted;
/// the order of surviving rows is preserved.
LoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema = {},
                    std::optional<std::string> label = std::nullopt);

/// Same as load_csv, reading from an in-memory document. `source` names the
/// input in error messages.
LoadResult parse_csv(const std::string& text, const CsvSchema& schema, std::string label,
                     const std::string& source = "<memory>");

/// Z-scores pretest and posttest over the pooled complete-case sample.
TrialDataset standardize_z(const TrialDataset& data);

struct DatasetSummary {
  std::size_t n = 0;
  std::size_t n_t = 0;
  std::size_t n_c = 0;
  std::size_t n_sch = 0;
  std::optional<double> pt_corr;   // pretest vs group indicator
  std::optional<double> pp_corr;   // pretest vs posttest
  std::optional<double> pret_imb;  // Hedges' g of pretest, intervention minus control

  friend bool operator==(const DatasetSummary&, const DatasetSummary&) = default;
};

DatasetSummary summarize(const TrialDataset& data);

}  // namespace lordpx
