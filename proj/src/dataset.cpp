#include "lordpx/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>

#include "lordpx/error.hpp"
#include "lordpx/estimators.hpp"
#include "lordpx/stats.hpp"

namespace lordpx {

TrialDataset::TrialDataset(std::vector<PupilRecord> records, std::string label, bool standardized)
    : records_(std::move(records)), label_(std::move(label)), standardized_(standardized) {
  if (records_.empty()) {
    throw Error(ErrorCode::EmptyAfterFiltering, "dataset '" + label_ + "' has no records");
  }
  for (const auto& r : records_) {
    if (r.group != 0 && r.group != 1) {
      throw Error(ErrorCode::InvalidSpec, "group must be 0 or 1");
    }
    if (!std::isfinite(r.pretest) || !std::isfinite(r.posttest)) {
      throw Error(ErrorCode::InvalidSpec, "scores must be finite");
    }
    n_treated_ += static_cast<std::size_t>(r.group);
  }
  if (n_treated_ == 0 || n_treated_ == records_.size()) {
    throw Error(ErrorCode::SingleArm, "dataset '" + label_ + "' has only " +
                                          (n_treated_ == 0 ? "control" : "intervention") +
                                          " records");
  }
}

std::size_t TrialDataset::n_schools() const {
  std::set<std::string_view> ids;
  for (const auto& r : records_) ids.insert(r.school_id);
  return ids.size();
}

std::pair<std::vector<double>, std::vector<double>> TrialDataset::split_by_group(
    const std::function<double(const PupilRecord&)>& field) const {
  std::pair<std::vector<double>, std::vector<double>> out;
  out.first.reserve(n_treated());
  out.second.reserve(n_control());
  for (const auto& r : records_) {
    (r.group == 1 ? out.first : out.second).push_back(field(r));
  }
  return out;
}

TrialDataset TrialDataset::with_label(std::string label) const {
  return TrialDataset(records_, std::move(label), standardized_);
}

namespace {

// Splits one CSV line into fields. Double-quoted fields may contain commas
// and "" escapes; quotes are stripped.
std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view s) { return s.empty() || s == "NA" || s == "na"; }

std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

}  // namespace

LoadResult parse_csv(const std::string& text, const CsvSchema& schema, std::string label,
                     const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::SchemaMismatch, source + ": missing header row");
  }
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  std::vector<std::string> header;
  for (auto& f : split_csv_line(line)) header.emplace_back(trim(f));

  const auto require = [&](const std::string& name) {
    auto idx = find_column(header, name);
    if (!idx) {
      throw Error(ErrorCode::SchemaMismatch, source + ":1: column '" + name + "' not in header");
    }
    return *idx;
  };
  const std::size_t c_school = require(schema.school);
  const std::size_t c_group = require(schema.group);
  const std::size_t c_pre = require(schema.pretest);
  const std::size_t c_post = require(schema.posttest);
  const auto c_id = find_column(header, schema.pupil_id);

  std::vector<PupilRecord> records;
  std::vector<DroppedRow> dropped;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    const auto drop = [&](std::string reason) { dropped.push_back({line_no, std::move(reason)}); };
    if (fields.size() != header.size()) {
      drop("expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(fields.size()));
      continue;
    }
    const std::string_view school = trim(fields[c_school]);
    const std::string_view group = trim(fields[c_group]);
    const std::string_view pre = trim(fields[c_pre]);
    const std::string_view post = trim(fields[c_post]);
    if (is_missing(school) || is_missing(group) || is_missing(pre) || is_missing(post)) {
      drop("missing value");
      continue;
    }
    if (group != "0" && group != "1") {
      drop("group '" + std::string(group) + "' is not 0 or 1");
      continue;
    }
    const auto pre_v = parse_real(pre);
    const auto post_v = parse_real(post);
    if (!pre_v || !post_v) {
      drop("unparseable or non-finite score");
      continue;
    }
    PupilRecord rec;
    rec.pupil_id = c_id ? std::string(trim(fields[*c_id])) : std::to_string(line_no - 1);
    rec.school_id = std::string(school);
    rec.group = group == "1" ? 1 : 0;
    rec.pretest = *pre_v;
    rec.posttest = *post_v;
    records.push_back(std::move(rec));
  }

  if (records.empty()) {
    throw Error(ErrorCode::EmptyAfterFiltering,
                source + ": no complete cases (" + std::to_string(dropped.size()) + " rows dropped)");
  }
  try {
    TrialDataset data(std::move(records), std::move(label));
    return LoadResult{std::move(data), dropped.size(), std::move(dropped)};
  } catch (const Error& e) {
    throw Error(e.code(), source + ": " + e.what());
  }
}

LoadResult load_csv(const std::filesystem::path& path, const CsvSchema& schema,
                    std::optional<std::string> label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::FileUnreadable, "cannot open '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), schema, label.value_or(path.stem().string()), path.string());
}

TrialDataset standardize_z(const TrialDataset& data) {
  if (data.size() < 2) {
    throw Error(ErrorCode::TooFewObservations, "standardization needs at least 2 records");
  }
  std::vector<double> pre, post;
  pre.reserve(data.size());
  post.reserve(data.size());
  for (const auto& r : data.records()) {
    pre.push_back(r.pretest);
    post.push_back(r.posttest);
  }
  const double sd_pre = std::sqrt(stats::sample_variance(pre));
  const double sd_post = std::sqrt(stats::sample_variance(post));
  if (!(sd_pre > 0.0) || !(sd_post > 0.0)) {
    throw Error(ErrorCode::ZeroVariance,
                std::string(sd_pre > 0.0 ? "posttest" : "pretest") + " is constant");
  }
  const double m_pre = stats::mean(pre);
  const double m_post = stats::mean(post);
  std::vector<PupilRecord> out = data.records();
  for (auto& r : out) {
    r.pretest = (r.pretest - m_pre) / sd_pre;
    r.posttest = (r.posttest - m_post) / sd_post;
  }
  return TrialDataset(std::move(out), data.label(), true);
}

DatasetSummary summarize(const TrialDataset& data) {
  DatasetSummary s;
  s.n = data.size();
  s.n_t = data.n_treated();
  s.n_c = data.n_control();
  s.n_sch = data.n_schools();

  std::vector<double> pre, post, grp;
  pre.reserve(s.n);
  post.reserve(s.n);
  grp.reserve(s.n);
  for (const auto& r : data.records()) {
    pre.push_back(r.pretest);
    post.push_back(r.posttest);
    grp.push_back(static_cast<double>(r.group));
  }
  s.pt_corr = stats::pearson(pre, grp);
  s.pp_corr = stats::pearson(pre, post);
  try {
    s.pret_imb = pretest_imbalance(data).g;
  } catch (const Error&) {
    s.pret_imb.reset();
  }
  return s;
}

}  // namespace lordpx
