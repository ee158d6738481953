#include "lordpx/reference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>

#include "lordpx/error.hpp"

namespace lordpx {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

using Table = std::vector<std::vector<std::string>>;

[[noreturn]] void corrupt(std::string_view asset, const std::string& msg) {
  throw Error(ErrorCode::CorruptAsset, std::string(asset) + ": " + msg);
}

Table parse_tsv(std::string_view text, std::string_view asset,
                const std::vector<std::string>& expected_header) {
  Table rows;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    while (true) {
      const auto tab = line.find('\t');
      fields.emplace_back(line.substr(0, tab));
      if (tab == std::string_view::npos) break;
      line.remove_prefix(tab + 1);
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty() || rows.front() != expected_header) corrupt(asset, "unexpected header");
  rows.erase(rows.begin());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != expected_header.size()) {
      corrupt(asset, "row " + std::to_string(i + 2) + " has " + std::to_string(rows[i].size()) +
                         " fields");
    }
  }
  return rows;
}

template <class T>
T number(const std::string& s, std::string_view asset) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) corrupt(asset, "bad number '" + s + "'");
  return v;
}

EffectEstimate published(EstimateKind kind, const std::vector<std::string>& row, std::size_t col,
                         std::string_view asset) {
  EffectEstimate e;
  e.kind = kind;
  e.g = number<double>(row[col], asset);
  e.lb = number<double>(row[col + 1], asset);
  e.ub = number<double>(row[col + 2], asset);
  e.se = (e.ub - e.lb) / (2.0 * kZ975);
  return e;
}

}  // namespace

ReferenceTable ReferenceTable::parse(std::string_view outcomes, std::string_view effects,
                                     std::string_view summary) {
  const Table t1 = parse_tsv(outcomes, "outcomes.tsv", {"outcome", "label", "title", "design", "lock"});
  const Table t2 = parse_tsv(effects, "effects.tsv",
                             {"label", "gP", "gP.lb", "gP.ub", "gG", "gG.lb", "gG.ub", "ttP", "ttP.lb",
                              "ttP.ub", "ttG", "ttG.lb", "ttG.ub", "pret.imb"});
  const Table t3 = parse_tsv(summary, "summary.tsv",
                             {"label", "n", "n.t", "n.c", "n.sch", "icc", "pt.corr", "pp.corr", "pret.imb"});

  static const std::set<std::string> designs = {"srt", "mst", "crt", "action", "quasi", "rdd"};
  ReferenceTable table;
  std::map<std::string, std::size_t> index;
  for (const auto& r : t1) {
    ReferenceRow row;
    row.outcome = number<int>(r[0], "outcomes.tsv");
    row.label = r[1];
    row.title = r[2];
    row.design = r[3];
    row.lock = r[4];
    if (!designs.contains(row.design)) corrupt("outcomes.tsv", "unknown design '" + row.design + "'");
    if (!row.lock.empty()) {
      const int lock = number<int>(row.lock, "outcomes.tsv");
      if (lock < 0 || lock > 5) corrupt("outcomes.tsv", "lock out of range for " + row.label);
    }
    if (!index.emplace(row.label, table.rows_.size()).second) {
      corrupt("outcomes.tsv", "duplicate label '" + row.label + "'");
    }
    table.rows_.push_back(std::move(row));
  }

  std::set<std::string> joined2, joined3;
  for (std::size_t i = 0; i < t2.size(); ++i) {
    const auto& r = t2[i];
    auto it = index.find(r[0]);
    if (it == index.end()) corrupt("effects.tsv", "label '" + r[0] + "' has no outcome row");
    if (!joined2.insert(r[0]).second) corrupt("effects.tsv", "duplicate label '" + r[0] + "'");
    ReferenceRow& row = table.rows_[it->second];
    row.gP = published(EstimateKind::PostDIM, r, 1, "effects.tsv");
    row.gG = published(EstimateKind::GainDIM, r, 4, "effects.tsv");
    row.ttP = published(EstimateKind::MlmPostAncova, r, 7, "effects.tsv");
    row.ttG = published(EstimateKind::MlmGainAnova, r, 10, "effects.tsv");
    row.pret_imb = number<double>(r[13], "effects.tsv");
    row.effects_rank = i;
  }
  for (std::size_t i = 0; i < t3.size(); ++i) {
    const auto& r = t3[i];
    auto it = index.find(r[0]);
    if (it == index.end()) corrupt("summary.tsv", "label '" + r[0] + "' has no outcome row");
    if (!joined3.insert(r[0]).second) corrupt("summary.tsv", "duplicate label '" + r[0] + "'");
    ReferenceRow& row = table.rows_[it->second];
    row.n = number<std::size_t>(r[1], "summary.tsv");
    row.n_t = number<std::size_t>(r[2], "summary.tsv");
    row.n_c = number<std::size_t>(r[3], "summary.tsv");
    row.n_sch = number<std::size_t>(r[4], "summary.tsv");
    row.icc = number<double>(r[5], "summary.tsv");
    row.pt_corr = number<double>(r[6], "summary.tsv");
    row.pp_corr = number<double>(r[7], "summary.tsv");
    row.summary_pret_imb = number<double>(r[8], "summary.tsv");
    row.summary_rank = i;
    if (row.n != row.n_t + row.n_c) corrupt("summary.tsv", row.label + ": n != n.t + n.c");
  }

  if (table.rows_.size() != 50) {
    corrupt("outcomes.tsv", "expected 50 outcomes, found " + std::to_string(table.rows_.size()));
  }
  if (joined2.size() != table.rows_.size() || joined3.size() != table.rows_.size()) {
    corrupt("effects.tsv/summary.tsv", "join with the outcome table is incomplete");
  }
  for (const auto& row : table.rows_) {
    if (std::abs(row.pret_imb - row.summary_pret_imb) > 0.01 + 1e-12) {
      corrupt("summary.tsv", row.label + ": pret.imb disagrees with effects.tsv");
    }
  }
  return table;
}

const ReferenceTable& ReferenceTable::bundled() {
  static const ReferenceTable table = [] {
    const auto assets = reference_assets();
    return parse(assets.at(0).content, assets.at(1).content, assets.at(2).content);
  }();
  return table;
}

const ReferenceRow* ReferenceTable::find(std::string_view label) const {
  for (const auto& r : rows_) {
    if (r.label == label) return &r;
  }
  return nullptr;
}

const ReferenceRow& ReferenceTable::at(std::string_view label) const {
  if (const auto* r = find(label)) return *r;
  throw Error(ErrorCode::UnknownLabel, "no reference outcome labelled '" + std::string(label) + "'");
}

std::vector<const ReferenceRow*> ReferenceTable::by_effects_order() const {
  std::vector<const ReferenceRow*> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(&r);
  std::sort(out.begin(), out.end(),
            [](const ReferenceRow* a, const ReferenceRow* b) { return a->effects_rank < b->effects_rank; });
  return out;
}

ComparisonRecord to_comparison_record(const ReferenceRow& row) {
  ComparisonRecord r;
  r.label = row.label;
  r.gP = row.gP;
  r.gG = row.gG;
  r.ttP = row.ttP;
  r.ttG = row.ttG;
  r.pret_imb = row.pret_imb;
  r.icc = row.icc;
  r.n_sch = row.n_sch;
  return r;
}

std::vector<ComparisonRecord> reference_comparison_records() {
  std::vector<ComparisonRecord> out;
  for (const auto* row : ReferenceTable::bundled().by_effects_order()) {
    out.push_back(to_comparison_record(*row));
  }
  return out;
}

}  // namespace lordpx
