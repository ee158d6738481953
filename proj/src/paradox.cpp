#include "lordpx/paradox.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "lordpx/error.hpp"

namespace lordpx {

std::string_view to_string(VerdictCategory c) noexcept {
  switch (c) {
    case VerdictCategory::Consistent: return "Consistent";
    case VerdictCategory::MagnitudeDivergent: return "MagnitudeDivergent";
    case VerdictCategory::BorderlineReversal: return "BorderlineReversal";
    case VerdictCategory::Reversal: return "Reversal";
  }
  return "Consistent";
}

std::string_view to_string(ImbalanceFlag f) noexcept {
  switch (f) {
    case ImbalanceFlag::Balanced: return "Balanced";
    case ImbalanceFlag::Notable: return "Notable";
    case ImbalanceFlag::Substantial: return "Substantial";
  }
  return "Balanced";
}

std::optional<VerdictCategory> verdict_category_from_string(std::string_view s) noexcept {
  for (auto c : {VerdictCategory::Consistent, VerdictCategory::MagnitudeDivergent,
                 VerdictCategory::BorderlineReversal, VerdictCategory::Reversal}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

std::optional<ImbalanceFlag> imbalance_flag_from_string(std::string_view s) noexcept {
  for (auto f : {ImbalanceFlag::Balanced, ImbalanceFlag::Notable, ImbalanceFlag::Substantial}) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

Thresholds Thresholds::parse(std::string_view text) {
  Thresholds t;
  while (!text.empty()) {
    const auto comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidSpec, "threshold '" + std::string(item) + "' is not key=value");
    }
    const std::string_view key = item.substr(0, eq);
    const std::string_view val = item.substr(eq + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
    if (ec != std::errc() || ptr != val.data() + val.size() || !(v >= 0.0)) {
      throw Error(ErrorCode::InvalidSpec, "bad threshold value '" + std::string(val) + "'");
    }
    if (key == "d") t.divergence = v;
    else if (key == "imb") t.substantial = v;
    else if (key == "note") t.notable = v;
    else if (key == "nz") t.near_zero = v;
    else throw Error(ErrorCode::InvalidSpec, "unknown threshold key '" + std::string(key) + "'");
  }
  return t;
}

ImbalanceFlag imbalance_flag(double pret_imb, const Thresholds& t) {
  const double m = std::abs(pret_imb);
  if (m > t.substantial + kThresholdSlack) return ImbalanceFlag::Substantial;
  if (m > t.notable + kThresholdSlack) return ImbalanceFlag::Notable;
  return ImbalanceFlag::Balanced;
}

ParadoxVerdict classify_pair(double first, double second, double pret_imb, const Thresholds& t) {
  ParadoxVerdict v;
  v.divergence = std::abs(first - second);
  v.imbalance_flag = imbalance_flag(pret_imb, t);
  // sign(0) never partners a reversal.
  v.near_zero = first == 0.0 || second == 0.0 ||
                std::min(std::abs(first), std::abs(second)) < t.near_zero - kThresholdSlack;
  if (v.divergence < t.divergence - kThresholdSlack) {
    v.category = VerdictCategory::Consistent;
  } else if (v.near_zero) {
    v.category = VerdictCategory::BorderlineReversal;
  } else if (std::signbit(first) != std::signbit(second)) {
    v.category = VerdictCategory::Reversal;
  } else {
    v.category = VerdictCategory::MagnitudeDivergent;
  }
  return v;
}

namespace {

const EffectEstimate& need(const std::optional<EffectEstimate>& e, const ComparisonRecord& r,
                           const char* name) {
  if (!e) throw Error(ErrorCode::MissingEstimate, r.label + ": " + name + " is missing");
  return *e;
}

double need_imbalance(const ComparisonRecord& r) {
  if (!r.pret_imb) throw Error(ErrorCode::MissingEstimate, r.label + ": pret.imb is missing");
  return *r.pret_imb;
}

}  // namespace

ParadoxVerdict classify(const ComparisonRecord& r, const Thresholds& t) {
  return classify_pair(need(r.gP, r, "gP").g, need(r.gG, r, "gG").g, need_imbalance(r), t);
}

ParadoxVerdict classify_mlm(const ComparisonRecord& r, const Thresholds& t) {
  return classify_pair(need(r.ttP, r, "ttP").g, need(r.ttG, r, "ttG").g, need_imbalance(r), t);
}

BatchSummary batch_classify(const std::vector<ComparisonRecord>& records, const Thresholds& t) {
  BatchSummary out;
  out.items.reserve(records.size());
  for (const auto& r : records) {
    BatchItem item;
    item.label = r.label;
    if (r.gP && r.gG && r.pret_imb) item.simple = classify(r, t);
    if (r.ttP && r.ttG && r.pret_imb) item.mlm = classify_mlm(r, t);
    item.partial = r.partial() || !r.pret_imb;
    if (item.simple) ++out.simple_counts[static_cast<std::size_t>(item.simple->category)];
    if (item.mlm) ++out.mlm_counts[static_cast<std::size_t>(item.mlm->category)];
    if (r.pret_imb) ++out.imbalance_counts[static_cast<std::size_t>(imbalance_flag(*r.pret_imb, t))];
    if (item.partial) ++out.partial_count;
    out.items.push_back(std::move(item));
  }
  return out;
}

SignedCount count_imbalance_above(const std::vector<ComparisonRecord>& records, double threshold) {
  SignedCount out;
  for (const auto& r : records) {
    if (!r.pret_imb || !(std::abs(*r.pret_imb) > threshold + kThresholdSlack)) continue;
    (*r.pret_imb < 0.0 ? out.negative : out.positive) += 1;
    out.labels.push_back(r.label);
  }
  return out;
}

std::optional<double> median_divergence(const std::vector<ComparisonRecord>& records,
                                        EstimatorPair pair) {
  std::vector<double> d;
  for (const auto& r : records) {
    const auto& a = pair == EstimatorPair::Simple ? r.gP : r.ttP;
    const auto& b = pair == EstimatorPair::Simple ? r.gG : r.ttG;
    if (a && b) d.push_back(std::abs(a->g - b->g));
  }
  if (d.empty()) return std::nullopt;
  std::sort(d.begin(), d.end());
  const std::size_t mid = d.size() / 2;
  return d.size() % 2 == 1 ? d[mid] : 0.5 * (d[mid - 1] + d[mid]);
}

}  // namespace lordpx
