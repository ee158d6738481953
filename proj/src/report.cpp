#include "lordpx/report.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "lordpx/error.hpp"

namespace lordpx {

using nlohmann::json;

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
std::optional<T> get_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

json estimate_json(const EffectEstimate& e) {
  return {{"kind", to_string(e.kind)}, {"g", e.g},   {"se", opt(e.se)},
          {"lb", e.lb},                {"ub", e.ub}, {"degenerate", e.degenerate}};
}

EffectEstimate estimate_from(const json& j) {
  EffectEstimate e;
  const auto kind = estimate_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::SchemaMismatch, "unknown estimate kind");
  e.kind = *kind;
  e.g = j.at("g").get<double>();
  e.se = get_opt<double>(j, "se");
  e.lb = j.at("lb").get<double>();
  e.ub = j.at("ub").get<double>();
  e.degenerate = j.at("degenerate").get<bool>();
  return e;
}

json opt_estimate(const std::optional<EffectEstimate>& e) {
  return e ? estimate_json(*e) : json(nullptr);
}

std::optional<EffectEstimate> opt_estimate_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return estimate_from(j.at(key));
}

json fit_json(const LmmFit& f) {
  json schools = json::array();
  for (const auto& s : f.schools) {
    schools.push_back({{"school_id", s.school_id},
                       {"n", s.n},
                       {"raw_mean", s.raw_mean},
                       {"fixed_mean", s.fixed_mean},
                       {"blup", s.blup}});
  }
  return {{"kind", to_string(f.kind)},
          {"coef_names", f.coef_names},
          {"beta", f.beta},
          {"se_beta", f.se_beta},
          {"sigma2_u", f.sigma2_u},
          {"sigma2_e", f.sigma2_e},
          {"icc", f.icc},
          {"lambda", f.lambda},
          {"reml_value", f.reml_value},
          {"converged", f.converged},
          {"n_obs", f.n_obs},
          {"n_groups", f.n_groups},
          {"schools", schools}};
}

LmmFit fit_from(const json& j) {
  LmmFit f;
  const auto kind = estimate_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw Error(ErrorCode::SchemaMismatch, "unknown fit kind");
  f.kind = *kind;
  f.coef_names = j.at("coef_names").get<std::vector<std::string>>();
  f.beta = j.at("beta").get<std::vector<double>>();
  f.se_beta = j.at("se_beta").get<std::vector<double>>();
  f.sigma2_u = j.at("sigma2_u").get<double>();
  f.sigma2_e = j.at("sigma2_e").get<double>();
  f.icc = j.at("icc").get<double>();
  f.lambda = j.at("lambda").get<double>();
  f.reml_value = j.at("reml_value").get<double>();
  f.converged = j.at("converged").get<bool>();
  f.n_obs = j.at("n_obs").get<std::size_t>();
  f.n_groups = j.at("n_groups").get<std::size_t>();
  for (const auto& s : j.at("schools")) {
    SchoolEffect e;
    e.school_id = s.at("school_id").get<std::string>();
    e.n = s.at("n").get<std::size_t>();
    e.raw_mean = s.at("raw_mean").get<double>();
    e.fixed_mean = s.at("fixed_mean").get<double>();
    e.blup = s.at("blup").get<double>();
    f.schools.push_back(std::move(e));
  }
  return f;
}

json verdict_json(const ParadoxVerdict& v) {
  return {{"category", to_string(v.category)},
          {"divergence", v.divergence},
          {"imbalance_flag", to_string(v.imbalance_flag)},
          {"near_zero", v.near_zero}};
}

ParadoxVerdict verdict_from(const json& j) {
  ParadoxVerdict v;
  const auto cat = verdict_category_from_string(j.at("category").get<std::string>());
  const auto flag = imbalance_flag_from_string(j.at("imbalance_flag").get<std::string>());
  if (!cat || !flag) throw Error(ErrorCode::SchemaMismatch, "unknown verdict value");
  v.category = *cat;
  v.imbalance_flag = *flag;
  v.divergence = j.at("divergence").get<double>();
  v.near_zero = j.at("near_zero").get<bool>();
  return v;
}

json opt_verdict(const std::optional<ParadoxVerdict>& v) {
  return v ? verdict_json(*v) : json(nullptr);
}

std::string num(const std::optional<double>& v) {
  return v ? fmt::format("{:.6f}", *v) : std::string("NA");
}

std::string est_cols(const std::optional<EffectEstimate>& e) {
  if (!e) return "NA\tNA\tNA";
  return fmt::format("{:.6f}\t{:.6f}\t{:.6f}", e->g, e->lb, e->ub);
}

std::string verdict_col(const std::optional<ParadoxVerdict>& v) {
  return v ? std::string(to_string(v->category)) : std::string("NA");
}

json report_json(const AnalysisReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["label"] = r.label;
  j["input"] = {{"dropped_rows", r.dropped_rows}, {"standardized", r.standardized}};
  j["summary"] = {{"n", r.summary.n},
                  {"n_t", r.summary.n_t},
                  {"n_c", r.summary.n_c},
                  {"n_sch", r.summary.n_sch},
                  {"pt_corr", opt(r.summary.pt_corr)},
                  {"pp_corr", opt(r.summary.pp_corr)},
                  {"pret_imb", opt(r.summary.pret_imb)}};
  j["estimates"] = {{"gP", opt_estimate(r.estimates.gP)},
                    {"gG", opt_estimate(r.estimates.gG)},
                    {"ttP", opt_estimate(r.estimates.ttP)},
                    {"ttG", opt_estimate(r.estimates.ttG)}};
  j["models"] = {{"post_ancova", r.post_ancova ? fit_json(*r.post_ancova) : json(nullptr)},
                 {"gain_anova", r.gain_anova ? fit_json(*r.gain_anova) : json(nullptr)}};
  j["verdicts"] = {{"simple", opt_verdict(r.simple_verdict)}, {"mlm", opt_verdict(r.mlm_verdict)}};
  j["thresholds"] = {{"d", r.thresholds.divergence},
                     {"imb", r.thresholds.substantial},
                     {"note", r.thresholds.notable},
                     {"nz", r.thresholds.near_zero}};
  j["partial"] = r.partial();
  j["warnings"] = r.warnings;
  j["errors"] = r.errors;
  j["first_error"] = r.first_error ? json(to_string(*r.first_error)) : json(nullptr);
  return j;
}

AnalysisReport report_from(const json& j) {
  try {
    AnalysisReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != AnalysisReport::kSchemaVersion) {
      throw Error(ErrorCode::SchemaMismatch,
                  "unsupported schema_version " + std::to_string(r.schema_version));
    }
    r.label = j.at("label").get<std::string>();
    r.dropped_rows = j.at("input").at("dropped_rows").get<std::size_t>();
    r.standardized = j.at("input").at("standardized").get<bool>();
    const auto& s = j.at("summary");
    r.summary.n = s.at("n").get<std::size_t>();
    r.summary.n_t = s.at("n_t").get<std::size_t>();
    r.summary.n_c = s.at("n_c").get<std::size_t>();
    r.summary.n_sch = s.at("n_sch").get<std::size_t>();
    r.summary.pt_corr = get_opt<double>(s, "pt_corr");
    r.summary.pp_corr = get_opt<double>(s, "pp_corr");
    r.summary.pret_imb = get_opt<double>(s, "pret_imb");
    const auto& e = j.at("estimates");
    r.estimates.gP = opt_estimate_from(e, "gP");
    r.estimates.gG = opt_estimate_from(e, "gG");
    r.estimates.ttP = opt_estimate_from(e, "ttP");
    r.estimates.ttG = opt_estimate_from(e, "ttG");
    const auto& m = j.at("models");
    if (!m.at("post_ancova").is_null()) r.post_ancova = fit_from(m.at("post_ancova"));
    if (!m.at("gain_anova").is_null()) r.gain_anova = fit_from(m.at("gain_anova"));
    const auto& v = j.at("verdicts");
    if (!v.at("simple").is_null()) r.simple_verdict = verdict_from(v.at("simple"));
    if (!v.at("mlm").is_null()) r.mlm_verdict = verdict_from(v.at("mlm"));
    const auto& t = j.at("thresholds");
    r.thresholds.divergence = t.at("d").get<double>();
    r.thresholds.substantial = t.at("imb").get<double>();
    r.thresholds.notable = t.at("note").get<double>();
    r.thresholds.near_zero = t.at("nz").get<double>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.errors = j.at("errors").get<std::vector<std::string>>();
    if (const auto code = get_opt<std::string>(j, "first_error")) {
      r.first_error = error_code_from_string(*code);
    }
    return r;
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::SchemaMismatch, std::string("malformed report: ") + ex.what());
  }
}

json parse_document(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaMismatch, std::string("report is not valid JSON: ") + e.what());
  }
}

}  // namespace

std::string report_to_json(const AnalysisReport& report) { return report_json(report).dump(2) + "\n"; }

AnalysisReport report_from_json(std::string_view text) { return report_from(parse_document(text)); }

std::string reports_to_json(const std::vector<AnalysisReport>& reports) {
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  return arr.dump(2) + "\n";
}

std::vector<AnalysisReport> reports_from_json(std::string_view text) {
  const json doc = parse_document(text);
  if (!doc.is_array()) return {report_from(doc)};
  std::vector<AnalysisReport> out;
  for (const auto& j : doc) out.push_back(report_from(j));
  return out;
}

std::string report_tsv_header() {
  return "label\tn\tn.t\tn.c\tn.sch\ticc\tpt.corr\tpp.corr\tpret.imb\t"
         "gP\tgP.lb\tgP.ub\tgG\tgG.lb\tgG.ub\tttP\tttP.lb\tttP.ub\tttG\tttG.lb\tttG.ub\t"
         "simple\tmlm\timbalance\tpartial\n";
}

std::string report_tsv_row(const AnalysisReport& r) {
  const std::optional<double> icc =
      r.post_ancova ? std::optional<double>(r.post_ancova->icc) : std::nullopt;
  const std::optional<ParadoxVerdict>& any = r.simple_verdict ? r.simple_verdict : r.mlm_verdict;
  return fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.label,
                     r.summary.n, r.summary.n_t, r.summary.n_c, r.summary.n_sch, num(icc),
                     num(r.summary.pt_corr), num(r.summary.pp_corr), num(r.summary.pret_imb),
                     est_cols(r.estimates.gP), est_cols(r.estimates.gG), est_cols(r.estimates.ttP),
                     est_cols(r.estimates.ttG), verdict_col(r.simple_verdict),
                     verdict_col(r.mlm_verdict),
                     any ? std::string(to_string(any->imbalance_flag)) : std::string("NA"),
                     r.partial() ? 1 : 0);
}

std::string verdicts_to_tsv(const BatchSummary& batch) {
  std::string out = "label\tpair\tcategory\tdivergence\tnear_zero\timbalance\n";
  for (const auto& item : batch.items) {
    for (const auto& [pair, v] : {std::pair{"simple", &item.simple}, std::pair{"mlm", &item.mlm}}) {
      if (!*v) {
        out += fmt::format("{}\t{}\tNA\tNA\tNA\tNA\n", item.label, pair);
        continue;
      }
      out += fmt::format("{}\t{}\t{}\t{:.6f}\t{}\t{}\n", item.label, pair, to_string((*v)->category),
                         (*v)->divergence, (*v)->near_zero ? 1 : 0, to_string((*v)->imbalance_flag));
    }
  }
  return out;
}

std::string verdicts_to_json(const BatchSummary& batch) {
  json items = json::array();
  for (const auto& item : batch.items) {
    items.push_back({{"label", item.label},
                     {"simple", opt_verdict(item.simple)},
                     {"mlm", opt_verdict(item.mlm)},
                     {"partial", item.partial}});
  }
  json counts_simple, counts_mlm, counts_imb;
  for (auto c : {VerdictCategory::Consistent, VerdictCategory::MagnitudeDivergent,
                 VerdictCategory::BorderlineReversal, VerdictCategory::Reversal}) {
    counts_simple[std::string(to_string(c))] = batch.simple_counts[static_cast<std::size_t>(c)];
    counts_mlm[std::string(to_string(c))] = batch.mlm_counts[static_cast<std::size_t>(c)];
  }
  for (auto f : {ImbalanceFlag::Balanced, ImbalanceFlag::Notable, ImbalanceFlag::Substantial}) {
    counts_imb[std::string(to_string(f))] = batch.imbalance_counts[static_cast<std::size_t>(f)];
  }
  json j = {{"schema_version", AnalysisReport::kSchemaVersion},
            {"items", items},
            {"counts", {{"simple", counts_simple}, {"mlm", counts_mlm}, {"imbalance", counts_imb}}},
            {"partial", batch.partial_count}};
  return j.dump(2) + "\n";
}

std::string reference_tsv_header(bool with_verdicts) {
  std::string h =
      "outcome\tlabel\ttitle\tdesign\tlock\tgP\tgP.lb\tgP.ub\tgG\tgG.lb\tgG.ub\tttP\tttP.lb\tttP.ub\t"
      "ttG\tttG.lb\tttG.ub\tpret.imb\tn\tn.t\tn.c\tn.sch\ticc\tpt.corr\tpp.corr";
  if (with_verdicts) h += "\tsimple\tmlm\timbalance";
  return h + "\n";
}

std::string reference_tsv_row(const ReferenceRow& r, const BatchItem* v) {
  const auto e = [](const EffectEstimate& x) { return fmt::format("{:.2f}\t{:.2f}\t{:.2f}", x.g, x.lb, x.ub); };
  std::string row = fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.2f}\t{}\t{}\t{}\t{}\t{:.2f}\t{:.2f}\t{:.2f}",
                                r.outcome, r.label, r.title, r.design, r.lock, e(r.gP), e(r.gG),
                                e(r.ttP), e(r.ttG), r.pret_imb, r.n, r.n_t, r.n_c, r.n_sch, r.icc,
                                r.pt_corr, r.pp_corr);
  if (v) {
    row += fmt::format("\t{}\t{}\t{}", verdict_col(v->simple), verdict_col(v->mlm),
                       v->simple ? std::string(to_string(v->simple->imbalance_flag)) : std::string("NA"));
  }
  return row + "\n";
}

std::string reference_to_json(const std::vector<const ReferenceRow*>& rows,
                              const std::vector<const BatchItem*>& verdicts) {
  json arr = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = *rows[i];
    json j = {{"outcome", r.outcome},
              {"label", r.label},
              {"title", r.title},
              {"design", r.design},
              {"lock", r.lock},
              {"gP", estimate_json(r.gP)},
              {"gG", estimate_json(r.gG)},
              {"ttP", estimate_json(r.ttP)},
              {"ttG", estimate_json(r.ttG)},
              {"pret_imb", r.pret_imb},
              {"n", r.n},
              {"n_t", r.n_t},
              {"n_c", r.n_c},
              {"n_sch", r.n_sch},
              {"icc", r.icc},
              {"pt_corr", r.pt_corr},
              {"pp_corr", r.pp_corr}};
    if (i < verdicts.size() && verdicts[i]) {
      j["verdicts"] = {{"simple", opt_verdict(verdicts[i]->simple)},
                       {"mlm", opt_verdict(verdicts[i]->mlm)}};
    }
    arr.push_back(std::move(j));
  }
  json doc = {{"schema_version", AnalysisReport::kSchemaVersion}, {"rows", arr}};
  return doc.dump(2) + "\n";
}

}  // namespace lordpx
