#include "lordpx/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "lordpx/error.hpp"

namespace lordpx {

void ScenarioSpec::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); };
  if (n_sch < 1) fail("n_sch must be at least 1");
  if (pupils_per_school.empty()) fail("pupils_per_school is empty");
  if (pupils_per_school.size() != 1 && pupils_per_school.size() != n_sch) {
    fail("pupils_per_school lists " + std::to_string(pupils_per_school.size()) +
         " sizes for " + std::to_string(n_sch) + " schools");
  }
  for (auto m : pupils_per_school) {
    if (m < 1) fail("every school needs at least one pupil");
  }
  if (!(alloc > 0.0 && alloc < 1.0)) fail("alloc must lie in (0, 1)");
  if (!(std::abs(rho) < 1.0)) fail("|rho| must be below 1");
  if (!(icc_target >= 0.0 && icc_target < 1.0)) fail("icc must lie in [0, 1)");
  if (!std::isfinite(delta_pre) || !std::isfinite(effect)) fail("delta_pre and effect must be finite");
  if (randomization == Randomization::Cluster && n_sch < 2) fail("cluster randomization needs 2 schools");
  if (total_pupils() < 2) fail("need at least 2 pupils");
}

std::size_t ScenarioSpec::school_size(std::size_t school) const {
  return pupils_per_school.size() == 1 ? pupils_per_school.front() : pupils_per_school.at(school);
}

std::size_t ScenarioSpec::total_pupils() const {
  std::size_t n = 0;
  for (std::size_t j = 0; j < n_sch; ++j) n += school_size(j);
  return n;
}

double SimRng::uniform() {
  // Top 53 bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double SimRng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t SimRng::below(std::uint64_t bound) {
  // Rejection sampling on the top of the range keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

namespace {

// Treats the first `k` of `n` slots after a Fisher-Yates shuffle.
std::vector<int> assign(SimRng& rng, std::size_t n, double alloc) {
  const auto k = static_cast<std::size_t>(
      std::clamp<double>(std::round(alloc * static_cast<double>(n)), 1.0, static_cast<double>(n - 1)));
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  std::vector<int> treated(n, 0);
  for (std::size_t i = 0; i < k; ++i) treated[order[i]] = 1;
  return treated;
}

}  // namespace

TrialDataset generate(const ScenarioSpec& spec, const std::string& label) {
  spec.validate();
  SimRng rng(spec.seed);

  const bool cluster = spec.randomization == Randomization::Cluster;
  const std::vector<int> slots = assign(rng, cluster ? spec.n_sch : spec.total_pupils(), spec.alloc);

  const double sd_u = std::sqrt(spec.sigma2_u());
  std::vector<double> u(spec.n_sch);
  for (auto& v : u) v = sd_u * rng.normal();

  const std::size_t width = std::to_string(spec.n_sch).size();
  const double noise_sd = std::sqrt(1.0 - spec.rho * spec.rho);
  const double shift = spec.effect * std::sqrt(1.0 + spec.sigma2_u());
  std::vector<PupilRecord> records;
  records.reserve(spec.total_pupils());
  std::size_t pupil = 0;
  for (std::size_t j = 0; j < spec.n_sch; ++j) {
    const std::string school = fmt::format("s{:0{}}", j + 1, width);
    for (std::size_t i = 0; i < spec.school_size(j); ++i, ++pupil) {
      const int t = cluster ? slots[j] : slots[pupil];
      const double ability = rng.normal() + spec.delta_pre * t;
      const double noise = rng.normal();
      PupilRecord r;
      r.pupil_id = fmt::format("{}-{}", school, i + 1);
      r.school_id = school;
      r.group = t;
      r.pretest = u[j] + ability;
      r.posttest = u[j] + spec.rho * ability + noise_sd * noise + shift * t;
      records.push_back(std::move(r));
    }
  }
  return TrialDataset(std::move(records), label);
}

std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(replicate) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ScenarioSpec replicate_spec(const ScenarioSpec& spec, std::size_t replicate) {
  ScenarioSpec out = spec;
  out.seed = replicate_seed(spec.seed, replicate);
  return out;
}

ReplicateOutcome run_replicate(const ScenarioSpec& spec, const AnalysisOptions& options) {
  AnalysisOptions opts = options;
  opts.keep_school_effects = false;
  const AnalysisReport report = analyze(generate(spec), opts);
  ReplicateOutcome out;
  out.estimates = {report.estimates.gP, report.estimates.gG, report.estimates.ttP,
                   report.estimates.ttG};
  out.simple_verdict = report.simple_verdict;
  out.mlm_verdict = report.mlm_verdict;
  return out;
}

namespace {

CellResult reduce_cell(const ScenarioSpec& spec, const ReplicateOutcome* reps, std::size_t count) {
  CellResult cell;
  cell.spec = spec;
  cell.replicates = count;
  for (std::size_t k = 0; k < kSweepEstimators.size(); ++k) {
    EstimatorStats& s = cell.estimators[k];
    s.kind = kSweepEstimators[k];
    double sum = 0.0, width = 0.0;
    std::size_t covered = 0;
    for (std::size_t r = 0; r < count; ++r) {
      const auto& e = reps[r].estimates[k];
      if (!e) continue;
      ++s.n_ok;
      sum += e->g;
      width += e->ci_width();
      covered += e->covers(spec.effect) ? 1 : 0;
    }
    if (s.n_ok == 0) continue;
    const double n_ok = static_cast<double>(s.n_ok);
    s.mean = sum / n_ok;
    s.mean_ci_width = width / n_ok;
    s.coverage = static_cast<double>(covered) / n_ok;
    double ss = 0.0;
    for (std::size_t r = 0; r < count; ++r) {
      const auto& e = reps[r].estimates[k];
      if (e) ss += (e->g - s.mean) * (e->g - s.mean);
    }
    s.sd = s.n_ok > 1 ? std::sqrt(ss / (n_ok - 1.0)) : 0.0;
  }
  for (const bool mlm : {false, true}) {
    std::size_t classified = 0, reversed = 0;
    for (std::size_t r = 0; r < count; ++r) {
      const auto& v = mlm ? reps[r].mlm_verdict : reps[r].simple_verdict;
      if (!v) continue;
      ++classified;
      reversed += v->category == VerdictCategory::Reversal ? 1 : 0;
    }
    const double freq = classified ? static_cast<double>(reversed) / classified : 0.0;
    for (std::size_t k = mlm ? 2 : 0; k < (mlm ? 4u : 2u); ++k) cell.estimators[k].reversal_freq = freq;
  }
  return cell;
}

SweepTable sweep_impl(const std::vector<ScenarioSpec>& grid, std::size_t replicates,
                      const AnalysisOptions& options, bool parallel) {
  if (grid.empty()) throw Error(ErrorCode::InvalidSpec, "sweep grid is empty");
  if (replicates < 1) throw Error(ErrorCode::InvalidSpec, "replicates must be at least 1");
  for (const auto& s : grid) s.validate();

  const std::size_t total = grid.size() * replicates;
  std::vector<ReplicateOutcome> outcomes(total);
  const auto job = [&](std::size_t idx) {
    const std::size_t cell = idx / replicates;
    outcomes[idx] = run_replicate(replicate_spec(grid[cell], idx % replicates), options);
  };

  if (parallel) {
    const auto n = static_cast<std::int64_t>(total);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t idx = 0; idx < n; ++idx) job(static_cast<std::size_t>(idx));
  } else {
    for (std::size_t idx = 0; idx < total; ++idx) job(idx);
  }

  SweepTable table;
  table.cells.reserve(grid.size());
  for (std::size_t c = 0; c < grid.size(); ++c) {
    table.cells.push_back(reduce_cell(grid[c], outcomes.data() + c * replicates, replicates));
  }
  return table;
}

}  // namespace

SweepTable sweep(const std::vector<ScenarioSpec>& grid, std::size_t replicates,
                 const AnalysisOptions& options) {
  return sweep_impl(grid, replicates, options, true);
}

SweepTable sweep_serial(const std::vector<ScenarioSpec>& grid, std::size_t replicates,
                        const AnalysisOptions& options) {
  return sweep_impl(grid, replicates, options, false);
}

std::string SweepTable::to_tsv() const {
  std::string out =
      "cell\tn_sch\tpupils\trandomization\talloc\tdelta_pre\trho\ticc\teffect\tseed\treplicates\t"
      "estimator\tn_ok\tmean\tsd\tcoverage\tmean_ci_width\treversal_freq\n";
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto& cell = cells[c];
    const auto& s = cell.spec;
    std::string pupils;
    for (std::size_t i = 0; i < s.pupils_per_school.size(); ++i) {
      if (i) pupils += ' ';
      pupils += std::to_string(s.pupils_per_school[i]);
    }
    for (const auto& e : cell.estimators) {
      out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\t{:.6f}\n",
                         c + 1, s.n_sch, pupils,
                         s.randomization == Randomization::Cluster ? "cluster" : "pupil", s.alloc,
                         s.delta_pre, s.rho, s.icc_target, s.effect, s.seed, cell.replicates,
                         to_string(e.kind), e.n_ok, e.mean, e.sd, e.coverage, e.mean_ci_width,
                         e.reversal_freq);
    }
  }
  return out;
}

std::string to_csv(const TrialDataset& data) {
  std::string out = "pupil_id,school_id,group,pretest,posttest\n";
  for (const auto& r : data.records()) {
    out += fmt::format("{},{},{},{},{}\n", r.pupil_id, r.school_id, r.group, r.pretest, r.posttest);
  }
  return out;
}

}  // namespace lordpx
