#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lordpx/analysis.hpp"
#include "lordpx/dataset.hpp"

namespace lordpx {

enum class Randomization { Pupil, Cluster };

/// Parameters of the bivariate-normal random-intercept generator.
struct ScenarioSpec {
  std::size_t n_sch = 20;
  /// One entry: every school has that many pupils. Otherwise one entry per school.
  std::vector<std::size_t> pupils_per_school{50};
  double alloc = 0.5;
  Randomization randomization = Randomization::Pupil;
  double delta_pre = 0.0;   // baseline shift of latent ability, intervention minus control
  double rho = 0.5;         // latent pre-post correlation
  double icc_target = 0.0;  // sigma2_u / (sigma2_u + 1)
  double effect = 0.0;      // treatment effect on post, in units of the total post SD
  std::uint64_t seed = 1;

  void validate() const;  // throws InvalidSpec
  std::size_t school_size(std::size_t school) const;
  std::size_t total_pupils() const;
  double sigma2_u() const noexcept { return icc_target / (1.0 - icc_target); }

  friend bool operator==(const ScenarioSpec&, const ScenarioSpec&) = default;
};

/// mt19937_64 with hand-rolled uniform and normal transforms, so a seed
/// produces the same stream on every standard library.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // (0, 1), 53-bit resolution
  double normal();   // Box-Muller, caches the second variate
  std::uint64_t below(std::uint64_t bound);  // uniform in [0, bound)

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Draw order: treatment assignment shuffle, school intercepts in school
/// order, then per pupil (latent ability, post noise).
///   pre  = u_j + a_ij,  a_ij = z_ij + delta_pre * T_ij
///   post = u_j + rho * a_ij + sqrt(1 - rho^2) * e_ij + effect * sqrt(1 + s2u) * T_ij
/// so `effect` is measured against the total post-test SD (1 + s2u).
TrialDataset generate(const ScenarioSpec& spec, const std::string& label = "sim");

/// splitmix64 of (seed, replicate); replicate r of a sweep cell uses this seed.
std::uint64_t replicate_seed(std::uint64_t seed, std::size_t replicate);
ScenarioSpec replicate_spec(const ScenarioSpec& spec, std::size_t replicate);

inline constexpr std::array<EstimateKind, 4> kSweepEstimators = {
    EstimateKind::PostDIM, EstimateKind::GainDIM, EstimateKind::MlmPostAncova,
    EstimateKind::MlmGainAnova};

struct ReplicateOutcome {
  std::array<std::optional<EffectEstimate>, 4> estimates;  // order of kSweepEstimators
  std::optional<ParadoxVerdict> simple_verdict;
  std::optional<ParadoxVerdict> mlm_verdict;
};

ReplicateOutcome run_replicate(const ScenarioSpec& spec, const AnalysisOptions& options = {});

struct EstimatorStats {
  EstimateKind kind = EstimateKind::PostDIM;
  std::size_t n_ok = 0;
  double mean = 0.0;
  double sd = 0.0;
  double coverage = 0.0;       // share of intervals containing spec.effect
  double mean_ci_width = 0.0;
  double reversal_freq = 0.0;  // simple-pair reversals for DIM rows, MLM-pair for MLM rows
};

struct CellResult {
  ScenarioSpec spec;
  std::size_t replicates = 0;
  std::array<EstimatorStats, 4> estimators;
};

struct SweepTable {
  std::vector<CellResult> cells;

  /// One row per (cell, estimator).
  std::string to_tsv() const;
};

/// Replicates run in parallel with OpenMP; results are reduced in replicate
/// order, so the table is identical to sweep_serial for every thread count.
SweepTable sweep(const std::vector<ScenarioSpec>& grid, std::size_t replicates,
                 const AnalysisOptions& options = {});

/// Single-threaded reference implementation of sweep.
SweepTable sweep_serial(const std::vector<ScenarioSpec>& grid, std::size_t replicates,
                        const AnalysisOptions& options = {});

/// Writes `data` as CSV with the default schema column names.
std::string to_csv(const TrialDataset& data);

}  // namespace lordpx
