#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "lordpx/simulate.hpp"

namespace lordpx {

/// A flat key=value simulation config.
///
///   # comment
///   n_sch = 30
///   pupils_per_school = 40          # or one size per school: 40 35 20 ...
///   randomization = cluster         # or pupil
///   alloc = 0.5
///   delta_pre = -0.4, 0, 0.4        # comma lists make sweep axes
///   rho = 0.7
///   icc = 0.15
///   effect = 0
///   seed = 42
///   replicates = 100                # > 0 requests a sweep
///
/// Every comma-separated scalar key becomes an axis; the grid is their
/// Cartesian product, first-listed key varying slowest.
struct SimulationConfig {
  std::vector<ScenarioSpec> grid;
  std::size_t replicates = 0;
};

SimulationConfig parse_sim_config(const std::string& text, const std::string& source = "<config>");
SimulationConfig load_sim_config(const std::filesystem::path& path);

}  // namespace lordpx
