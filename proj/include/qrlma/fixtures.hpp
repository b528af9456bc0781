#pragma once

// Built-in reaction systems and experiment presets.

#include "qrlma/reaction_system.hpp"
#include "qrlma/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qrlma {

struct Preset {
  std::string name;
  std::string description;
  ReactionSystem system;
  RateVector theta_true;
  StateVector y0;

  // Simulation protocol. Observations are every keep_every-th SSA event,
  // n_points transitions per replicate, unless observation_times is set.
  std::size_t n_replicates = 1;
  std::size_t n_points = 20;
  std::vector<std::size_t> keep_every_grid;
  std::vector<std::size_t> n_points_grid;
  std::vector<double> observation_times;
  std::size_t n_seeds = 100;
  std::uint64_t seed = 1;

  // Solver comparison protocol.
  std::vector<double> dt_grid;
  double horizon = 0.0;

  // Model selection: library indices that generated the data.
  std::vector<Index> true_reactions;
};

std::vector<std::string> preset_names();

/// Throws ValidationError listing the available names when `name` is unknown.
Preset load_preset(const std::string& name);

/// 2A -> 2B, A + B -> 3C, 2C -> 2A; species names carry `suffix`.
ReactionSystem cyclic3_system(const std::string& suffix = "");

}  // namespace qrlma
