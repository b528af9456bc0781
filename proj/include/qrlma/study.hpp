#pragma once

// Simulation-study harness: simulate many datasets from a preset, fit each
// with LLA and LMA, and summarize the estimates per sweep value.

#include "qrlma/fixtures.hpp"
#include "qrlma/infer.hpp"
#include "qrlma/metrics.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qrlma {

enum class Sweep {
  dt,  // vary keep_every at fixed n_points
  T,   // vary n_points at fixed keep_every
};

std::string to_string(Sweep sweep);
Sweep parse_sweep(const std::string& name);

struct StudyConfig {
  Preset preset;
  Sweep sweep = Sweep::dt;
  std::vector<std::size_t> grid;  // empty: the preset's grid for this sweep
  std::size_t n_seeds = 0;        // 0: the preset's n_seeds
  std::uint64_t seed = 1;
  std::optional<std::size_t> fixed_keep_every;  // T sweep; default the largest keep_every
  std::optional<std::size_t> fixed_n_points;    // dt sweep; default preset.n_points
  FitConfig fit;
  bool compute_stderr = false;
  unsigned threads = 0;  // concurrent datasets; 0 means default_thread_count()
};

struct StudyRow {
  std::size_t grid_value = 0;  // keep_every (dt sweep) or n_points (T sweep)
  std::size_t keep_every = 0;
  std::size_t n_points = 0;
  std::size_t seed_index = 0;
  std::uint64_t dataset_seed = 0;
  double mean_dt = 0.0;
  RateVector lla;
  RateVector lma;
  bool lma_converged = false;
  double lma_objective = 0.0;
  std::optional<Vector> lma_stderr;
  std::string error;  // non-empty when the dataset could not be fitted
};

struct StudyResult {
  Sweep sweep = Sweep::dt;
  std::vector<std::size_t> grid;
  RateVector truth;
  std::vector<std::string> labels;
  std::vector<StudyRow> rows;  // grid value major, seed minor

  // Estimates of successfully fitted datasets at one grid value.
  EstimateEnsemble ensemble(std::size_t grid_value, bool lma) const;
};

/// Seed s uses dataset seed derive_seed(seed, s) at every grid value, so the
/// sweep subsamples the same underlying trajectories.
StudyResult run_study(const StudyConfig& config);

// One row per dataset and method: sweep,grid_value,keep_every,n_points,seed_index,
// dataset_seed,mean_dt,method,converged,objective,<theta labels...>
void write_study_csv(std::ostream& os, const StudyResult& result);

// One row per grid value, method and rate: grid_value,method,rate,truth,median,
// mean_bias,abs_median_bias,sd,w1,w1_q25,w1_q75,n
void write_study_summary(std::ostream& os, const StudyResult& result, std::uint64_t bootstrap_seed = 0);

}  // namespace qrlma
