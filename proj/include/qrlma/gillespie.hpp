#pragma once

#include "qrlma/observation_set.hpp"
#include "qrlma/reaction_system.hpp"
#include "qrlma/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace qrlma {

/// A simulated path of the jump process. Column k of `states` is the state
/// after k events; event_times[0] = 0 is the initial state.
struct Trajectory {
  std::vector<double> event_times;
  Matrix states;                     // p x (events + 1)
  std::vector<Index> reaction_indices;  // reaction fired at each event
  bool absorbed = false;             // stopped because every hazard vanished

  std::size_t num_events() const noexcept { return reaction_indices.size(); }
};

struct StopCondition {
  std::optional<double> max_time;
  std::optional<std::size_t> max_events;
};

/// Independent, reproducible seed for stream `index` derived from a master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Exact direct-method simulation. Stops at the first of max_time, max_events
/// or absorption. Deterministic for a fixed seed.
Trajectory simulate_ssa(const ReactionSystem& system, const RateVector& theta, const StateVector& y0,
                        const StopCondition& stop, std::uint64_t seed);

/// Keeps the initial state and the states after keep_every, 2 keep_every, ...,
/// T keep_every events, with their event times.
ObservationSet subsample(const Trajectory& trajectory, std::size_t keep_every, std::size_t count,
                         const std::vector<std::string>& species);

/// State in force at each grid time (the last event at or before it).
ObservationSet subsample_times(const Trajectory& trajectory, const std::vector<double>& times,
                               const std::vector<std::string>& species);

/// n_replicates independent runs, each subsampled every keep_every events to
/// `count` observations plus the initial state. Replicate c uses derive_seed(seed, c).
ObservationSet simulate_dataset(const ReactionSystem& system, const RateVector& theta, const StateVector& y0,
                                std::size_t n_replicates, std::size_t keep_every, std::size_t count,
                                std::uint64_t seed);

/// Same, observed on a fixed time grid starting at 0.
ObservationSet simulate_dataset_on_grid(const ReactionSystem& system, const RateVector& theta,
                                        const StateVector& y0, std::size_t n_replicates,
                                        const std::vector<double>& times, std::uint64_t seed);

}  // namespace qrlma
